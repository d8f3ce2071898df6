#include "tsc/config.h"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

namespace tsc {

using nlohmann::json;

namespace {

json toJsonObj(const ExperimentConfig &c) {
    return json{{"network",
                 {{"kind", toString(c.kind)},
                  {"rows", c.rows},
                  {"cols", c.cols},
                  {"corridor_length", c.corridorLength},
                  {"segment_length", c.segmentLength}}},
                {"scenario", c.scenario},
                {"demand_seed", c.demandSeed},
                {"duration", c.duration},
                {"bus_occupancy", c.busOccupancy},
                {"controller",
                 {{"type", c.controller},
                  {"sotl_theta", c.sotlTheta},
                  {"sotl_min_green", c.sotlMinGreen},
                  {"mp_tmin", c.mpTmin}}},
                {"rl",
                 {{"filter", c.filter},
                  {"encoding_e", c.encodingE},
                  {"gamma", c.gamma},
                  {"episodes", c.episodes},
                  {"lr", c.lr},
                  {"batch", c.batch},
                  {"buffer", c.bufferCapacity},
                  {"target_sync", c.targetSyncEvery},
                  {"checkpoint", c.checkpoint},
                  {"checkpoint_every_episode", c.checkpointEveryEpisode}}},
                {"seeds", c.seeds},
                {"out_dir", c.outDir},
                {"dump_trajectories", c.dumpTrajectories},
                {"dump_observations", c.dumpObservations}};
}

} // namespace

std::string ExperimentConfig::toJson() const { return toJsonObj(*this).dump(2); }

uint64_t ExperimentConfig::hash() const {
    std::string s = toJsonObj(*this).dump();
    uint64_t h = 1469598103934665603ull;
    for (char ch : s) {
        h ^= (uint64_t)(unsigned char)ch;
        h *= 1099511628211ull;
    }
    return h;
}

ExperimentConfig ExperimentConfig::fromJson(const std::string &text) {
    json j = json::parse(text);
    ExperimentConfig c;
    if (j.contains("network")) {
        const json &n = j["network"];
        if (n.contains("kind"))
            c.kind = networkKindFromString(n["kind"].get<std::string>());
        c.rows = n.value("rows", c.rows);
        c.cols = n.value("cols", c.cols);
        c.corridorLength = n.value("corridor_length", c.corridorLength);
        c.segmentLength = n.value("segment_length", c.segmentLength);
    }
    c.scenario = j.value("scenario", c.scenario);
    c.demandSeed = j.value("demand_seed", c.demandSeed);
    c.duration = j.value("duration", c.duration);
    c.busOccupancy = j.value("bus_occupancy", c.busOccupancy);
    if (j.contains("controller")) {
        const json &k = j["controller"];
        c.controller = k.value("type", c.controller);
        c.sotlTheta = k.value("sotl_theta", c.sotlTheta);
        c.sotlMinGreen = k.value("sotl_min_green", c.sotlMinGreen);
        c.mpTmin = k.value("mp_tmin", c.mpTmin);
    }
    if (j.contains("rl")) {
        const json &r = j["rl"];
        c.filter = r.value("filter", c.filter);
        c.encodingE = r.value("encoding_e", c.encodingE);
        c.gamma = r.value("gamma", c.gamma);
        c.episodes = r.value("episodes", c.episodes);
        c.lr = r.value("lr", c.lr);
        c.batch = r.value("batch", c.batch);
        c.bufferCapacity = r.value("buffer", c.bufferCapacity);
        c.targetSyncEvery = r.value("target_sync", c.targetSyncEvery);
        c.checkpoint = r.value("checkpoint", c.checkpoint);
        c.checkpointEveryEpisode =
            r.value("checkpoint_every_episode", c.checkpointEveryEpisode);
    }
    if (j.contains("seeds"))
        c.seeds = j["seeds"].get<std::vector<uint64_t>>();
    c.outDir = j.value("out_dir", c.outDir);
    c.dumpTrajectories = j.value("dump_trajectories", c.dumpTrajectories);
    c.dumpObservations = j.value("dump_observations", c.dumpObservations);
    return c;
}

ExperimentConfig ExperimentConfig::fromFile(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return fromJson(ss.str());
}

RoadNetwork buildNetwork(const ExperimentConfig &cfg) {
    switch (cfg.kind) {
    case NetworkKind::Single: return buildSingleIntersection(cfg.segmentLength);
    case NetworkKind::Corridor: return buildCorridor(cfg.corridorLength, cfg.segmentLength);
    case NetworkKind::Grid: return buildGrid(cfg.rows, cfg.cols, cfg.segmentLength);
    }
    throw std::runtime_error("bad network kind");
}

ModeShareScenario scenarioFor(const ExperimentConfig &cfg) {
    return builtinScenario(cfg.scenario, cfg.kind);
}

TrainConfig trainConfigFor(const ExperimentConfig &cfg, uint64_t seed) {
    TrainConfig tc;
    tc.gamma = cfg.gamma;
    tc.episodes = cfg.episodes;
    tc.lr = cfg.lr;
    tc.batch = cfg.batch;
    tc.bufferCapacity = cfg.bufferCapacity;
    tc.targetSyncEvery = cfg.targetSyncEvery;
    tc.filter = filterModeFromString(cfg.filter);
    tc.encodingE = cfg.encodingE;
    tc.duration = cfg.duration;
    tc.seed = seed;
    tc.checkpointEveryEpisode = cfg.checkpointEveryEpisode;
    return tc;
}

std::vector<std::unique_ptr<Controller>> makeClassicControllers(
    const ExperimentConfig &cfg, const RoadNetwork &net, const DemandSchedule &schedule) {
    std::vector<std::unique_ptr<Controller>> out;
    if (cfg.controller == "fixed") {
        std::vector<std::vector<double>> volumes =
            phaseCriticalVolumes(net, schedule, cfg.duration);
        for (size_t i = 0; i < net.intersections.size(); i++)
            out.push_back(std::make_unique<FixedTimeController>(websterPlan(volumes[i])));
    } else if (cfg.controller == "sotl") {
        for (size_t i = 0; i < net.intersections.size(); i++)
            out.push_back(std::make_unique<SotlController>(cfg.sotlTheta, cfg.sotlMinGreen));
    } else if (cfg.controller == "maxpressure") {
        for (size_t i = 0; i < net.intersections.size(); i++)
            out.push_back(
                std::make_unique<MaxPressureController>(MaxPressureController::vehicle(cfg.mpTmin)));
    } else if (cfg.controller == "maxpressure_person") {
        for (size_t i = 0; i < net.intersections.size(); i++)
            out.push_back(
                std::make_unique<MaxPressureController>(MaxPressureController::person(cfg.mpTmin)));
    } else {
        throw std::runtime_error("unknown classic controller: " + cfg.controller);
    }
    return out;
}

std::string codeVersion() { return "tsc 0.1.0"; }

} // namespace tsc
