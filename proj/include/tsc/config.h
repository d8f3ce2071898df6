#pragma once

#include "tsc/controllers.h"
#include "tsc/observe.h"
#include "tsc/scenario.h"
#include "tsc/train.h"

#include <memory>
#include <string>
#include <vector>

namespace tsc {

struct ExperimentConfig {
    // network
    NetworkKind kind = NetworkKind::Single;
    int rows = 4, cols = 4; // grid
    int corridorLength = 6;
    double segmentLength = 300.0;
    // demand
    std::string scenario = "low";
    uint64_t demandSeed = 42;
    int duration = 3600;
    int busOccupancy = 40;
    // controller: fixed | sotl | maxpressure | maxpressure_person | rl
    std::string controller = "maxpressure";
    double sotlTheta = 4.0;
    int sotlMinGreen = 10;
    int mpTmin = 10;
    // rl wiring
    std::string filter = "active";
    double encodingE = 1.0;
    double gamma = 0.6;
    int episodes = 200;
    double lr = 0.001;
    int batch = 32;
    int bufferCapacity = 10000;
    int targetSyncEvery = 500;
    std::string checkpoint; // load for `run`, write dir for `train`
    bool checkpointEveryEpisode = false;
    // runs
    std::vector<uint64_t> seeds = {1, 2, 3};
    std::string outDir = "out";
    bool dumpTrajectories = false;
    bool dumpObservations = false;

    uint64_t hash() const;
    std::string toJson() const;
    static ExperimentConfig fromJson(const std::string &text);
    static ExperimentConfig fromFile(const std::string &path);
};

RoadNetwork buildNetwork(const ExperimentConfig &cfg);
ModeShareScenario scenarioFor(const ExperimentConfig &cfg);
TrainConfig trainConfigFor(const ExperimentConfig &cfg, uint64_t seed);

// Controller instances for one episode (deleted by the caller owning the
// vector). Webster plans are tuned from the schedule's implied volumes.
std::vector<std::unique_ptr<Controller>> makeClassicControllers(
    const ExperimentConfig &cfg, const RoadNetwork &net, const DemandSchedule &schedule);

std::string codeVersion();

} // namespace tsc
