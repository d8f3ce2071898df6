#include "tsc/train.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tsc {

RlAgent::RlAgent(const RoadNetwork &net, FilterMode mode, double encodingE, FrapNet *qnet,
                 uint64_t seed)
    : net_(net), qnet_(qnet), rng_(seed) {
    filter_.mode = mode;
    enc_.e = encodingE;
    for (size_t i = 0; i < net.intersections.size(); i++)
        encoders_.push_back(ObservationEncoder::forIntersection(net, (int)i, mode,
                                                                qnet->config().inputScale));
    lastFeat_.resize(net.intersections.size());
    lastAction_.assign(net.intersections.size(), -1);
}

void RlAgent::enableTraining(ReplayBuffer *buffer, FrapNet *target, const TrainConfig *cfg) {
    buffer_ = buffer;
    target_ = target;
    cfg_ = cfg;
}

void RlAgent::beginEpisode() {
    std::fill(lastAction_.begin(), lastAction_.end(), -1);
    for (auto &f : lastFeat_)
        f.clear();
    rewardSum_ = 0;
    rewardCount_ = 0;
}

double RlAgent::meanReward() const {
    return rewardCount_ ? rewardSum_ / (double)rewardCount_ : 0.0;
}

void RlAgent::observe(const IntersectionView &view, std::vector<double> &featOut) {
    Observation obs = buildObservation(view.net, view.state, view.intersection, filter_, enc_);
    featOut.assign((size_t)kSignalSlots * qnet_->featureDim(), 0.0);
    encoders_[view.intersection].encode(obs, featOut.data());
}

void RlAgent::pushAndLearn(const IntersectionView &view, const std::vector<double> &feat) {
    int i = view.intersection;
    if (lastAction_[i] < 0)
        return;
    double r = reward(view.net, view.state, i, filter_, enc_);
    rewardSum_ += r;
    rewardCount_++;
    if (!buffer_)
        return;
    buffer_->push({lastFeat_[i], feat, lastAction_[i], r, i});
    if (buffer_->size() < std::max(cfg_->batch, cfg_->learningStart))
        return;
    std::vector<const Experience *> batch = buffer_->sample(cfg_->batch);
    std::vector<double> targets = tdTargets(batch, *target_, cfg_->gamma);
    int F = qnet_->featureDim();
    std::vector<double> feats((size_t)batch.size() * kSignalSlots * F);
    std::vector<int> actions(batch.size());
    for (size_t b = 0; b < batch.size(); b++) {
        std::memcpy(feats.data() + b * kSignalSlots * F, batch[b]->s.data(),
                    (size_t)kSignalSlots * F * sizeof(double));
        actions[b] = batch[b]->action;
    }
    qnet_->lossAndGrad(feats.data(), actions.data(), targets.data(), (int)batch.size());
    qnet_->adamStep(cfg_->lr);
    gradSteps_++;
    if (cfg_->targetSyncEvery > 0 && gradSteps_ % cfg_->targetSyncEvery == 0)
        target_->copyWeightsFrom(*qnet_);
}

int RlAgent::decide(const IntersectionView &view) {
    std::vector<double> feat;
    observe(view, feat);
    pushAndLearn(view, feat);
    int a = act(*qnet_, feat.data(), epsilon_, rng_);
    lastFeat_[view.intersection] = std::move(feat);
    lastAction_[view.intersection] = a;
    return a;
}

void RlAgent::episodeEnd(const IntersectionView &view) {
    std::vector<double> feat;
    observe(view, feat);
    pushAndLearn(view, feat);
    lastAction_[view.intersection] = -1;
}

TrainResult trainRl(const RoadNetwork &net, const DemandSchedule &schedule,
                    const std::vector<VehicleClass> &classes, const TrainConfig &cfg) {
    FrapConfig ncfg = cfg.net;
    ncfg.featuresPerMovement = cfg.filter == FilterMode::AllAndActive ? 5 : 3;
    PhaseStructure structure = phaseStructureOf(net.intersections[0]);
    auto qnet = std::make_shared<FrapNet>(ncfg, structure, cfg.seed);
    FrapNet target(ncfg, structure, cfg.seed);
    target.copyWeightsFrom(*qnet);
    ReplayBuffer buffer(cfg.bufferCapacity, cfg.seed ^ 0x9e3779b97f4a7c15ull);
    RlAgent agent(net, cfg.filter, cfg.encodingE, qnet.get(), cfg.seed + 1);
    agent.enableTraining(&buffer, &target, &cfg);

    std::vector<int> occupancies;
    for (const VehicleClass &c : classes)
        occupancies.push_back(c.occupancy);

    TrainResult result;
    result.net = qnet;
    namespace fs = std::filesystem;
    if (!cfg.checkpointDir.empty())
        fs::create_directories(cfg.checkpointDir);

    for (int ep = 0; ep < cfg.episodes; ep++) {
        agent.setEpsilon(epsilonAt(ep, cfg.episodes));
        agent.beginEpisode();
        Engine engine(net, schedule, classes);
        std::vector<Controller *> ctrls(net.intersections.size(), &agent);
        engine.attachControllers(ctrls);
        RunOptions opts;
        opts.duration = cfg.duration;
        engine.run(opts);
        MetricsLog log = engine.finish();

        EpisodeRow row;
        row.episode = ep;
        row.epsilon = epsilonAt(ep, cfg.episodes);
        row.meanReward = agent.meanReward();
        row.summary = summarize(log, occupancies);
        row.changesPerHour = phaseProfile(log).changesPerHour;
        row.logHash = log.hash();
        result.episodes.push_back(row);
        result.safety.add(log.safety);

        if (!cfg.checkpointDir.empty() &&
            (cfg.checkpointEveryEpisode || ep == cfg.episodes - 1)) {
            std::ostringstream name;
            name << cfg.checkpointDir << "/ep_" << ep << ".json";
            std::ofstream out(name.str());
            out << qnet->saveJson();
        }
    }
    result.finalWeightsHash = qnet->weightsHash();
    return result;
}

MetricsLog evalRl(const RoadNetwork &net, const DemandSchedule &schedule,
                  const std::vector<VehicleClass> &classes, FrapNet &qnet, FilterMode mode,
                  double encodingE, int duration) {
    RlAgent agent(net, mode, encodingE, &qnet, 0);
    agent.setEpsilon(0.0);
    agent.beginEpisode();
    Engine engine(net, schedule, classes);
    std::vector<Controller *> ctrls(net.intersections.size(), &agent);
    engine.attachControllers(ctrls);
    RunOptions opts;
    opts.duration = duration;
    engine.run(opts);
    return engine.finish();
}

std::string episodeCsvHeader() {
    return "episode,epsilon,mean_reward,avtt,aptt,avd,apd,vql,pql,phase_changes_per_hr,"
           "completed,unfinished,log_hash";
}

namespace {
std::string opt(const std::optional<double> &v) {
    if (!v)
        return "na";
    std::ostringstream os;
    os << *v;
    return os.str();
}
} // namespace

std::string episodeCsvRow(const EpisodeRow &r) {
    std::ostringstream os;
    os << r.episode << ',' << r.epsilon << ',' << r.meanReward << ',' << opt(r.summary.avtt)
       << ',' << opt(r.summary.aptt) << ',' << opt(r.summary.avd) << ',' << opt(r.summary.apd)
       << ',' << r.summary.meanVql << ',' << r.summary.meanPql << ',' << r.changesPerHour
       << ',' << r.summary.completed << ',' << r.summary.unfinished << ',' << r.logHash;
    return os.str();
}

} // namespace tsc
