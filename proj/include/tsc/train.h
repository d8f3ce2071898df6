#pragma once

#include "tsc/frap.h"
#include "tsc/metrics.h"
#include "tsc/sim.h"

#include <memory>
#include <string>
#include <vector>

namespace tsc {

struct TrainConfig {
    double gamma = 0.6;
    int episodes = 200;
    double lr = 0.001;
    int batch = 32;
    int bufferCapacity = 10000;
    int learningStart = 0;      // experiences required before updates
    int targetSyncEvery = 500;  // gradient steps between target copies
    FilterMode filter = FilterMode::ActiveVehicles;
    double encodingE = 1.0;
    int duration = 3600;
    uint64_t seed = 1;
    FrapConfig net; // featuresPerMovement is derived from the filter mode
    std::string checkpointDir;
    bool checkpointEveryEpisode = false;
};

// One shared model drives every intersection; experiences from all agents
// land in one replay buffer and each agent performs one gradient step per
// action interval.
class RlAgent : public Controller {
  public:
    RlAgent(const RoadNetwork &net, FilterMode mode, double encodingE, FrapNet *qnet,
            uint64_t seed);

    void enableTraining(ReplayBuffer *buffer, FrapNet *target, const TrainConfig *cfg);
    void setEpsilon(double eps) { epsilon_ = eps; }
    void beginEpisode();
    double meanReward() const;
    long gradientSteps() const { return gradSteps_; }

    int decide(const IntersectionView &view) override;
    void episodeEnd(const IntersectionView &view) override;

  private:
    void observe(const IntersectionView &view, std::vector<double> &featOut);
    void pushAndLearn(const IntersectionView &view, const std::vector<double> &feat);

    const RoadNetwork &net_;
    ActiveFilter filter_;
    OccupancyEncoding enc_;
    FrapNet *qnet_;
    ReplayBuffer *buffer_ = nullptr;
    FrapNet *target_ = nullptr;
    const TrainConfig *cfg_ = nullptr;
    double epsilon_ = 0;
    std::mt19937_64 rng_;
    std::vector<ObservationEncoder> encoders_;
    std::vector<std::vector<double>> lastFeat_;
    std::vector<int> lastAction_;
    double rewardSum_ = 0;
    long rewardCount_ = 0;
    long gradSteps_ = 0;
};

struct EpisodeRow {
    int episode = 0;
    double epsilon = 0;
    double meanReward = 0;
    EpisodeSummary summary;
    double changesPerHour = 0;
    uint64_t logHash = 0;
};

struct TrainResult {
    std::shared_ptr<FrapNet> net;
    std::vector<EpisodeRow> episodes;
    SafetyCounters safety;
    uint64_t finalWeightsHash = 0;
};

TrainResult trainRl(const RoadNetwork &net, const DemandSchedule &schedule,
                    const std::vector<VehicleClass> &classes, const TrainConfig &cfg);

// Greedy evaluation episode with a trained net; deterministic.
MetricsLog evalRl(const RoadNetwork &net, const DemandSchedule &schedule,
                  const std::vector<VehicleClass> &classes, FrapNet &qnet, FilterMode mode,
                  double encodingE, int duration = 3600);

std::string episodeCsvHeader();
std::string episodeCsvRow(const EpisodeRow &r);

} // namespace tsc
