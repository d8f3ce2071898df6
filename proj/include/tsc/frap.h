#pragma once

#include "tsc/kernels.h"
#include "tsc/net.h"
#include "tsc/observe.h"

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace tsc {

constexpr int kPairCount = kPhaseCount * (kPhaseCount - 1); // ordered phase pairs

struct FrapConfig {
    int featuresPerMovement = 3; // in count, out count, membership bit (5 with all&active)
    int demandHidden = 16;       // two dense layers in the demand stage
    int pairFilters = 20;        // 1x1 filter count of the pair stage
    int pairLayers = 2;          // layers in the pair stage
    int maskEmbedDim = 4;
    double inputScale = 1.0 / 40.0; // counts normalized by the max single-vehicle occupancy
};

// Static phase structure the network is wired with: which signal slots make
// up each phase and the competition mask value of every ordered phase pair.
struct PhaseStructure {
    std::array<std::array<int, 2>, kPhaseCount> phaseSlots;
    std::array<int, kPairCount> pairMask; // values 0..2
};

PhaseStructure phaseStructureOf(const Intersection &inter);

struct Dense {
    int in = 0, out = 0;
    std::vector<double> w, b;   // w stored [in x out]
    std::vector<double> dw, db;
    std::vector<double> mw, vw, mb, vb;

    void init(int inDim, int outDim, std::mt19937_64 &rng);
    void zeroGrad();
};

struct ParamView {
    std::string name;
    double *data;
    double *grad;
    int size;
};

class FrapNet {
  public:
    FrapNet(const FrapConfig &cfg, const PhaseStructure &structure, uint64_t seed);
    ~FrapNet();
    FrapNet(FrapNet &&) noexcept;
    FrapNet &operator=(FrapNet &&) noexcept;

    int featureDim() const { return cfg_.featuresPerMovement; }
    const FrapConfig &config() const { return cfg_; }
    const PhaseStructure &structure() const { return structure_; }

    // feats: [batch x 8 x featureDim], row-major; q: [batch x 8]
    void forward(const double *feats, int batch, double *q);

    // Squared TD error, meaned over the batch; leaves gradients in the
    // layers (zeroed first). Returns the loss.
    double lossAndGrad(const double *feats, const int *actions, const double *targets,
                       int batch);

    void zeroGrad();
    void adamStep(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    long adamSteps() const { return adamT_; }

    std::vector<ParamView> parameters();
    void copyWeightsFrom(const FrapNet &other);
    uint64_t weightsHash() const;

    std::string saveJson() const;
    static FrapNet loadJson(const std::string &text);

  private:
    struct Workspace;
    void ensureWorkspace(int batch);
    void forwardInternal(const double *feats, int batch, double *q, bool keep);

    FrapConfig cfg_;
    PhaseStructure structure_;
    std::array<int, kPairCount> pairP_, pairQ_;
    Dense enc1_, enc2_;
    Dense pairA_, pairB_; // the two halves of the first 1x1 pair layer
    std::vector<Dense> pairExtra_;
    Dense proj_, out_;
    std::vector<double> maskEmbed_, maskEmbedGrad_, maskEmbedM_, maskEmbedV_;
    long adamT_ = 0;
    std::unique_ptr<Workspace> ws_;
};

// Per-intersection adapter from Observation vectors to the network's
// per-movement feature rows.
struct ObservationEncoder {
    std::array<int, kSignalSlots> inPos, outPos; // positions inside one block
    std::array<uint8_t, kPhaseCount> phaseBits;  // slot membership per phase
    int blockSize = 0;
    int blocks = 1;
    double scale = 1.0 / 40.0;

    static ObservationEncoder forIntersection(const RoadNetwork &net, int intersection,
                                              FilterMode mode, double scale = 1.0 / 40.0);
    int featureDim() const { return 2 * blocks + 1; }
    void encode(const Observation &obs, double *out) const; // out: [8 x featureDim]
};

struct Experience {
    std::vector<double> s, s2; // encoded feature rows
    int action = 0;
    double reward = 0;
    int intersection = 0;
};

class ReplayBuffer {
  public:
    explicit ReplayBuffer(int capacity, uint64_t seed);
    void push(Experience e);
    int size() const { return (int)store_.size(); }
    int capacity() const { return capacity_; }
    // Uniform sample of distinct indices.
    std::vector<const Experience *> sample(int batch);

  private:
    int capacity_;
    size_t head_ = 0;
    std::vector<Experience> store_;
    std::mt19937_64 rng_;
};

// r + gamma * max_a' Q_target(s', a') for each experience (continuing task,
// no terminal cutoff).
std::vector<double> tdTargets(const std::vector<const Experience *> &batch, FrapNet &target,
                              double gamma);

// Epsilon-greedy over the 8 phases; greedy ties break to the lowest id.
int greedyAction(const double *q);
int act(FrapNet &net, const double *feat, double epsilon, std::mt19937_64 &rng);

// Linear per-episode schedule from 1 to 0 (0-based episode index).
double epsilonAt(int episode, int totalEpisodes);

} // namespace tsc
