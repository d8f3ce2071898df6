#pragma once

#include "tsc/observe.h"
#include "tsc/sim.h"

#include <vector>

namespace tsc {

struct InfeasibleDemandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WebsterParams {
    double tL = 5.0;     // loss time per phase, s (yellow + all-red)
    double h = 2.0;      // saturation headway, s
    double phf = 1.0;    // peak hour factor
    double vOverC = 0.95;
    double maxCycle = 180.0;
    double minGreen = 5.0;
};

// C = N*tL / (1 - Vc / (3600/h * PHF * (v/c))). Throws InfeasibleDemandError
// when the denominator is not positive; callers clamp to maxCycle.
double websterCycle(double vc, int phaseCount, const WebsterParams &p = {});

// Greens proportional to critical volumes, rounded to 1 s, filling
// cycle - phaseCount*tL. All-zero volumes fall back to equal splits.
std::vector<double> websterSplits(double cycle, const std::vector<double> &criticalVolumes,
                                  const WebsterParams &p = {});

struct WebsterPlan {
    double cycle = 0;
    std::vector<double> greens;
    std::vector<int> order; // phase ids
};

WebsterPlan websterPlan(const std::vector<double> &criticalVolumes,
                        const WebsterParams &p = {});

// Hourly volume on each movement's incoming lane implied by a schedule,
// then per-phase critical (max) lane volumes: the "historical counts" a
// fixed-time plan is tuned from.
std::vector<std::vector<double>> phaseCriticalVolumes(const RoadNetwork &net,
                                                      const DemandSchedule &schedule,
                                                      double duration);

class FixedTimeController : public Controller {
  public:
    explicit FixedTimeController(WebsterPlan plan);
    int decide(const IntersectionView &view) override;
    const WebsterPlan &plan() const { return plan_; }
    // Phase active at second t under the plan (slot = green + interphase).
    int phaseAt(int t) const;

  private:
    WebsterPlan plan_;
    std::vector<double> slotEnd_;
    double period_;
};

class SotlController : public Controller {
  public:
    SotlController(double threshold, int minGreen);
    int decide(const IntersectionView &view) override;

  private:
    double threshold_;
    int minGreen_;
};

class MaxPressureController : public Controller {
  public:
    // Vehicle variant: e=0 over all vehicles. Person variant: e=1 and the
    // chosen filter (active by default).
    MaxPressureController(int tMin, FilterMode mode, double encodingE);
    static MaxPressureController vehicle(int tMin = kActionInterval);
    static MaxPressureController person(int tMin = kActionInterval,
                                        FilterMode mode = FilterMode::ActiveVehicles);
    int decide(const IntersectionView &view) override;

  private:
    int tMin_;
    FilterMode mode_;
    double e_;
};

} // namespace tsc
