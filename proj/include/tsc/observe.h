#pragma once

#include "tsc/sim.h"

#include <string>
#include <vector>

namespace tsc {

enum class FilterMode { AllVehicles, ActiveVehicles, AllAndActive };
const char *toString(FilterMode m);
FilterMode filterModeFromString(const std::string &s);

// Occupancy encoding exponent: counts sum O^e per vehicle, so e=1 counts
// persons and e=0 counts vehicles.
struct OccupancyEncoding {
    double e = 1.0;
};

struct ActiveFilter {
    FilterMode mode = FilterMode::ActiveVehicles;
    int actionInterval = kActionInterval;
};

// Reachable range under constant acceleration capped at vMax:
//   L = vMax*dt - (vMax - v)^2 / (2*aMax)
double activeRange(double v, double vMax, double aMax, double dt);

// Upstream: the vehicle can reach the stop line within dt. Downstream: it
// crossed this intersection during the previous action interval.
bool vehicleActive(const RoadNetwork &net, const SimState &state, const Vehicle &v,
                   const Intersection &inter, bool incoming, int dt);

std::vector<int> activeVehicles(const RoadNetwork &net, const SimState &state,
                                int intersection, int dt = kActionInterval);

double encodedLaneCount(const RoadNetwork &net, const SimState &state, int laneId,
                        const Intersection &inter, bool incoming, FilterMode mode,
                        double e, int dt = kActionInterval);

double movementPressure(const RoadNetwork &net, const SimState &state,
                        const Intersection &inter, int movementIdx, FilterMode mode,
                        double e, bool normalized = false, int dt = kActionInterval);

double phasePressure(const RoadNetwork &net, const SimState &state, const Intersection &inter,
                     int phaseId, FilterMode mode, double e, bool normalized = false,
                     int dt = kActionInterval);

// Sum over every movement of the intersection (rights included).
double intersectionPressure(const RoadNetwork &net, const SimState &state,
                            const Intersection &inter, FilterMode mode, double e,
                            bool normalized = false, int dt = kActionInterval);

// Highest-pressure phase; ties break to the lowest phase id.
int bestPhaseByPressure(const RoadNetwork &net, const SimState &state,
                        const Intersection &inter, FilterMode mode, double e,
                        int dt = kActionInterval);

struct Observation {
    int intersection = 0;
    int phase = 0;
    // Per-lane encoded counts, incoming then outgoing lanes. AllAndActive
    // appends a second block with the active-filtered counts.
    std::vector<double> counts;
};

Observation buildObservation(const RoadNetwork &net, const SimState &state, int intersection,
                             const ActiveFilter &filter, const OccupancyEncoding &enc);

// Eq.-8 reward: minus the person intersection pressure. AllAndActive states
// still compute the reward from active vehicles.
double reward(const RoadNetwork &net, const SimState &state, int intersection,
              const ActiveFilter &filter, const OccupancyEncoding &enc);

std::string observationCsvHeader(const RoadNetwork &net, int intersection,
                                 const ActiveFilter &filter);
std::string observationCsvRow(int episode, int t, const Observation &obs);

} // namespace tsc
