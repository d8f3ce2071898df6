#include "tsc/observe.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tsc {

const char *toString(FilterMode m) {
    switch (m) {
    case FilterMode::AllVehicles: return "all";
    case FilterMode::ActiveVehicles: return "active";
    case FilterMode::AllAndActive: return "all_and_active";
    }
    return "?";
}

FilterMode filterModeFromString(const std::string &s) {
    if (s == "all") return FilterMode::AllVehicles;
    if (s == "active") return FilterMode::ActiveVehicles;
    if (s == "all_and_active") return FilterMode::AllAndActive;
    throw std::runtime_error("unknown filter mode: " + s);
}

double activeRange(double v, double vMax, double aMax, double dt) {
    if (v < 0 || v > vMax + 1e-9)
        throw std::domain_error("speed outside [0, vMax]");
    double dv = vMax - v;
    return vMax * dt - dv * dv / (2.0 * aMax);
}

namespace {

double encodedOccupancy(int occupancy, double e) {
    if (e == 1.0)
        return (double)occupancy;
    if (e == 0.0)
        return 1.0;
    return std::pow((double)occupancy, e);
}

} // namespace

bool vehicleActive(const RoadNetwork &net, const SimState &state, const Vehicle &v,
                   const Intersection &inter, bool incoming, int dt) {
    if (incoming) {
        double d = net.laneLength(v.currentLane()) - v.offset;
        return d <= activeRange(std::min(v.speed, v.maxSpeed), v.maxSpeed, v.maxAccel, dt);
    }
    return v.lastCrossIntersection == inter.id && v.lastCrossTime > state.clock - dt &&
           v.lastCrossTime <= state.clock;
}

std::vector<int> activeVehicles(const RoadNetwork &net, const SimState &state,
                                int intersection, int dt) {
    const Intersection &inter = net.intersections[intersection];
    std::vector<int> out;
    for (int l : inter.inLanes)
        for (int vid : state.laneVehicles[l])
            if (vehicleActive(net, state, state.vehicles[vid], inter, true, dt))
                out.push_back(vid);
    for (int l : inter.outLanes)
        for (int vid : state.laneVehicles[l])
            if (vehicleActive(net, state, state.vehicles[vid], inter, false, dt))
                out.push_back(vid);
    return out;
}

double encodedLaneCount(const RoadNetwork &net, const SimState &state, int laneId,
                        const Intersection &inter, bool incoming, FilterMode mode,
                        double e, int dt) {
    double sum = 0;
    for (int vid : state.laneVehicles[laneId]) {
        const Vehicle &v = state.vehicles[vid];
        if (mode != FilterMode::AllVehicles && !vehicleActive(net, state, v, inter, incoming, dt))
            continue;
        sum += encodedOccupancy(v.occupancy, e);
    }
    return sum;
}

double movementPressure(const RoadNetwork &net, const SimState &state,
                        const Intersection &inter, int movementIdx, FilterMode mode,
                        double e, bool normalized, int dt) {
    const Movement &m = inter.movements[movementIdx];
    double cin = encodedLaneCount(net, state, m.inLane, inter, true, mode, e, dt);
    double cout = encodedLaneCount(net, state, m.outLane, inter, false, mode, e, dt);
    if (!normalized)
        return cin - cout;
    double capIn = net.lane(m.inLane).capacity;
    double capOut = net.lane(m.outLane).capacity;
    if (capIn <= 0 || capOut <= 0)
        throw std::domain_error("lane capacity must be positive for density pressure");
    return cin / capIn - cout / capOut;
}

double phasePressure(const RoadNetwork &net, const SimState &state, const Intersection &inter,
                     int phaseId, FilterMode mode, double e, bool normalized, int dt) {
    double sum = 0;
    for (int mi : inter.phases.at(phaseId).movements)
        sum += movementPressure(net, state, inter, mi, mode, e, normalized, dt);
    return sum;
}

double intersectionPressure(const RoadNetwork &net, const SimState &state,
                            const Intersection &inter, FilterMode mode, double e,
                            bool normalized, int dt) {
    double sum = 0;
    for (size_t mi = 0; mi < inter.movements.size(); mi++)
        sum += movementPressure(net, state, inter, (int)mi, mode, e, normalized, dt);
    return sum;
}

int bestPhaseByPressure(const RoadNetwork &net, const SimState &state,
                        const Intersection &inter, FilterMode mode, double e, int dt) {
    int best = 0;
    double bestP = phasePressure(net, state, inter, 0, mode, e, false, dt);
    for (int p = 1; p < (int)inter.phases.size(); p++) {
        double v = phasePressure(net, state, inter, p, mode, e, false, dt);
        if (v > bestP) {
            bestP = v;
            best = p;
        }
    }
    return best;
}

Observation buildObservation(const RoadNetwork &net, const SimState &state, int intersection,
                             const ActiveFilter &filter, const OccupancyEncoding &enc) {
    const Intersection &inter = net.intersections[intersection];
    Observation obs;
    obs.intersection = intersection;
    obs.phase = state.signals[intersection].active;
    std::vector<FilterMode> blocks;
    if (filter.mode == FilterMode::AllAndActive)
        blocks = {FilterMode::AllVehicles, FilterMode::ActiveVehicles};
    else
        blocks = {filter.mode};
    for (FilterMode b : blocks) {
        for (int l : inter.inLanes)
            obs.counts.push_back(
                encodedLaneCount(net, state, l, inter, true, b, enc.e, filter.actionInterval));
        for (int l : inter.outLanes)
            obs.counts.push_back(
                encodedLaneCount(net, state, l, inter, false, b, enc.e, filter.actionInterval));
    }
    return obs;
}

double reward(const RoadNetwork &net, const SimState &state, int intersection,
              const ActiveFilter &filter, const OccupancyEncoding &enc) {
    FilterMode m = filter.mode == FilterMode::AllVehicles ? FilterMode::AllVehicles
                                                          : FilterMode::ActiveVehicles;
    return -intersectionPressure(net, state, net.intersections[intersection], m, enc.e, false,
                                 filter.actionInterval);
}

std::string observationCsvHeader(const RoadNetwork &net, int intersection,
                                 const ActiveFilter &filter) {
    const Intersection &inter = net.intersections[intersection];
    std::ostringstream os;
    os << "episode,t,intersection,phase";
    int blocks = filter.mode == FilterMode::AllAndActive ? 2 : 1;
    for (int b = 0; b < blocks; b++) {
        const char *tag = blocks == 2 ? (b == 0 ? "_all" : "_active") : "";
        for (size_t i = 0; i < inter.inLanes.size(); i++)
            os << ",in" << i << tag;
        for (size_t i = 0; i < inter.outLanes.size(); i++)
            os << ",out" << i << tag;
    }
    return os.str();
}

std::string observationCsvRow(int episode, int t, const Observation &obs) {
    std::ostringstream os;
    os << episode << ',' << t << ',' << obs.intersection << ',' << obs.phase;
    for (double c : obs.counts)
        os << ',' << c;
    return os.str();
}

} // namespace tsc
