#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tsc {

// Stop bound: a vehicle is queued while its speed stays at or below this.
constexpr double kStopSpeed = 0.1; // m/s

struct StopEvent {
    int start, end; // s
    int segment;    // where the stop began
};

struct VehicleRecord {
    int id;
    int classIdx;
    int occupancy;
    double scheduledSpawn;
    int spawnStep = -1;  // -1: never entered the network
    int finishStep = -1; // -1: unfinished at episode end
    double fftt;         // route length over segment speed limits
    int routeIntersections;
    int lanesEntered = 0;
    std::vector<StopEvent> stops;
};

struct PhaseChange {
    int time, from, to;
};

struct SafetyCounters {
    long collisions = 0;
    long conflictingGreens = 0;
    long conservationViolations = 0;
    long crossingClamps = 0; // held at the line as a last resort
    void add(const SafetyCounters &o) {
        collisions += o.collisions;
        conflictingGreens += o.conflictingGreens;
        conservationViolations += o.conservationViolations;
        crossingClamps += o.crossingClamps;
    }
    bool clean() const {
        return collisions == 0 && conflictingGreens == 0 && conservationViolations == 0;
    }
};

struct MetricsLog {
    int duration = 0;
    int intersectionCount = 0;
    std::vector<VehicleRecord> vehicles;
    std::vector<int> vqlPerStep;    // network-wide stopped vehicles, t = 1..duration
    std::vector<long> pqlPerStep;   // occupancy-weighted
    std::vector<std::vector<int>> maxQueuePerInterval; // [intersection][action interval]
    std::vector<std::vector<PhaseChange>> phaseLog;    // per intersection
    std::vector<int> initialPhase;
    SafetyCounters safety;
    bool aborted = false;

    uint64_t hash() const;
};

struct EpisodeSummary {
    std::optional<double> avtt, aptt; // s
    std::optional<double> avd, apd;   // s
    double meanVql = 0, meanPql = 0;
    double phaseChangesPerHour = 0;
    int completed = 0, unfinished = 0, spawnedTotal = 0;
    std::optional<double> ttOccSlope, ttOccIntercept, ttOccR2;
};

// Eq.-level accessors. Travel time for unfinished vehicles runs to episode
// end from the scheduled spawn; their delay is floored at zero.
double travelTime(const VehicleRecord &v, int duration);
std::optional<double> avgVehicleTravelTime(const MetricsLog &log);
std::optional<double> avgPersonTravelTime(const MetricsLog &log);
std::optional<double> avgVehicleDelay(const MetricsLog &log);
std::optional<double> avgPersonDelay(const MetricsLog &log);
int vehicleQueueLength(const MetricsLog &log, int t);  // t in 1..duration
long personQueueLength(const MetricsLog &log, int t);
double meanVehicleQueue(const MetricsLog &log);
double meanPersonQueue(const MetricsLog &log);

struct MaxQueueProfile {
    std::vector<std::vector<int>> perInterval; // [intersection][interval]
    std::vector<double> timeMean;              // per intersection
};
MaxQueueProfile maxQueueProfile(const MetricsLog &log);

struct StopStats {
    double stopsPerSegment = 0;
    double meanStopDuration = 0; // s
    long stopCount = 0;
    long segmentsTraversed = 0;
};
// Keyed by vehicle class index.
std::vector<StopStats> stopAnalytics(const MetricsLog &log, int classCount);

struct PhaseProfile {
    double changesPerHour = 0;             // network mean per intersection
    std::vector<int> durations;            // pooled green spans, s
    std::vector<double> perIntersection;   // changes/hr each
};
PhaseProfile phaseProfile(const MetricsLog &log);

enum class TtGroupRule { PerClass, PerClassFullRoute };
struct OlsFit {
    std::optional<double> slope, intercept, r2;
    int groups = 0;
};
// OLS of per-class mean travel time against occupancy. PerClassFullRoute
// keeps only finished vehicles whose route crossed every intersection.
OlsFit ttOccupancyRegression(const MetricsLog &log, TtGroupRule rule, int classCount,
                             const std::vector<int> &occupancies);

EpisodeSummary summarize(const MetricsLog &log, const std::vector<int> &occupancies,
                         TtGroupRule rule = TtGroupRule::PerClass);

// mean/std over the tail of several runs ("last 20 episodes of each run").
struct MeanStd {
    double mean = 0, std = 0;
};
MeanStd tailStat(const std::vector<std::vector<double>> &perRunSeries, int tail);

std::string vehiclesCsv(const MetricsLog &log);
std::string queuesCsv(const MetricsLog &log);
std::string summaryCsvHeader();
std::string summaryCsvRow(const EpisodeSummary &s);

} // namespace tsc
