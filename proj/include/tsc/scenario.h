#pragma once

#include "tsc/net.h"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tsc {

constexpr int kClassCount = 7;
enum VehicleClassId { kSov = 0, kCarpool2, kCarpool3, kMicro10, kMicro20, kMicro30, kBus };

struct VehicleClass {
    std::string name;
    int occupancy;
    double length;   // m
    double maxSpeed; // m/s
    double maxAccel; // m/s^2
    double maxDecel; // m/s^2
    double minGap;   // m
    double headway;  // s
};

std::vector<VehicleClass> defaultVehicleClasses(int busOccupancy = 40);

enum class NetworkKind { Single, Corridor, Grid };
const char *toString(NetworkKind k);
NetworkKind networkKindFromString(const std::string &s);

struct ModeShareScenario {
    std::string name; // low / light / moderate / high
    NetworkKind family;
    std::array<double, kClassCount> personShares; // sum to 1
    double totalPersonsPerHour; // per entry road (Corridor/Grid), network total (Single)
    // Demand targets the shares must reproduce:
    double vehPerHourPerRoad = 0;              // Corridor/Grid family
    std::array<double, 4> movementFlows{};     // Single family, veh/hr/lane:
                                               // {NS through, NS left, EW through, EW left}
};

ModeShareScenario builtinScenario(const std::string &name, NetworkKind family);
const std::vector<std::string> &scenarioNames();

// Person shares -> vehicle arrival fractions (share/occupancy, normalized).
// Throws when the implied vehicle rate misses the scenario's published
// target by more than 2%.
std::array<double, kClassCount> scenarioFleetMix(const ModeShareScenario &sc);

struct TurningRatios {
    double left = 0.10, through = 0.60, right = 0.30;
};

struct SpawnEvent {
    double time;               // s
    int classIdx;
    std::vector<int> segments; // route
};

struct DemandSchedule {
    std::vector<SpawnEvent> events; // time-sorted
    TurningRatios ratios;
    uint64_t seed = 0;
};

struct TransitLine {
    std::vector<int> segments;
    double headway; // s
    int classIdx;
};

// Fixed bus routelines: corridor gets one end-to-end line per direction,
// the grid two L-shaped lines (left turns only, never a right turn).
// The single intersection has none (transit rides in the general mix).
std::vector<TransitLine> transitLinesFor(const RoadNetwork &net, NetworkKind kind,
                                         const ModeShareScenario &sc);

DemandSchedule generateDemand(const RoadNetwork &net, NetworkKind kind,
                              const ModeShareScenario &sc, double duration, uint64_t seed,
                              const TurningRatios &ratios = {});

std::string demandToJson(const DemandSchedule &d);
DemandSchedule demandFromJson(const std::string &text);

// Expected vehicles/hr over the whole network implied by (scenario, network).
double expectedVehicleRate(const RoadNetwork &net, NetworkKind kind,
                           const ModeShareScenario &sc);

} // namespace tsc
