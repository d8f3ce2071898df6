#pragma once

#include "tsc/metrics.h"
#include "tsc/net.h"
#include "tsc/scenario.h"

#include <deque>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace tsc {

constexpr int kActionInterval = 10; // s
constexpr int kYellowTime = 3;      // s
constexpr int kAllRedTime = 2;      // s
constexpr int kInterphase = kYellowTime + kAllRedTime;

// Krauss safe speed: fastest speed from which the follower, reacting after
// the class headway and braking at max decel, stays behind a leader that
// brakes maximally. Clamped to [0, class max speed]. Red signals are a
// stationary zero-length leader at the stop line.
double safeSpeed(double leaderGap, double leaderSpeed, const VehicleClass &cls);

struct ControllerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vehicle {
    int id;
    int classIdx;
    int occupancy;
    double length, maxSpeed, maxAccel, maxDecel, minGap, headway;
    std::vector<int> segments;  // route
    std::vector<int> laneSeq;   // lane on each route segment
    std::vector<int> moveSeq;   // movement index at each crossing
    std::vector<Turn> turnSeq;
    int routePos = 0;
    double offset = 0; // front bumper along current lane
    double speed = 0;
    double scheduledSpawn = 0;
    int spawnStep = -1;
    int finishStep = -1;
    int lastCrossIntersection = -1;
    int lastCrossTime = -1;
    int stopStart = -1;
    int lanesEntered = 0;
    int routeIntersections = 0;
    double fftt = 0;
    std::vector<StopEvent> stops;

    int currentLane() const { return laneSeq[routePos]; }
    bool onLastSegment() const { return routePos + 1 >= (int)segments.size(); }
};

enum class SignalColor { Green, Yellow, Red };

struct SignalState {
    int active = 0;
    int previous = 0;
    int countdown = 0;   // interphase seconds remaining; 0 while green
    int timeInPhase = 0; // seconds since the phase was selected
};

struct SimState {
    int clock = 0;
    std::vector<Vehicle> vehicles;               // pool; id = index
    std::vector<std::vector<int>> laneVehicles;  // per lane, front first
    std::vector<SignalState> signals;            // per intersection
    size_t nextEvent = 0;
    std::vector<std::deque<int>> entryQueues;    // blocked spawns per lane
    long spawned = 0, active = 0, finished = 0, queued = 0;

    SignalColor movementSignal(const Intersection &inter, int movementIdx) const;
};

struct IntersectionView {
    const RoadNetwork &net;
    const SimState &state;
    int intersection;
    int time;

    const Intersection &inter() const { return net.intersections[intersection]; }
    int currentPhase() const { return state.signals[intersection].active; }
    int timeInPhase() const { return state.signals[intersection].timeInPhase; }
    int stoppedOnLane(int laneId) const;
};

class Controller {
  public:
    virtual ~Controller() = default;
    virtual void reset() {}
    virtual int decide(const IntersectionView &view) = 0;
    // Called once at episode end with the final state (no action taken).
    virtual void episodeEnd(const IntersectionView &view) { (void)view; }
};

struct RunOptions {
    int duration = 3600;
    std::ostream *trajectoryCsv = nullptr;
    std::ostream *signalCsv = nullptr;
    std::function<void(const IntersectionView &)> boundaryHook; // after each decision
};

class Engine {
  public:
    Engine(const RoadNetwork &net, const DemandSchedule &schedule,
           const std::vector<VehicleClass> &classes);

    void attachControllers(std::vector<Controller *> controllers);
    void step();              // advance one second
    void run(const RunOptions &opts);
    MetricsLog finish();      // close logs and return the episode record

    SimState &state() { return state_; }
    const SimState &state() const { return state_; }
    const RoadNetwork &network() const { return net_; }
    int clock() const { return state_.clock; }

    // Applies a phase decision at an action-interval boundary: keeping the
    // phase leaves green untouched, changing it starts the 5 s interphase.
    void applyAction(int intersection, int phase);

    bool rightTurnPermitted(const Vehicle &v) const;

    // Test support: place a vehicle directly on a lane.
    int placeVehicle(int classIdx, const std::vector<int> &route, double offset, double speed);

  private:
    void decisionPass();
    void speedPass();
    void movePass();
    void spawnPass();
    void samplePass();
    void checkInvariants();
    double plannedSpeed(const Vehicle &v, int laneId, const std::vector<int> &order,
                        size_t pos) const;
    bool crossingPermitted(const Vehicle &v, SignalColor sig) const;
    Vehicle makeVehicle(const SpawnEvent &ev) const;
    void recordStopTransition(Vehicle &v, int t);

    const RoadNetwork &net_;
    const std::vector<VehicleClass> classes_;
    DemandSchedule schedule_;
    std::vector<Controller *> controllers_;
    SimState state_;
    MetricsLog log_;
    std::vector<double> newSpeed_;
    std::vector<uint16_t> phaseMask_; // [intersection*8 + phase] movement bits
    int duration_ = 3600;
    std::ostream *trajectoryCsv_ = nullptr;
    std::ostream *signalCsv_ = nullptr;
};

MetricsLog runEpisode(const RoadNetwork &net, const DemandSchedule &schedule,
                      const std::vector<VehicleClass> &classes,
                      std::vector<Controller *> controllers, RunOptions opts = {});

} // namespace tsc
