#include "tsc/sim.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tsc {

double safeSpeed(double leaderGap, double leaderSpeed, const VehicleClass &cls) {
    if (leaderGap <= 0)
        return 0.0;
    double b = cls.maxDecel, tau = cls.headway;
    double v = -b * tau + std::sqrt(b * b * tau * tau + leaderSpeed * leaderSpeed +
                                    2.0 * b * leaderGap);
    if (v < 0)
        v = 0;
    if (v > cls.maxSpeed)
        v = cls.maxSpeed;
    return v;
}

SignalColor SimState::movementSignal(const Intersection &inter, int movementIdx) const {
    const SignalState &s = signals[inter.id];
    int phase = s.countdown == 0 ? s.active : s.previous;
    bool member = false;
    for (int mi : inter.phases[phase].movements)
        member = member || mi == movementIdx;
    if (s.countdown == 0)
        return member ? SignalColor::Green : SignalColor::Red;
    if (s.countdown > kAllRedTime && member)
        return SignalColor::Yellow;
    return SignalColor::Red;
}

int IntersectionView::stoppedOnLane(int laneId) const {
    int n = 0;
    for (int vid : state.laneVehicles[laneId])
        if (state.vehicles[vid].speed <= kStopSpeed)
            n++;
    return n;
}

Engine::Engine(const RoadNetwork &net, const DemandSchedule &schedule,
               const std::vector<VehicleClass> &classes)
    : net_(net), classes_(classes), schedule_(schedule) {
    state_.laneVehicles.resize(net.lanes.size());
    state_.entryQueues.resize(net.lanes.size());
    state_.signals.resize(net.intersections.size());
    for (size_t i = 0; i < net.intersections.size(); i++)
        state_.signals[i] = SignalState{};
    log_.intersectionCount = (int)net.intersections.size();
    log_.phaseLog.resize(net.intersections.size());
    log_.initialPhase.assign(net.intersections.size(), 0);
    log_.maxQueuePerInterval.assign(net.intersections.size(), {});
    state_.vehicles.reserve(schedule.events.size());
    for (const SpawnEvent &ev : schedule_.events)
        state_.vehicles.push_back(makeVehicle(ev));
    newSpeed_.resize(state_.vehicles.size(), 0.0);
}

Vehicle Engine::makeVehicle(const SpawnEvent &ev) const {
    if (ev.classIdx < 0 || ev.classIdx >= (int)classes_.size())
        throw std::runtime_error("spawn event with unknown vehicle class");
    const VehicleClass &cls = classes_[ev.classIdx];
    Vehicle v;
    v.id = (int)state_.vehicles.size();
    v.classIdx = ev.classIdx;
    v.occupancy = cls.occupancy;
    v.length = cls.length;
    v.maxSpeed = cls.maxSpeed;
    v.maxAccel = cls.maxAccel;
    v.maxDecel = cls.maxDecel;
    v.minGap = cls.minGap;
    v.headway = cls.headway;
    v.segments = ev.segments;
    v.scheduledSpawn = ev.time;
    if (v.segments.size() < 2)
        throw std::runtime_error("route must span at least entry and exit segments");
    v.fftt = 0;
    for (int s : v.segments)
        v.fftt += net_.segment(s).length / net_.segment(s).speedLimit;
    v.routeIntersections = 0;
    for (size_t i = 0; i + 1 < v.segments.size(); i++) {
        int ii = net_.intersectionAt(v.segments[i]);
        if (ii < 0)
            throw std::runtime_error("route passes through a boundary node");
        const Intersection &inter = net_.intersections[ii];
        int found = -1;
        for (size_t mi = 0; mi < inter.movements.size(); mi++)
            if (net_.lane(inter.movements[mi].inLane).segment == v.segments[i] &&
                inter.movements[mi].outSegment == v.segments[i + 1])
                found = (int)mi;
        if (found < 0)
            throw std::runtime_error("route segments are not connected by a movement");
        v.moveSeq.push_back(found);
        v.turnSeq.push_back(inter.movements[found].turn);
        v.laneSeq.push_back(inter.movements[found].inLane);
        v.routeIntersections++;
    }
    int lastInter = net_.intersectionAt(v.segments[v.segments.size() - 2]);
    v.laneSeq.push_back(net_.intersections[lastInter].movements[v.moveSeq.back()].outLane);
    if (net_.intersectionAt(v.segments.back()) >= 0)
        throw std::runtime_error("route must end at a boundary sink");
    return v;
}

void Engine::attachControllers(std::vector<Controller *> controllers) {
    if (controllers.size() != net_.intersections.size())
        throw std::runtime_error("need exactly one controller per intersection");
    controllers_ = std::move(controllers);
}

void Engine::applyAction(int intersection, int phase) {
    if (phase < 0 || phase >= kPhaseCount)
        throw std::domain_error("phase id outside 0..7");
    SignalState &s = state_.signals[intersection];
    if (phase == s.active)
        return;
    log_.phaseLog[intersection].push_back({state_.clock, s.active, phase});
    s.previous = s.active;
    s.active = phase;
    s.countdown = kInterphase;
    s.timeInPhase = 0;
}

void Engine::decisionPass() {
    int t = state_.clock;
    for (size_t i = 0; i < net_.intersections.size(); i++) {
        IntersectionView view{net_, state_, (int)i, t};
        int a;
        try {
            a = controllers_[i]->decide(view);
        } catch (const std::exception &e) {
            throw ControllerError(std::string("controller failed at t=") + std::to_string(t) +
                                  " intersection " + std::to_string(i) + ": " + e.what());
        }
        if (a < 0 || a >= kPhaseCount)
            throw std::domain_error("controller returned phase id outside 0..7");
        if (t == 0) {
            SignalState &s = state_.signals[i];
            s.active = s.previous = a;
            s.countdown = 0;
            s.timeInPhase = 0;
            log_.initialPhase[i] = a;
        } else {
            applyAction((int)i, a);
        }
    }
}

bool Engine::rightTurnPermitted(const Vehicle &v) const {
    int seg = net_.lane(v.currentLane()).segment;
    int ii = net_.intersectionAt(seg);
    const Intersection &inter = net_.intersections[ii];
    const Movement &m = inter.movements[v.moveSeq[v.routePos]];
    for (const Movement &tm : inter.movements) {
        if (tm.turn != Turn::Through || tm.outSegment != m.outSegment)
            continue;
        double laneLen = net_.laneLength(tm.inLane);
        for (int vid : state_.laneVehicles[tm.inLane]) {
            const Vehicle &tv = state_.vehicles[vid];
            if (laneLen - tv.offset <= tv.speed * v.headway + 1e-9)
                return false;
        }
    }
    return true;
}

double Engine::plannedSpeed(const Vehicle &v, int laneId, const std::vector<int> &order,
                            size_t pos) const {
    const RoadSegment &seg = net_.segment(net_.lane(laneId).segment);
    const VehicleClass &cls = classes_[v.classIdx];
    double vmax = std::min(v.maxSpeed, seg.speedLimit);
    double vDes = std::min(v.speed + v.maxAccel, vmax);
    if (pos > 0) {
        const Vehicle &lead = state_.vehicles[order[pos - 1]];
        double gap = lead.offset - lead.length - v.offset - v.minGap;
        vDes = std::min(vDes, safeSpeed(gap, lead.speed, cls));
    } else if (!v.onLastSegment()) {
        double d = seg.length - v.offset;
        int ii = net_.intersectionAt(seg.id);
        const Intersection &inter = net_.intersections[ii];
        int mi = v.moveSeq[v.routePos];
        bool treatGreen;
        if (v.turnSeq[v.routePos] == Turn::Right) {
            treatGreen = rightTurnPermitted(v);
        } else {
            SignalColor sig = state_.movementSignal(inter, mi);
            if (sig == SignalColor::Green)
                treatGreen = true;
            else if (sig == SignalColor::Yellow)
                treatGreen = v.speed * v.speed / (2.0 * v.maxDecel) > d; // stop if possible
            else
                treatGreen = false;
        }
        if (treatGreen) {
            int nl = v.laneSeq[v.routePos + 1];
            if (!state_.laneVehicles[nl].empty()) {
                const Vehicle &lead = state_.vehicles[state_.laneVehicles[nl].back()];
                double gap = d + lead.offset - lead.length - v.minGap;
                vDes = std::min(vDes, safeSpeed(gap, lead.speed, cls));
            }
        } else {
            vDes = std::min(vDes, safeSpeed(d, 0.0, cls));
        }
    }
    double vNew = vDes;
    if (vNew < v.speed - v.maxDecel)
        vNew = v.speed - v.maxDecel; // physical braking limit
    if (vNew < 0)
        vNew = 0;
    return vNew;
}

void Engine::speedPass() {
    for (size_t l = 0; l < state_.laneVehicles.size(); l++) {
        const std::vector<int> &order = state_.laneVehicles[l];
        for (size_t pos = 0; pos < order.size(); pos++) {
            const Vehicle &v = state_.vehicles[order[pos]];
            newSpeed_[v.id] = plannedSpeed(v, (int)l, order, pos);
        }
    }
}

bool Engine::crossingPermitted(const Vehicle &v, SignalColor sig) const {
    if (v.turnSeq[v.routePos] == Turn::Right)
        return rightTurnPermitted(v);
    if (sig == SignalColor::Green)
        return true;
    if (sig == SignalColor::Yellow) {
        int seg = net_.lane(v.currentLane()).segment;
        double d = net_.segment(seg).length - v.offset;
        return v.speed * v.speed / (2.0 * v.maxDecel) > d;
    }
    return false;
}

void Engine::movePass() {
    int t = state_.clock;
    for (size_t l = 0; l < state_.laneVehicles.size(); l++) {
        std::vector<int> &ids = state_.laneVehicles[l];
        size_t pos = 0;
        while (pos < ids.size()) {
            Vehicle &v = state_.vehicles[ids[pos]];
            if (v.lastCrossTime == t + 1 && v.currentLane() == (int)l) {
                pos++; // already transferred into this lane this step
                continue;
            }
            double vNew = newSpeed_[v.id];
            double newOff = v.offset + vNew;
            double laneLen = net_.laneLength((int)l);
            if (newOff < laneLen) {
                v.offset = newOff;
                v.speed = vNew;
                pos++;
                continue;
            }
            if (v.onLastSegment()) {
                v.finishStep = t + 1;
                if (v.stopStart >= 0) {
                    v.stops.push_back({v.stopStart, t + 1, v.segments[v.routePos]});
                    v.stopStart = -1;
                }
                ids.erase(ids.begin() + pos);
                state_.active--;
                state_.finished++;
                continue;
            }
            int seg = net_.lane((int)l).segment;
            int ii = net_.intersectionAt(seg);
            const Intersection &inter = net_.intersections[ii];
            SignalColor sig = state_.movementSignal(inter, v.moveSeq[v.routePos]);
            int nl = v.laneSeq[v.routePos + 1];
            bool ok = crossingPermitted(v, sig);
            if (ok && !state_.laneVehicles[nl].empty()) {
                const Vehicle &last = state_.vehicles[state_.laneVehicles[nl].back()];
                ok = newOff - laneLen <= last.offset - last.length - v.minGap + 1e-9;
            }
            if (!ok) {
                // held at the line; the speed pass should have prevented this
                v.offset = std::min(newOff, laneLen - 1e-6);
                v.speed = 0;
                log_.safety.crossingClamps++;
                pos++;
                continue;
            }
            ids.erase(ids.begin() + pos);
            v.routePos++;
            v.offset = newOff - laneLen;
            v.speed = vNew;
            v.lanesEntered++;
            v.lastCrossIntersection = ii;
            v.lastCrossTime = t + 1;
            state_.laneVehicles[nl].push_back(v.id);
        }
    }
}

void Engine::spawnPass() {
    int t = state_.clock;
    while (state_.nextEvent < state_.vehicles.size() &&
           state_.vehicles[state_.nextEvent].scheduledSpawn <= t) {
        Vehicle &v = state_.vehicles[state_.nextEvent];
        state_.entryQueues[v.laneSeq[0]].push_back(v.id);
        state_.spawned++;
        state_.queued++;
        state_.nextEvent++;
    }
    for (size_t l = 0; l < state_.entryQueues.size(); l++) {
        std::deque<int> &q = state_.entryQueues[l];
        while (!q.empty()) {
            Vehicle &v = state_.vehicles[q.front()];
            std::vector<int> &ids = state_.laneVehicles[l];
            double vStart;
            if (ids.empty()) {
                vStart = std::min(v.maxSpeed, net_.segment(net_.lane((int)l).segment).speedLimit);
            } else {
                const Vehicle &last = state_.vehicles[ids.back()];
                double gap = last.offset - last.length - v.minGap;
                if (gap < 0)
                    break; // no entry space yet
                vStart = safeSpeed(gap, last.speed, classes_[v.classIdx]);
            }
            v.offset = 0;
            v.speed = vStart;
            v.spawnStep = t + 1;
            v.lanesEntered = 1;
            ids.push_back(v.id);
            q.pop_front();
            state_.queued--;
            state_.active++;
        }
    }
}

void Engine::recordStopTransition(Vehicle &v, int t) {
    bool stopped = v.speed <= kStopSpeed;
    if (stopped && v.stopStart < 0) {
        v.stopStart = t;
    } else if (!stopped && v.stopStart >= 0) {
        v.stops.push_back({v.stopStart, t, v.segments[v.routePos]});
        v.stopStart = -1;
    }
}

void Engine::samplePass() {
    int t1 = state_.clock + 1;
    int vql = 0;
    long pql = 0;
    bool boundary = t1 % kActionInterval == 0;
    std::vector<int> laneStopped;
    if (boundary)
        laneStopped.assign(net_.lanes.size(), 0);
    for (size_t l = 0; l < state_.laneVehicles.size(); l++) {
        for (int vid : state_.laneVehicles[l]) {
            Vehicle &v = state_.vehicles[vid];
            recordStopTransition(v, t1);
            if (v.speed <= kStopSpeed) {
                vql++;
                pql += v.occupancy;
                if (boundary)
                    laneStopped[l]++;
            }
            if (trajectoryCsv_)
                (*trajectoryCsv_) << t1 << ',' << v.id << ',' << l << ',' << v.offset << ','
                                  << v.speed << '\n';
        }
    }
    log_.vqlPerStep.push_back(vql);
    log_.pqlPerStep.push_back(pql);
    if (boundary) {
        for (size_t i = 0; i < net_.intersections.size(); i++) {
            int mx = 0;
            for (int l : net_.intersections[i].inLanes)
                mx = std::max(mx, laneStopped[l]);
            log_.maxQueuePerInterval[i].push_back(mx);
        }
    }
    if (signalCsv_) {
        for (size_t i = 0; i < net_.intersections.size(); i++) {
            const SignalState &s = state_.signals[i];
            (*signalCsv_) << state_.clock << ',' << i << ',' << s.active << ','
                          << (s.countdown > 0 ? 1 : 0) << '\n';
        }
    }
}

void Engine::checkInvariants() {
    for (size_t l = 0; l < state_.laneVehicles.size(); l++) {
        const std::vector<int> &ids = state_.laneVehicles[l];
        for (size_t pos = 1; pos < ids.size(); pos++) {
            const Vehicle &lead = state_.vehicles[ids[pos - 1]];
            const Vehicle &back = state_.vehicles[ids[pos]];
            if (lead.offset - lead.length - back.offset < back.minGap - 1e-6)
                log_.safety.collisions++;
        }
    }
    for (const Intersection &inter : net_.intersections) {
        const SignalState &s = state_.signals[inter.id];
        if (s.countdown > 0)
            continue;
        const Phase &p = inter.phases[s.active];
        for (size_t i = 0; i < p.movements.size(); i++)
            for (size_t j = i + 1; j < p.movements.size(); j++)
                if (inter.conflicts(p.movements[i], p.movements[j]))
                    log_.safety.conflictingGreens++;
    }
    if (state_.spawned != state_.active + state_.finished + state_.queued)
        log_.safety.conservationViolations++;
}

void Engine::step() {
    int t = state_.clock;
    if (!controllers_.empty() && t % kActionInterval == 0 && t < duration_)
        decisionPass();
    speedPass();
    movePass();
    spawnPass();
    samplePass();
    checkInvariants();
    for (SignalState &s : state_.signals) {
        if (s.countdown > 0)
            s.countdown--;
        s.timeInPhase++;
    }
    state_.clock++;
}

void Engine::run(const RunOptions &opts) {
    duration_ = opts.duration;
    trajectoryCsv_ = opts.trajectoryCsv;
    signalCsv_ = opts.signalCsv;
    if (trajectoryCsv_)
        (*trajectoryCsv_) << "t,vehicle,lane,offset,speed\n";
    if (signalCsv_)
        (*signalCsv_) << "t,intersection,phase,interphase\n";
    while (state_.clock < duration_) {
        int t = state_.clock;
        if (opts.boundaryHook && t % kActionInterval == 0)
            for (size_t i = 0; i < net_.intersections.size(); i++)
                opts.boundaryHook(IntersectionView{net_, state_, (int)i, t});
        step();
    }
    for (size_t i = 0; i < controllers_.size(); i++)
        controllers_[i]->episodeEnd(IntersectionView{net_, state_, (int)i, state_.clock});
}

MetricsLog Engine::finish() {
    log_.duration = state_.clock;
    for (Vehicle &v : state_.vehicles) {
        if (v.stopStart >= 0 && v.finishStep < 0 && v.spawnStep >= 0) {
            v.stops.push_back({v.stopStart, state_.clock, v.segments[v.routePos]});
            v.stopStart = -1;
        }
    }
    log_.vehicles.clear();
    for (size_t i = 0; i < state_.vehicles.size(); i++) {
        const Vehicle &v = state_.vehicles[i];
        if (i >= state_.nextEvent && v.spawnStep < 0)
            continue; // never became due
        VehicleRecord r;
        r.id = v.id;
        r.classIdx = v.classIdx;
        r.occupancy = v.occupancy;
        r.scheduledSpawn = v.scheduledSpawn;
        r.spawnStep = v.spawnStep;
        r.finishStep = v.finishStep;
        r.fftt = v.fftt;
        r.routeIntersections = v.routeIntersections;
        r.lanesEntered = v.lanesEntered;
        r.stops = v.stops;
        log_.vehicles.push_back(std::move(r));
    }
    return log_;
}

int Engine::placeVehicle(int classIdx, const std::vector<int> &route, double offset,
                         double speed) {
    SpawnEvent ev{0.0, classIdx, route};
    Vehicle v = makeVehicle(ev);
    v.offset = offset;
    v.speed = speed;
    v.spawnStep = 0;
    v.lanesEntered = 1;
    state_.vehicles.push_back(v);
    newSpeed_.push_back(0.0);
    std::vector<int> &ids = state_.laneVehicles[v.laneSeq[0]];
    size_t pos = 0;
    while (pos < ids.size() && state_.vehicles[ids[pos]].offset > offset)
        pos++;
    ids.insert(ids.begin() + pos, v.id);
    state_.spawned++;
    state_.active++;
    // keep the pool/event bookkeeping consistent: placed vehicles are "due"
    state_.nextEvent = state_.vehicles.size();
    return v.id;
}

MetricsLog runEpisode(const RoadNetwork &net, const DemandSchedule &schedule,
                      const std::vector<VehicleClass> &classes,
                      std::vector<Controller *> controllers, RunOptions opts) {
    Engine engine(net, schedule, classes);
    engine.attachControllers(std::move(controllers));
    try {
        engine.run(opts);
    } catch (const ControllerError &) {
        MetricsLog log = engine.finish();
        log.aborted = true;
        return log;
    }
    return engine.finish();
}

} // namespace tsc
