#include "tsc/controllers.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace tsc {

double websterCycle(double vc, int phaseCount, const WebsterParams &p) {
    double denom = 1.0 - vc / (3600.0 / p.h * p.phf * p.vOverC);
    if (denom <= 0)
        throw InfeasibleDemandError("saturated demand: Webster denominator <= 0");
    return phaseCount * p.tL / denom;
}

std::vector<double> websterSplits(double cycle, const std::vector<double> &criticalVolumes,
                                  const WebsterParams &p) {
    int n = (int)criticalVolumes.size();
    double avail = cycle - n * p.tL;
    if (avail <= 0)
        throw InfeasibleDemandError("cycle shorter than total loss time");
    double total = 0;
    for (double v : criticalVolumes) {
        if (v < 0)
            throw std::domain_error("negative critical volume");
        total += v;
    }
    std::vector<double> greens(n);
    if (total <= 0) {
        double g = std::round(avail / n);
        std::fill(greens.begin(), greens.end(), g);
        return greens;
    }
    // proportional split with the minimum green enforced, then 1 s rounding
    std::vector<bool> clamped(n, false);
    double remaining = avail, weight = total;
    for (int pass = 0; pass < n; pass++) {
        bool changed = false;
        for (int i = 0; i < n; i++) {
            if (clamped[i])
                continue;
            double g = remaining * criticalVolumes[i] / weight;
            if (g < p.minGreen) {
                greens[i] = p.minGreen;
                clamped[i] = true;
                remaining -= p.minGreen;
                weight -= criticalVolumes[i];
                changed = true;
            }
        }
        if (!changed)
            break;
    }
    for (int i = 0; i < n; i++)
        if (!clamped[i])
            greens[i] = weight > 0 ? remaining * criticalVolumes[i] / weight
                                   : remaining / (double)n;
    double sum = 0;
    for (int i = 0; i < n; i++) {
        greens[i] = std::round(greens[i]);
        sum += greens[i];
    }
    // absorb rounding drift in the largest split
    int big = (int)(std::max_element(greens.begin(), greens.end()) - greens.begin());
    greens[big] += avail - sum;
    return greens;
}

WebsterPlan websterPlan(const std::vector<double> &criticalVolumes, const WebsterParams &p) {
    double vc = 0;
    for (double v : criticalVolumes)
        vc += v;
    WebsterPlan plan;
    try {
        plan.cycle = std::min(websterCycle(vc, (int)criticalVolumes.size(), p), p.maxCycle);
    } catch (const InfeasibleDemandError &) {
        plan.cycle = p.maxCycle;
    }
    plan.greens = websterSplits(plan.cycle, criticalVolumes, p);
    plan.cycle = 0;
    for (double g : plan.greens)
        plan.cycle += g + p.tL;
    for (int i = 0; i < (int)criticalVolumes.size(); i++)
        plan.order.push_back(i);
    return plan;
}

std::vector<std::vector<double>> phaseCriticalVolumes(const RoadNetwork &net,
                                                      const DemandSchedule &schedule,
                                                      double duration) {
    // veh/hr per (intersection, movement) implied by the planned routes
    std::vector<std::vector<double>> moveVol(net.intersections.size());
    for (size_t i = 0; i < net.intersections.size(); i++)
        moveVol[i].assign(net.intersections[i].movements.size(), 0.0);
    for (const SpawnEvent &ev : schedule.events) {
        for (size_t s = 0; s + 1 < ev.segments.size(); s++) {
            int ii = net.intersectionAt(ev.segments[s]);
            if (ii < 0)
                continue;
            const Intersection &inter = net.intersections[ii];
            for (size_t mi = 0; mi < inter.movements.size(); mi++)
                if (net.lane(inter.movements[mi].inLane).segment == ev.segments[s] &&
                    inter.movements[mi].outSegment == ev.segments[s + 1])
                    moveVol[ii][mi] += 1.0;
        }
    }
    std::vector<std::vector<double>> out(net.intersections.size());
    for (size_t i = 0; i < net.intersections.size(); i++) {
        const Intersection &inter = net.intersections[i];
        out[i].assign(inter.phases.size(), 0.0);
        for (const Phase &p : inter.phases) {
            double crit = 0;
            for (int mi : p.movements)
                crit = std::max(crit, moveVol[i][mi] * 3600.0 / duration);
            out[i][p.id] = crit;
        }
    }
    return out;
}

FixedTimeController::FixedTimeController(WebsterPlan plan) : plan_(std::move(plan)) {
    double t = 0;
    for (size_t i = 0; i < plan_.greens.size(); i++) {
        t += plan_.greens[i] + kInterphase;
        slotEnd_.push_back(t);
    }
    period_ = t;
}

int FixedTimeController::phaseAt(int t) const {
    double m = std::fmod((double)t, period_);
    for (size_t i = 0; i < slotEnd_.size(); i++)
        if (m < slotEnd_[i])
            return plan_.order[i];
    return plan_.order.back();
}

int FixedTimeController::decide(const IntersectionView &view) { return phaseAt(view.time); }

SotlController::SotlController(double threshold, int minGreen)
    : threshold_(threshold), minGreen_(minGreen) {
    if (threshold <= 0)
        throw std::domain_error("SOTL threshold must be positive");
    if (minGreen < kActionInterval)
        throw std::domain_error("SOTL min green below the action interval");
}

int SotlController::decide(const IntersectionView &view) {
    int cur = view.currentPhase();
    if (view.timeInPhase() < minGreen_)
        return cur;
    const Intersection &inter = view.inter();
    int best = cur;
    double bestCount = threshold_;
    for (const Phase &p : inter.phases) {
        if (p.id == cur)
            continue;
        std::set<int> lanes;
        for (int mi : p.movements)
            lanes.insert(inter.movements[mi].inLane);
        double waiting = 0;
        for (int l : lanes)
            waiting += view.stoppedOnLane(l);
        if (waiting > bestCount) {
            bestCount = waiting;
            best = p.id;
        }
    }
    return best;
}

MaxPressureController::MaxPressureController(int tMin, FilterMode mode, double encodingE)
    : tMin_(tMin), mode_(mode), e_(encodingE) {
    if (tMin % kActionInterval != 0)
        throw std::domain_error("t_min must be a multiple of the action interval");
}

MaxPressureController MaxPressureController::vehicle(int tMin) {
    return MaxPressureController(tMin, FilterMode::AllVehicles, 0.0);
}

MaxPressureController MaxPressureController::person(int tMin, FilterMode mode) {
    return MaxPressureController(tMin, mode, 1.0);
}

int MaxPressureController::decide(const IntersectionView &view) {
    if (view.time > 0 && view.timeInPhase() < tMin_)
        return view.currentPhase();
    return bestPhaseByPressure(view.net, view.state, view.inter(), mode_, e_);
}

} // namespace tsc
