#include "tsc/metrics.h"

#include "tsc/sim.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace tsc {

namespace {

struct Fnv {
    uint64_t h = 1469598103934665603ull;
    void mix(uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    }
    void mix(double d) {
        uint64_t b;
        std::memcpy(&b, &d, 8);
        mix(b);
    }
    void mix(int v) { mix((uint64_t)(int64_t)v); }
};

} // namespace

uint64_t MetricsLog::hash() const {
    Fnv f;
    f.mix(duration);
    f.mix((uint64_t)vehicles.size());
    for (const VehicleRecord &v : vehicles) {
        f.mix(v.id);
        f.mix(v.classIdx);
        f.mix(v.scheduledSpawn);
        f.mix(v.spawnStep);
        f.mix(v.finishStep);
        f.mix(v.lanesEntered);
        for (const StopEvent &s : v.stops) {
            f.mix(s.start);
            f.mix(s.end);
            f.mix(s.segment);
        }
    }
    for (int q : vqlPerStep)
        f.mix(q);
    for (long q : pqlPerStep)
        f.mix((uint64_t)q);
    for (const auto &log : phaseLog)
        for (const PhaseChange &c : log) {
            f.mix(c.time);
            f.mix(c.from);
            f.mix(c.to);
        }
    return f.h;
}

double travelTime(const VehicleRecord &v, int duration) {
    int end = v.finishStep >= 0 ? v.finishStep : duration;
    return (double)end - v.scheduledSpawn;
}

namespace {

double vehicleDelay(const VehicleRecord &v, int duration) {
    double tt = travelTime(v, duration);
    double d = tt - v.fftt;
    if (v.finishStep >= 0) {
        if (d < -1e-9)
            throw std::runtime_error("completed vehicle finished faster than free flow");
        return d;
    }
    return d > 0 ? d : 0.0; // unfinished: floored, see header
}

template <typename W>
std::optional<double> weightedMean(const MetricsLog &log, W weight, bool delay) {
    double num = 0, den = 0;
    for (const VehicleRecord &v : log.vehicles) {
        double x = delay ? vehicleDelay(v, log.duration) : travelTime(v, log.duration);
        double w = weight(v);
        num += x * w;
        den += w;
    }
    if (den <= 0)
        return std::nullopt;
    return num / den;
}

} // namespace

std::optional<double> avgVehicleTravelTime(const MetricsLog &log) {
    return weightedMean(log, [](const VehicleRecord &) { return 1.0; }, false);
}

std::optional<double> avgPersonTravelTime(const MetricsLog &log) {
    return weightedMean(log, [](const VehicleRecord &v) { return (double)v.occupancy; }, false);
}

std::optional<double> avgVehicleDelay(const MetricsLog &log) {
    return weightedMean(log, [](const VehicleRecord &) { return 1.0; }, true);
}

std::optional<double> avgPersonDelay(const MetricsLog &log) {
    return weightedMean(log, [](const VehicleRecord &v) { return (double)v.occupancy; }, true);
}

int vehicleQueueLength(const MetricsLog &log, int t) {
    return log.vqlPerStep.at((size_t)t - 1);
}

long personQueueLength(const MetricsLog &log, int t) {
    return log.pqlPerStep.at((size_t)t - 1);
}

double meanVehicleQueue(const MetricsLog &log) {
    if (log.vqlPerStep.empty())
        return 0;
    double s = 0;
    for (int q : log.vqlPerStep)
        s += q;
    return s / (double)log.vqlPerStep.size();
}

double meanPersonQueue(const MetricsLog &log) {
    if (log.pqlPerStep.empty())
        return 0;
    double s = 0;
    for (long q : log.pqlPerStep)
        s += (double)q;
    return s / (double)log.pqlPerStep.size();
}

MaxQueueProfile maxQueueProfile(const MetricsLog &log) {
    MaxQueueProfile p;
    p.perInterval = log.maxQueuePerInterval;
    for (const std::vector<int> &series : p.perInterval) {
        double s = 0;
        for (int v : series)
            s += v;
        p.timeMean.push_back(series.empty() ? 0 : s / (double)series.size());
    }
    return p;
}

std::vector<StopStats> stopAnalytics(const MetricsLog &log, int classCount) {
    std::vector<StopStats> out(classCount);
    for (const VehicleRecord &v : log.vehicles) {
        if (v.spawnStep < 0)
            continue;
        StopStats &s = out.at(v.classIdx);
        s.stopCount += (long)v.stops.size();
        s.segmentsTraversed += v.lanesEntered;
        for (const StopEvent &e : v.stops)
            s.meanStopDuration += e.end - e.start;
    }
    for (StopStats &s : out) {
        if (s.stopCount > 0)
            s.meanStopDuration /= (double)s.stopCount;
        if (s.segmentsTraversed > 0)
            s.stopsPerSegment = (double)s.stopCount / (double)s.segmentsTraversed;
    }
    return out;
}

PhaseProfile phaseProfile(const MetricsLog &log) {
    PhaseProfile p;
    if (log.duration <= 0 || log.phaseLog.empty())
        return p;
    double hours = log.duration / 3600.0;
    double total = 0;
    for (size_t i = 0; i < log.phaseLog.size(); i++) {
        const std::vector<PhaseChange> &changes = log.phaseLog[i];
        p.perIntersection.push_back(changes.size() / hours);
        total += changes.size() / hours;
        // green spans: start of green to the next change
        int greenStart = 0;
        for (const PhaseChange &c : changes) {
            p.durations.push_back(c.time - greenStart);
            greenStart = c.time + kInterphase;
        }
        p.durations.push_back(log.duration - greenStart);
    }
    p.changesPerHour = total / (double)log.phaseLog.size();
    return p;
}

OlsFit ttOccupancyRegression(const MetricsLog &log, TtGroupRule rule, int classCount,
                             const std::vector<int> &occupancies) {
    std::vector<double> sum(classCount, 0), cnt(classCount, 0);
    for (const VehicleRecord &v : log.vehicles) {
        if (rule == TtGroupRule::PerClassFullRoute) {
            if (v.finishStep < 0 || v.routeIntersections < log.intersectionCount)
                continue;
        }
        sum[v.classIdx] += travelTime(v, log.duration);
        cnt[v.classIdx] += 1;
    }
    std::vector<double> xs, ys;
    for (int c = 0; c < classCount; c++)
        if (cnt[c] > 0) {
            xs.push_back((double)occupancies[c]);
            ys.push_back(sum[c] / cnt[c]);
        }
    OlsFit fit;
    fit.groups = (int)xs.size();
    if (fit.groups < 2)
        return fit;
    double n = (double)xs.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); i++) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0)
        return fit;
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    double ssTot = 0, ssRes = 0, my = sy / n;
    for (size_t i = 0; i < xs.size(); i++) {
        double e = ys[i] - (intercept + slope * xs[i]);
        ssRes += e * e;
        ssTot += (ys[i] - my) * (ys[i] - my);
    }
    fit.slope = slope;
    fit.intercept = intercept;
    fit.r2 = ssTot > 0 ? 1.0 - ssRes / ssTot : 0.0;
    return fit;
}

EpisodeSummary summarize(const MetricsLog &log, const std::vector<int> &occupancies,
                         TtGroupRule rule) {
    EpisodeSummary s;
    s.avtt = avgVehicleTravelTime(log);
    s.aptt = avgPersonTravelTime(log);
    s.avd = avgVehicleDelay(log);
    s.apd = avgPersonDelay(log);
    s.meanVql = meanVehicleQueue(log);
    s.meanPql = meanPersonQueue(log);
    s.phaseChangesPerHour = phaseProfile(log).changesPerHour;
    for (const VehicleRecord &v : log.vehicles) {
        s.spawnedTotal++;
        if (v.finishStep >= 0)
            s.completed++;
        else
            s.unfinished++;
    }
    OlsFit fit = ttOccupancyRegression(log, rule, (int)occupancies.size(), occupancies);
    s.ttOccSlope = fit.slope;
    s.ttOccIntercept = fit.intercept;
    s.ttOccR2 = fit.r2;
    return s;
}

MeanStd tailStat(const std::vector<std::vector<double>> &perRunSeries, int tail) {
    std::vector<double> pooled;
    for (const std::vector<double> &run : perRunSeries) {
        int n = (int)run.size();
        for (int i = std::max(0, n - tail); i < n; i++)
            pooled.push_back(run[i]);
    }
    MeanStd out;
    if (pooled.empty())
        return out;
    for (double v : pooled)
        out.mean += v;
    out.mean /= (double)pooled.size();
    for (double v : pooled)
        out.std += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(out.std / (double)pooled.size());
    return out;
}

std::string vehiclesCsv(const MetricsLog &log) {
    std::ostringstream os;
    os << "id,class,occupancy,scheduled_spawn,spawn,finish,travel_time,fftt,delay,stops,"
          "lanes_entered\n";
    for (const VehicleRecord &v : log.vehicles) {
        double tt = travelTime(v, log.duration);
        os << v.id << ',' << v.classIdx << ',' << v.occupancy << ',' << v.scheduledSpawn << ','
           << v.spawnStep << ',' << v.finishStep << ',' << tt << ',' << v.fftt << ','
           << (v.finishStep >= 0 ? tt - v.fftt : std::max(0.0, tt - v.fftt)) << ','
           << v.stops.size() << ',' << v.lanesEntered << '\n';
    }
    return os.str();
}

std::string queuesCsv(const MetricsLog &log) {
    std::ostringstream os;
    os << "t,vql,pql\n";
    for (size_t i = 0; i < log.vqlPerStep.size(); i++)
        os << i + 1 << ',' << log.vqlPerStep[i] << ',' << log.pqlPerStep[i] << '\n';
    return os.str();
}

std::string summaryCsvHeader() {
    return "avtt,aptt,avd,apd,vql,pql,phase_changes_per_hr,completed,unfinished,tt_occ_slope,"
           "tt_occ_r2";
}

namespace {
std::string opt(const std::optional<double> &v) {
    if (!v)
        return "na";
    std::ostringstream os;
    os << *v;
    return os.str();
}
} // namespace

std::string summaryCsvRow(const EpisodeSummary &s) {
    std::ostringstream os;
    os << opt(s.avtt) << ',' << opt(s.aptt) << ',' << opt(s.avd) << ',' << opt(s.apd) << ','
       << s.meanVql << ',' << s.meanPql << ',' << s.phaseChangesPerHour << ',' << s.completed
       << ',' << s.unfinished << ',' << opt(s.ttOccSlope) << ',' << opt(s.ttOccR2);
    return os.str();
}

} // namespace tsc
