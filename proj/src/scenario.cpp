#include "tsc/scenario.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace tsc {

using nlohmann::json;

std::vector<VehicleClass> defaultVehicleClasses(int busOccupancy) {
    const double vmax = 40.0 / 3.6;
    auto mk = [&](const char *name, int occ, double len) {
        return VehicleClass{name, occ, len, vmax, 2.0, 4.5, 2.5, 2.0};
    };
    return {
        mk("sov", 1, 5.0),         mk("carpool2", 2, 5.0),  mk("carpool3", 3, 5.0),
        mk("micro10", 10, 7.0),    mk("micro20", 20, 9.5),  mk("micro30", 30, 12.0),
        mk("bus", busOccupancy, 15.0),
    };
}

const char *toString(NetworkKind k) {
    switch (k) {
    case NetworkKind::Single: return "single";
    case NetworkKind::Corridor: return "corridor";
    case NetworkKind::Grid: return "grid";
    }
    return "?";
}

NetworkKind networkKindFromString(const std::string &s) {
    if (s == "single") return NetworkKind::Single;
    if (s == "corridor") return NetworkKind::Corridor;
    if (s == "grid") return NetworkKind::Grid;
    throw std::runtime_error("unknown network kind: " + s);
}

namespace {

constexpr std::array<int, kClassCount> kOccupancies = {1, 2, 3, 10, 20, 30, 40};

// Person-share fixtures. Derived once from the published arrival rates under
// constant total persons and constant carpool ridership, with shifted SOV
// riders splitting 15/15/30/40 across microtransit-10/20/30 and buses.
// The per-step SOV shift fractions are whatever those rate targets demand.
struct ShareRow {
    const char *name;
    std::array<double, kClassCount> shares;
};

constexpr double kCp2 = 0.05333333333333334, kCp3 = 0.02666666666666667;

const ShareRow kGridShares[4] = {
    {"low", {0.88, kCp2, kCp3, 0.0, 0.0, 0.0, 0.04}},
    {"light",
     {0.7035946786025115, kCp2, kCp3, 0.026460798209623278, 0.026460798209623278,
      0.052921596419246555, 0.11056212855899542}},
    {"moderate",
     {0.5641114012184508, kCp2, kCp3, 0.047383289817232374, 0.047383289817232374,
      0.09476657963446475, 0.16635543951261966}},
    {"high",
     {0.4314655393924325, kCp2, kCp3, 0.06728016909113513, 0.06728016909113513,
      0.13456033818227026, 0.219413784243027}},
};

const ShareRow kSingleShares[4] = {
    {"low", {0.88, kCp2, kCp3, 0.0, 0.0, 0.0, 0.04}},
    {"light",
     {0.7653209707393717, kCp2, kCp3, 0.01720185438909425, 0.01720185438909425,
      0.0344037087781885, 0.08587161170425134}},
    {"moderate",
     {0.6051494340034526, kCp2, kCp3, 0.04122758489948211, 0.04122758489948211,
      0.08245516979896422, 0.14994022639861898}},
    {"high",
     {0.4468734184123375, kCp2, kCp3, 0.06496898723814937, 0.06496898723814937,
      0.12993797447629873, 0.213250632635065}},
};

const double kGridVehRates[4] = {700.0, 571.0, 469.0, 372.0};
// veh/hr/lane: {NS through, NS left, EW through, EW left}
const std::array<double, 4> kSingleFlows[4] = {
    {220, 220, 350, 220}, {194, 194, 307, 194}, {157, 157, 249, 157}, {121, 121, 190, 121}};

const double kGridPersons = 763.7289368408293;   // persons/hr/road
const double kSinglePersons = 2203.9035034549643; // persons/hr network total

int scenarioIndex(const std::string &name) {
    const std::vector<std::string> &names = scenarioNames();
    for (size_t i = 0; i < names.size(); i++)
        if (names[i] == name)
            return (int)i;
    throw std::runtime_error("unknown scenario: " + name);
}

double vehiclesPerPerson(const std::array<double, kClassCount> &shares) {
    double s = 0;
    for (int c = 0; c < kClassCount; c++)
        s += shares[c] / kOccupancies[c];
    return s;
}

} // namespace

const std::vector<std::string> &scenarioNames() {
    static const std::vector<std::string> names = {"low", "light", "moderate", "high"};
    return names;
}

ModeShareScenario builtinScenario(const std::string &name, NetworkKind family) {
    int i = scenarioIndex(name);
    ModeShareScenario sc;
    sc.name = name;
    sc.family = family;
    if (family == NetworkKind::Single) {
        sc.personShares = kSingleShares[i].shares;
        sc.totalPersonsPerHour = kSinglePersons;
        sc.movementFlows = kSingleFlows[i];
    } else {
        sc.personShares = kGridShares[i].shares;
        sc.totalPersonsPerHour = kGridPersons;
        sc.vehPerHourPerRoad = kGridVehRates[i];
    }
    scenarioFleetMix(sc); // runs the rate consistency check
    return sc;
}

std::array<double, kClassCount> scenarioFleetMix(const ModeShareScenario &sc) {
    double sum = 0;
    for (double s : sc.personShares) {
        if (s < -1e-12 || s > 1 + 1e-12)
            throw std::runtime_error("person share out of [0,1]");
        sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("person shares must sum to 1");

    double vpp = vehiclesPerPerson(sc.personShares);
    double vehRate = vpp * sc.totalPersonsPerHour;
    double target = 0;
    if (sc.family == NetworkKind::Single) {
        for (double f : sc.movementFlows)
            target += 2.0 * f; // two approaches per axis
    } else {
        target = sc.vehPerHourPerRoad;
    }
    if (target > 0 && std::abs(vehRate - target) > 0.02 * target)
        throw std::runtime_error("scenario '" + sc.name + "' implies " + std::to_string(vehRate) +
                                 " veh/hr but the published rate is " + std::to_string(target));

    std::array<double, kClassCount> mix{};
    for (int c = 0; c < kClassCount; c++)
        mix[c] = sc.personShares[c] / kOccupancies[c] / vpp;
    return mix;
}

namespace {

// Follow through movements from an entry segment until the network boundary.
std::vector<int> throughRoute(const RoadNetwork &net, int entrySeg) {
    std::vector<int> route = {entrySeg};
    int seg = entrySeg;
    while (true) {
        int ii = net.intersectionAt(seg);
        if (ii < 0)
            return route;
        const Intersection &inter = net.intersections[ii];
        int out = inter.outSegments[(int)net.segment(seg).heading];
        route.push_back(out);
        seg = out;
    }
}

int entrySegmentInto(const RoadNetwork &net, int node, Approach heading) {
    for (const RoadSegment &s : net.segments)
        if (s.to == node && s.heading == heading && net.nodes[s.from].boundary)
            return s.id;
    throw std::runtime_error("no boundary entry segment found");
}

// Reconstruct (row, col) grid indices of intersections from coordinates.
struct GridIndex {
    int rows = 0, cols = 0;
    std::vector<std::vector<int>> node; // [row][col] -> node id
};

GridIndex gridIndexOf(const RoadNetwork &net) {
    std::vector<double> xs, ys;
    for (const Intersection &in : net.intersections) {
        xs.push_back(net.nodes[in.node].x);
        ys.push_back(net.nodes[in.node].y);
    }
    auto uniq = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    std::vector<double> ux = uniq(xs), uy = uniq(ys);
    GridIndex g;
    g.cols = (int)ux.size();
    g.rows = (int)uy.size();
    g.node.assign(g.rows, std::vector<int>(g.cols, -1));
    for (const Intersection &in : net.intersections) {
        const Node &n = net.nodes[in.node];
        int c = (int)(std::lower_bound(ux.begin(), ux.end(), n.x) - ux.begin());
        int r = g.rows - 1 -
                (int)(std::lower_bound(uy.begin(), uy.end(), n.y) - uy.begin());
        g.node[r][c] = in.node;
    }
    return g;
}

std::vector<int> walk(const RoadNetwork &net, int entrySeg, const std::vector<Turn> &turns) {
    std::vector<int> route = {entrySeg};
    int seg = entrySeg;
    size_t k = 0;
    while (true) {
        int ii = net.intersectionAt(seg);
        if (ii < 0) {
            if (k < turns.size())
                throw std::runtime_error("transit route left the network early");
            return route;
        }
        const Intersection &inter = net.intersections[ii];
        Approach approach = opposite(net.segment(seg).heading);
        Turn t = k < turns.size() ? turns[k++] : Turn::Through;
        int out = inter.outSegments[(int)exitSide(approach, t)];
        route.push_back(out);
        seg = out;
    }
}

double busHeadway(const RoadNetwork &net, const ModeShareScenario &sc, int lineCount) {
    double personsTotal = sc.totalPersonsPerHour * (double)net.entrySegments().size();
    double busPersons = sc.personShares[kBus] * personsTotal;
    double busVehPerHr = busPersons / kOccupancies[kBus];
    if (busVehPerHr <= 0 || lineCount == 0)
        return 0;
    return 3600.0 / (busVehPerHr / lineCount);
}

} // namespace

std::vector<TransitLine> transitLinesFor(const RoadNetwork &net, NetworkKind kind,
                                         const ModeShareScenario &sc) {
    if (kind == NetworkKind::Single)
        return {};
    GridIndex g = gridIndexOf(net);
    std::vector<TransitLine> lines;
    if (kind == NetworkKind::Corridor) {
        int west = entrySegmentInto(net, g.node[0][0], Approach::E);
        int east = entrySegmentInto(net, g.node[0][g.cols - 1], Approach::W);
        lines.push_back({throughRoute(net, west), 0, kBus});
        lines.push_back({throughRoute(net, east), 0, kBus});
    } else if (kind == NetworkKind::Grid) {
        if (g.rows < 2 || g.cols < 2)
            throw std::runtime_error("grid transit lines need at least 2x2 intersections");
        // Line A: eastbound along row 1, left turn north at col cols-2.
        int rowA = std::min(1, g.rows - 1);
        int entryA = entrySegmentInto(net, g.node[rowA][0], Approach::E);
        std::vector<Turn> turnsA(g.cols - 2, Turn::Through);
        turnsA.push_back(Turn::Left);
        lines.push_back({walk(net, entryA, turnsA), 0, kBus});
        // Line B: northbound along col cols-2, left turn west at row rows-2.
        int colB = std::max(g.cols - 2, 0);
        int entryB = entrySegmentInto(net, g.node[g.rows - 1][colB], Approach::N);
        std::vector<Turn> turnsB(g.rows - 2, Turn::Through);
        turnsB.push_back(Turn::Left);
        lines.push_back({walk(net, entryB, turnsB), 0, kBus});
    } else {
        throw std::runtime_error("unsupported topology for transit lines");
    }
    double hw = busHeadway(net, sc, (int)lines.size());
    for (TransitLine &l : lines) {
        l.headway = hw;
        for (size_t i = 0; i + 1 < l.segments.size(); i++) {
            int ii = net.intersectionAt(l.segments[i]);
            const Intersection &inter = net.intersections[ii];
            bool connected = false;
            for (const Movement &m : inter.movements)
                connected = connected || (net.lane(m.inLane).segment == l.segments[i] &&
                                          m.outSegment == l.segments[i + 1] &&
                                          m.turn != Turn::Right);
            if (!connected)
                throw std::runtime_error("transit line is disconnected or uses a right turn");
        }
    }
    return lines;
}

double expectedVehicleRate(const RoadNetwork &net, NetworkKind kind,
                           const ModeShareScenario &sc) {
    if (kind == NetworkKind::Single) {
        double t = 0;
        for (double f : sc.movementFlows)
            t += 2.0 * f;
        return t;
    }
    return sc.vehPerHourPerRoad * (double)net.entrySegments().size();
}

DemandSchedule generateDemand(const RoadNetwork &net, NetworkKind kind,
                              const ModeShareScenario &sc, double duration, uint64_t seed,
                              const TurningRatios &ratios) {
    if (duration <= 0)
        throw std::domain_error("duration must be positive");
    if (std::abs(ratios.left + ratios.through + ratios.right - 1.0) > 1e-9)
        throw std::domain_error("turning ratios must sum to 1");

    std::array<double, kClassCount> mix = scenarioFleetMix(sc);
    DemandSchedule sched;
    sched.ratios = ratios;
    sched.seed = seed;

    auto sampleClass = [](std::mt19937_64 &rng, const std::array<double, kClassCount> &m) {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double acc = 0;
        for (int c = 0; c < kClassCount; c++) {
            acc += m[c];
            if (u <= acc)
                return c;
        }
        return kClassCount - 1;
    };

    if (kind == NetworkKind::Single) {
        const Intersection &inter = net.intersections[0];
        for (size_t mi = 0; mi < inter.movements.size(); mi++) {
            const Movement &m = inter.movements[mi];
            bool ns = m.approach == Approach::N || m.approach == Approach::S;
            double rate;
            if (m.turn == Turn::Through)
                rate = ns ? sc.movementFlows[0] : sc.movementFlows[2];
            else if (m.turn == Turn::Left)
                rate = ns ? sc.movementFlows[1] : sc.movementFlows[3];
            else
                continue;
            if (rate <= 0)
                throw std::domain_error("non-positive arrival rate");
            std::mt19937_64 rng(seed * 1000003u + mi);
            std::exponential_distribution<double> exp(rate / 3600.0);
            double t = exp(rng);
            while (t < duration) {
                int cls = sampleClass(rng, mix);
                sched.events.push_back(
                    {t, cls, {net.lane(m.inLane).segment, m.outSegment}});
                t += exp(rng);
            }
        }
    } else {
        std::vector<TransitLine> lines = transitLinesFor(net, kind, sc);
        double busVehPerHr = 0;
        for (const TransitLine &l : lines)
            if (l.headway > 0) {
                for (double t = l.headway * 0.5; t < duration; t += l.headway)
                    sched.events.push_back({t, l.classIdx, l.segments});
                busVehPerHr += 3600.0 / l.headway;
            }
        // General traffic carries every class but the bus; bus vehicles are
        // netted out so totals still match the published arrival rates.
        std::vector<int> entries = net.entrySegments();
        double totalVeh = expectedVehicleRate(net, kind, sc);
        double generalVeh = totalVeh - busVehPerHr;
        double perRoad = generalVeh / (double)entries.size();
        std::array<double, kClassCount> gmix = mix;
        gmix[kBus] = 0;
        double gsum = 0;
        for (double v : gmix)
            gsum += v;
        for (double &v : gmix)
            v /= gsum;
        if (perRoad <= 0)
            throw std::domain_error("non-positive arrival rate");
        for (size_t e = 0; e < entries.size(); e++) {
            std::mt19937_64 rng(seed * 1000003u + 7919u * (e + 1));
            std::exponential_distribution<double> exp(perRoad / 3600.0);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            double t = exp(rng);
            while (t < duration) {
                int cls = sampleClass(rng, gmix);
                std::vector<int> route = {entries[e]};
                int seg = entries[e];
                while (true) {
                    int ii = net.intersectionAt(seg);
                    if (ii < 0)
                        break;
                    const Intersection &inter = net.intersections[ii];
                    double u = uni(rng);
                    Turn t3 = u < ratios.left             ? Turn::Left
                              : u < ratios.left + ratios.through ? Turn::Through
                                                                 : Turn::Right;
                    Approach approach = opposite(net.segment(seg).heading);
                    int out = inter.outSegments[(int)exitSide(approach, t3)];
                    route.push_back(out);
                    seg = out;
                }
                sched.events.push_back({t, cls, std::move(route)});
                t += exp(rng);
            }
        }
    }
    std::stable_sort(sched.events.begin(), sched.events.end(),
                     [](const SpawnEvent &a, const SpawnEvent &b) { return a.time < b.time; });
    return sched;
}

std::string demandToJson(const DemandSchedule &d) {
    json j;
    j["schema_version"] = 1;
    j["seed"] = d.seed;
    j["turning_ratios"] = {{"left", d.ratios.left},
                           {"through", d.ratios.through},
                           {"right", d.ratios.right}};
    j["events"] = json::array();
    for (const SpawnEvent &e : d.events)
        j["events"].push_back({{"time", e.time}, {"class", e.classIdx}, {"route", e.segments}});
    return j.dump();
}

DemandSchedule demandFromJson(const std::string &text) {
    json j = json::parse(text);
    if (j.at("schema_version").get<int>() != 1)
        throw std::runtime_error("unsupported demand schema version");
    DemandSchedule d;
    d.seed = j.at("seed").get<uint64_t>();
    d.ratios.left = j.at("turning_ratios").at("left").get<double>();
    d.ratios.through = j.at("turning_ratios").at("through").get<double>();
    d.ratios.right = j.at("turning_ratios").at("right").get<double>();
    for (const json &e : j.at("events")) {
        SpawnEvent ev;
        ev.time = e.at("time").get<double>();
        ev.classIdx = e.at("class").get<int>();
        for (const json &s : e.at("route"))
            ev.segments.push_back(s.get<int>());
        d.events.push_back(std::move(ev));
    }
    return d;
}

} // namespace tsc
