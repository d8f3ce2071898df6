#include "tsc/net.h"

#include <json.hpp>

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace tsc {

using nlohmann::json;

Approach opposite(Approach a) { return (Approach)(((int)a + 2) % 4); }
Approach clockwise(Approach a) { return (Approach)(((int)a + 1) % 4); }
Approach counterClockwise(Approach a) { return (Approach)(((int)a + 3) % 4); }

Approach exitSide(Approach a, Turn t) {
    switch (t) {
    case Turn::Through: return opposite(a);
    case Turn::Left: return clockwise(a);
    case Turn::Right: return counterClockwise(a);
    }
    return a;
}

const char *toString(Turn t) {
    switch (t) {
    case Turn::Left: return "left";
    case Turn::Through: return "through";
    case Turn::Right: return "right";
    }
    return "?";
}

const char *toString(Approach a) {
    switch (a) {
    case Approach::N: return "N";
    case Approach::E: return "E";
    case Approach::S: return "S";
    case Approach::W: return "W";
    }
    return "?";
}

namespace {

Turn turnFromString(const std::string &s) {
    if (s == "left") return Turn::Left;
    if (s == "through") return Turn::Through;
    if (s == "right") return Turn::Right;
    throw std::runtime_error("unknown turn: " + s);
}

Approach approachFromString(const std::string &s) {
    if (s == "N") return Approach::N;
    if (s == "E") return Approach::E;
    if (s == "S") return Approach::S;
    if (s == "W") return Approach::W;
    throw std::runtime_error("unknown approach: " + s);
}

struct Pt {
    double x, y;
};

// Unit intersection box, north = +y. Right-hand traffic puts entering
// lanes on the driver's right half of each edge.
Pt entryPoint(Approach a) {
    switch (a) {
    case Approach::N: return {-0.5, 1.0};
    case Approach::E: return {1.0, 0.5};
    case Approach::S: return {0.5, -1.0};
    case Approach::W: return {-1.0, -0.5};
    }
    return {0, 0};
}

Pt exitPoint(Approach a) {
    switch (a) {
    case Approach::N: return {0.5, 1.0};
    case Approach::E: return {1.0, -0.5};
    case Approach::S: return {-0.5, -1.0};
    case Approach::W: return {-1.0, 0.5};
    }
    return {0, 0};
}

double orient(Pt a, Pt b, Pt c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool samePt(Pt a, Pt b) { return a.x == b.x && a.y == b.y; }

} // namespace

bool pathsCross(Approach a1, Turn t1, Approach a2, Turn t2) {
    Pt p1 = entryPoint(a1), q1 = exitPoint(exitSide(a1, t1));
    Pt p2 = entryPoint(a2), q2 = exitPoint(exitSide(a2, t2));
    // Shared entry (same approach) or shared exit (merge) is not a crossing.
    if (samePt(p1, p2) || samePt(q1, q2) || samePt(p1, q2) || samePt(q1, p2))
        return false;
    double d1 = orient(p2, q2, p1);
    double d2 = orient(p2, q2, q1);
    double d3 = orient(p1, q1, p2);
    double d4 = orient(p1, q1, q2);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool movementsConflict(const Movement &a, const Movement &b) {
    if (a.inLane == b.inLane && a.outLane == b.outLane && a.turn == b.turn)
        return false;
    return pathsCross(a.approach, a.turn, b.approach, b.turn);
}

bool movementsConflict(const RoadNetwork &net, const Movement &a, const Movement &b) {
    int ia = net.intersectionAt(net.lane(a.inLane).segment);
    int ib = net.intersectionAt(net.lane(b.inLane).segment);
    if (ia < 0 || ib < 0 || ia != ib)
        throw std::domain_error("movements belong to different intersections");
    return movementsConflict(a, b);
}

int Intersection::movementFor(int inLane, Turn t) const {
    for (size_t i = 0; i < movements.size(); i++)
        if (movements[i].inLane == inLane && movements[i].turn == t)
            return (int)i;
    return -1;
}

std::vector<Phase> standardPhaseSet(const Intersection &inter) {
    // movement index per (approach, turn), or -1
    int byAt[4][3];
    for (int a = 0; a < 4; a++)
        for (int t = 0; t < 3; t++)
            byAt[a][t] = -1;
    for (size_t i = 0; i < inter.movements.size(); i++) {
        const Movement &m = inter.movements[i];
        byAt[(int)m.approach][(int)m.turn] = (int)i;
    }
    for (int a = 0; a < 4; a++)
        if (byAt[a][(int)Turn::Left] < 0 || byAt[a][(int)Turn::Through] < 0)
            throw std::runtime_error(
                "unsupported geometry: standard phases need left+through on all four approaches");

    auto L = [&](Approach a) { return byAt[(int)a][(int)Turn::Left]; };
    auto T = [&](Approach a) { return byAt[(int)a][(int)Turn::Through]; };
    using A = Approach;
    std::vector<Phase> phases = {
        {0, {T(A::N), T(A::S)}}, // N/S through
        {1, {L(A::N), L(A::S)}}, // N/S left
        {2, {T(A::E), T(A::W)}}, // E/W through
        {3, {L(A::E), L(A::W)}}, // E/W left
        {4, {T(A::N), L(A::N)}}, // N through+left
        {5, {T(A::S), L(A::S)}}, // S through+left
        {6, {T(A::E), L(A::E)}}, // E through+left
        {7, {T(A::W), L(A::W)}}, // W through+left
    };
    for (const Phase &p : phases)
        for (size_t i = 0; i < p.movements.size(); i++)
            for (size_t j = i + 1; j < p.movements.size(); j++)
                if (movementsConflict(inter.movements[p.movements[i]],
                                      inter.movements[p.movements[j]]))
                    throw std::runtime_error("phase contains conflicting movements");
    return phases;
}

int competitionMask(const Intersection &inter, int p, int q) {
    if (p == q)
        throw std::domain_error("competition mask undefined for identical phases");
    const Phase &pp = inter.phases.at(p);
    const Phase &qq = inter.phases.at(q);
    int count = 0;
    for (int mi : pp.movements) {
        bool any = false;
        for (int mj : qq.movements)
            if (inter.conflicts(mi, mj))
                any = true;
        if (any)
            count++;
    }
    return count;
}

namespace {

constexpr double kVehicleSlot = 5.0 + 2.5; // dominant length + min gap

int laneCapacity(double length) {
    int c = (int)std::floor(length / kVehicleSlot);
    return c < 1 ? 1 : c;
}

struct Builder {
    RoadNetwork net;

    int addNode(double x, double y, bool boundary) {
        int id = (int)net.nodes.size();
        net.nodes.push_back({id, x, y, boundary});
        return id;
    }

    int addSegment(int from, int to, double length, Approach heading, int laneCount) {
        int id = (int)net.segments.size();
        RoadSegment seg{id, from, to, length, 40.0 / 3.6, heading, {}};
        static const Turn by3[3] = {Turn::Left, Turn::Through, Turn::Right};
        for (int i = 0; i < laneCount; i++) {
            int lid = (int)net.lanes.size();
            Turn t = by3[i];
            net.lanes.push_back({lid, id, i, (uint8_t)(1u << (int)t), laneCapacity(length)});
            seg.lanes.push_back(lid);
        }
        net.segments.push_back(seg);
        return id;
    }

    void buildIntersections() {
        net.nodeIntersection.assign(net.nodes.size(), -1);
        for (const Node &node : net.nodes) {
            if (node.boundary)
                continue;
            Intersection inter;
            inter.id = (int)net.intersections.size();
            inter.node = node.id;
            inter.inSegments.fill(-1);
            inter.outSegments.fill(-1);
            for (const RoadSegment &s : net.segments) {
                if (s.to == node.id)
                    inter.inSegments[(int)opposite(s.heading)] = s.id;
                if (s.from == node.id)
                    inter.outSegments[(int)s.heading] = s.id;
            }
            for (int a = 0; a < 4; a++)
                if (inter.inSegments[a] < 0 || inter.outSegments[a] < 0)
                    throw std::runtime_error("intersection is not four-way");
            for (int a = 0; a < 4; a++)
                for (int l : net.segments[inter.inSegments[a]].lanes)
                    inter.inLanes.push_back(l);
            for (int a = 0; a < 4; a++)
                for (int l : net.segments[inter.outSegments[a]].lanes)
                    inter.outLanes.push_back(l);
            for (int a = 0; a < 4; a++) {
                const RoadSegment &in = net.segments[inter.inSegments[a]];
                for (Turn t : {Turn::Left, Turn::Through, Turn::Right}) {
                    int inLane = -1;
                    for (int l : in.lanes)
                        if (net.lanes[l].allows(t))
                            inLane = l;
                    if (inLane < 0)
                        continue;
                    int outSeg = inter.outSegments[(int)exitSide((Approach)a, t)];
                    const RoadSegment &out = net.segments[outSeg];
                    int outLane = out.lanes[net.lanes[inLane].index];
                    inter.movements.push_back({inLane, outLane, t, (Approach)a, outSeg});
                }
            }
            size_t n = inter.movements.size();
            inter.conflict.assign(n * n, 0);
            for (size_t i = 0; i < n; i++)
                for (size_t j = 0; j < n; j++)
                    inter.conflict[i * n + j] =
                        i != j && movementsConflict(inter.movements[i], inter.movements[j]);
            inter.phases = standardPhaseSet(inter);
            inter.signalSlot.fill(-1);
            for (size_t i = 0; i < n; i++) {
                const Movement &m = inter.movements[i];
                if (m.turn == Turn::Right)
                    continue;
                inter.signalSlot[(int)m.approach * 2 + (m.turn == Turn::Through ? 1 : 0)] = (int)i;
            }
            net.nodeIntersection[node.id] = inter.id;
            net.intersections.push_back(std::move(inter));
        }
    }
};

RoadNetwork buildRect(int rows, int cols, double segLen, int laneCount) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("rows/cols must be >= 1");
    if (segLen <= 0)
        throw std::invalid_argument("segment length must be positive");
    Builder b;
    // Intersection nodes first: row 0 is the north edge.
    std::vector<std::vector<int>> grid(rows, std::vector<int>(cols));
    for (int r = 0; r < rows; r++)
        for (int c = 0; c < cols; c++)
            grid[r][c] = b.addNode(c * segLen, (rows - 1 - r) * segLen, false);

    auto connect = [&](int a, int bNode, Approach heading) {
        b.addSegment(a, bNode, segLen, heading, laneCount);
        b.addSegment(bNode, a, segLen, opposite(heading), laneCount);
    };
    for (int r = 0; r < rows; r++)
        for (int c = 0; c < cols; c++) {
            int n = grid[r][c];
            double x = c * segLen, y = (rows - 1 - r) * segLen;
            if (c + 1 < cols)
                connect(n, grid[r][c + 1], Approach::E);
            if (r + 1 < rows)
                connect(n, grid[r + 1][c], Approach::S);
            if (r == 0)
                connect(b.addNode(x, y + segLen, true), n, Approach::S);
            if (r == rows - 1)
                connect(n, b.addNode(x, y - segLen, true), Approach::S);
            if (c == 0)
                connect(b.addNode(x - segLen, y, true), n, Approach::E);
            if (c == cols - 1)
                connect(n, b.addNode(x + segLen, y, true), Approach::E);
        }
    b.buildIntersections();
    b.net.validate();
    return std::move(b.net);
}

} // namespace

RoadNetwork buildSingleIntersection(double segLen) { return buildRect(1, 1, segLen, 2); }
RoadNetwork buildCorridor(int n, double segLen) { return buildRect(1, n, segLen, 3); }
RoadNetwork buildGrid(int rows, int cols, double segLen) { return buildRect(rows, cols, segLen, 3); }

std::vector<int> RoadNetwork::entrySegments() const {
    std::vector<int> out;
    for (const RoadSegment &s : segments)
        if (nodes[s.from].boundary)
            out.push_back(s.id);
    return out;
}

std::vector<int> RoadNetwork::exitSegments() const {
    std::vector<int> out;
    for (const RoadSegment &s : segments)
        if (nodes[s.to].boundary)
            out.push_back(s.id);
    return out;
}

void RoadNetwork::validate() const {
    for (const RoadSegment &s : segments) {
        if (s.length <= 0 || s.speedLimit <= 0)
            throw std::runtime_error("segment with non-positive length or speed limit");
        if (s.lanes.empty())
            throw std::runtime_error("segment without lanes");
        for (int l : s.lanes)
            if (lanes[l].segment != s.id)
                throw std::runtime_error("lane/segment link broken");
    }
    for (const Lane &l : lanes) {
        if (l.capacity < 1)
            throw std::runtime_error("lane capacity < 1");
        if (l.turnMask == 0)
            throw std::runtime_error("lane without turn types");
    }
    for (const Intersection &inter : intersections) {
        if ((int)inter.phases.size() != kPhaseCount)
            throw std::runtime_error("intersection without 8 phases");
        for (int l : inter.inLanes) {
            bool used = false;
            for (const Movement &m : inter.movements)
                used = used || m.inLane == l;
            if (!used)
                throw std::runtime_error("incoming lane not covered by any movement");
        }
        for (const Phase &p : inter.phases)
            for (size_t i = 0; i < p.movements.size(); i++)
                for (size_t j = i + 1; j < p.movements.size(); j++)
                    if (inter.conflicts(p.movements[i], p.movements[j]))
                        throw std::runtime_error("conflicting movements within a phase");
        for (const Movement &m : inter.movements)
            if (m.turn == Turn::Right)
                for (const Phase &p : inter.phases)
                    for (int mi : p.movements)
                        if (&inter.movements[mi] == &m)
                            throw std::runtime_error("right turn inside a phase");
    }
    // Every internal segment feeds exactly one intersection.
    for (const RoadSegment &s : segments) {
        if (nodes[s.to].boundary)
            continue;
        if (nodeIntersection[s.to] < 0)
            throw std::runtime_error("internal segment without downstream intersection");
    }
}

std::string networkToJson(const RoadNetwork &net) {
    json j;
    j["schema_version"] = 1;
    j["nodes"] = json::array();
    for (const Node &n : net.nodes)
        j["nodes"].push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}, {"boundary", n.boundary}});
    j["segments"] = json::array();
    for (const RoadSegment &s : net.segments) {
        json lanes = json::array();
        for (int l : s.lanes) {
            const Lane &ln = net.lanes[l];
            json turns = json::array();
            for (Turn t : {Turn::Left, Turn::Through, Turn::Right})
                if (ln.allows(t))
                    turns.push_back(toString(t));
            lanes.push_back({{"id", ln.id},
                             {"index", ln.index},
                             {"turns", turns},
                             {"capacity", ln.capacity}});
        }
        j["segments"].push_back({{"id", s.id},
                                 {"from", s.from},
                                 {"to", s.to},
                                 {"length", s.length},
                                 {"speed_limit", s.speedLimit},
                                 {"heading", toString(s.heading)},
                                 {"lanes", lanes}});
    }
    j["intersections"] = json::array();
    for (const Intersection &inter : net.intersections) {
        json movements = json::array();
        for (const Movement &m : inter.movements)
            movements.push_back({{"in_lane", m.inLane},
                                 {"out_lane", m.outLane},
                                 {"turn", toString(m.turn)},
                                 {"approach", toString(m.approach)}});
        json phases = json::array();
        for (const Phase &p : inter.phases)
            phases.push_back(p.movements);
        j["intersections"].push_back(
            {{"id", inter.id}, {"node", inter.node}, {"movements", movements}, {"phases", phases}});
    }
    return j.dump(2);
}

RoadNetwork networkFromJson(const std::string &text) {
    json j = json::parse(text);
    if (j.at("schema_version").get<int>() != 1)
        throw std::runtime_error("unsupported network schema version");
    Builder b;
    for (const json &n : j.at("nodes")) {
        int id = b.addNode(n.at("x").get<double>(), n.at("y").get<double>(),
                           n.at("boundary").get<bool>());
        if (id != n.at("id").get<int>())
            throw std::runtime_error("nodes must be listed in id order");
    }
    for (const json &s : j.at("segments")) {
        RoadSegment seg;
        seg.id = (int)b.net.segments.size();
        if (seg.id != s.at("id").get<int>())
            throw std::runtime_error("segments must be listed in id order");
        seg.from = s.at("from").get<int>();
        seg.to = s.at("to").get<int>();
        seg.length = s.at("length").get<double>();
        seg.speedLimit = s.at("speed_limit").get<double>();
        seg.heading = approachFromString(s.at("heading").get<std::string>());
        for (const json &l : s.at("lanes")) {
            Lane lane;
            lane.id = (int)b.net.lanes.size();
            if (lane.id != l.at("id").get<int>())
                throw std::runtime_error("lanes must be listed in id order");
            lane.segment = seg.id;
            lane.index = l.at("index").get<int>();
            lane.turnMask = 0;
            for (const json &t : l.at("turns"))
                lane.turnMask |= (uint8_t)(1u << (int)turnFromString(t.get<std::string>()));
            lane.capacity = l.at("capacity").get<int>();
            b.net.lanes.push_back(lane);
            seg.lanes.push_back(lane.id);
        }
        b.net.segments.push_back(seg);
    }
    // Movement/phase tables are rebuilt from the graph; the stored copies are
    // validated against the reconstruction.
    b.buildIntersections();
    b.net.validate();
    const json &inters = j.at("intersections");
    if (inters.size() != b.net.intersections.size())
        throw std::runtime_error("intersection count mismatch");
    for (size_t i = 0; i < inters.size(); i++) {
        const Intersection &inter = b.net.intersections[i];
        if (inters[i].at("movements").size() != inter.movements.size())
            throw std::runtime_error("movement table mismatch");
        for (size_t k = 0; k < inter.movements.size(); k++) {
            const json &m = inters[i].at("movements")[k];
            if (m.at("in_lane").get<int>() != inter.movements[k].inLane ||
                m.at("out_lane").get<int>() != inter.movements[k].outLane ||
                turnFromString(m.at("turn").get<std::string>()) != inter.movements[k].turn)
                throw std::runtime_error("movement table mismatch");
        }
    }
    return std::move(b.net);
}

} // namespace tsc
