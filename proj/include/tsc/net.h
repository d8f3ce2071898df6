#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tsc {

enum class Turn : uint8_t { Left = 0, Through = 1, Right = 2 };

// Compass side a movement enters the intersection from (N/E/S/W).
enum class Approach : uint8_t { N = 0, E = 1, S = 2, W = 3 };

constexpr int kPhaseCount = 8;
constexpr int kSignalSlots = 8; // (approach x {left,through}) pairs

Approach opposite(Approach a);
Approach clockwise(Approach a);
Approach counterClockwise(Approach a);
// Exit side for a movement entering from `a` with the given turn
// (right-hand traffic: left exits clockwise, right counter-clockwise).
Approach exitSide(Approach a, Turn t);

const char *toString(Turn t);
const char *toString(Approach a);

struct Node {
    int id;
    double x, y;
    bool boundary;
};

struct Lane {
    int id;
    int segment;
    int index;        // 0 = innermost (left-turn) lane
    uint8_t turnMask; // bit per Turn
    int capacity;     // max vehicles the lane can hold

    bool allows(Turn t) const { return turnMask & (1u << (int)t); }
};

struct RoadSegment {
    int id;
    int from, to; // node ids
    double length;
    double speedLimit;
    Approach heading; // direction of travel
    std::vector<int> lanes;
};

struct Movement {
    int inLane, outLane;
    Turn turn;
    Approach approach;
    int outSegment;
};

struct Phase {
    int id;
    std::vector<int> movements; // indices into Intersection::movements
};

struct Intersection {
    int id;
    int node;
    std::vector<int> inLanes;  // approaches N,E,S,W, lanes by index
    std::vector<int> outLanes; // exits N,E,S,W, lanes by index
    std::vector<Movement> movements; // approach-major, turns left/through/right
    std::vector<Phase> phases;       // the 8 standard phases
    std::vector<uint8_t> conflict;   // movements x movements crossing matrix
    std::array<int, 4> inSegments;   // per approach
    std::array<int, 4> outSegments;  // per exit side
    std::array<int, kSignalSlots> signalSlot; // slot = approach*2 + (turn==Through)

    bool conflicts(int a, int b) const {
        return conflict[(size_t)a * movements.size() + b] != 0;
    }
    // Movement index for (in-lane, turn); -1 if absent.
    int movementFor(int inLane, Turn t) const;
};

struct RoadNetwork {
    std::vector<Node> nodes;
    std::vector<RoadSegment> segments;
    std::vector<Lane> lanes;
    std::vector<Intersection> intersections;
    std::vector<int> nodeIntersection; // node id -> intersection index or -1

    const Lane &lane(int id) const { return lanes[id]; }
    const RoadSegment &segment(int id) const { return segments[id]; }
    // Intersection index at the downstream end of a segment, -1 at a sink.
    int intersectionAt(int segmentId) const {
        return nodeIntersection[segments[segmentId].to];
    }
    std::vector<int> entrySegments() const; // boundary -> network
    std::vector<int> exitSegments() const;  // network -> boundary
    double laneLength(int laneId) const { return segments[lanes[laneId].segment].length; }

    void validate() const; // throws on broken invariants
};

// True when the two movements' paths cross inside the intersection box.
// Merges into the same exit side do not count as crossings.
bool movementsConflict(const Movement &a, const Movement &b);
bool pathsCross(Approach a1, Turn t1, Approach a2, Turn t2);

// The 8 standard two-movement phases over an intersection's movements
// (4 paired through/left + 4 single-approach combos); rights excluded.
// Throws for geometries without left+through on all four approaches.
std::vector<Phase> standardPhaseSet(const Intersection &inter);

// Count of movements in p conflicting with at least one movement of q
// (0..2 for standard phases). Throws when p == q.
int competitionMask(const Intersection &inter, int p, int q);

RoadNetwork buildSingleIntersection(double segLen = 300.0);
RoadNetwork buildCorridor(int n, double segLen = 300.0);
RoadNetwork buildGrid(int rows, int cols, double segLen = 300.0);

std::string networkToJson(const RoadNetwork &net);
RoadNetwork networkFromJson(const std::string &text);

} // namespace tsc
