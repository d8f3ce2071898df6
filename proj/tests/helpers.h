#pragma once

#include "tsc/controllers.h"
#include "tsc/net.h"
#include "tsc/observe.h"
#include "tsc/sim.h"

#include <functional>
#include <memory>
#include <vector>

namespace tsc {
namespace testing {

// Controller driven by a function of the decision time.
class ScriptedController : public Controller {
  public:
    explicit ScriptedController(std::function<int(int)> fn) : fn_(std::move(fn)) {}
    int decide(const IntersectionView &view) override { return fn_(view.time); }

  private:
    std::function<int(int)> fn_;
};

inline std::vector<Controller *> holdPhase(std::vector<std::unique_ptr<Controller>> &own,
                                           size_t n, int phase) {
    std::vector<Controller *> out;
    for (size_t i = 0; i < n; i++) {
        own.push_back(std::make_unique<ScriptedController>([phase](int) { return phase; }));
        out.push_back(own.back().get());
    }
    return out;
}

// Route [in segment, out segment] across the single intersection for a
// given approach and turn.
inline std::vector<int> siRoute(const RoadNetwork &net, Approach a, Turn t) {
    const Intersection &inter = net.intersections[0];
    int inSeg = inter.inSegments[(int)a];
    int outSeg = inter.outSegments[(int)exitSide(a, t)];
    return {inSeg, outSeg};
}

// The constructed four-approach state where person-level and vehicle-level
// optimal phases disagree and the active-vehicle filter flips the
// person-level choice to a phase sharing no movements.
//   E/W through lanes: 4+3 SOVs at the line (active)
//   N/S through lanes: 2+1 SOVs at the line
//   N/S left lanes: 1 SOV at the line, 1 bus stopped 150 m upstream
inline void buildPhaseFlipFixture(Engine &eng, const RoadNetwork &net) {
    auto place = [&](Approach a, Turn t, int cls, double distToLine, double speed) {
        double len = net.segment(net.intersections[0].inSegments[(int)a]).length;
        eng.placeVehicle(cls, siRoute(net, a, t), len - distToLine, speed);
    };
    for (double d : {5.0, 12.5, 20.0, 27.5})
        place(Approach::E, Turn::Through, kSov, d, 0.0);
    for (double d : {5.0, 12.5, 20.0})
        place(Approach::W, Turn::Through, kSov, d, 0.0);
    place(Approach::N, Turn::Through, kSov, 5.0, 0.0);
    place(Approach::N, Turn::Through, kSov, 12.5, 0.0);
    place(Approach::S, Turn::Through, kSov, 5.0, 0.0);
    place(Approach::N, Turn::Left, kSov, 5.0, 0.0);
    place(Approach::N, Turn::Left, kBus, 150.0, 0.0);
    place(Approach::S, Turn::Left, kSov, 5.0, 0.0);
    place(Approach::S, Turn::Left, kBus, 150.0, 0.0);
}

constexpr int kPhaseNsThrough = 0;
constexpr int kPhaseNsLeft = 1;
constexpr int kPhaseEwThrough = 2;

} // namespace testing
} // namespace tsc
