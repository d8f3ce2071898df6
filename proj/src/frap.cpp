#include "tsc/frap.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace tsc {

using nlohmann::json;
using kernels::ops;

PhaseStructure phaseStructureOf(const Intersection &inter) {
    PhaseStructure st;
    std::array<int, kSignalSlots> movementSlot; // movement idx -> slot
    movementSlot.fill(-1);
    std::vector<int> slotOf(inter.movements.size(), -1);
    for (int s = 0; s < kSignalSlots; s++) {
        int mi = inter.signalSlot[s];
        if (mi < 0)
            throw std::runtime_error("intersection lacks a signal movement");
        slotOf[mi] = s;
    }
    for (int p = 0; p < kPhaseCount; p++) {
        const Phase &ph = inter.phases[p];
        if (ph.movements.size() != 2)
            throw std::runtime_error("standard phases must hold two movements");
        st.phaseSlots[p] = {slotOf[ph.movements[0]], slotOf[ph.movements[1]]};
    }
    int k = 0;
    for (int p = 0; p < kPhaseCount; p++)
        for (int q = 0; q < kPhaseCount; q++)
            if (p != q)
                st.pairMask[k++] = competitionMask(inter, p, q);
    return st;
}

void Dense::init(int inDim, int outDim, std::mt19937_64 &rng) {
    in = inDim;
    out = outDim;
    double s = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> uni(-s, s);
    w.resize((size_t)in * out);
    for (double &x : w)
        x = uni(rng);
    b.assign(out, 0.0);
    dw.assign(w.size(), 0.0);
    db.assign(out, 0.0);
    mw.assign(w.size(), 0.0);
    vw.assign(w.size(), 0.0);
    mb.assign(out, 0.0);
    vb.assign(out, 0.0);
}

void Dense::zeroGrad() {
    std::fill(dw.begin(), dw.end(), 0.0);
    std::fill(db.begin(), db.end(), 0.0);
}

struct FrapNet::Workspace {
    int batch = 0;
    std::vector<double> x, h1, h2, d, u, v, p1, p2, z, zm, s, q;
    std::vector<uint8_t> m1, m2, mp1, mp2, mz;
    // backward scratch
    std::vector<double> gq, gs, gzm, gz, gp2, gp1, gu, gv, gd, gh2, gh1, gx;
};

FrapNet::~FrapNet() = default;
FrapNet::FrapNet(FrapNet &&) noexcept = default;
FrapNet &FrapNet::operator=(FrapNet &&) noexcept = default;

FrapNet::FrapNet(const FrapConfig &cfg, const PhaseStructure &structure, uint64_t seed)
    : cfg_(cfg), structure_(structure) {
    int k = 0;
    for (int p = 0; p < kPhaseCount; p++)
        for (int q = 0; q < kPhaseCount; q++)
            if (p != q) {
                pairP_[k] = p;
                pairQ_[k] = q;
                k++;
            }
    std::mt19937_64 rng(seed);
    int H = cfg_.demandHidden, P = cfg_.pairFilters, M = cfg_.maskEmbedDim;
    enc1_.init(cfg_.featuresPerMovement, H, rng);
    enc2_.init(H, H, rng);
    pairA_.init(H, P, rng);
    pairB_.init(H, P, rng);
    for (int l = 1; l < cfg_.pairLayers; l++) {
        pairExtra_.emplace_back();
        pairExtra_.back().init(P, P, rng);
    }
    proj_.init(P, M, rng);
    out_.init(M, 1, rng);
    // multiplicative gate: start the mask embedding near identity
    maskEmbed_.resize(3 * (size_t)M);
    std::uniform_real_distribution<double> uni(-0.1, 0.1);
    for (double &x : maskEmbed_)
        x = 1.0 + uni(rng);
    maskEmbedGrad_.assign(maskEmbed_.size(), 0.0);
    maskEmbedM_.assign(maskEmbed_.size(), 0.0);
    maskEmbedV_.assign(maskEmbed_.size(), 0.0);
    ws_ = std::make_unique<Workspace>();
}

void FrapNet::ensureWorkspace(int batch) {
    Workspace &w = *ws_;
    if (w.batch >= batch)
        return;
    w.batch = batch;
    int S = kSignalSlots, F = cfg_.featuresPerMovement, H = cfg_.demandHidden;
    int P = cfg_.pairFilters, M = cfg_.maskEmbedDim, K = kPairCount;
    size_t rowsS = (size_t)batch * S, rowsK = (size_t)batch * K;
    w.x.resize(rowsS * F);
    w.h1.resize(rowsS * H);
    w.h2.resize(rowsS * H);
    w.d.resize(rowsS * H);
    w.u.resize(rowsS * P);
    w.v.resize(rowsS * P);
    w.p1.resize(rowsK * P);
    w.p2.resize(rowsK * P);
    w.z.resize(rowsK * M);
    w.zm.resize(rowsK * M);
    w.s.resize(rowsK);
    w.q.resize((size_t)batch * kPhaseCount);
    w.m1.resize(rowsS * H);
    w.m2.resize(rowsS * H);
    w.mp1.resize(rowsK * P);
    w.mp2.resize(rowsK * P);
    w.mz.resize(rowsK * M);
    w.gq.resize((size_t)batch * kPhaseCount);
    w.gs.resize(rowsK);
    w.gzm.resize(rowsK * M);
    w.gz.resize(rowsK * M);
    w.gp2.resize(rowsK * P);
    w.gp1.resize(rowsK * P);
    w.gu.resize(rowsS * P);
    w.gv.resize(rowsS * P);
    w.gd.resize(rowsS * H);
    w.gh2.resize(rowsS * H);
    w.gh1.resize(rowsS * H);
    w.gx.resize(rowsS * F);
}

void FrapNet::forwardInternal(const double *feats, int batch, double *q, bool keep) {
    ensureWorkspace(batch);
    Workspace &w = *ws_;
    const kernels::Ops &K = ops();
    int S = kSignalSlots, F = cfg_.featuresPerMovement, H = cfg_.demandHidden;
    int P = cfg_.pairFilters, M = cfg_.maskEmbedDim, NP = kPairCount;
    size_t rowsS = (size_t)batch * S, rowsK = (size_t)batch * NP;

    std::memcpy(w.x.data(), feats, rowsS * F * sizeof(double));
    // stage 1: movement demand
    std::fill_n(w.h1.data(), rowsS * H, 0.0);
    K.gemmAcc(w.x.data(), enc1_.w.data(), w.h1.data(), (int)rowsS, F, H);
    K.addBiasRelu(w.h1.data(), enc1_.b.data(), w.m1.data(), (int)rowsS, H);
    std::fill_n(w.h2.data(), rowsS * H, 0.0);
    K.gemmAcc(w.h1.data(), enc2_.w.data(), w.h2.data(), (int)rowsS, H, H);
    K.addBiasRelu(w.h2.data(), enc2_.b.data(), w.m2.data(), (int)rowsS, H);
    // phase demand: sum member movement demands
    std::fill_n(w.d.data(), rowsS * H, 0.0);
    for (int i = 0; i < batch; i++)
        for (int p = 0; p < kPhaseCount; p++) {
            double *dst = w.d.data() + ((size_t)i * S + p) * H;
            for (int slot : structure_.phaseSlots[p])
                K.axpy(1.0, w.h2.data() + ((size_t)i * S + slot) * H, dst, H);
        }
    // stage 2: pair representation (first 1x1 layer split into two halves)
    std::fill_n(w.u.data(), rowsS * P, 0.0);
    std::fill_n(w.v.data(), rowsS * P, 0.0);
    K.gemmAcc(w.d.data(), pairA_.w.data(), w.u.data(), (int)rowsS, H, P);
    K.gemmAcc(w.d.data(), pairB_.w.data(), w.v.data(), (int)rowsS, H, P);
    for (int i = 0; i < batch; i++)
        for (int k = 0; k < NP; k++) {
            double *row = w.p1.data() + ((size_t)i * NP + k) * P;
            const double *up = w.u.data() + ((size_t)i * S + pairP_[k]) * P;
            const double *vq = w.v.data() + ((size_t)i * S + pairQ_[k]) * P;
            for (int j = 0; j < P; j++)
                row[j] = up[j] + vq[j];
        }
    K.addBiasRelu(w.p1.data(), pairA_.b.data(), w.mp1.data(), (int)rowsK, P);
    const double *pairOut = w.p1.data();
    if (!pairExtra_.empty()) {
        std::fill_n(w.p2.data(), rowsK * P, 0.0);
        K.gemmAcc(w.p1.data(), pairExtra_[0].w.data(), w.p2.data(), (int)rowsK, P, P);
        K.addBiasRelu(w.p2.data(), pairExtra_[0].b.data(), w.mp2.data(), (int)rowsK, P);
        pairOut = w.p2.data();
    }
    // stage 3: competition mask gate and per-pair score
    std::fill_n(w.z.data(), rowsK * M, 0.0);
    K.gemmAcc(pairOut, proj_.w.data(), w.z.data(), (int)rowsK, P, M);
    K.addBiasRelu(w.z.data(), proj_.b.data(), w.mz.data(), (int)rowsK, M);
    for (int i = 0; i < batch; i++)
        for (int k = 0; k < NP; k++) {
            const double *e = maskEmbed_.data() + (size_t)structure_.pairMask[k] * M;
            const double *zr = w.z.data() + ((size_t)i * NP + k) * M;
            double *zo = w.zm.data() + ((size_t)i * NP + k) * M;
            for (int j = 0; j < M; j++)
                zo[j] = zr[j] * e[j];
        }
    std::fill_n(w.s.data(), rowsK, 0.0);
    K.gemmAcc(w.zm.data(), out_.w.data(), w.s.data(), (int)rowsK, M, 1);
    K.addBias(w.s.data(), out_.b.data(), (int)rowsK, 1);
    // row sums of the pairwise competition matrix
    std::fill_n(q, (size_t)batch * kPhaseCount, 0.0);
    for (int i = 0; i < batch; i++)
        for (int k = 0; k < NP; k++)
            q[(size_t)i * kPhaseCount + pairP_[k]] += w.s[(size_t)i * NP + k];
    if (keep)
        std::memcpy(w.q.data(), q, (size_t)batch * kPhaseCount * sizeof(double));
}

void FrapNet::forward(const double *feats, int batch, double *q) {
    forwardInternal(feats, batch, q, false);
}

double FrapNet::lossAndGrad(const double *feats, const int *actions, const double *targets,
                            int batch) {
    if (batch <= 0)
        throw std::domain_error("empty batch");
    ensureWorkspace(batch);
    Workspace &w = *ws_;
    forwardInternal(feats, batch, w.q.data(), true);
    zeroGrad();
    const kernels::Ops &K = ops();
    int S = kSignalSlots, F = cfg_.featuresPerMovement, H = cfg_.demandHidden;
    int P = cfg_.pairFilters, M = cfg_.maskEmbedDim, NP = kPairCount;
    size_t rowsS = (size_t)batch * S, rowsK = (size_t)batch * NP;

    double loss = 0;
    std::fill_n(w.gq.data(), (size_t)batch * kPhaseCount, 0.0);
    for (int i = 0; i < batch; i++) {
        double diff = w.q[(size_t)i * kPhaseCount + actions[i]] - targets[i];
        loss += diff * diff;
        w.gq[(size_t)i * kPhaseCount + actions[i]] = 2.0 * diff / batch;
    }
    loss /= batch;
    if (!std::isfinite(loss))
        throw std::runtime_error("non-finite TD loss");

    for (int i = 0; i < batch; i++)
        for (int k = 0; k < NP; k++)
            w.gs[(size_t)i * NP + k] = w.gq[(size_t)i * kPhaseCount + pairP_[k]];
    // out layer
    K.gradWeights(w.zm.data(), w.gs.data(), out_.dw.data(), (int)rowsK, M, 1);
    K.gradBias(w.gs.data(), out_.db.data(), (int)rowsK, 1);
    std::fill_n(w.gzm.data(), rowsK * M, 0.0);
    K.gradInput(w.gs.data(), out_.w.data(), w.gzm.data(), (int)rowsK, M, 1);
    // mask gate
    std::fill_n(w.gz.data(), rowsK * M, 0.0);
    for (int i = 0; i < batch; i++)
        for (int k = 0; k < NP; k++) {
            int mv = structure_.pairMask[k];
            const double *e = maskEmbed_.data() + (size_t)mv * M;
            double *ge = maskEmbedGrad_.data() + (size_t)mv * M;
            size_t row = ((size_t)i * NP + k) * M;
            for (int j = 0; j < M; j++) {
                w.gz[row + j] = w.gzm[row + j] * e[j];
                ge[j] += w.gzm[row + j] * w.z[row + j];
            }
        }
    K.reluBackward(w.gz.data(), w.mz.data(), (int)(rowsK * M));
    // proj layer
    const double *pairOut = pairExtra_.empty() ? w.p1.data() : w.p2.data();
    K.gradWeights(pairOut, w.gz.data(), proj_.dw.data(), (int)rowsK, P, M);
    K.gradBias(w.gz.data(), proj_.db.data(), (int)rowsK, M);
    double *gPair = w.gp2.data();
    std::fill_n(gPair, rowsK * P, 0.0);
    K.gradInput(w.gz.data(), proj_.w.data(), gPair, (int)rowsK, P, M);
    if (!pairExtra_.empty()) {
        K.reluBackward(gPair, w.mp2.data(), (int)(rowsK * P));
        K.gradWeights(w.p1.data(), gPair, pairExtra_[0].dw.data(), (int)rowsK, P, P);
        K.gradBias(gPair, pairExtra_[0].db.data(), (int)rowsK, P);
        std::fill_n(w.gp1.data(), rowsK * P, 0.0);
        K.gradInput(gPair, pairExtra_[0].w.data(), w.gp1.data(), (int)rowsK, P, P);
        gPair = w.gp1.data();
    }
    K.reluBackward(gPair, w.mp1.data(), (int)(rowsK * P));
    // bias of the first pair layer lives in pairA_
    K.gradBias(gPair, pairA_.db.data(), (int)rowsK, P);
    // scatter pair gradients back to the per-phase U/V streams
    std::fill_n(w.gu.data(), rowsS * P, 0.0);
    std::fill_n(w.gv.data(), rowsS * P, 0.0);
    for (int i = 0; i < batch; i++)
        for (int k = 0; k < NP; k++) {
            const double *row = gPair + ((size_t)i * NP + k) * P;
            K.axpy(1.0, row, w.gu.data() + ((size_t)i * S + pairP_[k]) * P, P);
            K.axpy(1.0, row, w.gv.data() + ((size_t)i * S + pairQ_[k]) * P, P);
        }
    K.gradWeights(w.d.data(), w.gu.data(), pairA_.dw.data(), (int)rowsS, H, P);
    K.gradWeights(w.d.data(), w.gv.data(), pairB_.dw.data(), (int)rowsS, H, P);
    std::fill_n(w.gd.data(), rowsS * H, 0.0);
    K.gradInput(w.gu.data(), pairA_.w.data(), w.gd.data(), (int)rowsS, H, P);
    K.gradInput(w.gv.data(), pairB_.w.data(), w.gd.data(), (int)rowsS, H, P);
    // phase demand -> movement demand
    std::fill_n(w.gh2.data(), rowsS * H, 0.0);
    for (int i = 0; i < batch; i++)
        for (int p = 0; p < kPhaseCount; p++) {
            const double *src = w.gd.data() + ((size_t)i * S + p) * H;
            for (int slot : structure_.phaseSlots[p])
                K.axpy(1.0, src, w.gh2.data() + ((size_t)i * S + slot) * H, H);
        }
    K.reluBackward(w.gh2.data(), w.m2.data(), (int)(rowsS * H));
    K.gradWeights(w.h1.data(), w.gh2.data(), enc2_.dw.data(), (int)rowsS, H, H);
    K.gradBias(w.gh2.data(), enc2_.db.data(), (int)rowsS, H);
    std::fill_n(w.gh1.data(), rowsS * H, 0.0);
    K.gradInput(w.gh2.data(), enc2_.w.data(), w.gh1.data(), (int)rowsS, H, H);
    K.reluBackward(w.gh1.data(), w.m1.data(), (int)(rowsS * H));
    K.gradWeights(w.x.data(), w.gh1.data(), enc1_.dw.data(), (int)rowsS, F, H);
    K.gradBias(w.gh1.data(), enc1_.db.data(), (int)rowsS, H);
    return loss;
}

void FrapNet::zeroGrad() {
    enc1_.zeroGrad();
    enc2_.zeroGrad();
    pairA_.zeroGrad();
    pairB_.zeroGrad();
    for (Dense &d : pairExtra_)
        d.zeroGrad();
    proj_.zeroGrad();
    out_.zeroGrad();
    std::fill(maskEmbedGrad_.begin(), maskEmbedGrad_.end(), 0.0);
}

void FrapNet::adamStep(double lr, double beta1, double beta2, double eps) {
    adamT_++;
    double b1p = std::pow(beta1, (double)adamT_);
    double b2p = std::pow(beta2, (double)adamT_);
    const kernels::Ops &K = ops();
    auto upd = [&](Dense &d) {
        K.adamStep(d.w.data(), d.dw.data(), d.mw.data(), d.vw.data(), (int)d.w.size(), lr,
                   beta1, beta2, eps, b1p, b2p);
        K.adamStep(d.b.data(), d.db.data(), d.mb.data(), d.vb.data(), (int)d.b.size(), lr,
                   beta1, beta2, eps, b1p, b2p);
    };
    upd(enc1_);
    upd(enc2_);
    upd(pairA_);
    upd(pairB_);
    for (Dense &d : pairExtra_)
        upd(d);
    upd(proj_);
    upd(out_);
    K.adamStep(maskEmbed_.data(), maskEmbedGrad_.data(), maskEmbedM_.data(),
               maskEmbedV_.data(), (int)maskEmbed_.size(), lr, beta1, beta2, eps, b1p, b2p);
}

std::vector<ParamView> FrapNet::parameters() {
    std::vector<ParamView> out;
    auto add = [&](const std::string &n, Dense &d) {
        out.push_back({n + ".w", d.w.data(), d.dw.data(), (int)d.w.size()});
        out.push_back({n + ".b", d.b.data(), d.db.data(), (int)d.b.size()});
    };
    add("enc1", enc1_);
    add("enc2", enc2_);
    add("pair_a", pairA_);
    add("pair_b", pairB_);
    for (size_t i = 0; i < pairExtra_.size(); i++)
        add("pair" + std::to_string(i + 2), pairExtra_[i]);
    add("proj", proj_);
    add("out", out_);
    out.push_back({"mask_embed", maskEmbed_.data(), maskEmbedGrad_.data(),
                   (int)maskEmbed_.size()});
    return out;
}

void FrapNet::copyWeightsFrom(const FrapNet &other) {
    FrapNet &o = const_cast<FrapNet &>(other);
    std::vector<ParamView> mine = parameters();
    std::vector<ParamView> theirs = o.parameters();
    if (mine.size() != theirs.size())
        throw std::runtime_error("incompatible networks");
    for (size_t i = 0; i < mine.size(); i++) {
        if (mine[i].size != theirs[i].size)
            throw std::runtime_error("incompatible networks");
        std::memcpy(mine[i].data, theirs[i].data, (size_t)mine[i].size * sizeof(double));
    }
}

uint64_t FrapNet::weightsHash() const {
    FrapNet &self = const_cast<FrapNet &>(*this);
    uint64_t h = 1469598103934665603ull;
    for (const ParamView &p : self.parameters())
        for (int i = 0; i < p.size; i++) {
            uint64_t bits;
            std::memcpy(&bits, &p.data[i], 8);
            h ^= bits;
            h *= 1099511628211ull;
        }
    return h;
}

std::string FrapNet::saveJson() const {
    FrapNet &self = const_cast<FrapNet &>(*this);
    json j;
    j["schema_version"] = 1;
    j["config"] = {{"features_per_movement", cfg_.featuresPerMovement},
                   {"demand_hidden", cfg_.demandHidden},
                   {"pair_filters", cfg_.pairFilters},
                   {"pair_layers", cfg_.pairLayers},
                   {"mask_embed_dim", cfg_.maskEmbedDim},
                   {"input_scale", cfg_.inputScale}};
    json slots = json::array();
    for (const auto &ps : structure_.phaseSlots)
        slots.push_back({ps[0], ps[1]});
    j["phase_slots"] = slots;
    j["pair_mask"] = structure_.pairMask;
    json layers;
    for (const ParamView &p : self.parameters()) {
        layers[p.name] = {{"size", p.size},
                          {"data", std::vector<double>(p.data, p.data + p.size)}};
    }
    j["layers"] = layers;
    return j.dump();
}

FrapNet FrapNet::loadJson(const std::string &text) {
    json j = json::parse(text);
    if (j.at("schema_version").get<int>() != 1)
        throw std::runtime_error("unsupported checkpoint schema version");
    FrapConfig cfg;
    const json &c = j.at("config");
    cfg.featuresPerMovement = c.at("features_per_movement").get<int>();
    cfg.demandHidden = c.at("demand_hidden").get<int>();
    cfg.pairFilters = c.at("pair_filters").get<int>();
    cfg.pairLayers = c.at("pair_layers").get<int>();
    cfg.maskEmbedDim = c.at("mask_embed_dim").get<int>();
    cfg.inputScale = c.at("input_scale").get<double>();
    PhaseStructure st;
    for (int p = 0; p < kPhaseCount; p++) {
        st.phaseSlots[p][0] = j.at("phase_slots")[p][0].get<int>();
        st.phaseSlots[p][1] = j.at("phase_slots")[p][1].get<int>();
    }
    for (int k = 0; k < kPairCount; k++)
        st.pairMask[k] = j.at("pair_mask")[k].get<int>();
    FrapNet net(cfg, st, 0);
    for (const ParamView &p : net.parameters()) {
        const json &l = j.at("layers").at(p.name);
        if (l.at("size").get<int>() != p.size)
            throw std::runtime_error("checkpoint shape mismatch for " + p.name);
        const json &data = l.at("data");
        for (int i = 0; i < p.size; i++)
            p.data[i] = data[i].get<double>();
    }
    return net;
}

ObservationEncoder ObservationEncoder::forIntersection(const RoadNetwork &net, int intersection,
                                                       FilterMode mode, double scale) {
    const Intersection &inter = net.intersections[intersection];
    ObservationEncoder enc;
    enc.blocks = mode == FilterMode::AllAndActive ? 2 : 1;
    enc.blockSize = (int)(inter.inLanes.size() + inter.outLanes.size());
    enc.scale = scale;
    auto posIn = [&](int lane) {
        for (size_t i = 0; i < inter.inLanes.size(); i++)
            if (inter.inLanes[i] == lane)
                return (int)i;
        throw std::runtime_error("lane not incoming at intersection");
    };
    auto posOut = [&](int lane) {
        for (size_t i = 0; i < inter.outLanes.size(); i++)
            if (inter.outLanes[i] == lane)
                return (int)(inter.inLanes.size() + i);
        throw std::runtime_error("lane not outgoing at intersection");
    };
    for (int s = 0; s < kSignalSlots; s++) {
        const Movement &m = inter.movements[inter.signalSlot[s]];
        enc.inPos[s] = posIn(m.inLane);
        enc.outPos[s] = posOut(m.outLane);
    }
    for (int p = 0; p < kPhaseCount; p++) {
        uint8_t bits = 0;
        for (int mi : inter.phases[p].movements)
            for (int s = 0; s < kSignalSlots; s++)
                if (inter.signalSlot[s] == mi)
                    bits |= (uint8_t)(1u << s);
        enc.phaseBits[p] = bits;
    }
    return enc;
}

void ObservationEncoder::encode(const Observation &obs, double *out) const {
    int F = featureDim();
    uint8_t bits = phaseBits[obs.phase];
    for (int s = 0; s < kSignalSlots; s++) {
        double *row = out + (size_t)s * F;
        for (int b = 0; b < blocks; b++) {
            row[2 * b] = obs.counts[(size_t)b * blockSize + inPos[s]] * scale;
            row[2 * b + 1] = obs.counts[(size_t)b * blockSize + outPos[s]] * scale;
        }
        row[F - 1] = (bits >> s) & 1 ? 1.0 : 0.0;
    }
}

ReplayBuffer::ReplayBuffer(int capacity, uint64_t seed) : capacity_(capacity), rng_(seed) {
    store_.reserve(capacity);
}

void ReplayBuffer::push(Experience e) {
    if ((int)store_.size() < capacity_) {
        store_.push_back(std::move(e));
    } else {
        store_[head_] = std::move(e); // overwrite oldest
        head_ = (head_ + 1) % capacity_;
    }
}

std::vector<const Experience *> ReplayBuffer::sample(int batch) {
    if (batch > (int)store_.size())
        throw std::runtime_error("replay buffer smaller than batch");
    std::vector<int> chosen;
    chosen.reserve(batch);
    std::uniform_int_distribution<int> uni(0, (int)store_.size() - 1);
    while ((int)chosen.size() < batch) {
        int c = uni(rng_);
        bool dup = false;
        for (int x : chosen)
            dup = dup || x == c;
        if (!dup)
            chosen.push_back(c);
    }
    std::vector<const Experience *> out;
    out.reserve(batch);
    for (int c : chosen)
        out.push_back(&store_[c]);
    return out;
}

std::vector<double> tdTargets(const std::vector<const Experience *> &batch, FrapNet &target,
                              double gamma) {
    if (gamma < 0 || gamma >= 1)
        throw std::domain_error("gamma outside [0,1)");
    std::vector<double> out(batch.size());
    if (batch.empty())
        return out;
    int F = target.featureDim();
    std::vector<double> feats(batch.size() * kSignalSlots * (size_t)F);
    for (size_t i = 0; i < batch.size(); i++)
        std::memcpy(feats.data() + i * kSignalSlots * F, batch[i]->s2.data(),
                    kSignalSlots * (size_t)F * sizeof(double));
    std::vector<double> q(batch.size() * kPhaseCount);
    target.forward(feats.data(), (int)batch.size(), q.data());
    for (size_t i = 0; i < batch.size(); i++) {
        double mx = q[i * kPhaseCount];
        for (int a = 1; a < kPhaseCount; a++)
            mx = std::max(mx, q[i * kPhaseCount + a]);
        out[i] = batch[i]->reward + gamma * mx;
    }
    return out;
}

int greedyAction(const double *q) {
    int best = 0;
    for (int a = 1; a < kPhaseCount; a++)
        if (q[a] > q[best])
            best = a;
    return best;
}

int act(FrapNet &net, const double *feat, double epsilon, std::mt19937_64 &rng) {
    if (epsilon < 0 || epsilon > 1)
        throw std::domain_error("epsilon outside [0,1]");
    if (epsilon > 0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon)
        return std::uniform_int_distribution<int>(0, kPhaseCount - 1)(rng);
    double q[kPhaseCount];
    net.forward(feat, 1, q);
    return greedyAction(q);
}

double epsilonAt(int episode, int totalEpisodes) {
    double eps = 1.0 - (double)episode / (double)totalEpisodes;
    return eps < 0 ? 0 : eps;
}

} // namespace tsc
