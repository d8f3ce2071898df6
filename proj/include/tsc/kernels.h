#pragma once

#include <cstdint>
#include <string>

namespace tsc {
namespace kernels {

// Dense-layer arithmetic used by the Q-network. All matrices are row-major
// doubles; weights are stored [in x out] so the inner loops run along the
// output dimension.
struct Ops {
    const char *name;
    // y[m x n] += x[m x k] * w[k x n]
    void (*gemmAcc)(const double *x, const double *w, double *y, int m, int k, int n);
    // y[i,:] += b
    void (*addBias)(double *y, const double *b, int m, int n);
    // y = max(y + b, 0); mask[i] = 1 where the unit stayed positive
    void (*addBiasRelu)(double *y, const double *b, uint8_t *mask, int m, int n);
    // g[i] = mask[i] ? g[i] : 0
    void (*reluBackward)(double *g, const uint8_t *mask, int size);
    // dw[k x n] += x^T[k x m] * g[m x n]
    void (*gradWeights)(const double *x, const double *g, double *dw, int m, int k, int n);
    // db[n] += column sums of g[m x n]
    void (*gradBias)(const double *g, double *db, int m, int n);
    // dx[m x k] += g[m x n] * w^T   (w stored [k x n])
    void (*gradInput)(const double *g, const double *w, double *dx, int m, int k, int n);
    // y += a * x
    void (*axpy)(double a, const double *x, double *y, int size);
    double (*dot)(const double *a, const double *b, int size);
    // Adam update with bias correction; beta1Pow/beta2Pow are beta^t.
    void (*adamStep)(double *w, const double *g, double *m, double *v, int size,
                     double lr, double beta1, double beta2, double eps,
                     double beta1Pow, double beta2Pow);
};

const Ops &scalarOps();
bool avx2Supported();        // CPU capability at runtime
const Ops &avx2Ops();        // valid to call only when avx2Supported()

// Active backend: AVX2 when the CPU supports it, scalar otherwise.
// TSC_KERNELS=scalar|avx2 overrides the choice (bad override falls back).
const Ops &ops();
std::string activeBackendName();

} // namespace kernels
} // namespace tsc
