#include "tsc/kernels.h"

#include <immintrin.h>

#include <cmath>

// AVX2+FMA variants of the dense-layer kernels. Loops are vectorized along
// the output dimension (n is 16 or 20 in the Q-network, so tails are short).

namespace tsc {
namespace kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void gemmAcc(const double *x, const double *w, double *y, int m, int k, int n) {
    int n4 = n & ~3;
    for (int i = 0; i < m; i++) {
        const double *xi = x + (size_t)i * k;
        double *yi = y + (size_t)i * n;
        for (int kk = 0; kk < k; kk++) {
            double a = xi[kk];
            if (a == 0.0)
                continue;
            const double *wr = w + (size_t)kk * n;
            __m256d av = _mm256_set1_pd(a);
            int j = 0;
            for (; j < n4; j += 4) {
                __m256d yv = _mm256_loadu_pd(yi + j);
                yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(wr + j), yv);
                _mm256_storeu_pd(yi + j, yv);
            }
            for (; j < n; j++)
                yi[j] += a * wr[j];
        }
    }
}

void addBias(double *y, const double *b, int m, int n) {
    int n4 = n & ~3;
    for (int i = 0; i < m; i++) {
        double *yi = y + (size_t)i * n;
        int j = 0;
        for (; j < n4; j += 4)
            _mm256_storeu_pd(yi + j, _mm256_add_pd(_mm256_loadu_pd(yi + j), _mm256_loadu_pd(b + j)));
        for (; j < n; j++)
            yi[j] += b[j];
    }
}

void addBiasRelu(double *y, const double *b, uint8_t *mask, int m, int n) {
    __m256d zero = _mm256_setzero_pd();
    int n4 = n & ~3;
    for (int i = 0; i < m; i++) {
        double *yi = y + (size_t)i * n;
        uint8_t *mi = mask + (size_t)i * n;
        int j = 0;
        for (; j < n4; j += 4) {
            __m256d v = _mm256_add_pd(_mm256_loadu_pd(yi + j), _mm256_loadu_pd(b + j));
            __m256d pos = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
            _mm256_storeu_pd(yi + j, _mm256_and_pd(v, pos));
            int bits = _mm256_movemask_pd(pos);
            mi[j] = (uint8_t)(bits & 1);
            mi[j + 1] = (uint8_t)((bits >> 1) & 1);
            mi[j + 2] = (uint8_t)((bits >> 2) & 1);
            mi[j + 3] = (uint8_t)((bits >> 3) & 1);
        }
        for (; j < n; j++) {
            double v = yi[j] + b[j];
            bool pos = v > 0.0;
            yi[j] = pos ? v : 0.0;
            mi[j] = pos ? 1 : 0;
        }
    }
}

void reluBackward(double *g, const uint8_t *mask, int size) {
    for (int i = 0; i < size; i++)
        if (!mask[i])
            g[i] = 0.0;
}

void gradWeights(const double *x, const double *g, double *dw, int m, int k, int n) {
    int n4 = n & ~3;
    for (int i = 0; i < m; i++) {
        const double *xi = x + (size_t)i * k;
        const double *gi = g + (size_t)i * n;
        for (int kk = 0; kk < k; kk++) {
            double a = xi[kk];
            if (a == 0.0)
                continue;
            double *dwr = dw + (size_t)kk * n;
            __m256d av = _mm256_set1_pd(a);
            int j = 0;
            for (; j < n4; j += 4) {
                __m256d dv = _mm256_loadu_pd(dwr + j);
                dv = _mm256_fmadd_pd(av, _mm256_loadu_pd(gi + j), dv);
                _mm256_storeu_pd(dwr + j, dv);
            }
            for (; j < n; j++)
                dwr[j] += a * gi[j];
        }
    }
}

void gradBias(const double *g, double *db, int m, int n) {
    int n4 = n & ~3;
    for (int i = 0; i < m; i++) {
        const double *gi = g + (size_t)i * n;
        int j = 0;
        for (; j < n4; j += 4)
            _mm256_storeu_pd(db + j, _mm256_add_pd(_mm256_loadu_pd(db + j), _mm256_loadu_pd(gi + j)));
        for (; j < n; j++)
            db[j] += gi[j];
    }
}

void gradInput(const double *g, const double *w, double *dx, int m, int k, int n) {
    int n4 = n & ~3;
    for (int i = 0; i < m; i++) {
        const double *gi = g + (size_t)i * n;
        double *dxi = dx + (size_t)i * k;
        for (int kk = 0; kk < k; kk++) {
            const double *wr = w + (size_t)kk * n;
            __m256d acc = _mm256_setzero_pd();
            int j = 0;
            for (; j < n4; j += 4)
                acc = _mm256_fmadd_pd(_mm256_loadu_pd(gi + j), _mm256_loadu_pd(wr + j), acc);
            double s = hsum(acc);
            for (; j < n; j++)
                s += gi[j] * wr[j];
            dxi[kk] += s;
        }
    }
}

void axpy(double a, const double *x, double *y, int size) {
    __m256d av = _mm256_set1_pd(a);
    int n4 = size & ~3;
    int i = 0;
    for (; i < n4; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < size; i++)
        y[i] += a * x[i];
}

double dot(const double *a, const double *b, int size) {
    __m256d acc = _mm256_setzero_pd();
    int n4 = size & ~3;
    int i = 0;
    for (; i < n4; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < size; i++)
        s += a[i] * b[i];
    return s;
}

void adamStep(double *w, const double *g, double *m, double *v, int size,
              double lr, double beta1, double beta2, double eps,
              double beta1Pow, double beta2Pow) {
    double c1 = 1.0 / (1.0 - beta1Pow);
    double c2 = 1.0 / (1.0 - beta2Pow);
    __m256d b1 = _mm256_set1_pd(beta1), ob1 = _mm256_set1_pd(1.0 - beta1);
    __m256d b2 = _mm256_set1_pd(beta2), ob2 = _mm256_set1_pd(1.0 - beta2);
    __m256d c1v = _mm256_set1_pd(c1), c2v = _mm256_set1_pd(c2);
    __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps);
    int n4 = size & ~3;
    int i = 0;
    for (; i < n4; i += 4) {
        __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mv = _mm256_fmadd_pd(ob1, gv, _mm256_mul_pd(b1, _mm256_loadu_pd(m + i)));
        __m256d vv = _mm256_fmadd_pd(ob2, _mm256_mul_pd(gv, gv), _mm256_mul_pd(b2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_mul_pd(mv, c1v);
        __m256d vhat = _mm256_mul_pd(vv, c2v);
        __m256d upd = _mm256_div_pd(_mm256_mul_pd(lrv, mhat),
                                    _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv));
        _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), upd));
    }
    for (; i < size; i++) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        w[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
    }
}

} // namespace

const Ops &avx2Ops() {
    static const Ops table = {
        "avx2", gemmAcc, addBias, addBiasRelu, reluBackward,
        gradWeights, gradBias, gradInput, axpy, dot, adamStep,
    };
    return table;
}

} // namespace kernels
} // namespace tsc
