#include "tsc/kernels.h"

#include <cmath>

namespace tsc {
namespace kernels {

namespace {

void gemmAcc(const double *x, const double *w, double *y, int m, int k, int n) {
    for (int i = 0; i < m; i++) {
        const double *xi = x + (size_t)i * k;
        double *yi = y + (size_t)i * n;
        for (int kk = 0; kk < k; kk++) {
            double a = xi[kk];
            const double *wr = w + (size_t)kk * n;
            for (int j = 0; j < n; j++)
                yi[j] += a * wr[j];
        }
    }
}

void addBias(double *y, const double *b, int m, int n) {
    for (int i = 0; i < m; i++) {
        double *yi = y + (size_t)i * n;
        for (int j = 0; j < n; j++)
            yi[j] += b[j];
    }
}

void addBiasRelu(double *y, const double *b, uint8_t *mask, int m, int n) {
    for (int i = 0; i < m; i++) {
        double *yi = y + (size_t)i * n;
        uint8_t *mi = mask + (size_t)i * n;
        for (int j = 0; j < n; j++) {
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
    for (int i = 0; i < m; i++) {
        const double *xi = x + (size_t)i * k;
        const double *gi = g + (size_t)i * n;
        for (int kk = 0; kk < k; kk++) {
            double a = xi[kk];
            double *dwr = dw + (size_t)kk * n;
            for (int j = 0; j < n; j++)
                dwr[j] += a * gi[j];
        }
    }
}

void gradBias(const double *g, double *db, int m, int n) {
    for (int i = 0; i < m; i++) {
        const double *gi = g + (size_t)i * n;
        for (int j = 0; j < n; j++)
            db[j] += gi[j];
    }
}

void gradInput(const double *g, const double *w, double *dx, int m, int k, int n) {
    for (int i = 0; i < m; i++) {
        const double *gi = g + (size_t)i * n;
        double *dxi = dx + (size_t)i * k;
        for (int kk = 0; kk < k; kk++) {
            const double *wr = w + (size_t)kk * n;
            double s = 0.0;
            for (int j = 0; j < n; j++)
                s += gi[j] * wr[j];
            dxi[kk] += s;
        }
    }
}

void axpy(double a, const double *x, double *y, int size) {
    for (int i = 0; i < size; i++)
        y[i] += a * x[i];
}

double dot(const double *a, const double *b, int size) {
    double s = 0.0;
    for (int i = 0; i < size; i++)
        s += a[i] * b[i];
    return s;
}

void adamStep(double *w, const double *g, double *m, double *v, int size,
              double lr, double beta1, double beta2, double eps,
              double beta1Pow, double beta2Pow) {
    double c1 = 1.0 / (1.0 - beta1Pow);
    double c2 = 1.0 / (1.0 - beta2Pow);
    for (int i = 0; i < size; i++) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        double mhat = m[i] * c1;
        double vhat = v[i] * c2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

} // namespace

const Ops &scalarOps() {
    static const Ops table = {
        "scalar", gemmAcc, addBias, addBiasRelu, reluBackward,
        gradWeights, gradBias, gradInput, axpy, dot, adamStep,
    };
    return table;
}

} // namespace kernels
} // namespace tsc
