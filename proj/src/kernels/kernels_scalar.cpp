#include "gwm/kernels.hpp"

#include <cmath>

// Reference kernels.  The loop shapes mirror the AVX2 variant exactly:
// element-wise ops are order-free, axpy/fmadd use one fma per element, and dot
// keeps four accumulator lanes indexed by i%4 so the reduction tree matches
// the vector register lanes.

namespace gwm::kern {
namespace {

void axpy_scalar(double* y, const double* x, double a, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

double dot_scalar(const double* a, const double* b, size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 = std::fma(a[i + 0], b[i + 0], s0);
        s1 = std::fma(a[i + 1], b[i + 1], s1);
        s2 = std::fma(a[i + 2], b[i + 2], s2);
        s3 = std::fma(a[i + 3], b[i + 3], s3);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail = std::fma(a[i], b[i], tail);
    return ((s0 + s1) + (s2 + s3)) + tail;
}

void add_scalar(double* d, const double* a, const double* b, size_t n) {
    for (size_t i = 0; i < n; ++i) d[i] = a[i] + b[i];
}

void sub_scalar(double* d, const double* a, const double* b, size_t n) {
    for (size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
}

void mul_scalar(double* d, const double* a, const double* b, size_t n) {
    for (size_t i = 0; i < n; ++i) d[i] = a[i] * b[i];
}

void scale_scalar(double* d, const double* a, double s, size_t n) {
    for (size_t i = 0; i < n; ++i) d[i] = a[i] * s;
}

void fmadd_scalar(double* d, const double* a, const double* b, size_t n) {
    for (size_t i = 0; i < n; ++i) d[i] = std::fma(a[i], b[i], d[i]);
}

const Kernels k_scalar = {
    "scalar", axpy_scalar, dot_scalar, add_scalar,
    sub_scalar, mul_scalar, scale_scalar, fmadd_scalar,
};

} // namespace

const Kernels& scalar_kernels() { return k_scalar; }

} // namespace gwm::kern
