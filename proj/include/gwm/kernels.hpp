#pragma once
// Data-parallel f64 primitives behind the tensor ops.  Two implementations:
// a scalar reference and an AVX2+FMA variant, selected once at startup by
// cpuid.  Both are written against the same fixed evaluation order — explicit
// fma everywhere a fused multiply-add is intended, dot products accumulated in
// four stride-4 lanes combined as (s0+s1)+(s2+s3) — so the variants agree bit
// for bit and the equivalence tests can demand exact equality, not tolerance.

#include <cstddef>
#include <cstdint>

namespace gwm::kern {

struct Kernels {
    const char* name;
    // y[i] += a * x[i]
    void (*axpy)(double* y, const double* x, double a, size_t n);
    // sum_i a[i]*b[i], fixed 4-lane reduction tree
    double (*dot)(const double* a, const double* b, size_t n);
    // d[i] = a[i] + b[i] / a[i] - b[i] / a[i] * b[i]
    void (*add)(double* d, const double* a, const double* b, size_t n);
    void (*sub)(double* d, const double* a, const double* b, size_t n);
    void (*mul)(double* d, const double* a, const double* b, size_t n);
    // d[i] = a[i] * s
    void (*scale)(double* d, const double* a, double s, size_t n);
    // d[i] += a[i] * b[i]
    void (*fmadd)(double* d, const double* a, const double* b, size_t n);
};

const Kernels& scalar_kernels();
// Null when the binary was built without the AVX2 translation unit or the CPU
// lacks AVX2/FMA at runtime.
const Kernels* avx2_kernels();

// Active implementation: AVX2 when available unless GWM_FORCE_SCALAR=1 is set
// in the environment.  select_kernels overrides it for tests.
const Kernels& active_kernels();
void select_kernels(const Kernels& k);

} // namespace gwm::kern
