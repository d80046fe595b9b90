#include "gwm/kernels.hpp"

#include <cmath>
#include <immintrin.h>

// AVX2+FMA kernels.  Per-element operations are identical to the scalar
// reference (fma is correctly rounded on both paths); dot's four vector lanes
// are the scalar variant's four i%4 accumulators, combined with the same
// (s0+s1)+(s2+s3) tree, so results are bit-equal by construction.

namespace gwm::kern {
namespace {

void axpy_avx2(double* y, const double* x, double a, size_t n) {
    __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, vx, vy));
    }
    for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

double dot_avx2(const double* a, const double* b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    double tail = 0.0;
    for (; i < n; ++i) tail = std::fma(a[i], b[i], tail);
    return ((s[0] + s[1]) + (s[2] + s[3])) + tail;
}

void add_avx2(double* d, const double* a, const double* b, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(d + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) d[i] = a[i] + b[i];
}

void sub_avx2(double* d, const double* a, const double* b, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(d + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) d[i] = a[i] - b[i];
}

void mul_avx2(double* d, const double* a, const double* b, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(d + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) d[i] = a[i] * b[i];
}

void scale_avx2(double* d, const double* a, double s, size_t n) {
    __m256d vs = _mm256_set1_pd(s);
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(d + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
    for (; i < n; ++i) d[i] = a[i] * s;
}

void fmadd_avx2(double* d, const double* a, const double* b, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vd = _mm256_loadu_pd(d + i);
        _mm256_storeu_pd(d + i, _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), vd));
    }
    for (; i < n; ++i) d[i] = std::fma(a[i], b[i], d[i]);
}

const Kernels k_avx2 = {
    "avx2", axpy_avx2, dot_avx2, add_avx2,
    sub_avx2, mul_avx2, scale_avx2, fmadd_avx2,
};

bool cpu_has_avx2_fma() {
    unsigned eax, ebx, ecx, edx;
    __asm__("cpuid" : "=a"(eax), "=b"(ebx), "=c"(ecx), "=d"(edx) : "a"(1u), "c"(0u));
    bool fma = (ecx >> 12) & 1u;
    bool osxsave = (ecx >> 27) & 1u;
    if (!fma || !osxsave) return false;
    // OS must enable YMM state (XCR0 bits 1 and 2).
    unsigned lo, hi;
    __asm__(".byte 0x0f, 0x01, 0xd0" : "=a"(lo), "=d"(hi) : "c"(0u)); // xgetbv
    if ((lo & 0x6u) != 0x6u) return false;
    __asm__("cpuid" : "=a"(eax), "=b"(ebx), "=c"(ecx), "=d"(edx) : "a"(7u), "c"(0u));
    return (ebx >> 5) & 1u; // AVX2
}

} // namespace

const Kernels* avx2_kernels() {
    static const bool ok = cpu_has_avx2_fma();
    return ok ? &k_avx2 : nullptr;
}

} // namespace gwm::kern
