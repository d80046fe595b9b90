#include "gwm/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "gwm/kernels.hpp"

namespace gwm::wm {
namespace {

long checked_numel(const std::vector<int>& shape) {
    long n = 1;
    for (const int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(size_t(checked_numel(shape)), 0.0);
}

long Tensor::numel() const {
    long n = 1;
    for (const int d : shape) n *= d;
    return n;
}

void Tensor::ensure_grad() { grad.assign(data.size(), 0.0); }

void Tensor::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

void Tensor::fill(double value) { std::fill(data.begin(), data.end(), value); }

void mm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
    std::memset(c, 0, sizeof(double) * size_t(m) * size_t(n));
    mm_nn_acc(a, b, c, m, k, n);
}

void mm_nn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    const auto& kr = kern::active_kernels();
    for (int i = 0; i < m; ++i) {
        double* ci = c + size_t(i) * size_t(n);
        const double* ai = a + size_t(i) * size_t(k);
        for (int p = 0; p < k; ++p)
            kr.axpy(ci, b + size_t(p) * size_t(n), ai[p], size_t(n));
    }
}

void mm_nt(const double* a, const double* b, double* c, int m, int k, int n) {
    const auto& kr = kern::active_kernels();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            c[size_t(i) * size_t(n) + size_t(j)] =
                kr.dot(a + size_t(i) * size_t(k), b + size_t(j) * size_t(k), size_t(k));
}

void mm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    const auto& kr = kern::active_kernels();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            c[size_t(i) * size_t(n) + size_t(j)] +=
                kr.dot(a + size_t(i) * size_t(k), b + size_t(j) * size_t(k), size_t(k));
}

void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    const auto& kr = kern::active_kernels();
    for (int i = 0; i < m; ++i) {
        const double* ai = a + size_t(i) * size_t(k);
        const double* bi = b + size_t(i) * size_t(n);
        for (int p = 0; p < k; ++p)
            kr.axpy(c + size_t(p) * size_t(n), bi, ai[p], size_t(n));
    }
}

double sq_norm(const double* a, size_t n) { return kern::active_kernels().dot(a, a, n); }

}  // namespace gwm::wm
