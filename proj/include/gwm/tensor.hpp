#pragma once

#include <string>
#include <vector>

namespace gwm::wm {

// Row-major f64 tensor with an optional gradient buffer of equal size.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until ensure_grad()

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    long numel() const;
    int dim(int i) const { return shape[size_t(i)]; }
    void ensure_grad();       // allocate + zero
    void zero_grad();
    void fill(double value);
};

// Matrix products over contiguous row-major buffers, built on the runtime
// kernel set so scalar and AVX2 builds agree bit for bit.  Shapes:
//   mm_nn     C[m,n]  = A[m,k] * B[k,n]
//   mm_nn_acc C[m,n] += A[m,k] * B[k,n]
//   mm_nt     C[m,n]  = A[m,k] * B[n,k]^T
//   mm_nt_acc C[m,n] += A[m,k] * B[n,k]^T
//   mm_tn_acc C[k,n] += A[m,k]^T * B[m,n]
void mm_nn(const double* a, const double* b, double* c, int m, int k, int n);
void mm_nn_acc(const double* a, const double* b, double* c, int m, int k, int n);
void mm_nt(const double* a, const double* b, double* c, int m, int k, int n);
void mm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n);
void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n);

// Squared Frobenius norm with the kernels' fixed reduction order.
double sq_norm(const double* a, size_t n);

}  // namespace gwm::wm
