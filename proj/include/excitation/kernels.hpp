#pragma once

// Dense row-major GEMM kernels. Every kernel exists twice: a serial
// reference (textbook loops, kept for testing) and an OpenMP-parallel
// blocked version used by the engine. Both write C = op(A) * op(B); with
// `accumulate` set they add into C instead of overwriting it.

#include <cstddef>

namespace exc::kernels {

namespace reference {

/// C(m x n) = A(m x k) * B(k x n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate = false);

/// C(k x n) = A(m x k)^T * B(m x n)
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate = false);

/// C(m x n) = A(m x k) * B(n x k)^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate = false);

}  // namespace reference

namespace parallel {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate = false);

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate = false);

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate = false);

}  // namespace parallel

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace exc::kernels
