#include "excitation/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef EXC_HAVE_OPENMP
#include <omp.h>
#endif

namespace exc::kernels {

namespace reference {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = accumulate ? c[i * n + j] : 0.0;
            for (std::size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[p * n + j];
            c[i * n + j] = sum;
        }
    }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = accumulate ? c[i * n + j] : 0.0;
            for (std::size_t p = 0; p < m; ++p) sum += a[p * k + i] * b[p * n + j];
            c[i * n + j] = sum;
        }
    }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = accumulate ? c[i * n + j] : 0.0;
            for (std::size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[j * k + p];
            c[i * n + j] = sum;
        }
    }
}

}  // namespace reference

namespace parallel {

namespace {

constexpr std::size_t kRowBlock = 16;
constexpr std::size_t kDepthBlock = 256;

// Each output row is owned by one thread and reduced over p in ascending
// order, so results do not depend on the thread count.
void gemm_nn_rows(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n) {
    const auto row_blocks = static_cast<long long>((m + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static)
    for (long long rb = 0; rb < row_blocks; ++rb) {
        const std::size_t i0 = static_cast<std::size_t>(rb) * kRowBlock;
        const std::size_t i1 = std::min(m, i0 + kRowBlock);
        for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
            const std::size_t p1 = std::min(k, p0 + kDepthBlock);
            for (std::size_t i = i0; i < i1; ++i) {
                double* __restrict crow = c + i * n;
                const double* arow = a + i * k;
                for (std::size_t p = p0; p < p1; ++p) {
                    const double av = arow[p];
                    if (av == 0.0) continue;
                    const double* __restrict brow = b + p * n;
                    for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
                }
            }
        }
    }
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    if (!accumulate) std::fill(c, c + m * n, 0.0);
    gemm_nn_rows(a, b, c, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    if (!accumulate) std::fill(c, c + k * n, 0.0);
    const auto row_blocks = static_cast<long long>((k + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static)
    for (long long rb = 0; rb < row_blocks; ++rb) {
        const std::size_t i0 = static_cast<std::size_t>(rb) * kRowBlock;
        const std::size_t i1 = std::min(k, i0 + kRowBlock);
        for (std::size_t p = 0; p < m; ++p) {
            const double* arow = a + p * k;
            const double* __restrict brow = b + p * n;
            for (std::size_t i = i0; i < i1; ++i) {
                const double av = arow[i];
                if (av == 0.0) continue;
                double* __restrict crow = c + i * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    std::vector<double> bt(k * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
    if (!accumulate) std::fill(c, c + m * n, 0.0);
    gemm_nn_rows(a, bt.data(), c, m, k, n);
}

}  // namespace parallel

int max_threads() {
#ifdef EXC_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace exc::kernels
