#include "excitation/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "excitation/errors.hpp"
#include "excitation/kernels.hpp"

namespace exc {

namespace {

std::string dims(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: " + dims(a) + " * " + dims(b));
    Matrix c(a.rows(), b.cols());
    kernels::parallel::gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ShapeError("matmul_tn: " + dims(a) + "^T * " + dims(b));
    Matrix c(a.cols(), b.cols());
    kernels::parallel::gemm_tn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeError("matmul_nt: " + dims(a) + " * " + dims(b) + "^T");
    Matrix c(a.rows(), b.rows());
    kernels::parallel::gemm_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
    return t;
}

Matrix relu(const Matrix& x) {
    Matrix y = x;
    for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
    return y;
}

Matrix relu_grad(const Matrix& x) {
    Matrix y(x.rows(), x.cols());
    auto src = x.values();
    auto dst = y.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? 1.0 : 0.0;
    return y;
}

void add_row_vector(Matrix& x, const Matrix& bias) {
    if (bias.rows() != 1 || bias.cols() != x.cols())
        throw ShapeError("add_row_vector: " + dims(x) + " + " + dims(bias));
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias(0, c);
    }
}

Matrix column_sums(const Matrix& x) {
    Matrix s(1, x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) s(0, c) += row[c];
    }
    return s;
}

std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> p(z.size());
    if (z.empty()) return p;
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - zmax);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

LossOutput softmax_cross_entropy(const Matrix& logits, std::span<const std::int32_t> labels) {
    if (labels.size() != logits.rows())
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(logits.rows()) + " rows");
    if (logits.rows() == 0) throw InputError("softmax_cross_entropy: empty batch");
    const std::size_t batch = logits.rows();
    const std::size_t classes = logits.cols();
    LossOutput out{0.0, Matrix(batch, classes)};
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
        const auto label = labels[r];
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw InputError("softmax_cross_entropy: label " + std::to_string(label) +
                             " outside [0, " + std::to_string(classes) + ")");
        auto z = logits.row(r);
        const double zmax = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (double v : z) total += std::exp(v - zmax);
        const double log_total = std::log(total);
        out.loss += -(z[label] - zmax - log_total);
        auto g = out.grad_logits.row(r);
        for (std::size_t c = 0; c < classes; ++c) g[c] = std::exp(z[c] - zmax - log_total) * inv_batch;
        g[label] -= inv_batch;
    }
    out.loss *= inv_batch;
    return out;
}

}  // namespace exc
