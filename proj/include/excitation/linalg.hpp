#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace exc {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool all_finite() const noexcept;
    void fill(double v) noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct LossOutput {
    double loss = 0.0;    // mean NLL over the batch, nats
    Matrix grad_logits;   // batch x classes
};

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

Matrix relu(const Matrix& x);
/// Indicator x > 0; the subgradient at 0 is 0.
Matrix relu_grad(const Matrix& x);

/// Adds `bias` (1 x cols) to every row of `x`.
void add_row_vector(Matrix& x, const Matrix& bias);
/// Column sums as a 1 x cols matrix.
Matrix column_sums(const Matrix& x);

/// Mean softmax cross-entropy with row-max stabilisation.
/// grad_logits = (softmax - onehot) / batch.
LossOutput softmax_cross_entropy(const Matrix& logits, std::span<const std::int32_t> labels);

/// Row-wise softmax, numerically stabilised.
std::vector<double> softmax(std::span<const double> z);

}  // namespace exc
