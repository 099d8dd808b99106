#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedrelax/error.hpp"

namespace fedrelax {

// Dense row-major matrix of doubles. Small and boring on purpose: every
// problem this library touches is desk scale.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace linalg {

std::vector<double> matvec(const Matrix& a, std::span<const double> x);

// x' A x for symmetric A.
double quadratic_form(const Matrix& a, std::span<const double> x);

// Solves A x = b for symmetric positive semidefinite A via Cholesky.
// If the plain factorization breaks down (a pivot falls at or below
// 1e-12 times the largest initial diagonal entry), the diagonal is
// jittered by 1e-10 * (1 + trace(A)/n) and the solve is retried once.
// Throws errc::numerical if the jittered factorization fails too.
std::vector<double> solve_spd(Matrix a, std::vector<double> b);

}  // namespace linalg
}  // namespace fedrelax
