#include "fedrelax/matrix.hpp"

#include <cmath>
#include <optional>

namespace fedrelax::linalg {

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) {
        throw error(errc::dimension_mismatch, "matvec: vector length does not match column count");
    }
    std::vector<double> out(a.rows(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double acc = 0.0;
        const auto row = a.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
    return out;
}

double quadratic_form(const Matrix& a, std::span<const double> x) {
    const auto ax = matvec(a, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * ax[i];
    return acc;
}

namespace {

// In-place lower Cholesky; returns the solution of L L' x = b or
// nullopt when a pivot falls at or below the breakdown threshold.
std::optional<std::vector<double>> cholesky_solve(Matrix a, std::vector<double> b, double pivot_floor) {
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double pivot = a(j, j);
        for (std::size_t k = 0; k < j; ++k) pivot -= a(j, k) * a(j, k);
        if (!std::isfinite(pivot) || pivot <= pivot_floor) return std::nullopt;
        const double root = std::sqrt(pivot);
        a(j, j) = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double acc = a(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= a(i, k) * a(j, k);
            a(i, j) = acc / root;
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < n; ++i) {
        double acc = b[i];
        for (std::size_t k = 0; k < i; ++k) acc -= a(i, k) * b[k];
        b[i] = acc / a(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t k = i + 1; k < n; ++k) acc -= a(k, i) * b[k];
        b[i] = acc / a(i, i);
    }
    return b;
}

}  // namespace

std::vector<double> solve_spd(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows();
    if (n == 0 || a.cols() != n || b.size() != n) {
        throw error(errc::dimension_mismatch, "solve_spd: shape mismatch");
    }
    double max_diag = 0.0;
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_diag = std::max(max_diag, std::abs(a(i, i)));
        trace += a(i, i);
    }
    if (auto x = cholesky_solve(a, b, 1e-12 * max_diag)) return *x;
    // Singular (or numerically so): jitter the diagonal and retry once.
    const double jitter = 1e-10 * (1.0 + trace / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) a(i, i) += jitter;
    if (auto x = cholesky_solve(std::move(a), std::move(b), 0.0)) return *x;
    throw error(errc::numerical, "solve_spd: matrix is not positive semidefinite");
}

}  // namespace fedrelax::linalg
