#include "microvol/bspline.hpp"

#include <algorithm>
#include <string>

#include "microvol/errors.hpp"

namespace microvol::bspline {

std::vector<double> clamped_uniform_knots(int ncp, int degree) {
    if (degree < 1 || degree > kMaxDegree) throw DomainError("unsupported degree " + std::to_string(degree));
    if (ncp < degree + 1) throw DomainError("ncp must be >= degree + 1");
    std::vector<double> knots(static_cast<std::size_t>(ncp + degree + 1), 0.0);
    const int pieces = ncp - degree;
    for (int i = 1; i < pieces; ++i) knots[static_cast<std::size_t>(degree + i)] = static_cast<double>(i) / pieces;
    for (int i = ncp; i <= ncp + degree; ++i) knots[static_cast<std::size_t>(i)] = 1.0;
    return knots;
}

int find_span(std::span<const double> knots, int degree, int ncp, double u) {
    if (u >= knots[static_cast<std::size_t>(ncp)]) return ncp - 1;
    if (u <= knots[static_cast<std::size_t>(degree)]) return degree;
    // Last index s in [degree, ncp-1] with knots[s] <= u.
    const auto first = knots.begin() + degree;
    const auto last = knots.begin() + ncp + 1;
    const auto it = std::upper_bound(first, last, u);
    return static_cast<int>(it - knots.begin()) - 1;
}

void basis_values(std::span<const double> knots, int degree, int span, double u, BasisRow& values) {
    // Cox-de Boor triangle (Piegl & Tiller A2.2).
    std::array<double, kMaxDegree + 1> left{};
    std::array<double, kMaxDegree + 1> right{};
    values[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[j] = u - knots[static_cast<std::size_t>(span + 1 - j)];
        right[j] = knots[static_cast<std::size_t>(span + j)] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
}

void basis_values_and_derivatives(std::span<const double> knots, int degree, int span, double u, BasisRow& values,
                                  BasisRow& derivatives) {
    // Degree p-1 basis gives the first derivative:
    // N'_{i,p} = p/(t_{i+p}-t_i) N_{i,p-1} - p/(t_{i+p+1}-t_{i+1}) N_{i+1,p-1}
    BasisRow lower{};
    basis_values(knots, degree - 1, span, u, lower);
    basis_values(knots, degree, span, u, values);
    const int first = span - degree;
    for (int r = 0; r <= degree; ++r) {
        const int i = first + r;
        double d = 0.0;
        // N_{i,p-1} is lower[r-1] (nonzero lower functions are span-p+1 .. span).
        if (r >= 1) {
            const double denom = knots[static_cast<std::size_t>(i + degree)] - knots[static_cast<std::size_t>(i)];
            if (denom > 0.0) d += degree / denom * lower[r - 1];
        }
        if (r <= degree - 1) {
            const double denom =
                knots[static_cast<std::size_t>(i + degree + 1)] - knots[static_cast<std::size_t>(i + 1)];
            if (denom > 0.0) d -= degree / denom * lower[r];
        }
        derivatives[r] = d;
    }
}

std::vector<double> collocation_matrix(std::span<const double> knots, int degree, int ncp,
                                       std::span<const double> params) {
    std::vector<double> matrix(params.size() * static_cast<std::size_t>(ncp), 0.0);
    BasisRow row{};
    for (std::size_t s = 0; s < params.size(); ++s) {
        const int span = find_span(knots, degree, ncp, params[s]);
        basis_values(knots, degree, span, params[s], row);
        for (int r = 0; r <= degree; ++r) {
            matrix[s * static_cast<std::size_t>(ncp) + static_cast<std::size_t>(span - degree + r)] = row[r];
        }
    }
    return matrix;
}

std::vector<double> uniform_params(int n) {
    std::vector<double> params(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) params[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
    params.back() = 1.0;
    return params;
}

}  // namespace microvol::bspline
