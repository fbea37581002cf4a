#pragma once

#include <array>
#include <span>
#include <vector>

namespace microvol::bspline {

/// Highest supported polynomial degree. Bounded so basis rows fit in fixed arrays.
inline constexpr int kMaxDegree = 7;

using BasisRow = std::array<double, kMaxDegree + 1>;

/// Clamped knot vector with uniformly spaced interior knots, length ncp + degree + 1.
std::vector<double> clamped_uniform_knots(int ncp, int degree);

/// Knot span index s in [degree, ncp-1] with knots[s] <= u < knots[s+1]; u == 1 maps to ncp-1.
int find_span(std::span<const double> knots, int degree, int ncp, double u);

/// The degree+1 nonzero basis values at u for `span`.
void basis_values(std::span<const double> knots, int degree, int span, double u, BasisRow& values);

/// Nonzero basis values and their first derivatives at u.
void basis_values_and_derivatives(std::span<const double> knots, int degree, int span, double u, BasisRow& values,
                                  BasisRow& derivatives);

/// Dense n x ncp collocation matrix (row-major) of the basis at `params`.
std::vector<double> collocation_matrix(std::span<const double> knots, int degree, int ncp,
                                       std::span<const double> params);

/// n uniformly spaced parameters on [0,1] with exact endpoints.
std::vector<double> uniform_params(int n);

}  // namespace microvol::bspline
