#pragma once

#include <array>
#include <span>
#include <vector>

#include "mergesim/potential_field.hpp"
#include "mergesim/types.hpp"

namespace mergesim {

/// Cubic y = a0 + a1*u + a2*u^2 + a3*u^3 in the local coordinate
/// u = x - x_offset (waypoints are shifted before fitting so the Vandermonde
/// matrix stays well conditioned at large road coordinates).
struct CubicPath {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;  // [1/m]
  double a3 = 0.0;  // [1/m^2]
  double x_min = 0.0;  // validity interval, global coordinates
  double x_max = 0.0;
  double x_offset = 0.0;
};

struct FitBounds {
  std::array<double, 4> lower{-1e6, -1e6, -1e6, -1e6};
  std::array<double, 4> upper{1e6, 1e6, 1e6, 1e6};
};

struct FitProblem {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> weights;
  FitBounds bounds;
};

enum class CurvatureMode { exact, quadratic_approx };

/// Coefficient box implied by a curvature bound: |a2| <= kappa_max/2 and
/// |a3| <= kappa_max/(6*horizon_len); a0, a1 effectively unbounded.
FitBounds bounds_from_curvature(double kappa_max, double horizon_len);

/// Weights 1, 1-decay/(N-1), ..., 1-decay (near waypoints count most).
std::vector<double> fit_weights(std::size_t n, double decay);

FitProblem make_fit_problem(const WaypointQueue& q, std::span<const double> weights,
                            const FitBounds& bounds);

/// Exact minimizer of the weighted least-squares cubic fit over the coefficient
/// box, found by enumerating the 3^4 active-set configurations; KKT-verified.
/// Throws ValidationError on bad weights/bounds and a degenerate-waypoints
/// error when fewer than 4 distinct x values are present.
CubicPath fit_cubic(const FitProblem& prob);

double eval_path(const CubicPath& path, double x);

/// quadratic_approx returns 2*a2; exact evaluates f''/(1+f'^2)^(3/2) at x.
double path_curvature(const CubicPath& path, double x, CurvatureMode mode);

/// True when the KKT conditions hold at `path` for `prob` within tol
/// (tol is scaled by the gradient magnitude internally).
bool kkt_satisfied(const FitProblem& prob, const CubicPath& path, double tol);

/// Weighted residual objective 0.5*(Xa-Y)'W(Xa-Y) at the given coefficients.
double fit_objective(const FitProblem& prob, const std::array<double, 4>& coeffs,
                     double x_offset);

}  // namespace mergesim
