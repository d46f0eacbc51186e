#include "mergesim/path_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mergesim {

namespace {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

// Gaussian elimination with partial pivoting, n <= 4. Returns false when the
// system is numerically singular.
bool solve_dense(Mat4 a, Vec4 b, int n, Vec4& out) {
  std::array<int, 4> perm{0, 1, 2, 3};
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-13) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    std::swap(perm[col], perm[pivot]);
    for (int r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r][c] * out[c];
    out[r] = s / a[r][r];
  }
  return true;
}

struct Quadratic {
  Mat4 h{};   // X'WX
  Vec4 g{};   // X'WY
};

Quadratic build_normal_form(const FitProblem& prob, double x_offset) {
  Quadratic q;
  for (std::size_t k = 0; k < prob.x.size(); ++k) {
    double u = prob.x[k] - x_offset;
    Vec4 row{1.0, u, u * u, u * u * u};
    double w = prob.weights[k];
    for (int i = 0; i < 4; ++i) {
      q.g[i] += w * row[i] * prob.y[k];
      for (int j = 0; j < 4; ++j) q.h[i][j] += w * row[i] * row[j];
    }
  }
  return q;
}

Vec4 gradient(const Quadratic& q, const Vec4& a) {
  Vec4 grad;
  for (int i = 0; i < 4; ++i) {
    double s = -q.g[i];
    for (int j = 0; j < 4; ++j) s += q.h[i][j] * a[j];
    grad[i] = s;
  }
  return grad;
}

void check_problem(const FitProblem& prob) {
  if (prob.x.size() != prob.y.size() || prob.x.size() != prob.weights.size())
    throw ValidationError("fit.waypoints", "x, y and weights must have equal length");
  if (prob.x.size() < 4)
    throw ValidationError("fit.waypoints", "at least 4 waypoints are required (got " +
                                               std::to_string(prob.x.size()) + ")");
  for (double w : prob.weights)
    if (!(w > 0)) throw ValidationError("fit.weights", "weights must be > 0");
  for (int i = 0; i < 4; ++i)
    if (prob.bounds.lower[i] > prob.bounds.upper[i])
      throw ValidationError("fit.bounds", "lower bound exceeds upper bound at index " +
                                              std::to_string(i));
  // Distinct abscissae, otherwise the Vandermonde matrix loses rank.
  std::vector<double> xs = prob.x;
  std::sort(xs.begin(), xs.end());
  int distinct = 1;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] - xs[i - 1] > 1e-9) ++distinct;
  if (distinct < 4)
    throw ValidationError("fit.waypoints",
                          "degenerate waypoints: need at least 4 distinct x values");
}

}  // namespace

FitBounds bounds_from_curvature(double kappa_max, double horizon_len) {
  FitBounds b;
  double a2 = 0.5 * kappa_max;
  double a3 = kappa_max / (6.0 * std::max(horizon_len, 1e-6));
  b.lower = {-1e6, -1e6, -a2, -a3};
  b.upper = {1e6, 1e6, a2, a3};
  return b;
}

std::vector<double> fit_weights(std::size_t n, double decay) {
  std::vector<double> w(n, 1.0);
  if (n > 1 && decay > 0.0)
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 1.0 - decay * static_cast<double>(i) / static_cast<double>(n - 1);
  return w;
}

FitProblem make_fit_problem(const WaypointQueue& q, std::span<const double> weights,
                            const FitBounds& bounds) {
  FitProblem prob;
  prob.bounds = bounds;
  prob.x.reserve(q.points.size());
  prob.y.reserve(q.points.size());
  for (const auto& pt : q.points) {
    prob.x.push_back(pt.x);
    prob.y.push_back(pt.y);
  }
  prob.weights.assign(weights.begin(), weights.end());
  if (prob.weights.empty()) prob.weights.assign(prob.x.size(), 1.0);
  return prob;
}

double fit_objective(const FitProblem& prob, const Vec4& coeffs, double x_offset) {
  double obj = 0.0;
  for (std::size_t k = 0; k < prob.x.size(); ++k) {
    double u = prob.x[k] - x_offset;
    double f = coeffs[0] + u * (coeffs[1] + u * (coeffs[2] + u * coeffs[3]));
    double r = f - prob.y[k];
    obj += 0.5 * prob.weights[k] * r * r;
  }
  return obj;
}

CubicPath fit_cubic(const FitProblem& prob) {
  check_problem(prob);
  double x_offset = prob.x.front();
  Quadratic q = build_normal_form(prob, x_offset);

  double grad_scale = 1.0;
  for (int i = 0; i < 4; ++i) grad_scale = std::max(grad_scale, std::abs(q.g[i]));
  const double kkt_tol = 1e-8 * grad_scale;

  // Each coordinate is free, at its lower bound, or at its upper bound. The
  // optimal active set is one of these 81 states; candidates failing either
  // primal bounds or multiplier signs are discarded.
  const int kFree = 0, kLower = 1, kUpper = 2;
  double best_obj = std::numeric_limits<double>::infinity();
  Vec4 best{};
  bool found = false;

  std::array<int, 4> state{};
  for (int code = 0; code < 81; ++code) {
    int c = code;
    for (int i = 0; i < 4; ++i) {
      state[i] = c % 3;
      c /= 3;
    }

    Vec4 a{};
    int free_idx[4];
    int nfree = 0;
    for (int i = 0; i < 4; ++i) {
      if (state[i] == kLower)
        a[i] = prob.bounds.lower[i];
      else if (state[i] == kUpper)
        a[i] = prob.bounds.upper[i];
      else
        free_idx[nfree++] = i;
    }

    if (nfree > 0) {
      Mat4 hf{};
      Vec4 rhs{};
      for (int r = 0; r < nfree; ++r) {
        rhs[r] = q.g[free_idx[r]];
        for (int i = 0; i < 4; ++i)
          if (state[i] != kFree) rhs[r] -= q.h[free_idx[r]][i] * a[i];
        for (int cc = 0; cc < nfree; ++cc) hf[r][cc] = q.h[free_idx[r]][free_idx[cc]];
      }
      Vec4 sol{};
      if (!solve_dense(hf, rhs, nfree, sol)) continue;
      for (int r = 0; r < nfree; ++r) a[free_idx[r]] = sol[r];
    }

    // Primal feasibility of the free coordinates. The tolerance lives in
    // coefficient units, per coordinate; anything coarser lets an
    // unconstrained solution sneak past a tight bound.
    bool ok = true;
    for (int i = 0; i < 4 && ok; ++i) {
      double ptol = 1e-9 * std::max({1.0, std::abs(prob.bounds.lower[i]),
                                     std::abs(prob.bounds.upper[i])});
      ok = a[i] >= prob.bounds.lower[i] - ptol && a[i] <= prob.bounds.upper[i] + ptol;
    }
    if (!ok) continue;
    for (int i = 0; i < 4; ++i)
      a[i] = std::clamp(a[i], prob.bounds.lower[i], prob.bounds.upper[i]);

    // Dual feasibility at the pinned coordinates.
    Vec4 grad = gradient(q, a);
    for (int i = 0; i < 4 && ok; ++i) {
      if (state[i] == kLower && grad[i] < -kkt_tol) ok = false;
      if (state[i] == kUpper && grad[i] > kkt_tol) ok = false;
    }
    if (!ok) continue;

    double obj = fit_objective(prob, a, x_offset);
    if (obj < best_obj) {
      best_obj = obj;
      best = a;
      found = true;
    }
  }

  if (!found)
    throw ValidationError("fit.bounds", "no KKT-feasible solution in the coefficient box");

  CubicPath path;
  path.a0 = std::clamp(best[0], prob.bounds.lower[0], prob.bounds.upper[0]);
  path.a1 = std::clamp(best[1], prob.bounds.lower[1], prob.bounds.upper[1]);
  path.a2 = std::clamp(best[2], prob.bounds.lower[2], prob.bounds.upper[2]);
  path.a3 = std::clamp(best[3], prob.bounds.lower[3], prob.bounds.upper[3]);
  path.x_offset = x_offset;
  auto [mn, mx] = std::minmax_element(prob.x.begin(), prob.x.end());
  path.x_min = *mn;
  path.x_max = *mx;
  return path;
}

double eval_path(const CubicPath& path, double x) {
  double u = x - path.x_offset;
  return path.a0 + u * (path.a1 + u * (path.a2 + u * path.a3));
}

double path_curvature(const CubicPath& path, double x, CurvatureMode mode) {
  if (mode == CurvatureMode::quadratic_approx) return 2.0 * path.a2;
  double u = x - path.x_offset;
  double fp = path.a1 + u * (2.0 * path.a2 + 3.0 * path.a3 * u);
  double fpp = 2.0 * path.a2 + 6.0 * path.a3 * u;
  return fpp / std::pow(1.0 + fp * fp, 1.5);
}

bool kkt_satisfied(const FitProblem& prob, const CubicPath& path, double tol) {
  Quadratic q = build_normal_form(prob, path.x_offset);
  Vec4 a{path.a0, path.a1, path.a2, path.a3};
  Vec4 grad = gradient(q, a);
  double scale = 1.0;
  for (int i = 0; i < 4; ++i) scale = std::max(scale, std::abs(q.g[i]));
  double t = tol * scale;
  for (int i = 0; i < 4; ++i) {
    bool at_lower = a[i] <= prob.bounds.lower[i] + 1e-12 * scale;
    bool at_upper = a[i] >= prob.bounds.upper[i] - 1e-12 * scale;
    if (at_lower && grad[i] >= -t) continue;
    if (at_upper && grad[i] <= t) continue;
    if (std::abs(grad[i]) <= t) continue;
    return false;
  }
  return true;
}

}  // namespace mergesim
