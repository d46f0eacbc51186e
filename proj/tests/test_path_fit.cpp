#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "mergesim/path_fit.hpp"
#include "mergesim/rng.hpp"

using namespace mergesim;
using namespace mergesim::test;

namespace {

FitProblem sampled_cubic(const std::array<double, 4>& c, int n, double x0, double dx,
                         const FitBounds& bounds) {
  FitProblem prob;
  prob.bounds = bounds;
  for (int i = 0; i < n; ++i) {
    double x = x0 + i * dx;
    prob.x.push_back(x);
    prob.y.push_back(c[0] + x * (c[1] + x * (c[2] + x * c[3])));
    prob.weights.push_back(1.0);
  }
  return prob;
}

}  // namespace

TEST_CASE("fit recovers an exact line") {
  FitProblem prob = sampled_cubic({1.0, 2.0, 0.0, 0.0}, 6, 0.0, 1.0, FitBounds{});
  CubicPath path = fit_cubic(prob);
  CHECK(path.a0 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(path.a1 == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(std::abs(path.a2) < 1e-10);
  CHECK(std::abs(path.a3) < 1e-10);
}

TEST_CASE("fit recovers cubic coefficients against the closed-form oracle") {
  std::array<double, 4> truth{0.5, 0.1, -0.002, 1e-5};
  FitProblem prob = sampled_cubic(truth, 10, 0.0, 2.0, FitBounds{});
  CubicPath path = fit_cubic(prob);

  auto oracle = wls_closed_form(prob.x, prob.y, prob.weights, prob.x.front());
  CHECK(path.a0 == doctest::Approx(oracle[0]).epsilon(1e-8));
  CHECK(path.a1 == doctest::Approx(oracle[1]).epsilon(1e-8));
  CHECK(path.a2 == doctest::Approx(oracle[2]).epsilon(1e-8));
  CHECK(path.a3 == doctest::Approx(oracle[3]).epsilon(1e-8));
  CHECK(path.a0 == doctest::Approx(truth[0]).epsilon(1e-8));
  CHECK(path.a2 == doctest::Approx(truth[2]).epsilon(1e-6));
}

TEST_CASE("active bound: solution matches a 4-D grid search over the box") {
  std::array<double, 4> truth{0.5, 0.1, -0.002, 1e-5};
  FitBounds bounds;
  bounds.lower = {0.0, 0.0, -0.004, 0.0};
  bounds.upper = {1.0, 0.2, -0.003, 2e-5};  // a2 bound forced active
  FitProblem prob = sampled_cubic(truth, 10, 0.0, 2.0, bounds);

  CubicPath path = fit_cubic(prob);
  CHECK(path.a2 == doctest::Approx(-0.003));  // pinned at the nearer bound
  CHECK(kkt_satisfied(prob, path, 1e-8));

  // Exhaustive grid over the box; the QP result may not be beaten.
  const int m = 15;
  double best = 1e300;
  std::array<double, 4> best_a{};
  for (int i0 = 0; i0 < m; ++i0)
    for (int i1 = 0; i1 < m; ++i1)
      for (int i2 = 0; i2 < m; ++i2)
        for (int i3 = 0; i3 < m; ++i3) {
          std::array<double, 4> a;
          int idx[4] = {i0, i1, i2, i3};
          for (int k = 0; k < 4; ++k)
            a[static_cast<std::size_t>(k)] =
                bounds.lower[static_cast<std::size_t>(k)] +
                (bounds.upper[static_cast<std::size_t>(k)] -
                 bounds.lower[static_cast<std::size_t>(k)]) *
                    idx[k] / (m - 1.0);
          double obj = fit_objective(prob, a, prob.x.front());
          if (obj < best) {
            best = obj;
            best_a = a;
          }
        }

  double fit_obj =
      fit_objective(prob, {path.a0, path.a1, path.a2, path.a3}, path.x_offset);
  CHECK(fit_obj <= best + 1e-12 * std::max(1.0, best));
  // and the grid argmin sits within one grid cell of the QP solution
  for (int k = 0; k < 4; ++k) {
    double cell = (bounds.upper[static_cast<std::size_t>(k)] -
                   bounds.lower[static_cast<std::size_t>(k)]) /
                  (m - 1.0);
    double qp[4] = {path.a0, path.a1, path.a2, path.a3};
    CHECK(std::abs(qp[k] - best_a[static_cast<std::size_t>(k)]) <= cell + 1e-12);
  }
}

TEST_CASE("eval_path Horner evaluation") {
  CubicPath line{1.0, 2.0, 0.0, 0.0, 0.0, 10.0, 0.0};
  CHECK(eval_path(line, 0.0) == 1.0);
  CubicPath square{0.0, 0.0, 1.0, 0.0, 0.0, 10.0, 0.0};
  CHECK(eval_path(square, 3.0) == 9.0);

  std::array<double, 4> truth{0.5, 0.1, -0.002, 1e-5};
  FitProblem prob = sampled_cubic(truth, 10, 0.0, 2.0, FitBounds{});
  CubicPath path = fit_cubic(prob);
  for (std::size_t i = 0; i < prob.x.size(); ++i)
    CHECK(eval_path(path, prob.x[i]) == doctest::Approx(prob.y[i]).epsilon(1e-8));
}

TEST_CASE("path curvature in both modes") {
  CubicPath straight{0.0, 0.5, 0.0, 0.0, 0.0, 10.0, 0.0};
  CHECK(path_curvature(straight, 3.0, CurvatureMode::quadratic_approx) == 0.0);
  CHECK(path_curvature(straight, 3.0, CurvatureMode::exact) == 0.0);

  CubicPath bend{0.0, 0.0, 0.005, 0.0, 0.0, 10.0, 0.0};
  CHECK(path_curvature(bend, 0.0, CurvatureMode::quadratic_approx) == doctest::Approx(0.01));

  // hand-differentiated closed form at x = 10 for a = (0, 0, 0.005, 1e-5)
  CubicPath c{0.0, 0.0, 0.005, 1e-5, 0.0, 20.0, 0.0};
  double fp = 2.0 * 0.005 * 10.0 + 3.0 * 1e-5 * 100.0;
  double fpp = 2.0 * 0.005 + 6.0 * 1e-5 * 10.0;
  double expected = fpp / std::pow(1.0 + fp * fp, 1.5);
  CHECK(path_curvature(c, 10.0, CurvatureMode::exact) == doctest::Approx(expected));
}

TEST_CASE("degenerate and infeasible problems are rejected") {
  FitProblem prob;
  prob.x = {1.0, 1.0, 1.0, 1.0, 1.0};
  prob.y = {0.0, 0.1, 0.2, 0.3, 0.4};
  prob.weights.assign(5, 1.0);
  CHECK_THROWS_AS(fit_cubic(prob), ValidationError);

  FitProblem few = sampled_cubic({0, 1, 0, 0}, 3, 0.0, 1.0, FitBounds{});
  CHECK_THROWS_AS(fit_cubic(few), ValidationError);

  FitProblem bad = sampled_cubic({0, 1, 0, 0}, 6, 0.0, 1.0, FitBounds{});
  bad.bounds.lower[2] = 1.0;
  bad.bounds.upper[2] = -1.0;
  CHECK_THROWS_AS(fit_cubic(bad), ValidationError);

  FitProblem neg = sampled_cubic({0, 1, 0, 0}, 6, 0.0, 1.0, FitBounds{});
  neg.weights[2] = 0.0;
  CHECK_THROWS_AS(fit_cubic(neg), ValidationError);
}

TEST_CASE("fit invariance properties") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::array<double, 4> truth{rng.next_uniform(-1, 1), rng.next_uniform(-0.3, 0.3),
                                rng.next_uniform(-0.01, 0.01),
                                rng.next_uniform(-1e-4, 1e-4)};
    FitProblem prob = sampled_cubic(truth, 9, rng.next_uniform(0, 200), 2.0, FitBounds{});
    for (auto& y : prob.y) y += rng.next_uniform(-0.05, 0.05);  // noise

    CubicPath path = fit_cubic(prob);

    // inactive bounds: equals the closed-form weighted least squares
    auto oracle = wls_closed_form(prob.x, prob.y, prob.weights, prob.x.front());
    CHECK(path.a0 == doctest::Approx(oracle[0]).epsilon(1e-8));
    CHECK(path.a1 == doctest::Approx(oracle[1]).epsilon(1e-8));

    // doubling all weights leaves the minimizer unchanged
    FitProblem doubled = prob;
    for (auto& w : doubled.weights) w *= 2.0;
    CubicPath path2 = fit_cubic(doubled);
    CHECK(path2.a0 == doctest::Approx(path.a0).epsilon(1e-9));
    CHECK(path2.a1 == doctest::Approx(path.a1).epsilon(1e-9));
    CHECK(path2.a2 == doctest::Approx(path.a2).epsilon(1e-9));
    CHECK(path2.a3 == doctest::Approx(path.a3).epsilon(1e-9));

    // residual is invariant under waypoint permutation
    FitProblem shuffled = prob;
    std::vector<std::size_t> order(prob.x.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_u64() % i]);
    for (std::size_t i = 0; i < order.size(); ++i) {
      shuffled.x[i] = prob.x[order[i]];
      shuffled.y[i] = prob.y[order[i]];
    }
    CubicPath path3 = fit_cubic(shuffled);
    double r1 = fit_objective(prob, {path.a0, path.a1, path.a2, path.a3}, path.x_offset);
    double r3 = fit_objective(shuffled, {path3.a0, path3.a1, path3.a2, path3.a3},
                              path3.x_offset);
    CHECK(r3 == doctest::Approx(r1).epsilon(1e-7));

    // constrained objective can never undercut the unconstrained one
    FitProblem boxed = prob;
    boxed.bounds.lower[2] = path.a2 + 0.001;  // force the bound active
    boxed.bounds.upper[2] = path.a2 + 0.002;
    CubicPath clamped = fit_cubic(boxed);
    double r_clamped = fit_objective(
        boxed, {clamped.a0, clamped.a1, clamped.a2, clamped.a3}, clamped.x_offset);
    CHECK(r_clamped >= r1 - 1e-10);
    CHECK(kkt_satisfied(boxed, clamped, 1e-8));
  }
}

TEST_CASE("curvature-derived bounds scale as documented") {
  FitBounds b = bounds_from_curvature(0.08, 20.0);
  CHECK(b.upper[2] == doctest::Approx(0.04));
  CHECK(b.lower[2] == doctest::Approx(-0.04));
  CHECK(b.upper[3] == doctest::Approx(0.08 / 120.0));
  CHECK(b.upper[0] == 1e6);
}
