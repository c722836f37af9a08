#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "allee/errors.hpp"
#include "allee/model.hpp"

using namespace allee;

namespace {

ModelParams fig1() {
  ModelParams p;
  p.gamma4 = 1.0 / p.gamma3;
  return p;
}

// Plain bisection on a sign change.
template <class F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Positive roots of h by scanning a fine grid and bisecting each sign change.
std::vector<double> scan_roots(const ModelParams& p, double hi = 50.0) {
  std::vector<double> roots;
  const int n = 200000;
  auto h = [&](double x) { return per_capita_growth(x, p); };
  double a = 1e-9;
  for (int i = 1; i <= n; ++i) {
    const double b = hi * i / n;
    if ((h(a) < 0) != (h(b) < 0)) roots.push_back(bisect(h, a, b));
    a = b;
  }
  return roots;
}

}  // namespace

TEST_CASE("equilibria at the potential-figure parameters") {
  const Equilibria eq = equilibria(fig1());
  REQUIRE(eq.regime == Regime::kBistable);
  REQUIRE(eq.x2);
  REQUIRE(eq.x3);
  CHECK(std::abs(*eq.x2 - 2.6159) <= 5e-4);
  CHECK(std::abs(*eq.x3 - 6.3841) <= 5e-4);
  const auto roots = scan_roots(fig1());
  REQUIRE(roots.size() == 2);
  CHECK(std::abs(*eq.x2 - roots[0]) <= 1e-10);
  CHECK(std::abs(*eq.x3 - roots[1]) <= 1e-10);
  CHECK(eq.stability_pattern() == "SUS");
  CHECK(eq.x1 == 0.0);
}

TEST_CASE("equilibria with unit handling time") {
  ModelParams p;  // gamma4 = 1
  const Equilibria eq = equilibria(p);
  REQUIRE(eq.x3);
  const auto roots = scan_roots(p);
  REQUIRE(roots.size() == 2);
  CHECK(std::abs(*eq.x2 - roots[0]) <= 1e-10);
  CHECK(std::abs(*eq.x3 - roots[1]) <= 1e-10);
  CHECK(std::abs(*eq.x3 - 8.9246) <= 1e-4);
  // The closed form 4 g2 k (g3 - s) / (s k - g2)^2 with k = 2.67.
  CHECK(std::abs(eq.beta - 4 * 0.1 * 2.67 * 1.67 / (2.57 * 2.57)) <= 1e-14);
  CHECK(std::abs(eq.beta - 0.2700) <= 1e-4);
}

TEST_CASE("drift stability classification matches the slope sign") {
  const ModelParams p = fig1();
  const Equilibria eq = equilibria(p);
  CHECK(drift_derivative(0.0, p) < 0.0);
  CHECK(drift_derivative(*eq.x2, p) > 0.0);
  CHECK(drift_derivative(*eq.x3, p) < 0.0);
}

TEST_CASE("potential is an antiderivative of minus the drift") {
  const ModelParams p = fig1();
  for (double x : {0.0, 0.5, 2.6, 5.0, 9.0}) {
    const double h = 1e-5;
    const double lo = std::max(0.0, x - h);
    const double du = (potential(x + h, p) - potential(lo, p)) / (x + h - lo);
    CHECK(std::abs(-du - drift(0.5 * (x + h + lo), p)) <= 1e-6);
  }
  ModelParams bad = p;
  bad.gamma4 = 1.0;
  CHECK_THROWS_AS(potential(-2.0, bad), DomainError);
}

TEST_CASE("lamperti drift derivatives against finite differences") {
  ModelParams p;
  p.lambda = 0.4;
  for (double y : {-3.0, -1.0, 0.0, 1.0, std::log(5.0), 2.5}) {
    const double h = 1e-5;
    const double d1 = (lamperti_drift(y + h, p) - lamperti_drift(y - h, p)) / (2 * h);
    const double d2 = (lamperti_drift(y + h, p) - 2 * lamperti_drift(y, p) + lamperti_drift(y - h, p)) / (h * h);
    CHECK(std::abs(d1 - lamperti_drift_d1(y, p)) <= 1e-7);
    CHECK(std::abs(d2 - lamperti_drift_d2(y, p)) <= 1e-4);
  }
}

TEST_CASE("critical attack rate equalizes the potential wells") {
  const ModelParams p = fig1();
  const double gc = critical_attack_rate(p, HandlingCoupling::kFixedProduct);
  CHECK(std::abs(gc - 2.67) <= 0.01);

  // Oracle: bisection on U(0) - U(x3) with x3 from the grid scan.
  auto gap = [&](double g3) {
    const ModelParams q = with_attack_rate(p, g3, HandlingCoupling::kFixedProduct);
    const auto roots = scan_roots(q, 20.0);
    return potential(0.0, q) - potential(roots.back(), q);
  };
  const double oracle = bisect(gap, 2.0, 3.0);
  CHECK(std::abs(gc - oracle) <= 1e-6);

  CHECK_THROWS_AS(critical_attack_rate(p, HandlingCoupling::kFixedProduct, Interval{1.1, 1.5}),
                  NoBracketError);
  CHECK_THROWS_AS(critical_attack_rate(p, HandlingCoupling::kFixedProduct, Interval{2.0, 1.0}),
                  NoBracketError);
}

TEST_CASE("fold point is a double root") {
  const ModelParams p = fig1();
  const auto fold = fold_attack_rate(p, HandlingCoupling::kFixedProduct);
  REQUIRE(fold);
  // gamma3 gamma4 = 1: fold at s + (s - g2)^2 / (4 g2).
  CHECK(std::abs(*fold - (1.0 + 0.81 / 0.4)) <= 1e-10);
  const ModelParams q = with_attack_rate(p, *fold, HandlingCoupling::kFixedProduct);
  const Equilibria eq = equilibria(q);
  CHECK(eq.regime == Regime::kDegenerate);
  REQUIRE(eq.x4);
  CHECK(std::abs(per_capita_growth(*eq.x4, q)) <= 1e-10);
  CHECK(std::abs(per_capita_growth_d1(*eq.x4, q)) <= 1e-10);
  CHECK(eq.stability_pattern() == "SD");

  // A fixed unit handling time never reaches beta = 1 for these values.
  CHECK_FALSE(fold_attack_rate(ModelParams{}, HandlingCoupling::kFixedHandlingTime));
}

TEST_CASE("regimes across the attack rate") {
  const ModelParams p = fig1();
  auto regime_at = [&](double g3) {
    return equilibria(with_attack_rate(p, g3, HandlingCoupling::kFixedProduct)).regime;
  };
  CHECK(regime_at(0.8) == Regime::kMonostable);
  CHECK(regime_at(2.0) == Regime::kBistable);
  CHECK(regime_at(3.5) == Regime::kExtinctionOnly);
  CHECK(equilibria(with_attack_rate(p, 3.5, HandlingCoupling::kFixedProduct)).stability_pattern() == "S");
  CHECK(equilibria(with_attack_rate(p, 0.8, HandlingCoupling::kFixedProduct)).stability_pattern() == "US");
}

TEST_CASE("bifurcation scan and branch csv") {
  const ModelParams p = fig1();
  const BranchTable t = bifurcation_scan(p, {0.5, 4.0}, 36, HandlingCoupling::kFixedProduct);
  CHECK(t.rows.size() == 36);
  REQUIRE(t.fold);
  CHECK(std::abs(t.fold->gamma3 - 3.025) <= 1e-10);
  CHECK(std::abs(t.fold->x4 - 4.5) <= 1e-10);
  std::ostringstream os;
  write_branch_csv(os, t);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "gamma3,beta,x1,x2,x3,stability_pattern");
  CHECK_THROWS_AS(bifurcation_scan(p, {0.5, 4.0}, 1, HandlingCoupling::kFixedProduct), DomainError);
}

TEST_CASE("parameter validation") {
  ModelParams p;
  p.gamma2 = 0.0;
  CHECK_THROWS_AS(equilibria(p), DomainError);
  p = ModelParams{};
  p.alpha = 2.5;
  CHECK_THROWS_WITH_AS(p.validate(), "model.alpha must lie in (0,2)", DomainError);
  p = ModelParams{};
  p.lambda = -1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}
