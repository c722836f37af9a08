#include "allee/model.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <limits>

#include <fmt/format.h>

#include "allee/errors.hpp"

namespace allee {

namespace {

constexpr double kDegenerateTol = 1e-12;

// Bracketed root of f on [lo, hi] to full double precision.
template <class F>
double solve_bracketed(F f, double lo, double hi) {
  std::uintmax_t max_iter = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2);
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, max_iter);
  return 0.5 * (a + b);
}

Stability classify(double slope) {
  if (slope < 0.0) return Stability::kStable;
  if (slope > 0.0) return Stability::kUnstable;
  return Stability::kSemiStable;
}

char code(Stability s) {
  switch (s) {
    case Stability::kStable: return 'S';
    case Stability::kUnstable: return 'U';
    case Stability::kSemiStable: return 'D';
  }
  return '?';
}

}  // namespace

void ModelParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DomainError(what);
  };
  require(std::isfinite(s) && s > 0.0, "model.s must be > 0");
  require(std::isfinite(gamma2) && gamma2 > 0.0, "model.gamma2 must be > 0");
  require(std::isfinite(gamma3) && gamma3 > 0.0, "model.gamma3 must be > 0");
  require(std::isfinite(gamma4) && gamma4 > 0.0, "model.gamma4 must be > 0");
  require(std::isfinite(lambda) && lambda >= 0.0, "model.lambda must be >= 0");
  require(std::isfinite(epsilon) && epsilon >= 0.0, "model.epsilon must be >= 0");
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 2.0, "model.alpha must lie in (0,2)");
}

ModelParams with_attack_rate(const ModelParams& p, double gamma3, HandlingCoupling coupling) {
  ModelParams q = p;
  if (coupling == HandlingCoupling::kFixedProduct) q.gamma4 = p.handling_product() / gamma3;
  q.gamma3 = gamma3;
  return q;
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::kBistable: return "bistable";
    case Regime::kDegenerate: return "degenerate";
    case Regime::kExtinctionOnly: return "extinction-only";
    case Regime::kMonostable: return "monostable";
  }
  return "unknown";
}

std::string Equilibria::stability_pattern() const {
  std::string out(1, code(x1_stability));
  switch (regime) {
    case Regime::kBistable: out += "US"; break;
    case Regime::kDegenerate: out += 'D'; break;
    case Regime::kMonostable: out += 'S'; break;
    case Regime::kExtinctionOnly: break;
  }
  return out;
}

double per_capita_growth(double x, const ModelParams& p) {
  const double k = p.handling_product();
  return p.s - p.gamma2 * x - p.gamma3 / (k * x + 1.0);
}

double per_capita_growth_d1(double x, const ModelParams& p) {
  const double k = p.handling_product();
  const double q = k * x + 1.0;
  return -p.gamma2 + p.gamma3 * k / (q * q);
}

double per_capita_growth_d2(double x, const ModelParams& p) {
  const double k = p.handling_product();
  const double q = k * x + 1.0;
  return -2.0 * p.gamma3 * k * k / (q * q * q);
}

double drift(double x, const ModelParams& p) { return x * per_capita_growth(x, p); }

double drift_derivative(double x, const ModelParams& p) {
  return per_capita_growth(x, p) + x * per_capita_growth_d1(x, p);
}

double potential(double x, const ModelParams& p) {
  const double k = p.handling_product();
  const double arg = k * x + 1.0;
  if (!(arg > 0.0)) throw DomainError(fmt::format("potential: log argument {} <= 0", arg));
  return -0.5 * p.s * x * x + p.gamma2 * x * x * x / 3.0 +
         p.gamma3 / (k * k) * (k * x + 1.0 - std::log1p(k * x));
}

double lamperti_drift(double y, const ModelParams& p) {
  return per_capita_growth(std::exp(y), p) - 0.5 * p.lambda * p.lambda;
}

double lamperti_drift_d1(double y, const ModelParams& p) {
  const double x = std::exp(y);
  return x * per_capita_growth_d1(x, p);
}

double lamperti_drift_d2(double y, const ModelParams& p) {
  const double x = std::exp(y);
  return x * per_capita_growth_d1(x, p) + x * x * per_capita_growth_d2(x, p);
}

double bifurcation_parameter(const ModelParams& p) {
  const double k = p.handling_product();
  const double b = p.s * k - p.gamma2;
  return 4.0 * p.gamma2 * k * (p.gamma3 - p.s) / (b * b);
}

Equilibria equilibria(const ModelParams& p) {
  p.validate();
  Equilibria eq;
  eq.carrying_capacity = p.carrying_capacity();
  eq.beta = bifurcation_parameter(p);
  eq.x1_stability = classify(p.s - p.gamma3);  // F'(0) = h(0)

  // Positive roots of h: a x^2 - b x + c = 0.
  const double k = p.handling_product();
  const double a = p.gamma2 * k;
  const double b = p.s * k - p.gamma2;
  const double c = p.gamma3 - p.s;

  if (b > 0.0 && std::abs(eq.beta - 1.0) <= kDegenerateTol) {
    eq.regime = Regime::kDegenerate;
    eq.x4 = b / (2.0 * a);
    return eq;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    eq.regime = Regime::kExtinctionOnly;
    return eq;
  }
  const double upper = (b + std::sqrt(disc)) / (2.0 * a);
  if (!(upper > 0.0)) {
    eq.regime = Regime::kExtinctionOnly;
    return eq;
  }
  if (c <= 0.0) {
    eq.regime = Regime::kMonostable;
    double x3 = upper;
    const double slope = drift_derivative(x3, p);
    if (slope != 0.0) x3 -= drift(x3, p) / slope;
    eq.x3 = x3;
    return eq;
  }
  if (!(b > 0.0)) {
    eq.regime = Regime::kExtinctionOnly;
    return eq;
  }

  eq.regime = Regime::kBistable;
  double x3 = upper;
  double x2 = c / (a * upper);  // Vieta, avoids b - sqrt(disc) cancellation
  const double gap = x3 - x2;
  auto polish = [&](double x) {
    const double slope = drift_derivative(x, p);
    if (slope == 0.0) return x;
    const double step = drift(x, p) / slope;
    return std::abs(step) < 0.25 * gap ? x - step : x;
  };
  eq.x2 = polish(x2);
  eq.x3 = polish(x3);
  return eq;
}

std::optional<double> fold_attack_rate(const ModelParams& p, HandlingCoupling coupling) {
  auto beta_minus_one = [&](double g3) {
    return bifurcation_parameter(with_attack_rate(p, g3, coupling)) - 1.0;
  };
  // beta(s) = 0; walk a geometric grid above s until beta crosses 1.
  double lo = p.s;
  double step = 1e-3 * p.s;
  const double limit = 1e3 * p.s;
  while (lo < limit) {
    const double hi = std::min(lo + step, limit);
    if (beta_minus_one(hi) >= 0.0) {
      if (beta_minus_one(hi) == 0.0) return hi;
      return solve_bracketed(beta_minus_one, lo, hi);
    }
    lo = hi;
    step *= 1.5;
  }
  return std::nullopt;
}

double critical_attack_rate(const ModelParams& p, HandlingCoupling coupling,
                            std::optional<Interval> bracket) {
  p.validate();
  Interval range;
  if (bracket) {
    range = *bracket;
  } else {
    range.lo = p.s;
    range.hi = fold_attack_rate(p, coupling).value_or(1e3 * p.s);
  }
  if (!(range.hi > range.lo))
    throw NoBracketError(fmt::format("critical_attack_rate: empty bracket ({}, {})", range.lo, range.hi));

  // U(0) - U(x3) where x3 exists; NaN otherwise.
  auto gap = [&](double g3) {
    const ModelParams q = with_attack_rate(p, g3, coupling);
    const Equilibria eq = equilibria(q);
    if (!eq.x3) return std::numeric_limits<double>::quiet_NaN();
    return potential(0.0, q) - potential(*eq.x3, q);
  };

  constexpr int kScan = 2000;
  const double h = (range.hi - range.lo) / kScan;
  double prev_g = range.lo + 0.5 * h;
  double prev_v = gap(prev_g);
  for (int i = 1; i < kScan; ++i) {
    const double g = range.lo + (i + 0.5) * h;
    const double v = gap(g);
    if (std::isfinite(prev_v) && std::isfinite(v) && (prev_v == 0.0 || prev_v * v < 0.0)) {
      if (prev_v == 0.0) return prev_g;
      return solve_bracketed(gap, prev_g, g);
    }
    prev_g = g;
    prev_v = v;
  }
  throw NoBracketError(fmt::format(
      "critical_attack_rate: U(0) - U(x3) does not change sign for gamma3 in ({}, {})", range.lo,
      range.hi));
}

BranchTable bifurcation_scan(const ModelParams& p, Interval gamma3_range, int steps,
                             HandlingCoupling coupling) {
  if (steps < 2) throw DomainError("bifurcation_scan: steps must be >= 2");
  if (!(gamma3_range.hi > gamma3_range.lo) || !(gamma3_range.lo > 0.0))
    throw DomainError("bifurcation_scan: gamma3 range must satisfy 0 < lo < hi");

  BranchTable table;
  table.rows.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double g3 = gamma3_range.lo + (gamma3_range.hi - gamma3_range.lo) * i / (steps - 1);
    table.rows.push_back({g3, equilibria(with_attack_rate(p, g3, coupling))});
  }

  auto beta_minus_one = [&](double g3) {
    return bifurcation_parameter(with_attack_rate(p, g3, coupling)) - 1.0;
  };
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const double g0 = table.rows[i - 1].gamma3;
    const double g1 = table.rows[i].gamma3;
    const double f0 = beta_minus_one(g0);
    const double f1 = beta_minus_one(g1);
    const bool crosses = (f0 < 0.0 && f1 >= 0.0) || (f0 >= 0.0 && f1 < 0.0);
    if (!crosses) continue;
    const double g = f1 == 0.0 ? g1 : solve_bracketed(beta_minus_one, g0, g1);
    const ModelParams q = with_attack_rate(p, g, coupling);
    const double k = q.handling_product();
    table.fold = FoldPoint{g, (q.s * k - q.gamma2) / (2.0 * q.gamma2 * k)};
    break;
  }
  return table;
}

void write_branch_csv(std::ostream& os, const BranchTable& table) {
  os << "gamma3,beta,x1,x2,x3,stability_pattern\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.10g}", *v) : std::string(); };
  for (const auto& row : table.rows) {
    const auto& eq = row.eq;
    // A degenerate row reports the merged root in both columns.
    const auto x2 = eq.x4 ? eq.x4 : eq.x2;
    const auto x3 = eq.x4 ? eq.x4 : eq.x3;
    os << fmt::format("{:.10g},{:.10g},{:.10g},{},{},{}\n", row.gamma3, eq.beta, eq.x1, opt(x2),
                      opt(x3), eq.stability_pattern());
  }
}

}  // namespace allee
