#pragma once

// Deterministic skeleton of the single-species Allee model
//
//   dX/dt = F(X) = X (s - g2 X - g3 / (g3 g4 X + 1)),
//
// its potential U (F = -dU/dX), the closed-form equilibria and the
// saddle-node structure in the attack rate g3.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace allee {

struct ModelParams {
  double s = 1.0;        // growth rate
  double gamma2 = 0.1;   // intraspecific competition
  double gamma3 = 2.67;  // attack rate
  double gamma4 = 1.0;   // predator handling time
  double lambda = 0.0;   // Gaussian noise intensity
  double epsilon = 0.0;  // jump noise intensity
  double alpha = 1.5;    // stability index of the jump law

  /// Throws DomainError naming the first violated invariant.
  void validate() const;

  double handling_product() const { return gamma3 * gamma4; }
  double carrying_capacity() const { return s / gamma2; }

  bool operator==(const ModelParams&) const = default;
};

/// How gamma4 moves when gamma3 is varied by a scan or root solve.
enum class HandlingCoupling {
  kFixedHandlingTime,  // gamma4 held constant
  kFixedProduct,       // gamma3 * gamma4 held constant (e.g. gamma4 = 1/gamma3)
};

/// Returns p with gamma3 replaced, adjusting gamma4 per the coupling.
ModelParams with_attack_rate(const ModelParams& p, double gamma3, HandlingCoupling coupling);

enum class Stability { kStable, kUnstable, kSemiStable };

enum class Regime {
  kBistable,        // beta < 1: 0 and x3 stable, x2 unstable
  kDegenerate,      // beta == 1: x2 and x3 merged into x4
  kExtinctionOnly,  // beta > 1 (or no positive root): only X = 0
  kMonostable,      // gamma3 <= s: 0 unstable, x3 the only positive root
};

const char* to_string(Regime r);

struct Equilibria {
  double x1 = 0.0;
  std::optional<double> x2;
  std::optional<double> x3;
  std::optional<double> x4;
  double beta = 0.0;
  double carrying_capacity = 0.0;
  Regime regime = Regime::kExtinctionOnly;
  Stability x1_stability = Stability::kStable;

  /// Compact stability code, one letter per equilibrium in increasing order:
  /// S stable, U unstable, D semi-stable (degenerate). E.g. "SUS".
  std::string stability_pattern() const;
};

/// Per-capita growth h(x) = s - g2 x - g3 / (g3 g4 x + 1) and its derivatives.
double per_capita_growth(double x, const ModelParams& p);
double per_capita_growth_d1(double x, const ModelParams& p);
double per_capita_growth_d2(double x, const ModelParams& p);

/// F(x) = x h(x).
double drift(double x, const ModelParams& p);
/// F'(x) = h(x) + x h'(x).
double drift_derivative(double x, const ModelParams& p);

/// U(x) = -s x^2/2 + g2 x^3/3 + g3/k^2 (k x + 1 - ln(k x + 1)), k = g3 g4.
/// Throws DomainError if k x + 1 <= 0.
double potential(double x, const ModelParams& p);

/// Drift of Y = ln X under Gaussian noise: G(y) = h(e^y) - lambda^2/2, with
/// its first and second derivatives in y.
double lamperti_drift(double y, const ModelParams& p);
double lamperti_drift_d1(double y, const ModelParams& p);
double lamperti_drift_d2(double y, const ModelParams& p);

/// beta = 4 g2 k (g3 - s) / (s k - g2)^2.
double bifurcation_parameter(const ModelParams& p);

Equilibria equilibria(const ModelParams& p);

/// gamma3 at which beta(gamma3) = 1, searched over (s, s * 1e3]. Empty when
/// beta stays below 1 (possible for a fixed handling time).
std::optional<double> fold_attack_rate(const ModelParams& p, HandlingCoupling coupling);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Attack rate gamma_c solving U(0) = U(x3(gamma_c)). The default bracket is
/// (s, fold). Throws NoBracketError if U(0) - U(x3) never changes sign.
double critical_attack_rate(const ModelParams& p, HandlingCoupling coupling,
                            std::optional<Interval> bracket = std::nullopt);

struct BranchRow {
  double gamma3 = 0.0;
  Equilibria eq;
};

struct FoldPoint {
  double gamma3 = 0.0;
  double x4 = 0.0;
};

struct BranchTable {
  std::vector<BranchRow> rows;
  std::optional<FoldPoint> fold;
};

/// Equilibria on `steps` evenly spaced attack rates in [range.lo, range.hi].
/// The fold, when the scan crosses beta = 1, is located by bisection.
BranchTable bifurcation_scan(const ModelParams& p, Interval gamma3_range, int steps,
                             HandlingCoupling coupling);

/// CSV with header gamma3,beta,x1,x2,x3,stability_pattern. Absent roots are
/// written as empty fields.
void write_branch_csv(std::ostream& os, const BranchTable& table);

}  // namespace allee
