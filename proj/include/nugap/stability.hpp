#pragma once

// Closed loop H(P,C), stability margins mu_{P,C}, certified mu_opt lower
// bounds and the equivalence inequality reports.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "nugap/algebra.hpp"
#include "nugap/metrics.hpp"
#include "nugap/plants.hpp"

namespace nugap {

using Matrix2 = std::array<Complex, 4>;  // row-major [m00 m01; m10 m11]

// Largest singular value via the closed-form 2x2 formula.
inline double sigma_max(const Matrix2& m) {
  const double t = std::norm(m[0]) + std::norm(m[1]) + std::norm(m[2]) + std::norm(m[3]);
  const double d2 = std::norm(m[0] * m[3] - m[1] * m[2]);
  const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * d2));
  return std::sqrt(0.5 * (t + disc));
}

enum class Stabilizing { yes, no, inconclusive };

struct ClosedLoop {
  Plant plant;
  Plant controller;
  AElement denominator;  // Y D - X N
  Stabilizing stabilizing{Stabilizing::no};
  double denominator_margin{0.0};
  bool approximate_certificate{false};

  // H(iy) in the factored form [N; D] (YD - XN)^{-1} [-X, Y]
  Matrix2 eval(double y) const {
    const Complex n = plant.pair.n.evaluate(y);
    const Complex d = plant.pair.d.evaluate(y);
    const Complex x = controller.pair.n.evaluate(y);
    const Complex yy = controller.pair.d.evaluate(y);
    const Complex inv_den = 1.0 / denominator.evaluate(y);
    return Matrix2{n * inv_den * -x, n * inv_den * yy,
                   d * inv_den * -x, d * inv_den * yy};
  }
};

inline ClosedLoop closed_loop(const Plant& p, const Plant& c,
                              double tol = kDefaultInvertTol) {
  ClosedLoop loop;
  loop.plant = p;
  loop.controller = c;
  loop.denominator =
      multiply(c.pair.d, p.pair.d) + multiply(negate(c.pair.n), p.pair.n);
  const InvertibilityResult inv = is_invertible(loop.denominator, tol);
  loop.denominator_margin = inv.margin;
  loop.approximate_certificate = inv.approximate_certificate;
  if (inv.decision == InvertDecision::not_invertible) {
    loop.stabilizing = Stabilizing::no;
    return loop;
  }
  if (inv.decision == InvertDecision::inconclusive) {
    loop.stabilizing = Stabilizing::inconclusive;
    return loop;
  }
  try {
    const IndexPair idx = index_W(loop.denominator);
    loop.stabilizing = (idx.w == 0 && std::abs(idx.w_av) <= 1e-6)
                           ? Stabilizing::yes
                           : Stabilizing::no;
  } catch (const IndexResolutionError&) {
    loop.stabilizing = Stabilizing::inconclusive;
  }
  return loop;
}

struct MarginReport {
  double mu{0.0};
  std::string controller_label;
  Stabilizing stabilizing{Stabilizing::no};
  double sup_sigma{0.0};
  bool approximate_certificate{false};
};

inline MarginReport mu(const Plant& p, const Plant& c,
                       double tol = kDefaultInvertTol) {
  MarginReport rep;
  rep.controller_label = c.label;
  const ClosedLoop loop = closed_loop(p, c, tol);
  rep.stabilizing = loop.stabilizing;
  rep.approximate_certificate = loop.approximate_certificate;
  if (loop.stabilizing != Stabilizing::yes) {
    rep.mu = 0.0;
    return rep;
  }
  // sup of sigma_max(H(iy)): the dense grid, plus the point where |YD - XN|
  // bottoms out (for normalized factorizations these coincide)
  const FrequencyGrid grid = FrequencyGrid::standard();
  double sup = 0.0;
  for (double y : grid.ys) sup = std::max(sup, sigma_max(loop.eval(y)));
  const InvertibilityResult inv = is_invertible(loop.denominator, tol);
  if (inv.decision != InvertDecision::not_invertible && inv.margin > 0.0)
    sup = std::max(sup, sigma_max(loop.eval(inv.witness_y)));
  if (inv.margin > 0.0) sup = std::max(sup, 1.0 / inv.margin);
  rep.sup_sigma = sup;
  rep.mu = std::min(1.0, 1.0 / sup);
  return rep;
}

struct RobustnessReport {
  double mu1{0.0};
  double mu2{0.0};
  double d_hinf_value{0.0};
  double slack{0.0};
  bool pass{false};
};

// mu(P2,C) >= mu(P1,C) - d_Hinf(P1,P2)
inline RobustnessReport robustness_check(const Plant& p1, const Plant& p2,
                                         const Plant& c) {
  RobustnessReport rep;
  rep.mu1 = mu(p1, c).mu;
  rep.mu2 = mu(p2, c).mu;
  rep.d_hinf_value = d_hinf(p1, p2).value;
  rep.slack = rep.mu2 - rep.mu1 + rep.d_hinf_value;
  rep.pass = rep.slack >= -1e-6;
  return rep;
}

struct EquivalenceRow {
  std::string controller_label;
  double mu_value{0.0};
  bool stabilizing{false};
  bool lower_ok{true};  // mu * d_aplus <= d_hinf + tol
  bool upper_ok{true};  // d_hinf <= d_aplus / mu + tol
};

struct EquivalenceReport {
  double d_aplus_value{0.0};
  double d_hinf_value{0.0};
  double gap_hi{1.0};
  double mu_lower_bound{0.0};  // certified lower bound for mu_opt(P1)
  bool chain_lower_ok{false};
  bool chain_upper_ok{false};
  bool gap_sandwich_ok{false};  // d_aplus <= gap upper bound
  bool vacuous{false};          // no stabilizing controller supplied
  std::vector<EquivalenceRow> rows;
};

inline EquivalenceReport equivalence_report(const Plant& p1, const Plant& p2,
                                            const std::vector<Plant>& controllers,
                                            double tol = 1e-4) {
  EquivalenceReport rep;
  rep.d_aplus_value = d_aplus(p1, p2).value;
  rep.d_hinf_value = d_hinf(p1, p2).value;
  double hi = 1.0;
  for (const auto& c : controllers) {
    EquivalenceRow row;
    row.controller_label = c.label;
    const MarginReport m = mu(p1, c);
    row.mu_value = m.mu;
    row.stabilizing = m.stabilizing == Stabilizing::yes;
    if (row.stabilizing && m.mu > 0.0) {
      rep.mu_lower_bound = std::max(rep.mu_lower_bound, m.mu);
      row.lower_ok = m.mu * rep.d_aplus_value <= rep.d_hinf_value + tol;
      row.upper_ok = rep.d_hinf_value <= rep.d_aplus_value / m.mu + tol;
      const GapBoundResult g = gap_upper_bound(p1, p2, c);
      if (g.ok) hi = std::min(hi, g.value);
    }
    rep.rows.push_back(row);
  }
  rep.gap_hi = hi;
  if (rep.mu_lower_bound == 0.0) {
    rep.vacuous = true;
    rep.chain_lower_ok = rep.chain_upper_ok = true;  // 0 <= d <= inf
  } else {
    rep.chain_lower_ok =
        rep.mu_lower_bound * rep.d_aplus_value <= rep.d_hinf_value + tol;
    rep.chain_upper_ok =
        rep.d_hinf_value <= rep.d_aplus_value / rep.mu_lower_bound + tol;
  }
  rep.gap_sandwich_ok = rep.d_aplus_value <= rep.gap_hi + tol;
  return rep;
}

}  // namespace nugap
