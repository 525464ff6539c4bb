#pragma once

// Normalized coprime factorizations and the graph symbols G, G~, K, K~.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nugap/algebra.hpp"

namespace nugap {

struct BezoutPair {
  AElement x;
  AElement y;
};

struct CoprimePair {
  AElement n;
  AElement d;
  std::optional<BezoutPair> bezout;
  // set for user-supplied pairs without Bezout witnesses
  bool coprimality_asserted{false};
};

struct Plant {
  CoprimePair pair;
  std::string label;
};

struct FrequencyGrid {
  std::vector<double> ys;

  // symmetric log-spaced grid plus a linear core
  static FrequencyGrid standard(int n_per_decade = 60, double y_max = 1e3) {
    FrequencyGrid g;
    g.ys.push_back(0.0);
    for (double e = -3.0; e <= std::log10(y_max) + 1e-12; e += 1.0 / n_per_decade) {
      const double y = std::pow(10.0, e);
      g.ys.push_back(y);
      g.ys.push_back(-y);
    }
    for (double y = 0.05; y <= 20.0; y += 0.05) {
      g.ys.push_back(y);
      g.ys.push_back(-y);
    }
    std::sort(g.ys.begin(), g.ys.end());
    return g;
  }
};

// P = k e^{-s tau}: N = (k/sqrt(1+k^2)) e^{-s tau}, D = 1/sqrt(1+k^2),
// Bezout (X, Y) = (0, sqrt(1+k^2)).
inline CoprimePair ncf_gain_delay(double k, double tau) {
  if (tau < 0.0) throw std::invalid_argument("ncf_gain_delay: tau must be >= 0");
  const double gamma = std::sqrt(1.0 + k * k);
  CoprimePair p;
  p.n = (k == 0.0) ? AElement::zero() : AElement::ap_term(k / gamma, tau);
  p.d = AElement::constant(1.0 / gamma);
  p.bezout = BezoutPair{AElement::zero(), AElement::constant(gamma)};
  return p;
}

// P = b/(s+a): with p = sqrt(a^2+b^2), N = b/(s+p) and D = (s+a)/(s+p);
// |N|^2 + |D|^2 = (b^2 + a^2 + y^2)/(p^2 + y^2) = 1 identically.
inline CoprimePair ncf_first_order(double a, double b) {
  if (b == 0.0) throw std::invalid_argument("ncf_first_order: b must be nonzero");
  const double p = std::sqrt(a * a + b * b);
  CoprimePair cp;
  cp.n = AElement::atom(b, 0.0, p, 0, Side::causal);
  cp.d = AElement::constant(1.0) + AElement::atom(a - p, 0.0, p, 0, Side::causal);
  // ((p-a)/b) * b/(s+p) + 1 * (s+a)/(s+p) = (p-a+s+a)/(s+p) = 1 exactly
  cp.bezout = BezoutPair{AElement::constant((p - a) / b), AElement::constant(1.0)};
  return cp;
}

inline Plant make_plant(CoprimePair pair, std::string label) {
  return Plant{std::move(pair), std::move(label)};
}

struct NcfReport {
  double max_normalization_dev{0.0};
  double max_bezout_dev{0.0};
  bool bezout_checked{false};
  bool pass{false};
};

inline NcfReport verify_ncf(const CoprimePair& pair,
                            const FrequencyGrid& grid = FrequencyGrid::standard(),
                            double tol = 1e-8) {
  NcfReport rep;
  for (double y : grid.ys) {
    const Complex n = pair.n.evaluate(y);
    const Complex d = pair.d.evaluate(y);
    const double dev = std::abs(std::norm(n) + std::norm(d) - 1.0);
    rep.max_normalization_dev = std::max(rep.max_normalization_dev, dev);
    if (pair.bezout) {
      const Complex x = pair.bezout->x.evaluate(y);
      const Complex yy = pair.bezout->y.evaluate(y);
      const double bdev = std::abs(x * n + yy * d - 1.0);
      rep.max_bezout_dev = std::max(rep.max_bezout_dev, bdev);
    }
  }
  rep.bezout_checked = pair.bezout.has_value();
  rep.pass = rep.max_normalization_dev < tol &&
             (!rep.bezout_checked || rep.max_bezout_dev < tol);
  return rep;
}

// Column G = [N; D] and row G~ = [-D, N] (for a controller C = X/Y the same
// layout gives K = [Y; X] and K~ = [-X, Y]).
struct GraphSymbols {
  AElement col0;  // N  (or Y)
  AElement col1;  // D  (or X)
  AElement row0;  // -D (or -X)
  AElement row1;  // N  (or Y)
};

inline GraphSymbols assemble_graph_symbols(const Plant& p) {
  return GraphSymbols{p.pair.n, p.pair.d, negate(p.pair.d), p.pair.n};
}

// Controller C = X/Y represented as a Plant with N = X, D = Y.
inline GraphSymbols assemble_controller_symbols(const Plant& c) {
  return GraphSymbols{c.pair.d, c.pair.n, negate(c.pair.n), c.pair.d};
}

}  // namespace nugap
