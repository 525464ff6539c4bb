#pragma once

// The two nu-metric extensions d_{A+} and d_{Hinf} together with gap-metric
// bounds, with branch diagnostics on every result.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nugap/algebra.hpp"
#include "nugap/plants.hpp"

namespace nugap {

enum class Branch { finite_branch, unity_branch };

struct MetricDiagnostics {
  double invert_margin{0.0};
  std::optional<IndexPair> index;
  int annulus_winding{0};
  double annulus_min_modulus{0.0};
  double error_bound{0.0};
  std::vector<std::string> flags;
  std::vector<double> rho_trace;
};

struct MetricResult {
  double value{1.0};
  Branch branch{Branch::unity_branch};
  MetricDiagnostics diag;
};

// G_1^* G_2 = conj(N1) N2 + conj(D1) D2 as a boundary-algebra element.
inline AElement pairing_g1star_g2(const Plant& p1, const Plant& p2) {
  return multiply(conjugate(p1.pair.n), p2.pair.n) +
         multiply(conjugate(p1.pair.d), p2.pair.d);
}

// Continuous bounded extension of the pairing to Re s >= 0.
inline std::function<Complex(Complex)> pairing_rhp_evaluator(const Plant& p1,
                                                             const Plant& p2) {
  const AElement n1 = p1.pair.n, d1 = p1.pair.d;
  const AElement n2 = p2.pair.n, d2 = p2.pair.d;
  return [n1, d1, n2, d2](Complex s) {
    return std::conj(n1.evaluate_rhp(s)) * n2.evaluate_rhp(s) +
           std::conj(d1.evaluate_rhp(s)) * d2.evaluate_rhp(s);
  };
}

// G~_2 G_1 = -D2 N1 + N2 D1; lives in the plus subalgebra.
inline AElement mismatch_gtilde2_g1(const Plant& p1, const Plant& p2) {
  return multiply(negate(p2.pair.d), p1.pair.n) +
         multiply(p2.pair.n, p1.pair.d);
}

inline MetricResult d_aplus(const Plant& p1, const Plant& p2,
                            double tol = kDefaultInvertTol) {
  MetricResult res;
  const AElement pairing = pairing_g1star_g2(p1, p2);
  const InvertibilityResult inv = is_invertible(pairing, tol);
  res.diag.invert_margin = inv.margin;
  if (inv.approximate_certificate)
    res.diag.flags.push_back("approximate certificate");
  if (p1.pair.coprimality_asserted || p2.pair.coprimality_asserted)
    res.diag.flags.push_back("coprimality asserted by user");
  if (inv.decision == InvertDecision::not_invertible) {
    res.value = 1.0;
    res.branch = Branch::unity_branch;
    return res;
  }
  if (inv.decision == InvertDecision::inconclusive) {
    res.value = 1.0;
    res.branch = Branch::unity_branch;
    res.diag.flags.push_back("inconclusive");
    return res;
  }
  IndexPair idx;
  try {
    idx = index_W(pairing);
  } catch (const IndexResolutionError&) {
    res.value = 1.0;
    res.branch = Branch::unity_branch;
    res.diag.flags.push_back("index resolution failure");
    return res;
  }
  res.diag.index = idx;
  if (idx.w != 0 || std::abs(idx.w_av) > 1e-6) {
    res.value = 1.0;
    res.branch = Branch::unity_branch;
    return res;
  }
  const SupNormResult sup = sup_norm_axis(mismatch_gtilde2_g1(p1, p2), 1e-8);
  res.value = std::min(1.0, sup.value);
  res.branch = Branch::finite_branch;
  res.diag.error_bound = sup.error;
  if (sup.approximate) res.diag.flags.push_back("approximate certificate");
  return res;
}

// ---------------------------------------------------------------------------
// Annulus machinery for d_{Hinf}
// ---------------------------------------------------------------------------

// phi maps the unit disk onto the right half plane; |z| = r goes to the
// circle with center (1+r^2)/(1-r^2) and radius 2r/(1-r^2).
inline Complex phi(Complex z) { return (1.0 + z) / (1.0 - z); }

struct AnnulusProbe {
  double rho{0.5};
  std::vector<double> radii;  // strictly increasing, inside (rho, 1)
  int samples_per_circle{1024};
  int refinement_near_one{4};
};

inline AnnulusProbe default_probe(double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("annulus probe: rho must be in (0,1)");
  AnnulusProbe p;
  p.rho = rho;
  const double gap = 1.0 - rho;
  for (int k = 1; k <= 7; ++k) p.radii.push_back(rho + gap * k / 8.0);
  for (int j = 1; j <= p.refinement_near_one; ++j)
    p.radii.push_back(1.0 - gap / 8.0 * std::pow(2.0, -j));
  // rings accumulating at the outer boundary: the mismatch sup and the
  // zero arcs both live near |z| = 1
  for (double r : {1.0 - 1e-3, 1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6})
    if (r > rho) p.radii.push_back(r);
  std::sort(p.radii.begin(), p.radii.end());
  p.radii.erase(std::unique(p.radii.begin(), p.radii.end()), p.radii.end());
  return p;
}

struct AnnulusCircle {
  double radius{0.0};
  std::vector<double> thetas;
  std::vector<Complex> values;
};

struct AnnulusField {
  std::vector<AnnulusCircle> circles;
  std::function<Complex(Complex)> eval;  // on disk coordinates z
};

namespace detail {

// uniform angles plus a geometric cluster toward theta = 0 (z = 1)
inline std::vector<double> circle_angles(int n_uniform) {
  std::vector<double> th;
  th.reserve(n_uniform + 56);
  for (int i = 0; i < n_uniform; ++i)
    th.push_back(-M_PI + 2.0 * M_PI * i / n_uniform);
  for (int m = 2; m <= 28; ++m) {
    const double t = M_PI * std::pow(2.0, -m);
    th.push_back(t);
    th.push_back(-t);
  }
  std::sort(th.begin(), th.end());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  return th;
}

}  // namespace detail

inline AnnulusField sample_annulus(std::function<Complex(Complex)> disk_eval,
                                   const AnnulusProbe& probe) {
  AnnulusField field;
  field.eval = std::move(disk_eval);
  const auto thetas = detail::circle_angles(probe.samples_per_circle);
  for (double r : probe.radii) {
    AnnulusCircle c;
    c.radius = r;
    c.thetas = thetas;
    c.values.reserve(thetas.size());
    for (double t : thetas) c.values.push_back(field.eval(std::polar(r, t)));
    field.circles.push_back(std::move(c));
  }
  return field;
}

// Samples of (G_1^* G_2) o phi over the probe's circles.
inline AnnulusField annulus_eval(const Plant& p1, const Plant& p2,
                                 const AnnulusProbe& probe) {
  auto pr = pairing_rhp_evaluator(p1, p2);
  return sample_annulus([pr](Complex z) { return pr(phi(z)); }, probe);
}

struct AnnulusIndex {
  int winding{0};
  double min_modulus{0.0};
  bool constancy_ok{true};
  bool resolved{true};
  double continuity_bound{0.0};  // sample jump at fine scale near the minimum
};

inline AnnulusIndex annulus_index(const AnnulusField& field) {
  if (field.circles.size() < 2)
    throw std::invalid_argument("annulus_index: need at least two radii");
  AnnulusIndex out;
  out.min_modulus = std::numeric_limits<double>::infinity();
  double min_radius = 0.0, min_theta = 0.0;
  bool have_winding = false;
  for (const auto& c : field.circles) {
    const size_t n = c.thetas.size();
    size_t argmin = 0;
    for (size_t i = 0; i < n; ++i) {
      const double m = std::abs(c.values[i]);
      if (m < std::abs(c.values[argmin])) argmin = i;
    }
    // refine the modulus minimum between the neighbours of the coarse argmin
    {
      const double t_lo = c.thetas[(argmin + n - 1) % n];
      double t_hi = c.thetas[(argmin + 1) % n];
      if (t_hi <= t_lo) t_hi += 2.0 * M_PI;
      const double r = c.radius;
      auto eval_theta = [&field, r](double t) {
        return field.eval(std::polar(r, t));
      };
      double t_star = 0.0;
      const double refined =
          detail::refine_modulus(eval_theta, t_lo, t_hi, /*maximize=*/false, &t_star);
      double circle_min = refined;
      double circle_theta = t_star;
      if (std::abs(c.values[argmin]) < circle_min) {
        circle_min = std::abs(c.values[argmin]);
        circle_theta = c.thetas[argmin];
      }
      if (circle_min < out.min_modulus) {
        out.min_modulus = circle_min;
        min_radius = r;
        min_theta = circle_theta;
      }
    }
    // integer winding along the closed circle, adaptive in the angle
    double total = 0.0;
    bool circle_resolved = true;
    std::function<bool(double, double, Complex, Complex, int)> accumulate =
        [&](double t0, double t1, Complex f0, Complex f1, int depth) -> bool {
      if (std::abs(f0) < 1e-12 || std::abs(f1) < 1e-12) {
        out.min_modulus = std::min(out.min_modulus, std::min(std::abs(f0), std::abs(f1)));
        return false;
      }
      const double d = detail::principal_arg_diff(f0, f1);
      if (std::abs(d) <= M_PI / 2.0) {
        total += d;
        return true;
      }
      if (depth >= 40) return false;
      const double tm = 0.5 * (t0 + t1);
      const Complex fm = field.eval(std::polar(c.radius, tm));
      return accumulate(t0, tm, f0, fm, depth + 1) &&
             accumulate(tm, t1, fm, f1, depth + 1);
    };
    for (size_t i = 0; i < n && circle_resolved; ++i) {
      const size_t j = (i + 1) % n;
      double t0 = c.thetas[i];
      double t1 = (j == 0) ? c.thetas[0] + 2.0 * M_PI : c.thetas[j];
      circle_resolved = accumulate(t0, t1, c.values[i], c.values[j], 0);
    }
    if (!circle_resolved) {
      out.resolved = false;
      continue;
    }
    const double turns = total / (2.0 * M_PI);
    const int w = static_cast<int>(std::llround(turns));
    if (std::abs(turns - w) > 0.05) {
      out.resolved = false;
      continue;
    }
    if (!have_winding) {
      out.winding = w;
      have_winding = true;
    } else if (w != out.winding) {
      out.constancy_ok = false;
    }
  }
  if (!have_winding) out.resolved = false;
  // modulus of continuity probed at fine angular scale where the field is
  // smallest; an unresolved oscillation there voids the certificate
  if (std::isfinite(out.min_modulus) && min_radius > 0.0) {
    const double h = (2.0 * M_PI / field.circles.front().thetas.size()) / 32.0;
    const Complex f0 = field.eval(std::polar(min_radius, min_theta));
    const Complex fp = field.eval(std::polar(min_radius, min_theta + h));
    const Complex fm = field.eval(std::polar(min_radius, min_theta - h));
    out.continuity_bound = std::max(std::abs(fp - f0), std::abs(f0 - fm));
  }
  return out;
}

inline MetricResult d_hinf_rho(const Plant& p1, const Plant& p2, double rho) {
  MetricResult res;
  const AnnulusProbe probe = default_probe(rho);
  const AnnulusField pairing_field = annulus_eval(p1, p2, probe);
  const AnnulusIndex idx = annulus_index(pairing_field);
  res.diag.annulus_winding = idx.winding;
  res.diag.annulus_min_modulus = idx.min_modulus;
  res.diag.invert_margin = idx.min_modulus;
  // sampling alone cannot certify inf > 0 on the open annulus; narrow the
  // gap with the adjacent-sample modulus of continuity
  const double threshold = 1e-5 + 0.5 * idx.continuity_bound;
  if (idx.min_modulus <= threshold) res.diag.flags.push_back("annulus zero detected");
  if (!idx.resolved && idx.min_modulus > threshold)
    res.diag.flags.push_back("unresolved annulus winding");
  if (!idx.constancy_ok) res.diag.flags.push_back("winding not radius-constant");
  if (!idx.resolved || !idx.constancy_ok || idx.winding != 0 ||
      idx.min_modulus <= threshold) {
    res.value = 1.0;
    res.branch = Branch::unity_branch;
    return res;
  }
  // finite branch: sup over the annulus samples of |(G~_2 G_1) o phi|
  const AElement mm = mismatch_gtilde2_g1(p1, p2);
  if (mm.is_zero()) {
    res.value = 0.0;
    res.branch = Branch::finite_branch;
    return res;
  }
  const AnnulusField mf = sample_annulus(
      [mm](Complex z) { return mm.evaluate_rhp(phi(z)); }, probe);
  double sup = 0.0;
  for (const auto& c : mf.circles) {
    size_t argmax = 0;
    for (size_t i = 0; i < c.values.size(); ++i)
      if (std::abs(c.values[i]) > std::abs(c.values[argmax])) argmax = i;
    const size_t n = c.thetas.size();
    const double t_lo = c.thetas[(argmax + n - 1) % n];
    double t_hi = c.thetas[(argmax + 1) % n];
    if (t_hi <= t_lo) t_hi += 2.0 * M_PI;
    const double r = c.radius;
    auto eval_theta = [&mf, r](double t) { return mf.eval(std::polar(r, t)); };
    sup = std::max(sup, detail::refine_modulus(eval_theta, t_lo, t_hi, true));
    sup = std::max(sup, std::abs(c.values[argmax]));
  }
  res.value = std::min(1.0, sup);
  res.branch = Branch::finite_branch;
  return res;
}

// d_{Hinf} = lim_{rho -> 1} of the annulus metric, detected by trace
// stabilization over rho_k = 1 - 2^{-k}.
inline MetricResult d_hinf(const Plant& p1, const Plant& p2) {
  MetricResult res;
  double prev = std::numeric_limits<double>::quiet_NaN();
  bool stabilized = false;
  for (int k = 2; k <= 12; ++k) {
    const double rho = 1.0 - std::pow(2.0, -k);
    MetricResult step = d_hinf_rho(p1, p2, rho);
    res.diag.rho_trace.push_back(step.value);
    if (!std::isnan(prev) && step.value > prev + 1e-8)
      throw std::runtime_error("d_hinf: rho-trace increased; sampling defect");
    if (!std::isnan(prev) && std::abs(step.value - prev) < 1e-4) {
      res.value = step.value;
      res.branch = step.branch;
      res.diag.annulus_winding = step.diag.annulus_winding;
      res.diag.annulus_min_modulus = step.diag.annulus_min_modulus;
      res.diag.invert_margin = step.diag.invert_margin;
      for (const auto& fl : step.diag.flags) res.diag.flags.push_back(fl);
      stabilized = true;
      break;
    }
    prev = step.value;
    res.value = step.value;
    res.branch = step.branch;
  }
  if (!stabilized) res.diag.flags.push_back("rho trace not stabilized");
  return res;
}

// ---------------------------------------------------------------------------
// Gap-metric bounds via the inf-over-Q characterization
// ---------------------------------------------------------------------------

struct GapBoundResult {
  bool ok{false};
  double value{1.0};
  std::string reason;
};

// Upper bound for the gap from the candidate Q0 = (K~0 G1)^{-1} K~0 G2
// induced by a controller C0 stabilizing P1.
inline GapBoundResult gap_upper_bound(const Plant& p1, const Plant& p2,
                                      const Plant& c0) {
  GapBoundResult out;
  // K~0 G = -X0 N + Y0 D
  const AElement kg1 = multiply(negate(c0.pair.n), p1.pair.n) +
                       multiply(c0.pair.d, p1.pair.d);
  const AElement kg2 = multiply(negate(c0.pair.n), p2.pair.n) +
                       multiply(c0.pair.d, p2.pair.d);
  const InvertibilityResult inv = is_invertible(kg1);
  if (inv.decision != InvertDecision::invertible) {
    out.reason = "K~0 G1 not certified invertible on the axis";
    return out;
  }
  try {
    const IndexPair idx = index_W(kg1);
    if (idx.w != 0 || std::abs(idx.w_av) > 1e-6) {
      out.reason = "K~0 G1 has nonzero index; C0 does not stabilize P1";
      return out;
    }
  } catch (const IndexResolutionError&) {
    out.reason = "index resolution failure on K~0 G1";
    return out;
  }
  // pointwise column G1 - G2 Q0 on a dense axis grid
  const FrequencyGrid grid = FrequencyGrid::standard();
  double sup = 0.0;
  for (double y : grid.ys) {
    const Complex q = kg2.evaluate(y) / kg1.evaluate(y);
    const Complex e0 = p1.pair.n.evaluate(y) - p2.pair.n.evaluate(y) * q;
    const Complex e1 = p1.pair.d.evaluate(y) - p2.pair.d.evaluate(y) * q;
    sup = std::max(sup, std::sqrt(std::norm(e0) + std::norm(e1)));
  }
  out.ok = true;
  out.value = std::min(1.0, sup);
  return out;
}

struct GapInterval {
  double lo{0.0};
  double hi{1.0};
};

inline GapInterval gap_bounds(const Plant& p1, const Plant& p2,
                              const std::vector<Plant>& controllers) {
  GapInterval out;
  out.lo = d_aplus(p1, p2).value;
  out.hi = 1.0;
  for (const auto& c : controllers) {
    const GapBoundResult b = gap_upper_bound(p1, p2, c);
    if (b.ok) out.hi = std::min(out.hi, b.value);
  }
  if (out.lo > out.hi + 1e-6)
    throw std::runtime_error("gap_bounds: lower bound exceeds upper bound");
  return out;
}

}  // namespace nugap
