#pragma once

// Finitely parameterized elements of the Banach algebras of delayed
// exponentials plus exponential-polynomial L1 kernels on the imaginary
// axis, with arithmetic, norms, invertibility certificates and the
// winding-index pair.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nugap {

using Complex = std::complex<double>;

inline constexpr double kCoeffDropTol = 1e-14;
inline constexpr double kDelayMergeTol = 1e-12;
inline constexpr double kRateMergeTol = 1e-9;
inline constexpr double kDefaultInvertTol = 1e-6;
inline constexpr double kQuadratureTarget = 1e-8;

struct APTerm {
  Complex coeff{0.0, 0.0};
  double delay{0.0};  // seconds; e^{-s*delay} on the axis
};

enum class Side { causal, anticausal };

struct FourierAtom {
  Complex coeff{0.0, 0.0};
  double delay{0.0};
  Complex rate{1.0, 0.0};  // Re(rate) > 0
  int power{0};
  Side side{Side::causal};
};

// (average winding, integer winding) with resolution diagnostics.
struct IndexPair {
  double w_av{0.0};
  int w{0};
  double w_av_error{0.0};
  double w_distance{0.0};  // distance of raw phase total / 2pi from w
};

struct IndexResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double b = 1.0;
  for (int j = 1; j <= k; ++j) b = b * (n - k + j) / j;
  return b;
}

inline Complex ipow(Complex z, int n) {
  Complex r{1.0, 0.0};
  for (int k = 0; k < n; ++k) r *= z;
  return r;
}

inline double principal_arg_diff(Complex from, Complex to) {
  return std::arg(to * std::conj(from));
}

}  // namespace detail

class AElement {
 public:
  enum class Extension { none, plus, conj_plus };

  AElement() = default;

  static AElement zero() { return AElement{}; }

  static AElement constant(Complex c) {
    AElement e;
    e.ap_.push_back({c, 0.0});
    e.canonicalize();
    return e;
  }

  static AElement ap_term(Complex c, double delay) {
    AElement e;
    e.ap_.push_back({c, delay});
    e.canonicalize();
    return e;
  }

  static AElement atom(Complex c, double delay, Complex rate, int power,
                       Side side = Side::causal) {
    if (rate.real() <= 0.0)
      throw std::invalid_argument("FourierAtom rate must have Re > 0");
    if (power < 0) throw std::invalid_argument("FourierAtom power must be >= 0");
    AElement e;
    e.atoms_.push_back({c, delay, rate, power, side});
    e.canonicalize();
    return e;
  }

  static AElement make(std::vector<APTerm> ap, std::vector<FourierAtom> atoms) {
    AElement e;
    e.ap_ = std::move(ap);
    e.atoms_ = std::move(atoms);
    for (const auto& a : e.atoms_) {
      if (a.rate.real() <= 0.0)
        throw std::invalid_argument("FourierAtom rate must have Re > 0");
      if (a.power < 0)
        throw std::invalid_argument("FourierAtom power must be >= 0");
    }
    e.canonicalize();
    return e;
  }

  const std::vector<APTerm>& ap() const { return ap_; }
  const std::vector<FourierAtom>& atoms() const { return atoms_; }

  bool is_zero() const { return ap_.empty() && atoms_.empty(); }
  bool is_plus() const { return ext_ == Extension::plus; }
  bool is_conj_extension() const { return ext_ == Extension::conj_plus; }

  // Value of the almost periodic part at iy.
  Complex evaluate_ap(double y) const {
    Complex v{0.0, 0.0};
    for (const auto& t : ap_) v += t.coeff * std::polar(1.0, -y * t.delay);
    return v;
  }

  // Value of the transform part at iy.
  Complex evaluate_atoms(double y) const {
    Complex v{0.0, 0.0};
    const Complex iy{0.0, y};
    for (const auto& a : atoms_) {
      const Complex den = (a.side == Side::causal) ? (iy + a.rate) : (-iy + a.rate);
      v += a.coeff * detail::factorial(a.power) * std::polar(1.0, -y * a.delay) /
           detail::ipow(den, a.power + 1);
    }
    return v;
  }

  Complex evaluate(double y) const { return evaluate_ap(y) + evaluate_atoms(y); }

  // Holomorphic extension to Re s >= 0 for "plus" elements; the continuous
  // bounded extension conj(G(s)) for conjugates of "plus" elements.
  Complex evaluate_rhp(Complex s) const;

  friend AElement add(const AElement& f, const AElement& g);
  friend AElement multiply(const AElement& f, const AElement& g);
  friend AElement conjugate(const AElement& f);
  friend AElement negate(const AElement& f);

  AElement operator+(const AElement& o) const { return add(*this, o); }
  AElement operator-(const AElement& o) const { return add(*this, negate(o)); }
  AElement operator*(const AElement& o) const { return multiply(*this, o); }
  AElement operator-() const { return negate(*this); }

 private:
  void canonicalize();

  std::vector<APTerm> ap_;
  std::vector<FourierAtom> atoms_;
  Extension ext_{Extension::plus};
};

inline void AElement::canonicalize() {
  std::sort(ap_.begin(), ap_.end(),
            [](const APTerm& a, const APTerm& b) { return a.delay < b.delay; });
  std::vector<APTerm> merged;
  for (const auto& t : ap_) {
    if (!merged.empty() && std::abs(t.delay - merged.back().delay) <= kDelayMergeTol)
      merged.back().coeff += t.coeff;
    else
      merged.push_back(t);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const APTerm& t) {
                                return std::abs(t.coeff) < kCoeffDropTol;
                              }),
               merged.end());
  ap_ = std::move(merged);

  auto atom_less = [](const FourierAtom& a, const FourierAtom& b) {
    if (a.side != b.side) return a.side < b.side;
    if (std::abs(a.delay - b.delay) > kDelayMergeTol) return a.delay < b.delay;
    if (std::abs(a.rate.real() - b.rate.real()) > kDelayMergeTol)
      return a.rate.real() < b.rate.real();
    if (std::abs(a.rate.imag() - b.rate.imag()) > kDelayMergeTol)
      return a.rate.imag() < b.rate.imag();
    return a.power < b.power;
  };
  std::sort(atoms_.begin(), atoms_.end(), atom_less);
  std::vector<FourierAtom> matoms;
  for (const auto& a : atoms_) {
    if (!matoms.empty()) {
      auto& p = matoms.back();
      if (p.side == a.side && p.power == a.power &&
          std::abs(p.delay - a.delay) <= kDelayMergeTol &&
          std::abs(p.rate - a.rate) <= kDelayMergeTol) {
        p.coeff += a.coeff;
        continue;
      }
    }
    matoms.push_back(a);
  }
  matoms.erase(std::remove_if(matoms.begin(), matoms.end(),
                              [](const FourierAtom& a) {
                                return std::abs(a.coeff) < kCoeffDropTol;
                              }),
               matoms.end());
  atoms_ = std::move(matoms);

  bool plus = true;
  for (const auto& t : ap_)
    if (t.delay < -kDelayMergeTol) plus = false;
  for (const auto& a : atoms_)
    if (a.side != Side::causal || a.delay < -kDelayMergeTol) plus = false;
  // A structural-plus result keeps (or regains) the plus flag; otherwise we
  // only keep conj_plus if it was set explicitly by conjugate().
  if (plus)
    ext_ = Extension::plus;
  else if (ext_ == Extension::plus)
    ext_ = Extension::none;
}

inline Complex AElement::evaluate_rhp(Complex s) const {
  if (is_plus()) {
    Complex v{0.0, 0.0};
    for (const auto& t : ap_) v += t.coeff * std::exp(-s * t.delay);
    for (const auto& a : atoms_)
      v += a.coeff * detail::factorial(a.power) * std::exp(-s * a.delay) /
           detail::ipow(s + a.rate, a.power + 1);
    return v;
  }
  if (is_conj_extension()) {
    return std::conj(conjugate(*this).evaluate_rhp(s));
  }
  throw std::domain_error(
      "evaluate_rhp: element has no canonical right-half-plane extension");
}

inline AElement negate(const AElement& f) {
  AElement r = f;
  for (auto& t : r.ap_) t.coeff = -t.coeff;
  for (auto& a : r.atoms_) a.coeff = -a.coeff;
  return r;
}

inline AElement add(const AElement& f, const AElement& g) {
  AElement r;
  r.ap_ = f.ap_;
  r.ap_.insert(r.ap_.end(), g.ap_.begin(), g.ap_.end());
  r.atoms_ = f.atoms_;
  r.atoms_.insert(r.atoms_.end(), g.atoms_.begin(), g.atoms_.end());
  if (f.ext_ == AElement::Extension::conj_plus &&
      g.ext_ == AElement::Extension::conj_plus)
    r.ext_ = AElement::Extension::conj_plus;
  r.canonicalize();
  return r;
}

inline AElement conjugate(const AElement& f) {
  AElement r;
  for (const auto& t : f.ap_) r.ap_.push_back({std::conj(t.coeff), -t.delay});
  for (const auto& a : f.atoms_)
    r.atoms_.push_back({std::conj(a.coeff), -a.delay, std::conj(a.rate), a.power,
                        a.side == Side::causal ? Side::anticausal : Side::causal});
  const bool source_plus = f.ext_ == AElement::Extension::plus;
  r.canonicalize();
  if (source_plus && r.ext_ != AElement::Extension::plus)
    r.ext_ = AElement::Extension::conj_plus;
  return r;
}

namespace detail {

// Partial fraction split of an atom product; appends resulting atoms.
inline void multiply_atoms(const FourierAtom& x, const FourierAtom& y,
                           std::vector<FourierAtom>& out) {
  const Complex scale = x.coeff * y.coeff * factorial(x.power) * factorial(y.power);
  const double d = x.delay + y.delay;
  const int m = x.power + 1;
  const int n = y.power + 1;
  if (x.side == y.side) {
    const Complex a = x.rate, b = y.rate;
    if (std::abs(a - b) < kRateMergeTol) {
      // equal rates raise the power
      const int p = x.power + y.power + 1;
      out.push_back({scale / factorial(p), d, 0.5 * (a + b), p, x.side});
      return;
    }
    // 1/((u+a)^m (u+b)^n) = sum A_j/(u+a)^j + sum B_k/(u+b)^k
    for (int j = 1; j <= m; ++j) {
      const double sgn = ((m - j) % 2 == 0) ? 1.0 : -1.0;
      const Complex A =
          sgn * binomial(n + m - j - 1, m - j) / ipow(b - a, n + m - j);
      out.push_back({scale * A / factorial(j - 1), d, a, j - 1, x.side});
    }
    for (int k = 1; k <= n; ++k) {
      const double sgn = ((n - k) % 2 == 0) ? 1.0 : -1.0;
      const Complex B =
          sgn * binomial(m + n - k - 1, n - k) / ipow(a - b, m + n - k);
      out.push_back({scale * B / factorial(k - 1), d, b, k - 1, x.side});
    }
    return;
  }
  // Mixed sides: 1/((u+a)^m (b-u)^n), u = iy, with a the causal rate and b
  // the anticausal one. Re(a)+Re(b) > 0, so no degenerate case arises.
  const FourierAtom& cau = (x.side == Side::causal) ? x : y;
  const FourierAtom& ant = (x.side == Side::causal) ? y : x;
  const int mc = cau.power + 1;
  const int na = ant.power + 1;
  const Complex a = cau.rate, b = ant.rate;
  for (int j = 1; j <= mc; ++j) {
    const Complex A = binomial(na + mc - j - 1, mc - j) / ipow(a + b, na + mc - j);
    out.push_back({scale * A / factorial(j - 1), d, a, j - 1, Side::causal});
  }
  for (int k = 1; k <= na; ++k) {
    const Complex B = binomial(mc + na - k - 1, na - k) / ipow(a + b, mc + na - k);
    out.push_back({scale * B / factorial(k - 1), d, b, k - 1, Side::anticausal});
  }
}

}  // namespace detail

inline AElement multiply(const AElement& f, const AElement& g) {
  AElement r;
  for (const auto& s : f.ap_)
    for (const auto& t : g.ap_) r.ap_.push_back({s.coeff * t.coeff, s.delay + t.delay});
  for (const auto& s : f.ap_)
    for (const auto& a : g.atoms_)
      r.atoms_.push_back({s.coeff * a.coeff, a.delay + s.delay, a.rate, a.power, a.side});
  for (const auto& t : g.ap_)
    for (const auto& a : f.atoms_)
      r.atoms_.push_back({t.coeff * a.coeff, a.delay + t.delay, a.rate, a.power, a.side});
  for (const auto& a : f.atoms_)
    for (const auto& b : g.atoms_) detail::multiply_atoms(a, b, r.atoms_);
  if (f.ext_ == AElement::Extension::conj_plus &&
      g.ext_ == AElement::Extension::conj_plus)
    r.ext_ = AElement::Extension::conj_plus;
  r.canonicalize();
  return r;
}

inline bool approx_equal(const AElement& f, const AElement& g, double tol = 1e-12) {
  if (f.ap().size() != g.ap().size() || f.atoms().size() != g.atoms().size())
    return false;
  for (size_t i = 0; i < f.ap().size(); ++i) {
    if (std::abs(f.ap()[i].coeff - g.ap()[i].coeff) > tol) return false;
    if (std::abs(f.ap()[i].delay - g.ap()[i].delay) > tol) return false;
  }
  for (size_t i = 0; i < f.atoms().size(); ++i) {
    const auto& a = f.atoms()[i];
    const auto& b = g.atoms()[i];
    if (a.side != b.side || a.power != b.power) return false;
    if (std::abs(a.coeff - b.coeff) > tol) return false;
    if (std::abs(a.delay - b.delay) > tol) return false;
    if (std::abs(a.rate - b.rate) > tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Norms, invertibility, winding index
// ---------------------------------------------------------------------------

struct ValueWithError {
  double value{0.0};
  double error{0.0};
};

namespace detail {

// ell^1 norm of the almost periodic coefficients.
inline double l1_ap(const AElement& f) {
  double s = 0.0;
  for (const auto& t : f.ap()) s += std::abs(t.coeff);
  return s;
}

// Upper bound for the atom-part magnitude at any |y| >= Y.
inline double atom_tail_bound(const AElement& f, double Y) {
  double s = 0.0;
  for (const auto& a : f.atoms()) {
    const double re = a.rate.real();
    const double im = std::abs(a.rate.imag());
    const double dist = std::max(re, Y - im);
    s += std::abs(a.coeff) * factorial(a.power) / std::pow(dist, a.power + 1);
  }
  return s;
}

// Sampling window for the almost periodic part, per the commensurate /
// quasi-period policy.
struct APWindow {
  double length{1.0};
  double step{0.5};
  bool commensurate{true};
  bool approximate{false};  // incommensurate delays: heuristic certificate
};

inline double float_gcd(double a, double b) {
  a = std::abs(a);
  b = std::abs(b);
  while (b > 1e-9) {
    const double r = std::fmod(a, b);
    a = b;
    b = (r < 1e-9 || b - r < 1e-9) ? 0.0 : r;
  }
  return a;
}

inline APWindow ap_window(const AElement& f) {
  APWindow w;
  std::vector<double> delays;
  for (const auto& t : f.ap()) delays.push_back(t.delay);
  if (delays.size() <= 1) {
    w.length = 1.0;
    w.step = 0.5;
    return w;
  }
  double omega_max = 0.0;
  for (double d : delays) omega_max = std::max(omega_max, std::abs(d));
  double delta_min = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < delays.size(); ++i)
    for (size_t j = i + 1; j < delays.size(); ++j) {
      const double d = std::abs(delays[i] - delays[j]);
      if (d > 1e-12) delta_min = std::min(delta_min, d);
    }
  // commensurability: common divisor of all pairwise differences
  double g = 0.0;
  bool comm = true;
  for (size_t i = 1; i < delays.size(); ++i) {
    const double d = delays[i] - delays[0];
    if (std::abs(d) < 1e-12) continue;
    g = (g == 0.0) ? std::abs(d) : float_gcd(g, std::abs(d));
  }
  if (g > 1e-7) {
    for (size_t i = 1; i < delays.size(); ++i) {
      const double q = (delays[i] - delays[0]) / g;
      if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, std::abs(q)))
        comm = false;
    }
  } else {
    comm = false;
  }
  if (comm) {
    w.length = 2.0 * M_PI / g;
    w.commensurate = true;
  } else {
    w.length = 200.0 * (2.0 * M_PI / delta_min);
    w.commensurate = false;
    w.approximate = true;
  }
  w.step = (2.0 * M_PI / omega_max) / 50.0;
  const double max_samples = 2e6;
  if (w.length / w.step > max_samples) {
    w.step = w.length / max_samples;
    w.approximate = true;
  }
  return w;
}

// Golden-section refinement of |eval| on [lo, hi].
inline double refine_modulus(const std::function<Complex(double)>& eval, double lo,
                             double hi, bool maximize, double* arg_out = nullptr,
                             int iters = 64) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = std::abs(eval(x1));
  double f2 = std::abs(eval(x2));
  for (int k = 0; k < iters && (b - a) > 1e-15 * (1.0 + std::abs(a)); ++k) {
    const bool pick_left = maximize ? (f1 > f2) : (f1 < f2);
    if (pick_left) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = std::abs(eval(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = std::abs(eval(x2));
    }
  }
  const double xm = 0.5 * (a + b);
  if (arg_out) *arg_out = xm;
  return std::abs(eval(xm));
}

struct ScanResult {
  double value{0.0};
  double at{0.0};
};

// Extremum of |eval| over [lo, hi] at the given step, with local refinement.
inline ScanResult scan_modulus(const std::function<Complex(double)>& eval, double lo,
                               double hi, double step, bool maximize) {
  const int n = std::min(3'000'000,
                         std::max(2, static_cast<int>(std::ceil((hi - lo) / step))));
  std::vector<double> vals(n + 1);
  for (int i = 0; i <= n; ++i)
    vals[i] = std::abs(eval(lo + (hi - lo) * i / n));
  const double h = (hi - lo) / n;
  // refine every local extremum within reach of the global one; nearby
  // competing peaks routinely beat the best grid sample after refinement
  double best = vals[0];
  int best_i = 0;
  for (int i = 1; i <= n; ++i)
    if (maximize ? (vals[i] > best) : (vals[i] < best)) {
      best = vals[i];
      best_i = i;
    }
  ScanResult r{best, lo + h * best_i};
  const double slack = 0.05 * (maximize ? best : best + 1.0);
  for (int i = 0; i <= n; ++i) {
    const bool local =
        (i == 0 || (maximize ? vals[i] >= vals[i - 1] : vals[i] <= vals[i - 1])) &&
        (i == n || (maximize ? vals[i] >= vals[i + 1] : vals[i] <= vals[i + 1]));
    if (!local) continue;
    if (maximize ? (vals[i] < best - slack) : (vals[i] > best + slack)) continue;
    const double a = lo + h * std::max(0, i - 1);
    const double b = lo + h * std::min(n, i + 1);
    double at = 0.0;
    const double refined = refine_modulus(eval, a, b, maximize, &at);
    if (maximize ? (refined > r.value) : (refined < r.value)) {
      r.value = refined;
      r.at = at;
    }
  }
  return r;
}

// inf (or sup) of |F_AP| over the policy window.
inline ScanResult ap_extremum(const AElement& f, bool maximize, bool* approx = nullptr) {
  if (f.ap().empty()) return {0.0, 0.0};
  if (f.ap().size() == 1) return {std::abs(f.ap()[0].coeff), 0.0};
  const APWindow w = ap_window(f);
  if (approx) *approx = w.approximate;
  auto eval = [&f](double y) { return f.evaluate_ap(y); };
  return scan_modulus(eval, 0.0, w.length, w.step, maximize);
}

// Truncation radius for the atom part so that the tail bound drops below cap.
inline double atom_truncation_radius(const AElement& f, double cap,
                                     double* achieved = nullptr) {
  double Y = 50.0;
  for (const auto& a : f.atoms())
    Y = std::max(Y, 2.0 * std::abs(a.rate.imag()) + 10.0);
  double A = atom_tail_bound(f, Y);
  for (int k = 0; k < 12 && A > cap; ++k) {
    Y *= 2.0;
    A = atom_tail_bound(f, Y);
  }
  if (achieved) *achieved = A;
  return Y;
}

// Sampling step fine enough for both the AP oscillation and atom variation.
inline double axis_step(const AElement& f) {
  double omega = 0.5;
  for (const auto& t : f.ap()) omega = std::max(omega, std::abs(t.delay));
  double step = (2.0 * M_PI / omega) / 64.0;
  for (const auto& a : f.atoms())
    step = std::min(step, std::max(1e-3, a.rate.real() / 16.0));
  return std::min(step, 0.05);
}

}  // namespace detail

// Banach-algebra norm: ell^1 of the AP coefficients plus the L1 norm of the
// atom superposition (adaptive quadrature with a certified exponential tail).
inline ValueWithError norm_A(const AElement& f, double target = kQuadratureTarget) {
  ValueWithError r;
  r.value = detail::l1_ap(f);
  if (f.atoms().empty()) return r;

  auto time_value = [&f](double t) {
    Complex v{0.0, 0.0};
    for (const auto& a : f.atoms()) {
      if (a.side == Side::causal) {
        const double u = t - a.delay;
        if (u >= 0.0) v += a.coeff * std::pow(u, a.power) * std::exp(-a.rate * u);
      } else {
        const double u = a.delay - t;
        if (u >= 0.0) v += a.coeff * std::pow(u, a.power) * std::exp(-a.rate * u);
      }
    }
    return v;
  };
  auto magnitude = [&](double t) { return std::abs(time_value(t)); };

  // Upper incomplete gamma for integer shape: Gamma(p+1, x).
  auto upper_gamma = [](int p, double x) {
    double s = 0.0, term = 1.0;
    for (int k = 0; k <= p; ++k) {
      if (k > 0) term *= x / k;
      s += term;
    }
    return detail::factorial(p) * std::exp(-x) * s;
  };
  auto tail_beyond = [&](double T, bool causal_side) {
    double s = 0.0;
    for (const auto& a : f.atoms()) {
      if ((a.side == Side::causal) != causal_side) continue;
      const double alpha = a.rate.real();
      const double u0 = std::max(0.0, causal_side ? (T - a.delay) : (a.delay - (-T)));
      s += std::abs(a.coeff) * upper_gamma(a.power, alpha * u0) /
           std::pow(alpha, a.power + 1);
    }
    return s;
  };

  bool has_causal = false, has_anti = false;
  double lo = 0.0, hi = 0.0;
  for (const auto& a : f.atoms()) {
    if (a.side == Side::causal) {
      has_causal = true;
      lo = std::min(lo, a.delay);
    } else {
      has_anti = true;
      hi = std::max(hi, a.delay);
    }
  }
  double T_hi = has_causal ? std::max(hi, lo) + 1.0 : hi;
  double T_lo = has_anti ? std::min(lo, hi) - 1.0 : lo;
  double tail = 0.0;
  if (has_causal) {
    while (tail_beyond(T_hi, true) > 0.25 * target && T_hi < 1e6) T_hi *= 2.0;
    tail += tail_beyond(T_hi, true);
  }
  if (has_anti) {
    while (tail_beyond(-T_lo, false) > 0.25 * target && T_lo > -1e6) T_lo *= 2.0;
    tail += tail_beyond(-T_lo, false);
  }

  // adaptive Simpson on |f_a|
  std::function<double(double, double, double, double, double, double, int)> simpson =
      [&](double a, double b, double fa, double fm, double fb, double eps,
          int depth) -> double {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = magnitude(lm), frm = magnitude(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
      return left + right + (left + right - whole) / 15.0;
    return simpson(a, m, fa, flm, fm, 0.5 * eps, depth - 1) +
           simpson(m, b, fm, frm, fb, 0.5 * eps, depth - 1);
  };

  // split at atom delays to keep the integrand piecewise smooth
  std::vector<double> knots{T_lo, T_hi};
  for (const auto& a : f.atoms())
    if (a.delay > T_lo && a.delay < T_hi) knots.push_back(a.delay);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  double integral = 0.0;
  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i], b = knots[i + 1];
    // pre-split each span so Simpson sees the oscillation
    const int pieces = 16;
    for (int j = 0; j < pieces; ++j) {
      const double pa = a + (b - a) * j / pieces;
      const double pb = a + (b - a) * (j + 1) / pieces;
      integral += simpson(pa, pb, magnitude(pa), magnitude(0.5 * (pa + pb)),
                          magnitude(pb), 0.5 * target / (knots.size() * pieces), 28);
    }
  }
  r.value += integral + 0.5 * tail;  // report the tail inside the error band
  r.error = target + 0.5 * tail;
  return r;
}

struct SupNormResult {
  double value{0.0};
  double error{0.0};
  double at_y{0.0};
  bool approximate{false};
};

// sup over the imaginary axis of |F(iy)|.
inline SupNormResult sup_norm_axis(const AElement& f, double tol = 1e-8) {
  SupNormResult r;
  if (f.is_zero()) return r;
  if (f.atoms().empty() && f.ap().size() == 1) {
    r.value = std::abs(f.ap()[0].coeff);
    return r;
  }
  bool approx = false;
  const detail::ScanResult ap_sup =
      f.ap().empty() ? detail::ScanResult{0.0, 0.0}
                     : detail::ap_extremum(f, /*maximize=*/true, &approx);
  r.approximate = approx;
  if (f.atoms().empty()) {
    r.value = ap_sup.value;
    r.at_y = ap_sup.at;
    r.error = approx ? tol : 0.0;
    return r;
  }
  double atom_scale = 0.0;
  for (const auto& a : f.atoms())
    atom_scale += std::abs(a.coeff) * detail::factorial(a.power) /
                  std::pow(a.rate.real(), a.power + 1);
  double tail = 0.0;
  double Y = detail::atom_truncation_radius(
      f, std::max(tol, 0.01 * (detail::l1_ap(f) + atom_scale)), &tail);
  auto eval = [&f](double y) { return f.evaluate(y); };
  const double step = detail::axis_step(f);
  detail::ScanResult grid = detail::scan_modulus(eval, -Y, Y, step, /*maximize=*/true);
  // enlarge until either the tail can't beat the grid max or the tail bound
  // is below tol
  for (int k = 0; k < 6 && ap_sup.value + tail > grid.value + tol; ++k) {
    Y *= 4.0;
    tail = detail::atom_tail_bound(f, Y);
    if (ap_sup.value + tail <= grid.value + tol) break;
  }
  if (ap_sup.value + tail > grid.value) {
    r.value = std::max(grid.value, ap_sup.value);
    r.at_y = grid.value >= ap_sup.value ? grid.at : ap_sup.at;
    r.error = tail + tol;
  } else {
    r.value = grid.value;
    r.at_y = grid.at;
    r.error = tol;
  }
  return r;
}

enum class InvertDecision { invertible, not_invertible, inconclusive };

struct InvertibilityResult {
  InvertDecision decision{InvertDecision::inconclusive};
  double margin{0.0};     // certified lower bound for inf |F(iy)| and inf |F_AP|
  double witness_y{0.0};  // near-vanishing point when not invertible
  double ap_infimum{0.0};
  bool approximate_certificate{false};
};

// Three-way invertibility test in the boundary algebra: F is invertible iff
// F never vanishes on the axis and inf |F_AP| > 0.
inline InvertibilityResult is_invertible(const AElement& f,
                                         double tol = kDefaultInvertTol) {
  InvertibilityResult r;
  if (f.ap().empty()) {
    r.decision = InvertDecision::not_invertible;
    r.margin = 0.0;
    r.witness_y = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  bool approx = false;
  const detail::ScanResult ap_inf = detail::ap_extremum(f, /*maximize=*/false, &approx);
  r.ap_infimum = ap_inf.value;
  r.approximate_certificate = approx;
  if (ap_inf.value <= 1e-10) {
    r.decision = InvertDecision::not_invertible;
    r.margin = ap_inf.value;
    r.witness_y = ap_inf.at;
    return r;
  }
  if (f.atoms().empty()) {
    r.margin = ap_inf.value;
    r.decision = (r.margin > tol) ? InvertDecision::invertible
                                  : InvertDecision::inconclusive;
    return r;
  }
  double tail = 0.0;
  const double cap = 0.01 * ap_inf.value;
  const double Y = detail::atom_truncation_radius(f, cap, &tail);
  auto eval = [&f](double y) { return f.evaluate(y); };
  const double step = detail::axis_step(f);
  const detail::ScanResult grid =
      detail::scan_modulus(eval, -Y, Y, step, /*maximize=*/false);
  const double tail_floor = ap_inf.value - tail;  // lower bound beyond [-Y, Y]
  r.margin = std::min(grid.value, tail_floor);
  r.witness_y = grid.at;
  if (r.margin <= 1e-10) {
    r.decision = InvertDecision::not_invertible;
  } else if (r.margin > tol + tail) {
    r.decision = InvertDecision::invertible;
  } else {
    r.decision = InvertDecision::inconclusive;
  }
  return r;
}

namespace detail {

// Unwrapped phase change of eval along [lo, hi]; splits segments adaptively
// until adjacent samples are less than pi/2 apart in phase.
inline double unwrapped_phase_change(const std::function<Complex(double)>& eval,
                                     double lo, double hi, int base_samples) {
  struct Seg {
    double a, b;
    Complex fa, fb;
    int depth;
  };
  double total = 0.0;
  std::vector<Seg> stack;
  Complex prev = eval(lo);
  for (int i = 0; i < base_samples; ++i) {
    const double a = lo + (hi - lo) * i / base_samples;
    const double b = lo + (hi - lo) * (i + 1) / base_samples;
    stack.push_back({a, b, (i == 0) ? prev : eval(a), eval(b), 0});
    // process immediately, depth-first
    while (!stack.empty()) {
      Seg s = stack.back();
      stack.pop_back();
      if (std::abs(s.fa) < 1e-13 || std::abs(s.fb) < 1e-13)
        throw IndexResolutionError("winding: sample too close to zero");
      const double d = principal_arg_diff(s.fa, s.fb);
      if (std::abs(d) <= M_PI / 2.0 || s.depth >= 48) {
        if (s.depth >= 48)
          throw IndexResolutionError("winding: unresolved phase gap");
        total += d;
      } else {
        const double m = 0.5 * (s.a + s.b);
        const Complex fm = eval(m);
        stack.push_back({m, s.b, fm, s.fb, s.depth + 1});
        stack.push_back({s.a, m, s.fa, fm, s.depth + 1});
      }
    }
  }
  return total;
}

}  // namespace detail

// The index pair W(F) = (average winding of F_AP, integer winding of
// 1 + F_AP^{-1} f_a). Requires a certified-invertible F.
inline IndexPair index_W(const AElement& f, double tol = 1e-4) {
  if (f.ap().empty())
    throw std::domain_error("index_W: almost periodic part vanishes identically");
  IndexPair idx;

  // --- average winding number of the AP part ---
  double dominant = 0.0, rest = 0.0;
  double dominant_delay = 0.0;
  for (const auto& t : f.ap()) {
    const double m = std::abs(t.coeff);
    if (m > dominant) {
      rest += dominant;
      dominant = m;
      dominant_delay = t.delay;
    } else {
      rest += m;
    }
  }
  if (dominant > rest * 1.02 + 1e-14) {
    // a dominant Bohr-Fourier term pins the asymptotic phase slope exactly
    idx.w_av = -dominant_delay;
    idx.w_av_error = 0.0;
  } else {
    auto eval_ap = [&f](double y) { return f.evaluate_ap(y); };
    double omega = 0.0;
    for (const auto& t : f.ap()) omega = std::max(omega, std::abs(t.delay));
    const int per_unit = std::max(8, static_cast<int>(64 * std::max(1.0, omega)));
    double R = 100.0;
    double slope_prev = std::numeric_limits<double>::infinity();
    double slope = 0.0;
    for (int k = 0; k < 12; ++k) {
      const int n = static_cast<int>(std::min(4e6, 2.0 * R * per_unit));
      const double change = detail::unwrapped_phase_change(eval_ap, -R, R, n);
      slope = change / (2.0 * R);
      if (std::abs(slope - slope_prev) < tol) break;
      slope_prev = slope;
      R *= 2.0;
    }
    idx.w_av = slope;
    idx.w_av_error = std::abs(slope - slope_prev);
  }

  // --- integer winding of 1 + F_AP^{-1} f_a ---
  if (f.atoms().empty()) {
    idx.w = 0;
    idx.w_distance = 0.0;
    return idx;
  }
  bool approx = false;
  const detail::ScanResult ap_inf = detail::ap_extremum(f, /*maximize=*/false, &approx);
  if (ap_inf.value <= 1e-10)
    throw std::domain_error("index_W: AP part not bounded away from zero");
  AElement atoms_only = AElement::make({}, f.atoms());
  auto g = [&](double y) {
    return Complex{1.0, 0.0} + atoms_only.evaluate(y) / f.evaluate_ap(y);
  };
  // radius where the atom part is provably small against the AP infimum
  double tail = 0.0;
  double Y = detail::atom_truncation_radius(atoms_only, 0.05 * ap_inf.value, &tail);
  int base = 4096;
  for (int attempt = 0;; ++attempt) {
    double change = 0.0;
    bool resolved = true;
    try {
      change = detail::unwrapped_phase_change(g, -Y, Y, base);
    } catch (const IndexResolutionError&) {
      resolved = false;
    }
    if (resolved) {
      const double full =
          change + std::arg(g(-Y)) - std::arg(g(Y));  // pin ends to the AP-free limit
      const double turns = full / (2.0 * M_PI);
      const int w = static_cast<int>(std::llround(turns));
      const double dist = std::abs(turns - w);
      if (dist <= 0.05) {
        idx.w = w;
        idx.w_distance = dist;
        return idx;
      }
    }
    if (attempt >= 3)
      throw IndexResolutionError(
          "index_W: winding not resolved to an integer after refinement");
    base *= 4;
  }
}

}  // namespace nugap
