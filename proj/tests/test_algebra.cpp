#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "nugap/algebra.hpp"
#include "oracles.hpp"

using namespace nugap;

namespace {

AElement random_element(std::mt19937& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::vector<APTerm> ap;
  const int n_ap = static_cast<int>(unit(rng) * 4);
  for (int i = 0; i < n_ap; ++i)
    ap.push_back({Complex{sym(rng), sym(rng)}, 4.0 * unit(rng)});
  std::vector<FourierAtom> atoms;
  const int n_at = static_cast<int>(unit(rng) * 3);
  for (int i = 0; i < n_at; ++i)
    atoms.push_back({Complex{sym(rng), sym(rng)}, 2.0 * unit(rng),
                     Complex{0.3 + 2.0 * unit(rng), 3.0 * sym(rng)},
                     static_cast<int>(unit(rng) * 3),
                     unit(rng) < 0.5 ? Side::causal : Side::anticausal});
  return AElement::make(ap, atoms);
}

}  // namespace

TEST_CASE("evaluation matches the direct oracle") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> ys(-30.0, 30.0);
  for (int trial = 0; trial < 20; ++trial) {
    const AElement f = random_element(rng);
    for (int i = 0; i < 50; ++i) {
      const double y = ys(rng);
      CHECK(std::abs(f.evaluate(y) - oracle::eval(f, y)) < 1e-12);
    }
  }
}

TEST_CASE("add and multiply are pointwise homomorphisms") {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> ys(-25.0, 25.0);
  for (int trial = 0; trial < 20; ++trial) {
    const AElement f = random_element(rng);
    const AElement g = random_element(rng);
    const AElement s = f + g;
    const AElement p = f * g;
    for (int i = 0; i < 50; ++i) {
      const double y = ys(rng);
      const Complex fv = f.evaluate(y), gv = g.evaluate(y);
      CHECK(std::abs(s.evaluate(y) - (fv + gv)) < 1e-10);
      CHECK(std::abs(p.evaluate(y) - fv * gv) < 1e-8);
    }
  }
}

TEST_CASE("partial fraction split of 1/((s+1)(s+2))") {
  const AElement a = AElement::atom(1.0, 0.0, 1.0, 0, Side::causal);
  const AElement b = AElement::atom(1.0, 0.0, 2.0, 0, Side::causal);
  const AElement p = a * b;
  // 1/((s+1)(s+2)) = 1/(s+1) - 1/(s+2)
  const AElement expect = AElement::atom(1.0, 0.0, 1.0, 0, Side::causal) +
                          AElement::atom(-1.0, 0.0, 2.0, 0, Side::causal);
  CHECK(approx_equal(p, expect, 1e-12));
}

TEST_CASE("equal rates raise the power") {
  const AElement a = AElement::atom(1.0, 0.0, 1.5, 0, Side::causal);
  const AElement p = a * a;
  REQUIRE(p.atoms().size() == 1);
  CHECK(p.atoms()[0].power == 1);
  for (double y : {-3.0, 0.0, 0.7, 5.0}) {
    const Complex direct = 1.0 / ((Complex{0.0, y} + 1.5) * (Complex{0.0, y} + 1.5));
    CHECK(std::abs(p.evaluate(y) - direct) < 1e-13);
  }
}

TEST_CASE("conjugation is an involution and matches pointwise conjugation") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const AElement f = random_element(rng);
    CHECK(approx_equal(conjugate(conjugate(f)), f, 1e-13));
    for (double y : {-7.3, -1.0, 0.0, 0.5, 12.0})
      CHECK(std::abs(conjugate(f).evaluate(y) - std::conj(f.evaluate(y))) < 1e-12);
  }
}

TEST_CASE("plus elements extend holomorphically, conjugates by reflection") {
  const AElement f =
      AElement::ap_term(0.8, 1.0) + AElement::atom(1.0, 0.5, 2.0, 1, Side::causal);
  REQUIRE(f.is_plus());
  const Complex s{0.7, 2.0};
  const Complex direct = 0.8 * std::exp(-s) + std::exp(-0.5 * s) / ((s + 2.0) * (s + 2.0));
  CHECK(std::abs(f.evaluate_rhp(s) - direct) < 1e-13);
  const AElement g = conjugate(f);
  REQUIRE(g.is_conj_extension());
  CHECK(std::abs(g.evaluate_rhp(s) - std::conj(f.evaluate_rhp(s))) < 1e-13);
  // both agree with the axis values at the boundary
  CHECK(std::abs(g.evaluate_rhp(Complex{0.0, 3.0}) - g.evaluate(3.0)) < 1e-12);
}

TEST_CASE("canonicalization merges delays and drops dust") {
  const AElement f = AElement::ap_term(1.0, 2.0) + AElement::ap_term(-1.0, 2.0) +
                     AElement::ap_term(0.5, 1.0);
  REQUIRE(f.ap().size() == 1);
  CHECK(f.ap()[0].delay == doctest::Approx(1.0));
}

TEST_CASE("norm_A on closed forms") {
  // ||e^{-2t}||_1 = 1/2
  const ValueWithError n1 = norm_A(AElement::atom(1.0, 0.0, 2.0, 0, Side::causal));
  CHECK(n1.value == doctest::Approx(0.5).epsilon(1e-6));
  // ||t e^{-t}||_1 = 1 and the atom carries coeff 1 so F = 1/(s+1)^2
  const ValueWithError n2 = norm_A(AElement::atom(1.0, 0.0, 1.0, 1, Side::causal));
  CHECK(n2.value == doctest::Approx(1.0).epsilon(1e-6));
  // AP part contributes ell^1 of coefficients
  const ValueWithError n3 = norm_A(AElement::ap_term(Complex{3.0, 4.0}, 1.0) +
                                   AElement::ap_term(2.0, 7.0));
  CHECK(n3.value == doctest::Approx(7.0));
}

TEST_CASE("norm_A is submultiplicative") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const AElement f = random_element(rng);
    const AElement g = random_element(rng);
    const ValueWithError nf = norm_A(f), ng = norm_A(g), np = norm_A(f * g);
    CHECK(np.value <= nf.value * ng.value + np.error + 1e-6 +
                          nf.error * ng.value + ng.error * nf.value);
  }
}

TEST_CASE("sup_norm_axis matches dense scanning") {
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> ys(-200.0, 200.0);
  for (int trial = 0; trial < 10; ++trial) {
    const AElement f = random_element(rng);
    if (f.is_zero()) continue;
    const SupNormResult s = sup_norm_axis(f);
    double dense = 0.0;
    for (int i = 0; i <= 400000; ++i)
      dense = std::max(dense, std::abs(oracle::eval(f, -200.0 + i * 0.001)));
    CHECK(s.value >= dense - 1e-6);
    CHECK(dense >= 0.2 * s.value - 1e-9);  // dense window can miss AP peaks
  }
}

TEST_CASE("invertibility three-way decisions") {
  // 1 - e^{-s} vanishes at y = 0
  const AElement bad = AElement::constant(1.0) + AElement::ap_term(-1.0, 1.0);
  const InvertibilityResult rb = is_invertible(bad);
  CHECK(rb.decision == InvertDecision::not_invertible);

  const AElement good = AElement::constant(2.0) + AElement::ap_term(0.5, 1.0) +
                        AElement::atom(0.3, 0.0, 1.0, 0, Side::causal);
  const InvertibilityResult rg = is_invertible(good);
  CHECK(rg.decision == InvertDecision::invertible);
  CHECK(rg.margin > 1.0);

  // atom-only elements always fail the AP infimum requirement
  const AElement atom_only = AElement::atom(1.0, 0.0, 1.0, 0, Side::causal);
  CHECK(is_invertible(atom_only).decision == InvertDecision::not_invertible);
}

TEST_CASE("index pair on closed forms") {
  // pure delay: w_av = -delay, no atoms
  const IndexPair i1 = index_W(AElement::ap_term(0.7, 2.5));
  CHECK(i1.w_av == doctest::Approx(-2.5));
  CHECK(i1.w == 0);

  // (s+1)/(s+2) = 1 - 1/(s+2): outer, w = 0
  const AElement outer =
      AElement::constant(1.0) + AElement::atom(-1.0, 0.0, 2.0, 0, Side::causal);
  const IndexPair i2 = index_W(outer);
  CHECK(i2.w == 0);
  CHECK(std::abs(i2.w_av) < 1e-9);

  // (s-1)/(s+2) = 1 - 3/(s+2): one right-half-plane zero
  const AElement inner =
      AElement::constant(1.0) + AElement::atom(-3.0, 0.0, 2.0, 0, Side::causal);
  const IndexPair i3 = index_W(inner);
  CHECK(i3.w == oracle::winding(inner, 2000.0, 800000));
  CHECK(i3.w != 0);
}

TEST_CASE("index additivity under multiplication") {
  const AElement f = AElement::ap_term(1.0, 1.0) +
                     AElement::atom(0.3, 0.0, 1.0, 0, Side::causal);
  const AElement g =
      AElement::constant(1.0) + AElement::atom(-3.0, 0.0, 2.0, 0, Side::causal);
  const IndexPair wf = index_W(f);
  const IndexPair wg = index_W(g);
  const IndexPair wfg = index_W(f * g);
  CHECK(wfg.w_av == doctest::Approx(wf.w_av + wg.w_av).epsilon(1e-4));
  CHECK(wfg.w == wf.w + wg.w);
}

TEST_CASE("index_W agrees with the unwrap oracle on random invertible elements") {
  std::mt19937 rng(2024);
  int done = 0;
  while (done < 25) {
    const AElement f = oracle::random_invertible(rng);
    if (is_invertible(f).decision != InvertDecision::invertible) continue;
    IndexPair idx;
    try {
      idx = index_W(f);
    } catch (const IndexResolutionError&) {
      continue;
    }
    CHECK(idx.w == oracle::winding(f, 3000.0, 600000));
    CHECK(std::abs(idx.w_av - oracle::average_winding(f)) < 1e-2);
    ++done;
  }
}
