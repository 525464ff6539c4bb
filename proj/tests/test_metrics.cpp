#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nugap/metrics.hpp"
#include "oracles.hpp"

using namespace nugap;

namespace {

Plant delay_plant(double r, bool flip_d) {
  const double q = std::sqrt(1.0 - r * r);
  Plant p;
  p.label = flip_d ? "P2" : "P1";
  p.pair.n = AElement::ap_term(r, 1.0);
  p.pair.d = AElement::constant(flip_d ? -q : q);
  p.pair.bezout =
      BezoutPair{AElement::zero(), AElement::constant((flip_d ? -1.0 : 1.0) / q)};
  return p;
}

Plant fo(double a, double b) {
  return make_plant(ncf_first_order(a, b), "fo");
}

}  // namespace

TEST_CASE("delay pair: pairing is the constant 2r^2 - 1") {
  const Plant p1 = delay_plant(0.8, false);
  const Plant p2 = delay_plant(0.8, true);
  const AElement g = pairing_g1star_g2(p1, p2);
  REQUIRE(g.ap().size() == 1);
  REQUIRE(g.atoms().empty());
  CHECK(g.ap()[0].delay == doctest::Approx(0.0));
  CHECK(g.ap()[0].coeff.real() == doctest::Approx(0.28));
  CHECK(g.ap()[0].coeff.imag() == doctest::Approx(0.0));
}

TEST_CASE("delay pair: the two metrics disagree") {
  for (double r : {0.75, 0.8, 0.9}) {
    const Plant p1 = delay_plant(r, false);
    const Plant p2 = delay_plant(r, true);
    const MetricResult a = d_aplus(p1, p2);
    CHECK(a.branch == Branch::finite_branch);
    CHECK(a.value == doctest::Approx(2.0 * r * std::sqrt(1.0 - r * r)).epsilon(1e-9));
    const MetricResult h = d_hinf(p1, p2);
    CHECK(h.branch == Branch::unity_branch);
    CHECK(h.value == 1.0);
    // the unity branch comes from a genuine zero inside the annulus
    CHECK(h.diag.annulus_min_modulus < 1e-8);
  }
}

TEST_CASE("unity branch holds for every tested rho") {
  const Plant p1 = delay_plant(0.8, false);
  const Plant p2 = delay_plant(0.8, true);
  for (double rho : {0.75, 0.8, 0.9, 0.96875}) {
    const MetricResult h = d_hinf_rho(p1, p2, rho);
    CHECK(h.branch == Branch::unity_branch);
    CHECK(h.value == 1.0);
  }
}

TEST_CASE("rational coincidence against the classical oracle") {
  const double pairs[5][4] = {{1.0, 1.0, 1.0, 2.0},
                              {1.0, 1.0, 1.5, 1.2},
                              {0.5, 2.0, 0.7, 1.8},
                              {2.0, 1.0, 2.0, 1.3},
                              {-1.0, 2.0, -1.0, 2.5}};
  for (const auto& q : pairs) {
    const Plant p1 = fo(q[0], q[1]);
    const Plant p2 = fo(q[2], q[3]);
    const MetricResult a = d_aplus(p1, p2);
    const MetricResult h = d_hinf(p1, p2);
    const oracle::ClassicalNu nu =
        oracle::classical_nu_first_order(q[0], q[1], q[2], q[3]);
    REQUIRE(nu.finite);
    CHECK(std::abs(a.value - h.value) < 2e-3);
    CHECK(std::abs(a.value - nu.value) < 2e-3);
    CHECK(std::abs(h.value - nu.value) < 2e-3);
  }
}

TEST_CASE("self distance and symmetry") {
  const std::vector<Plant> plants = {delay_plant(0.8, false), fo(1.0, 1.0),
                                     fo(0.5, 2.0), fo(-1.0, 2.0)};
  for (const auto& p : plants) {
    CHECK(d_aplus(p, p).value < 1e-9);
    CHECK(d_hinf(p, p).value < 1e-9);
  }
  for (size_t i = 0; i < plants.size(); ++i)
    for (size_t j = i + 1; j < plants.size(); ++j) {
      CHECK(std::abs(d_aplus(plants[i], plants[j]).value -
                     d_aplus(plants[j], plants[i]).value) < 1e-6);
      CHECK(std::abs(d_hinf(plants[i], plants[j]).value -
                     d_hinf(plants[j], plants[i]).value) < 1e-6);
    }
}

TEST_CASE("winding obstruction forces the unity branch") {
  // P1 = 2 e^{-s tau}, P2 = -1/2 e^{-s tau}: the pairing vanishes identically
  const Plant p1 = make_plant(ncf_gain_delay(2.0, 1.0), "p1");
  const Plant p2 = make_plant(ncf_gain_delay(-0.5, 1.0), "p2");
  const AElement g = pairing_g1star_g2(p1, p2);
  CHECK(g.is_zero());
  const MetricResult a = d_aplus(p1, p2);
  CHECK(a.branch == Branch::unity_branch);
  CHECK(a.value == 1.0);
  CHECK(d_hinf(p1, p2).value == 1.0);
}

TEST_CASE("annulus winding is radius-constant on invertible fields") {
  const Plant p1 = fo(1.0, 1.0);
  const Plant p2 = fo(1.2, 1.4);
  for (double rho : {0.75, 0.9375}) {
    const AnnulusField field = annulus_eval(p1, p2, default_probe(rho));
    const AnnulusIndex idx = annulus_index(field);
    CHECK(idx.resolved);
    CHECK(idx.constancy_ok);
    CHECK(idx.winding == 0);
    CHECK(idx.min_modulus > 0.1);
  }
}

TEST_CASE("rho trace is monotone and stabilizes") {
  const std::pair<Plant, Plant> cases[] = {
      {delay_plant(0.8, false), delay_plant(0.8, true)},
      {fo(1.0, 1.0), fo(1.0, 2.0)},
      {fo(0.5, 2.0), fo(0.7, 1.8)}};
  for (const auto& [p1, p2] : cases) {
    const MetricResult h = d_hinf(p1, p2);
    const auto& tr = h.diag.rho_trace;
    REQUIRE(tr.size() >= 2);
    CHECK(tr.size() <= 11);  // dyadic steps k = 2..12
    for (size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] <= tr[i - 1] + 1e-8);
    bool stabilized = false;
    for (const auto& fl : h.diag.flags)
      if (fl == "rho trace not stabilized") stabilized = false;
    CHECK(std::abs(tr[tr.size() - 1] - tr[tr.size() - 2]) < 1e-4);
    (void)stabilized;
  }
}

TEST_CASE("gap bounds bracket and degenerate to zero on equal plants") {
  const Plant p = fo(1.0, 1.0);
  Plant c0;
  c0.label = "zero";
  c0.pair.n = AElement::zero();
  c0.pair.d = AElement::constant(1.0);
  const GapInterval g_same = gap_bounds(p, p, {c0});
  CHECK(g_same.lo < 1e-9);
  CHECK(g_same.hi < 1e-9);

  const Plant p2 = fo(1.0, 2.0);
  const GapInterval g = gap_bounds(p, p2, {c0});
  CHECK(g.lo <= g.hi + 1e-9);
  CHECK(g.lo == doctest::Approx(d_aplus(p, p2).value));
}

TEST_CASE("gap upper bound rejects non-stabilizing controllers") {
  // C = 0 cannot stabilize P = 1/(s-1): K~0 G1 = D has a zero in the right
  // half plane, detected through the nonzero index
  const Plant p = fo(-1.0, 1.0);
  Plant c0;
  c0.pair.n = AElement::zero();
  c0.pair.d = AElement::constant(1.0);
  const GapBoundResult b = gap_upper_bound(p, fo(-1.0, 1.2), c0);
  CHECK(!b.ok);
}
