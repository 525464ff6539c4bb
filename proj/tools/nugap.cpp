// nugap command line front end.
//
// Exit codes: 0 success, 1 input error, 2 inconclusive certificate,
// 3 assertion failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nugap/metrics.hpp"
#include "nugap/plant_spec.hpp"
#include "nugap/stability.hpp"

namespace {

using namespace nugap;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitAssertion = 3;

// A spec argument is either inline text or the path of a file holding it.
std::string load_spec_text(const std::string& arg) {
  std::ifstream in(arg);
  if (in.good()) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return arg;
}

Plant plant_from_arg(const std::string& arg, bool validate = true) {
  return build_plant(parse_spec(load_spec_text(arg)), validate);
}

Plant zero_controller() {
  Plant c;
  c.label = "zero controller";
  c.pair.n = AElement::zero();
  c.pair.d = AElement::constant(1.0);
  c.pair.bezout = BezoutPair{AElement::zero(), AElement::constant(1.0)};
  return c;
}

std::vector<Plant> load_controllers(const std::vector<std::string>& args) {
  std::vector<Plant> out;
  if (args.empty()) {
    out.push_back(zero_controller());
    return out;
  }
  for (const auto& a : args) out.push_back(plant_from_arg(a));
  return out;
}

bool has_flag(const MetricResult& r, const char* flag) {
  return std::find(r.diag.flags.begin(), r.diag.flags.end(), flag) !=
         r.diag.flags.end();
}

bool inconclusive(const MetricResult& r) {
  return has_flag(r, "inconclusive") || has_flag(r, "index resolution failure") ||
         has_flag(r, "unresolved annulus winding") ||
         has_flag(r, "rho trace not stabilized");
}

std::string metric_row(const std::string& metric, const MetricResult& r) {
  return csv_row({metric, detail::fmt_g12(r.value),
                  r.branch == Branch::finite_branch ? "finite" : "unity",
                  detail::fmt_g12(r.diag.invert_margin),
                  detail::fmt_g12(r.diag.index ? r.diag.index->w_av : 0.0),
                  std::to_string(r.diag.index ? r.diag.index->w : 0),
                  detail::fmt_g12(r.diag.error_bound)});
}

int cmd_dist(const std::string& s1, const std::string& s2,
             const std::string& metric, double rho,
             const std::vector<std::string>& controller_args, double tol,
             std::ostream& os) {
  const Plant p1 = plant_from_arg(s1);
  const Plant p2 = plant_from_arg(s2);
  os << "metric,value,branch,margin,index_wav,index_w,error_bound";
  os << "\n";
  if (metric == "aplus") {
    const MetricResult r = d_aplus(p1, p2, tol);
    os << metric_row(metric, r);
    return inconclusive(r) ? kExitInconclusive : kExitOk;
  }
  if (metric == "hinf") {
    const MetricResult r = d_hinf(p1, p2);
    os << metric_row(metric, r);
    return inconclusive(r) ? kExitInconclusive : kExitOk;
  }
  if (metric == "hinf_rho") {
    const MetricResult r = d_hinf_rho(p1, p2, rho);
    os << metric_row(metric + ":" + detail::fmt_g12(rho), r);
    return inconclusive(r) ? kExitInconclusive : kExitOk;
  }
  if (metric == "gap") {
    const GapInterval g = gap_bounds(p1, p2, load_controllers(controller_args));
    os << csv_row({"gap_lo", detail::fmt_g12(g.lo), "finite", "0", "0", "0", "0"});
    os << csv_row({"gap_hi", detail::fmt_g12(g.hi), "finite", "0", "0", "0", "0"});
    return kExitOk;
  }
  std::cerr << "unknown metric '" << metric << "'\n";
  return kExitInput;
}

int cmd_margin(const std::string& ps, const std::string& cs, double tol,
               std::ostream& os) {
  const Plant p = plant_from_arg(ps);
  const Plant c = plant_from_arg(cs);
  const MarginReport m = mu(p, c, tol);
  const char* stab = m.stabilizing == Stabilizing::yes
                         ? "yes"
                         : m.stabilizing == Stabilizing::no ? "no" : "inconclusive";
  os << "mu,stabilizing,sup_sigma,approximate\n";
  os << csv_row({detail::fmt_g12(m.mu), stab, detail::fmt_g12(m.sup_sigma),
                 m.approximate_certificate ? "1" : "0"});
  return m.stabilizing == Stabilizing::inconclusive ? kExitInconclusive : kExitOk;
}

int cmd_winding(const std::string& arg, std::ostream& os) {
  // reuse the explicit-plant list syntax for a single element
  const std::string text = load_spec_text(arg);
  const PlantSpec spec = parse_spec("kind=explicit " + text);
  const auto& e = std::get<ExplicitSpec>(spec.kind);
  const AElement f = AElement::make(e.n_ap, e.n_atoms);
  const InvertibilityResult inv = is_invertible(f);
  os << "invertible,margin,index_wav,index_w,wav_error\n";
  if (inv.decision != InvertDecision::invertible) {
    const bool definite = inv.decision == InvertDecision::not_invertible;
    os << csv_row({definite ? "no" : "inconclusive", detail::fmt_g12(inv.margin),
                   "0", "0", "0"});
    return definite ? kExitOk : kExitInconclusive;
  }
  try {
    const IndexPair idx = index_W(f);
    os << csv_row({"yes", detail::fmt_g12(inv.margin),
                   detail::fmt_g12(idx.w_av), std::to_string(idx.w),
                   detail::fmt_g12(idx.w_av_error)});
    return kExitOk;
  } catch (const IndexResolutionError& e) {
    std::cerr << "index resolution failure: " << e.what() << "\n";
    return kExitInconclusive;
  }
}

int cmd_verify_ncf(const std::string& arg, std::ostream& os) {
  const Plant p = plant_from_arg(arg, /*validate=*/false);
  const NcfReport rep = verify_ncf(p.pair);
  os << "pass,max_normalization_dev,max_bezout_dev,bezout_checked\n";
  os << csv_row({rep.pass ? "1" : "0", detail::fmt_g12(rep.max_normalization_dev),
                 detail::fmt_g12(rep.max_bezout_dev),
                 rep.bezout_checked ? "1" : "0"});
  return rep.pass ? kExitOk : kExitAssertion;
}

Plant noncoincidence_plant(double r, bool flip_d) {
  const double q = std::sqrt(1.0 - r * r);
  Plant p;
  p.label = flip_d ? "P2" : "P1";
  p.pair.n = AElement::ap_term(r, 1.0);
  p.pair.d = AElement::constant(flip_d ? -q : q);
  p.pair.bezout =
      BezoutPair{AElement::zero(), AElement::constant((flip_d ? -1.0 : 1.0) / q)};
  return p;
}

int cmd_verify_example(std::ostream& os) {
  os << "r,d_aplus,d_aplus_expected,d_hinf,branch_aplus,branch_hinf\n";
  for (double r : {0.8, 0.9}) {
    const Plant p1 = noncoincidence_plant(r, false);
    const Plant p2 = noncoincidence_plant(r, true);
    const MetricResult a = d_aplus(p1, p2);
    const MetricResult h = d_hinf(p1, p2);
    const double expect = 2.0 * r * std::sqrt(1.0 - r * r);
    os << csv_row({detail::fmt_g12(r), detail::fmt_g12(a.value),
                   detail::fmt_g12(expect), detail::fmt_g12(h.value),
                   a.branch == Branch::finite_branch ? "finite" : "unity",
                   h.branch == Branch::finite_branch ? "finite" : "unity"});
    if (std::abs(a.value - expect) > 1e-6) {
      std::cerr << "assertion failed: d_aplus at r=" << r << " is " << a.value
                << ", expected " << expect << "\n";
      return kExitAssertion;
    }
    if (h.value != 1.0 || h.branch != Branch::unity_branch) {
      std::cerr << "assertion failed: d_hinf at r=" << r << " is " << h.value
                << ", expected 1 (unity branch)\n";
      return kExitAssertion;
    }
  }
  return kExitOk;
}

int cmd_sweep(const std::string& param, double start, double stop, int count,
              const std::vector<std::string>& controller_args,
              const std::string& out_path) {
  if (count < 2) {
    std::cerr << "sweep: count must be >= 2\n";
    return kExitInput;
  }
  if (!(start < stop)) {
    std::cerr << "sweep: start must be < stop\n";
    return kExitInput;
  }
  std::ostringstream os;
  os << param
     << ",d_aplus,d_hinf,gap_lo,gap_hi,mu_lb,lower_slack,upper_slack\n";
  for (int i = 0; i < count; ++i) {
    const double v = start + (stop - start) * i / (count - 1);
    Plant p1, p2;
    std::vector<Plant> controllers = load_controllers(controller_args);
    if (param == "r") {
      if (!(v > 0.0 && v < 1.0)) {
        std::cerr << "sweep: r values must lie in (0,1)\n";
        return kExitInput;
      }
      p1 = noncoincidence_plant(v, false);
      p2 = noncoincidence_plant(v, true);
    } else if (param == "b") {
      if (v == 0.0) {
        std::cerr << "sweep: b values must be nonzero\n";
        return kExitInput;
      }
      p1 = make_plant(ncf_first_order(1.0, 1.0), "first_order(1,1)");
      p2 = make_plant(ncf_first_order(1.0, v), "first_order(1,b)");
      if (controller_args.empty()) {
        Plant cb;
        cb.label = "bezout controller";
        // X N + Y D = 1 certifies C = -X / Y under the Y D - X N convention
        cb.pair.n = negate(p1.pair.bezout->x);
        cb.pair.d = p1.pair.bezout->y;
        controllers.push_back(cb);
      }
    } else {
      std::cerr << "sweep: unknown parameter '" << param << "'\n";
      return kExitInput;
    }
    const EquivalenceReport eq = equivalence_report(p1, p2, controllers);
    // slacks in the sandwich mu_lb * d_aplus <= d_hinf <= d_aplus / mu_lb
    const double lower_slack =
        eq.d_hinf_value - eq.mu_lower_bound * eq.d_aplus_value;
    const double upper_slack =
        eq.vacuous ? 1.0
                   : eq.d_aplus_value / eq.mu_lower_bound - eq.d_hinf_value;
    os << csv_row({detail::fmt_g12(v), detail::fmt_g12(eq.d_aplus_value),
                   detail::fmt_g12(eq.d_hinf_value), detail::fmt_g12(eq.d_aplus_value),
                   detail::fmt_g12(eq.gap_hi), detail::fmt_g12(eq.mu_lower_bound),
                   detail::fmt_g12(lower_slack), detail::fmt_g12(upper_slack)});
  }
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(out_path);
    if (!f.good()) {
      std::cerr << "sweep: cannot open output path '" << out_path << "'\n";
      return kExitInput;
    }
    f << os.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nu-metric extensions, gap bounds and stability margins"};
  app.require_subcommand(1);

  std::string spec1, spec2, metric = "aplus", param = "r", out_path;
  std::vector<std::string> controller_args;
  double rho = 0.9, tol = nugap::kDefaultInvertTol;
  double start = 0.0, stop = 0.0;
  int count = 0;

  auto* dist = app.add_subcommand("dist", "distance between two plants");
  dist->add_option("plant1", spec1, "plant spec (inline or file)")->required();
  dist->add_option("plant2", spec2, "plant spec (inline or file)")->required();
  dist->add_option("--metric", metric, "aplus|hinf|hinf_rho|gap");
  dist->add_option("--rho", rho, "annulus inner radius for hinf_rho");
  dist->add_option("--tol", tol, "invertibility tolerance");
  dist->add_option("--controllers", controller_args,
                   "controller specs for gap upper bounds");

  auto* margin = app.add_subcommand("margin", "stability margin mu(P,C)");
  margin->add_option("plant", spec1, "plant spec")->required();
  margin->add_option("controller", spec2, "controller spec (N=X, D=Y)")->required();
  margin->add_option("--tol", tol, "invertibility tolerance");

  auto* sweep = app.add_subcommand("sweep", "parameter sweep with metric columns");
  sweep->add_option("--param", param, "r (delay pair) or b (first-order pair)");
  sweep->add_option("--start", start)->required();
  sweep->add_option("--stop", stop)->required();
  sweep->add_option("--count", count)->required();
  sweep->add_option("--controllers", controller_args, "controller specs");
  sweep->add_option("--out", out_path, "output CSV path (default stdout)");

  auto* winding = app.add_subcommand("winding", "index of an algebra element");
  winding->add_option("element", spec1,
                      "element as n_ap=[(c,delay)..] n_atoms=[..]")
      ->required();

  app.add_subcommand("verify-example", "reproduce the delay-pair noncoincidence");

  auto* vncf = app.add_subcommand("verify-ncf", "check a factorization");
  vncf->add_option("plant", spec1, "plant spec")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (dist->parsed())
      return cmd_dist(spec1, spec2, metric, rho, controller_args, tol, std::cout);
    if (margin->parsed()) return cmd_margin(spec1, spec2, tol, std::cout);
    if (sweep->parsed())
      return cmd_sweep(param, start, stop, count, controller_args, out_path);
    if (winding->parsed()) return cmd_winding(spec1, std::cout);
    if (app.get_subcommand("verify-example")->parsed())
      return cmd_verify_example(std::cout);
    if (vncf->parsed()) return cmd_verify_ncf(spec1, std::cout);
  } catch (const nugap::SpecParseException& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nugap::PlantBuildError& e) {
    std::cerr << "invalid plant: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAssertion;
  }
  return kExitInput;
}
