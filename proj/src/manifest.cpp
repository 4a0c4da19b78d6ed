#include "xformlab/manifest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "xformlab/carleman.hpp"
#include "xformlab/core.hpp"
#include "xformlab/evolve.hpp"
#include "xformlab/expression.hpp"
#include "xformlab/goursat.hpp"
#include "xformlab/io.hpp"
#include "xformlab/recon.hpp"
#include "xformlab/svg.hpp"
#include "xformlab/transform.hpp"

namespace xformlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Algebraic tolerance for one Crank-Nicolson step, relative to max|u|.
constexpr Real kSolverTolerance = 1e-10;
constexpr Real kZeroKernel = 1e-12;

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

class Params {
 public:
  Params(const json& j, fs::path base, std::string kind)
      : j_(j), base_(std::move(base)), kind_(std::move(kind)) {
    if (!j_.is_object()) throw ValidationError("'parameters' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!has(key)) {
      throw ValidationError("kind '" + kind_ + "' requires parameter '" + key + "'");
    }
    used_.insert(key);
    return j_.at(key);
  }

  Real real(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ValidationError("parameter '" + key + "' must be a number");
    const Real r = v.get<Real>();
    if (!std::isfinite(r)) throw ValidationError("parameter '" + key + "' must be finite");
    return r;
  }
  Real real(const std::string& key, Real fallback) { return has(key) ? real(key) : fallback; }

  int integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ValidationError("parameter '" + key + "' must be an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

  std::uint64_t seed(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_unsigned()) {
      throw ValidationError("parameter '" + key + "' must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ValidationError("parameter '" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ValidationError("parameter '" + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<Real> reals(const std::string& key) {
    const json& v = raw(key);
    std::vector<Real> out;
    if (v.is_number()) {
      out.push_back(v.get<Real>());
    } else if (v.is_array() && !v.empty()) {
      for (const json& e : v) {
        if (!e.is_number()) throw ValidationError("parameter '" + key + "' must hold numbers");
        out.push_back(e.get<Real>());
      }
    } else {
      throw ValidationError("parameter '" + key + "' must be a number or a nonempty array");
    }
    return out;
  }

  const fs::path& base() const { return base_; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) {
        throw ValidationError("unknown parameter '" + key + "' for kind '" + kind_ + "'");
      }
    }
  }

 private:
  json j_;
  fs::path base_;
  std::string kind_;
  std::set<std::string> used_;
};

SpaceGrid space_grid(Params& p) {
  const Real ell = p.real("ell", 1.0);
  const int n = p.integer("n");
  if (!(ell > 0.0)) throw ValidationError("ell must be positive");
  if (n < kMinIntervals) throw ValidationError("n must be at least 8");
  return {ell, n};
}

TimeGrid time_grid(Params& p) {
  const Real horizon = p.real("horizon");
  const int m = p.integer("m");
  if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
  if (m < kMinIntervals) throw ValidationError("m must be at least 8");
  return {horizon, m};
}

Sigma sigma_param(Params& p) {
  if (!p.has("sigma")) return Sigma::parabolic();
  const json& v = p.raw("sigma");
  Real re = 0.0, im = 0.0;
  if (v.is_number()) {
    re = v.get<Real>();
  } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    re = v[0].get<Real>();
    im = v[1].get<Real>();
  } else if (v.is_object() && v.contains("re") && v.contains("im")) {
    re = v.at("re").get<Real>();
    im = v.at("im").get<Real>();
  } else {
    throw ValidationError("parameter 'sigma' must be a number, [re, im] or {re, im}");
  }
  return {re, im};
}

void require_forward_sigma(const Sigma& s) {
  if (s.re() < 0.0) throw ValidationError("sigma with negative real part is not simulated");
}

CoefficientField coefficient(Params& p, const std::string& key, const SpaceGrid& grid, Role role) {
  const json& v = p.raw(key);
  try {
    if (v.is_string()) {
      return sample_coefficient(parse_coefficient_expression(v.get<std::string>()), grid, role);
    }
    if (v.is_number()) {
      const Real c = v.get<Real>();
      return sample_coefficient([c](Real) { return c; }, grid, role);
    }
    if (v.is_object() && v.contains("csv") && v.at("csv").is_string()) {
      return read_coefficient_csv(p.base() / v.at("csv").get<std::string>(), grid, role);
    }
  } catch (const ValidationError& e) {
    throw ValidationError("parameter '" + key + "': " + e.what());
  }
  throw ValidationError("parameter '" + key + "' must be an expression, a number or {\"csv\": path}");
}

BoundaryCondition bc_side(const json& v, const char* side) {
  if (!v.is_string()) throw ValidationError(std::string("bc.") + side + " must be a string");
  const std::string s = v.get<std::string>();
  if (s == "dirichlet") return BoundaryCondition::dirichlet();
  if (s == "neumann") return BoundaryCondition::neumann();
  throw ValidationError(std::string("bc.") + side + " must be 'dirichlet' or 'neumann'");
}

BoundaryConditionSpec bc_param(Params& p) {
  BoundaryConditionSpec bc;
  if (!p.has("bc")) return bc;
  const json& v = p.raw("bc");
  if (!v.is_object()) throw ValidationError("parameter 'bc' must be an object");
  for (const auto& [key, value] : v.items()) {
    if (key == "left") {
      bc.left = bc_side(value, "left");
    } else if (key == "right") {
      bc.right = bc_side(value, "right");
    } else {
      throw ValidationError("unknown bc side '" + key + "'");
    }
  }
  return bc;
}

Anchor anchor_param(Params& p, const Sigma& sigma) {
  const std::string s = p.text("anchor", "start");
  if (s == "start") return Anchor::Start;
  if (s != "end") throw ValidationError("parameter 'anchor' must be 'start' or 'end'");
  if (sigma.re() != 0.0) {
    throw ValidationError("anchor 'end' requires purely imaginary sigma");
  }
  return Anchor::End;
}

std::vector<Real> to_std(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<Real> real_parts(const ComplexVector& v) {
  std::vector<Real> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

std::vector<Real> imag_parts(const ComplexVector& v) {
  std::vector<Real> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i].imag();
  return out;
}

struct RunContext {
  fs::path dir;
  json checks = json::object();
  json metrics = json::object();
  std::vector<std::string> artifacts;
  std::string stage = "setup";

  void write(const std::string& name, const std::string& content) {
    write_text(dir / name, content);
    artifacts.push_back(name);
  }
  void check(const std::string& name, bool ok) { checks[name] = ok; }
  void metric(const std::string& name, const json& value) { metrics[name] = value; }
};

using Runner = std::function<void(RunContext&)>;

std::string trace_svg(const CauchyTrace& trace, const std::string& title) {
  const std::vector<Real> t = to_std(trace.tgrid.nodes());
  std::vector<PlotSeries> series{{"Re u(t,0)", t, real_parts(trace.u0)},
                                 {"Re u_x(t,0)", t, real_parts(trace.ux0)}};
  if (trace.u0.imag().cwiseAbs().maxCoeff() > 0.0 || trace.ux0.imag().cwiseAbs().maxCoeff() > 0.0) {
    series.push_back({"Im u(t,0)", t, imag_parts(trace.u0)});
    series.push_back({"Im u_x(t,0)", t, imag_parts(trace.ux0)});
  }
  return line_plot_svg({title, "t", "trace"}, series);
}

Runner plan_forward(Params& p) {
  const SpaceGrid s = space_grid(p);
  const TimeGrid t = time_grid(p);
  const Sigma sigma = sigma_param(p);
  require_forward_sigma(sigma);
  const CoefficientField a = coefficient(p, "a", s, Role::Diffusion);
  const CoefficientField pp = coefficient(p, "p", s, Role::PotentialP);
  const CoefficientField b = coefficient(p, "b", s, Role::Initial);
  const BoundaryConditionSpec bc = bc_param(p);
  const Anchor anchor = anchor_param(p, sigma);
  p.finish();
  return [=](RunContext& ctx) {
    ctx.stage = "forward solve";
    const EvolutionField u = forward_solve_anchored(sigma, a, pp, b, bc, t, anchor);
    const CauchyTrace trace = extract_cauchy_trace(u);
    ctx.stage = "export";
    ctx.write("evolution.csv", evolution_csv(u));
    ctx.write("trace.csv", trace_csv(trace));
    ctx.write("trace.svg", trace_svg(trace, "Cauchy trace at x = 0"));
    ctx.stage = "checks";
    const Real step = step_residual(u, sigma, a, pp, bc);
    const Real scale = u.values.cwiseAbs().maxCoeff();
    ctx.metric("max_abs_u", scale);
    ctx.metric("step_residual", step);
    ctx.metric("pde_residual", pde_residual(u, sigma, a, pp));
    ctx.metric("residual_gate", residual_gate(s, t, residual_scale(u, a)));
    ctx.check("finite", u.values.allFinite());
    ctx.check("solver_residual", step <= kSolverTolerance);
  };
}

Runner plan_kernel(Params& p) {
  const SpaceGrid s = space_grid(p);
  const CoefficientField a = coefficient(p, "a", s, Role::Diffusion);
  const CoefficientField pp = coefficient(p, "p", s, Role::PotentialP);
  const CoefficientField q = coefficient(p, "q", s, Role::PotentialQ);
  std::vector<Real> starts;
  if (p.has("characteristics")) starts = p.reals("characteristics");
  for (Real x0 : starts) {
    if (!(x0 > 0.0 && x0 < s.ell())) throw ValidationError("characteristic start must lie in (0, ell)");
  }
  p.finish();
  const MeshCondition mesh = check_mesh_condition(a);
  if (!mesh.satisfied) {
    throw ValidationError("mesh condition violated: max sqrt(a(y)/a(x)) = " +
                          format_real(mesh.max_speed) + " > 1");
  }
  return [=](RunContext& ctx) {
    ctx.stage = "kernel solve";
    const Kernel k = solve_kernel(a, pp, q);
    ctx.stage = "export";
    ctx.write("kernel.csv", kernel_csv(k));
    const std::vector<Real> x = to_std(s.nodes());
    std::vector<Real> bottom(s.size());
    for (int i = 0; i <= s.n(); ++i) bottom[i] = k(i, 0);
    ctx.write("kernel_profile.svg",
              line_plot_svg({"Kernel on the diagonal and on y = 0", "x", "K"},
                            {{"K(x,x)", x, to_std(k.diagonal())}, {"K(x,0)", x, bottom}}));
    for (std::size_t i = 0; i < starts.size(); ++i) {
      ctx.stage = "characteristic " + std::to_string(i);
      const CharacteristicCurve c = characteristic_curve(a, starts[i]);
      ctx.write("characteristic_" + std::to_string(i) + ".csv", characteristic_csv(c));
      ctx.metrics["axis_hits"].push_back(c.axis_hit);
    }
    ctx.stage = "checks";
    const Real max_k = k.values().cwiseAbs().maxCoeff();
    const bool same = (pp.values() - q.values()).cwiseAbs().maxCoeff() == 0.0;
    const KernelBound bound = kernel_bound_fit(k, pp, q);
    ctx.metric("max_abs_kernel", max_k);
    ctx.metric("kernel_residual", kernel_residual(k, a, pp, q));
    ctx.metric("bound_constant", bound.constant);
    ctx.metric("bound_vacuous", bound.vacuous);
    ctx.check("finite", k.values().allFinite());
    if (same) ctx.check("vanishes_for_equal_potentials", max_k <= kZeroKernel);
  };
}

Runner plan_intertwine(Params& p) {
  const SpaceGrid s = space_grid(p);
  const TimeGrid t = time_grid(p);
  const Sigma sigma = sigma_param(p);
  require_forward_sigma(sigma);
  auto expr = [&](const char* key) {
    const json& v = p.raw(key);
    if (!v.is_string()) throw ValidationError(std::string("parameter '") + key + "' must be an expression here");
    try {
      return parse_coefficient_expression(v.get<std::string>());
    } catch (const ParseError& e) {
      throw ValidationError(std::string("parameter '") + key + "': " + e.what());
    }
  };
  const ScalarFunction fa = expr("a");
  const ScalarFunction fp = expr("p");
  const ScalarFunction fq = expr("q");
  const ScalarFunction fb = expr("b");
  const BoundaryConditionSpec bc = bc_param(p);
  const bool refine = p.boolean("refine", false);
  p.finish();
  // Sampling once here surfaces invalid coefficients before any run.
  if (!check_mesh_condition(sample_coefficient(fa, s, Role::Diffusion)).satisfied) {
    throw ValidationError("mesh condition violated: a must be nondecreasing");
  }

  return [=](RunContext& ctx) {
    auto level = [&](int factor) {
      const SpaceGrid sl(s.ell(), s.n() * factor);
      const TimeGrid tl(t.horizon(), t.m() * factor);
      const CoefficientField a = sample_coefficient(fa, sl, Role::Diffusion);
      const CoefficientField pp = sample_coefficient(fp, sl, Role::PotentialP);
      const CoefficientField q = sample_coefficient(fq, sl, Role::PotentialQ);
      const CoefficientField b = sample_coefficient(fb, sl, Role::Initial);
      ctx.stage = "forward solve (n=" + std::to_string(sl.n()) + ")";
      const EvolutionField u = forward_solve(sigma, a, pp, b, bc, tl);
      ctx.stage = "kernel solve (n=" + std::to_string(sl.n()) + ")";
      const Kernel k = solve_kernel(a, pp, q);
      ctx.stage = "intertwining check (n=" + std::to_string(sl.n()) + ")";
      return std::make_pair(intertwining_residual(u, k, sigma, a, pp, q), u);
    };
    auto [coarse, u] = level(1);
    IntertwiningReport report = coarse;
    if (refine) report = intertwining_refinement(coarse, level(2).first);
    ctx.stage = "export";
    ctx.write("intertwining.csv", intertwining_csv(coarse));
    const Real h = s.h();
    const Real scale = u.values.cwiseAbs().maxCoeff();
    ctx.metric("interior_residual", coarse.interior_residual);
    ctx.metric("trace_gap_value", coarse.trace_gap_value);
    ctx.metric("trace_gap_slope", coarse.trace_gap_slope);
    ctx.metric("slope_gap_over_h2", coarse.trace_gap_slope / (h * h));
    ctx.check("value_trace_preserved", coarse.trace_gap_value <= 1e-12 * std::max(1.0, scale));
    if (report.refinement_ratio) {
      ctx.metric("refined_interior_residual", report.interior_residual);
      ctx.metric("refinement_ratio", *report.refinement_ratio);
      ctx.check("second_order", *report.refinement_ratio >= 3.2 && *report.refinement_ratio <= 4.8);
    }
  };
}

InverseProblemSpec inverse_spec(Params& p, const SpaceGrid& s, const TimeGrid& t) {
  InverseProblemSpec spec{sigma_param(p), coefficient(p, "a", s, Role::Diffusion),
                          coefficient(p, "b", s, Role::Initial), bc_param(p), t};
  require_forward_sigma(spec.sigma);
  spec.anchor = anchor_param(p, spec.sigma);
  return spec;
}

Runner plan_reconstruct(Params& p) {
  const SpaceGrid s = space_grid(p);
  const TimeGrid t = time_grid(p);
  InverseProblemSpec spec = inverse_spec(p, s, t);
  spec.noise_level = p.real("noise_level", 0.0);
  if (spec.noise_level < 0.0) throw ValidationError("noise_level must be nonnegative");
  if (spec.noise_level > 0.0 && !p.has("seed")) {
    throw ValidationError("parameter 'seed' is required when noise_level > 0");
  }
  if (p.has("seed")) spec.seed = p.seed("seed");
  const CoefficientField p_true = coefficient(p, "p_true", s, Role::PotentialP);
  const CoefficientField p_init = coefficient(p, "p_init", s, Role::PotentialP);
  const Real reg = p.real("reg_weight");
  if (reg < 0.0) throw ValidationError("reg_weight must be nonnegative");
  ReconstructionOptions opt;
  opt.max_iters = p.integer("max_iters", opt.max_iters);
  opt.gtol = p.real("gtol", opt.gtol);
  if (opt.max_iters < 0) throw ValidationError("max_iters must be nonnegative");
  const int layers = p.integer("layers", 0);
  if (layers < 0) throw ValidationError("layers must be nonnegative");
  std::optional<Real> target, baseline;
  if (p.has("target")) target = p.real("target");
  if (p.has("baseline")) baseline = p.real("baseline");
  const Real baseline_tol = p.real("baseline_tolerance", 1e-3);
  p.finish();
  const std::vector<std::string> warnings = validate(spec);

  return [=](RunContext& ctx) {
    for (const std::string& w : warnings) ctx.metrics["warnings"].push_back(w);
    ctx.stage = "simulate data";
    const CauchyTrace data = simulate_cauchy_data(spec, p_true);
    ctx.write("data_trace.csv", trace_csv(data));
    ctx.stage = "reconstruction";
    const ReconstructionResult r = layers > 0
                                       ? reconstruct_layered(data, spec, reg, p_init, layers, opt)
                                       : reconstruct(data, spec, reg, p_init, opt);
    ctx.stage = "export";
    const Real err = relative_l2_error(r.p_estimate, p_true);
    ctx.write("reconstruction.csv", reconstruction_csv(p_true, r.p_estimate));
    json rj = {{"iterations", r.iterations},
               {"converged", r.converged},
               {"relative_l2_error", err},
               {"objective_history", r.objective_history},
               {"stop_reason", r.stop_reason}};
    ctx.write("reconstruction.json", rj.dump(2) + "\n");
    const std::vector<Real> x = to_std(s.nodes());
    ctx.write("profile.svg", line_plot_svg({"Potential", "x", "p"},
                                           {{"p_true", x, to_std(p_true.values())},
                                            {"p_estimate", x, to_std(r.p_estimate.values())}}));
    std::vector<Real> it(r.objective_history.size());
    for (std::size_t i = 0; i < it.size(); ++i) it[i] = static_cast<Real>(i);
    ctx.write("objective.svg", line_plot_svg({"Objective", "iteration", "J", true},
                                             {{"J", it, r.objective_history}}));
    ctx.stage = "checks";
    ctx.metric("relative_l2_error", err);
    ctx.metric("iterations", r.iterations);
    ctx.metric("converged", r.converged);
    ctx.metric("stop_reason", r.stop_reason);
    ctx.check("finite", r.p_estimate.values().allFinite());
    bool monotone = true;
    for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
      monotone = monotone && r.objective_history[i] <= r.objective_history[i - 1];
    }
    ctx.check("monotone_objective", monotone);
    if (target) ctx.check("within_target", err <= *target);
    if (baseline) {
      ctx.metric("baseline", *baseline);
      ctx.check("no_regression", err <= *baseline + baseline_tol);
    }
  };
}

Runner plan_distinguish(Params& p) {
  const SpaceGrid s = space_grid(p);
  const TimeGrid t = time_grid(p);
  const InverseProblemSpec spec = inverse_spec(p, s, t);
  const CoefficientField pp = coefficient(p, "p", s, Role::PotentialP);
  const CoefficientField q = coefficient(p, "q", s, Role::PotentialQ);
  const bool expect_distinct = p.boolean("expect_distinct", true);
  p.finish();
  return [=](RunContext& ctx) {
    ctx.stage = "forward solves";
    const Real gap = distinguishability_gap(pp, q, spec);
    const Real reverse = distinguishability_gap(q, pp, spec);
    const CauchyTrace tp = extract_cauchy_trace(forward_solve_anchored(
        spec.sigma, spec.a, pp, spec.b, spec.bc, spec.tgrid, spec.anchor));
    const CauchyTrace tq = extract_cauchy_trace(forward_solve_anchored(
        spec.sigma, spec.a, q.with_role(Role::PotentialP), spec.b, spec.bc, spec.tgrid, spec.anchor));
    ctx.stage = "export";
    ctx.write("trace_p.csv", trace_csv(tp));
    ctx.write("trace_q.csv", trace_csv(tq));
    const TraceComponent which = fitted_component(spec.bc);
    const std::vector<Real> tn = to_std(t.nodes());
    ctx.write("trace_gap.svg",
              line_plot_svg({"Unconstrained trace component", "t", "Re trace"},
                            {{"p", tn, real_parts(component(tp, which))},
                             {"q", tn, real_parts(component(tq, which))}}));
    ctx.metric("gap", gap);
    ctx.metric("component", which == TraceComponent::Value ? "value" : "slope");
    ctx.metric("threshold", 100.0 * kSolverTolerance);
    ctx.check("symmetric", gap == reverse);
    if (expect_distinct) {
      ctx.check("distinct", gap > 100.0 * kSolverTolerance);
    } else {
      ctx.check("identical", gap <= 1e-12);
    }
  };
}

Runner plan_local_chain(Params& p) {
  const SpaceGrid s = space_grid(p);
  const CoefficientField a = coefficient(p, "a", s, Role::Diffusion);
  const CoefficientField pp = coefficient(p, "p", s, Role::PotentialP);
  const CoefficientField q = coefficient(p, "q", s, Role::PotentialQ);
  const CoefficientField b = coefficient(p, "b", s, Role::Initial);
  const bool expect_violation = p.boolean("expect_violation", false);
  p.finish();
  return [=](RunContext& ctx) {
    ctx.stage = "chain evaluation";
    const LocalChainReport r = local_uniqueness_check(a, pp, q, b);
    ctx.stage = "export";
    std::string csv = "x,lhs,rhs\n";
    for (Eigen::Index i = 0; i < r.x.size(); ++i) {
      csv += format_real(r.x[i]) + "," + format_real(r.lhs[i]) + "," + format_real(r.rhs[i]) + "\n";
    }
    ctx.write("chain.csv", csv);
    ctx.write("chain.svg", line_plot_svg({"Local chain", "x", "value", true},
                                         {{"lhs", to_std(r.x), to_std(r.lhs)},
                                          {"rhs", to_std(r.x), to_std(r.rhs)}}));
    ctx.metric("kappa", r.kappa);
    ctx.metric("epsilon_star", r.epsilon_star);
    ctx.metric("hypothesis_violated", r.hypothesis_violated);
    ctx.metric("positive_initial_value", r.positive_initial_value);
    if (expect_violation) {
      ctx.check("hypothesis_violation_detected", r.hypothesis_violated);
    } else {
      ctx.check("chain_holds_near_zero", !r.hypothesis_violated && r.epsilon_star > 0.0);
    }
  };
}

Bump bump_param(Params& p, const char* key) {
  const json& v = p.raw(key);
  auto pair = [&](const char* field) {
    if (!v.is_object() || !v.contains(field) || !v.at(field).is_array() || v.at(field).size() != 2) {
      throw ValidationError(std::string("parameter '") + key + "." + field + "' must be [lo, hi]");
    }
    return std::make_pair(v.at(field)[0].get<Real>(), v.at(field)[1].get<Real>());
  };
  const auto [xl, xh] = pair("x");
  const auto [tl, th] = pair("t");
  Bump b{xl, xh, tl, th};
  if (v.contains("power")) b.power = v.at("power").get<int>();
  if (!(xl < xh && tl < th)) throw ValidationError(std::string("parameter '") + key + "' box is empty");
  if (b.power < 2) throw ValidationError(std::string("parameter '") + key + ".power' must be >= 2");
  return b;
}

Runner plan_carleman(Params& p) {
  const SpaceGrid s = space_grid(p);
  const TimeGrid t = time_grid(p);
  const Sigma sigma = sigma_param(p);
  const CoefficientField a = coefficient(p, "a", s, Role::Diffusion);
  const CoefficientField pp = coefficient(p, "p", s, Role::PotentialP);
  const Real t0 = p.real("t0", 0.5 * t.horizon());
  const std::vector<Real> lambdas = p.reals("lambda");
  const std::vector<Real> taus = p.reals("tau_grid");
  for (Real tau : taus) {
    if (!(tau > 0.0)) throw ValidationError("tau_grid entries must be positive");
  }
  const int count = p.integer("bump_count", 5);
  const std::uint64_t seed = p.has("seed") ? p.seed("seed") : 0;
  const Bump box = bump_param(p, "bump_box");
  p.finish();
  if (count < 1) throw ValidationError("bump_count must be positive");
  for (Real lambda : lambdas) build_weight(SpaceGrid(s.ell(), kMinIntervals), TimeGrid(t.horizon(), kMinIntervals), t0, lambda);

  return [=](RunContext& ctx) {
    std::vector<EvolutionField> family;
    for (const Bump& b : random_bumps(count, seed, box.x_lo, box.x_hi, box.t_lo, box.t_hi)) {
      family.push_back(sample_bump(b, s, t));
    }
    bool ok = true;
    std::vector<PlotSeries> series;
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      ctx.stage = "carleman study (lambda=" + format_real(lambdas[l]) + ")";
      const WeightSpec w = build_weight(s, t, t0, lambdas[l]);
      const CarlemanReport r = carleman_study(family, w, taus, sigma, a, pp);
      for (std::size_t i = 0; i < family.size(); ++i) {
        ctx.write("carleman_l" + std::to_string(l) + "_m" + std::to_string(i) + ".csv",
                  carleman_csv(r, i));
        std::vector<Real> ratio(r.tau_grid.size());
        for (std::size_t j = 0; j < ratio.size(); ++j) ratio[j] = r.lhs[i][j] / r.rhs[i][j];
        series.push_back({"lambda " + format_real(lambdas[l]) + " #" + std::to_string(i), r.tau_grid, ratio});
      }
      ctx.metrics["lambda"].push_back(lambdas[l]);
      ctx.metrics["N"].push_back(w.N);
      ctx.metrics["fitted_C"].push_back(r.fitted_C);
      ctx.metrics["max_ratio"].push_back(r.max_ratio);
      ctx.metrics["flag"].push_back(r.violation);
      ok = ok && !r.violation;
    }
    ctx.stage = "export";
    ctx.write("ratio.svg", line_plot_svg({"lhs / rhs against tau", "tau", "ratio", true}, series));
    ctx.check("inequality_holds", ok);
  };
}

Runner plan_ucp(Params& p) {
  const Real ell = p.real("ell", 1.0);
  const Real x0 = p.real("x0");
  const Real delta = p.real("delta");
  const std::vector<Real> taus = p.reals("tau_grid");
  const bool expect = p.boolean("expect_separation", true);
  std::optional<UcpConstants> given;
  if (p.has("constants")) {
    const json& c = p.raw("constants");
    if (!c.is_object() || !c.contains("C4") || !c.contains("C5")) {
      throw ValidationError("parameter 'constants' must be {\"C4\": .., \"C5\": ..}");
    }
    given = UcpConstants{c.at("C4").get<Real>(), c.at("C5").get<Real>()};
  }
  std::function<UcpConstants()> fit;
  if (!given) {
    const SpaceGrid s = space_grid(p);
    if (std::abs(s.ell() - ell) > 0.0) throw ValidationError("grid length must equal ell");
    const TimeGrid t = time_grid(p);
    const Sigma sigma = sigma_param(p);
    const CoefficientField a = coefficient(p, "a", s, Role::Diffusion);
    const CoefficientField pp = coefficient(p, "p", s, Role::PotentialP);
    const Real t0 = p.real("t0", 0.5 * t.horizon());
    const Bump bump = bump_param(p, "bump");
    const Real lambda = 1.0;
    Cutoff::for_point(ell, x0, delta);
    fit = [=] {
      const WeightSpec w = build_weight(s, t, t0, lambda);
      return fit_ucp_constants(sample_bump(bump, s, t), w, x0, delta, taus, sigma, a, pp);
    };
  }
  p.finish();
  ucp_separation_demo(ell, x0, delta, taus, given.value_or(UcpConstants{1.0, 1.0}));

  return [=](RunContext& ctx) {
    UcpConstants c;
    if (given) {
      c = *given;
    } else {
      ctx.stage = "constant fit";
      c = fit();
    }
    ctx.stage = "separation table";
    const UcpSeparation r = ucp_separation_demo(ell, x0, delta, taus, c);
    std::string csv = "tau,log_upper,log_lower\n";
    for (std::size_t i = 0; i < r.tau.size(); ++i) {
      csv += format_real(r.tau[i]) + "," + format_real(r.log_upper[i]) + "," +
             format_real(r.log_lower[i]) + "\n";
    }
    ctx.stage = "export";
    ctx.write("ucp.csv", csv);
    ctx.write("ucp.svg", line_plot_svg({"Exponential separation (log scale)", "tau", "log bound"},
                                       {{"ln C4 + 2 tau (2+delta)", r.tau, r.log_upper},
                                        {"ln C5 + 2 tau (l+2-x0-delta)", r.tau, r.log_lower}}));
    ctx.metric("upper_exponent", r.upper_exponent);
    ctx.metric("lower_exponent", r.lower_exponent);
    ctx.metric("C4", c.C4);
    ctx.metric("C5", c.C5);
    ctx.metric("crossing_tau", r.crossing_tau ? json(*r.crossing_tau) : json(nullptr));
    ctx.metric("separated", r.separated);
    if (expect) {
      ctx.check("separation", r.separated && r.crossing_tau && std::isfinite(*r.crossing_tau));
    } else {
      ctx.check("no_separation", !r.separated);
    }
  };
}

Runner plan(const ExperimentManifest& m) {
  Params p(m.parameters, m.base_dir, m.kind);
  if (m.kind == "forward") return plan_forward(p);
  if (m.kind == "kernel") return plan_kernel(p);
  if (m.kind == "intertwine") return plan_intertwine(p);
  if (m.kind == "reconstruct") return plan_reconstruct(p);
  if (m.kind == "carleman") return plan_carleman(p);
  if (m.kind == "distinguish") return plan_distinguish(p);
  if (m.kind == "local-chain") return plan_local_chain(p);
  if (m.kind == "ucp-demo") return plan_ucp(p);
  throw ValidationError("unknown kind '" + m.kind + "'");
}

fs::path default_output_dir(const fs::path& manifest_path) {
  fs::path out = manifest_path;
  out.replace_extension(".out");
  return out;
}

void write_summary(const fs::path& dir, const json& summary) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

RunOutcome failure(int code, const std::string& status, const std::string& reason,
                   const std::string& kind, const fs::path& dir) {
  RunOutcome out;
  out.exit_code = code;
  out.message = status + ": " + one_line(reason);
  out.summary = {{"kind", kind},      {"pass", false}, {"status", status},
                 {"error", one_line(reason)}, {"checks", json::object()}, {"metrics", json::object()},
                 {"artifacts", json::array()}};
  if (!dir.empty()) {
    try {
      write_summary(dir, out.summary);
    } catch (const std::exception&) {
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"forward",     "kernel",      "intertwine",
                                              "reconstruct", "carleman",    "distinguish",
                                              "local-chain", "ucp-demo"};
  return kinds;
}

ExperimentManifest parse_manifest(const json& document, const fs::path& manifest_path) {
  if (!document.is_object()) throw ValidationError("manifest must be a JSON object");
  ExperimentManifest m;
  m.base_dir = manifest_path.parent_path();
  for (const auto& [key, value] : document.items()) {
    if (key == "kind") {
      if (!value.is_string()) throw ValidationError("'kind' must be a string");
      m.kind = value.get<std::string>();
    } else if (key == "parameters") {
      m.parameters = value;
    } else if (key == "output_dir") {
      if (!value.is_string()) throw ValidationError("'output_dir' must be a string");
      m.output_dir = m.base_dir / value.get<std::string>();
    } else {
      throw ValidationError("unknown manifest field '" + key + "'");
    }
  }
  if (m.output_dir.empty()) m.output_dir = default_output_dir(manifest_path);
  if (m.kind.empty()) throw ValidationError("manifest is missing 'kind'");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), m.kind) == kinds.end()) {
    throw ValidationError("unknown kind '" + m.kind + "'");
  }
  if (!m.parameters.is_object()) throw ValidationError("'parameters' must be an object");
  return m;
}

ExperimentManifest load_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("cannot open manifest " + manifest_path.string());
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  return parse_manifest(document, manifest_path);
}

RunOutcome validate_manifest(const fs::path& manifest_path) {
  RunOutcome out;
  try {
    const ExperimentManifest m = load_manifest(manifest_path);
    plan(m);
    out.message = "valid";
    out.summary = {{"kind", m.kind}, {"valid", true}};
  } catch (const ValidationError& e) {
    out.exit_code = kExitValidation;
    out.message = "validation-error: " + one_line(e.what());
  } catch (const json::exception& e) {
    out.exit_code = kExitValidation;
    out.message = "validation-error: " + one_line(e.what());
  }
  return out;
}

RunOutcome run_manifest(const ExperimentManifest& m) {
  RunContext ctx;
  ctx.dir = m.output_dir;
  Runner runner;
  try {
    runner = plan(m);
  } catch (const ValidationError& e) {
    return failure(kExitValidation, "validation-error", e.what(), m.kind, m.output_dir);
  } catch (const json::exception& e) {
    return failure(kExitValidation, "validation-error", e.what(), m.kind, m.output_dir);
  }

  RunOutcome out;
  std::string status = "pass";
  std::string error;
  try {
    fs::create_directories(m.output_dir);
    runner(ctx);
    std::string failed;
    for (const auto& [name, ok] : ctx.checks.items()) {
      if (!ok.get<bool>()) failed += (failed.empty() ? "" : ",") + name;
    }
    if (!failed.empty()) {
      status = "check-failed";
      error = failed;
      out.exit_code = kExitNumerical;
    }
  } catch (const ValidationError& e) {
    status = "validation-error";
    error = one_line(e.what());
    out.exit_code = kExitValidation;
  } catch (const std::exception& e) {
    status = "numerical-error";
    error = one_line(e.what());
    out.exit_code = kExitNumerical;
  }

  out.summary = {{"kind", m.kind},
                 {"pass", out.exit_code == kExitPass},
                 {"status", status},
                 {"checks", ctx.checks},
                 {"metrics", ctx.metrics},
                 {"artifacts", ctx.artifacts}};
  if (out.exit_code != kExitPass) {
    out.summary["error"] = error;
    if (status != "check-failed") out.summary["failed_stage"] = ctx.stage;
  }
  out.message = out.exit_code == kExitPass ? "pass" : status + ": " + error;
  try {
    write_summary(m.output_dir, out.summary);
  } catch (const std::exception& e) {
    out.exit_code = kExitNumerical;
    out.message = "io-error: " + one_line(e.what());
  }
  return out;
}

RunOutcome run_manifest_file(const fs::path& manifest_path) {
  ExperimentManifest m;
  try {
    m = load_manifest(manifest_path);
  } catch (const ValidationError& e) {
    return failure(kExitValidation, "validation-error", e.what(), "", default_output_dir(manifest_path));
  }
  return run_manifest(m);
}

std::vector<BatchEntry> run_batch(const fs::path& dir, int threads) {
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<BatchEntry> entries(files.size());
  std::vector<std::optional<ExperimentManifest>> manifests(files.size());
  std::map<fs::path, fs::path> claimed;
  for (std::size_t i = 0; i < files.size(); ++i) {
    entries[i].manifest = files[i];
    try {
      ExperimentManifest m = load_manifest(files[i]);
      const fs::path key = m.output_dir.lexically_normal();
      if (auto it = claimed.find(key); it != claimed.end()) {
        entries[i].outcome.exit_code = kExitValidation;
        entries[i].outcome.message = "validation-error: output_dir already used by " +
                                     it->second.filename().string();
        continue;
      }
      claimed.emplace(key, files[i]);
      manifests[i] = std::move(m);
    } catch (const ValidationError& e) {
      entries[i].outcome =
          failure(kExitValidation, "validation-error", e.what(), "", default_output_dir(files[i]));
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      if (manifests[i]) entries[i].outcome = run_manifest(*manifests[i]);
    }
  };
  const int count = std::max(1, std::min<int>(threads, static_cast<int>(files.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < count; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return entries;
}

}  // namespace xformlab
