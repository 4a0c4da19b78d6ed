#include "xformlab/recon.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "xformlab/goursat.hpp"

namespace xformlab {

std::vector<std::string> validate(const InverseProblemSpec& spec) {
  require(spec.a.role() == Role::Diffusion, "spec.a must be a diffusion field");
  require(spec.b.role() == Role::Initial, "spec.b must be an initial-value field");
  require_same_grid(spec.a.grid(), spec.b.grid(), "a and b");
  require(spec.noise_level >= 0.0 && std::isfinite(spec.noise_level),
          "noise level must be a nonnegative number");
  require(spec.sigma.re() >= 0.0, "forward simulation needs Re sigma >= 0");
  if (spec.anchor == Anchor::End) {
    require(spec.sigma.re() == 0.0, "end-time anchor is only simulated for purely imaginary sigma");
  }
  std::vector<std::string> warnings;
  const ZeroReport zr = check_b_admissible(spec.b);
  if (!zr.admissible) {
    warnings.emplace_back(zr.degenerate
                              ? "initial value vanishes on an interval; uniqueness is not expected"
                              : "initial value has a zero of order greater than one");
  }
  return warnings;
}

TraceComponent fitted_component(const BoundaryConditionSpec& bc) {
  return bc.left.kind == BoundaryCondition::Kind::NeumannZero ? TraceComponent::Value
                                                              : TraceComponent::Slope;
}

const ComplexVector& component(const CauchyTrace& trace, TraceComponent which) {
  return which == TraceComponent::Value ? trace.u0 : trace.ux0;
}

CauchyTrace simulate_cauchy_data(const InverseProblemSpec& spec, const CoefficientField& p_true) {
  validate(spec);
  require_same_grid(spec.sgrid(), p_true.grid(), "spec and p_true");
  const EvolutionField u =
      forward_solve_anchored(spec.sigma, spec.a, p_true, spec.b, spec.bc, spec.tgrid, spec.anchor);
  CauchyTrace trace = extract_cauchy_trace(u);
  if (spec.noise_level > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<Real> normal(0.0, 1.0);
    for (ComplexVector* series : {&trace.u0, &trace.ux0}) {
      const Real sd = spec.noise_level * max_abs(*series);
      const bool has_imag = series->imag().cwiseAbs().maxCoeff() > 0.0;
      for (Eigen::Index k = 0; k < series->size(); ++k) {
        const Real re = normal(rng) * sd;
        const Real im = has_imag ? normal(rng) * sd : 0.0;
        (*series)[k] += Complex(re, im);
      }
    }
  }
  return trace;
}

namespace {

// Anchor-end data are the conjugated time reversal of anchor-start data, so
// the misfit is evaluated in the anchor-start frame.
ComplexVector start_frame(const ComplexVector& series, Anchor anchor) {
  if (anchor == Anchor::Start) return series;
  ComplexVector r(series.size());
  for (Eigen::Index k = 0; k < series.size(); ++k) r[k] = std::conj(series[series.size() - 1 - k]);
  return r;
}

BoundaryConditionSpec start_frame(const BoundaryConditionSpec& bc, Anchor anchor) {
  BoundaryConditionSpec out = bc;
  for (auto* side : {&out.left, &out.right}) {
    if (side->kind == BoundaryCondition::Kind::PrescribedTrace) {
      side->series = start_frame(side->series, anchor);
    }
  }
  return out;
}

Complex observe(const ComplexVector& level, TraceComponent which, Real h) {
  return which == TraceComponent::Value ? level[0] : left_slope(level[0], level[1], level[2], h);
}

}  // namespace

ObjectiveValue objective_and_gradient(const RealVector& p_candidate, const CauchyTrace& data,
                                      const InverseProblemSpec& spec, Real reg_weight) {
  require(p_candidate.size() == spec.sgrid().size(), "grid mismatch: candidate p");
  require(data.tgrid == spec.tgrid, "grid mismatch: data time grid");
  require(reg_weight >= 0.0, "regularization weight must be nonnegative");

  const CoefficientField p(spec.sgrid(), p_candidate, Role::PotentialP);
  const TraceComponent which = fitted_component(spec.bc);
  const ComplexVector target = start_frame(component(data, which), spec.anchor);
  const BoundaryConditionSpec bc = start_frame(spec.bc, spec.anchor);
  const CrankNicolson scheme(spec.sigma, spec.a, p, bc, spec.tgrid);

  const int m = spec.tgrid.m();
  const int size = spec.sgrid().size();
  const Real h = spec.sgrid().h();
  const Real dt = spec.tgrid.dt();

  std::vector<ComplexVector> levels;
  levels.reserve(m + 1);
  levels.push_back(spec.b.values().cast<Complex>());
  for (int k = 1; k <= m; ++k) {
    levels.push_back(scheme.step(levels.back(), k));
    if (!levels.back().allFinite()) throw NumericalError("forward solve failed inside objective");
  }

  ObjectiveValue out;
  ComplexVector residual(m + 1);
  for (int k = 0; k <= m; ++k) {
    residual[k] = observe(levels[k], which, h) - target[k];
    out.misfit += dt * std::norm(residual[k]);
  }

  // Adjoint sweep: lambda^m = A^{-H} g_m, lambda^k = A^{-H}(g_k + B^H lambda^{k+1}),
  // where g_k = dt * c * r_k and c is the observation functional.
  auto load = [&](int k) {
    ComplexVector g = ComplexVector::Zero(size);
    const Complex w = dt * residual[k];
    if (which == TraceComponent::Value) {
      g[0] = w;
    } else {
      g[0] = -3.0 * w / (2.0 * h);
      g[1] = 4.0 * w / (2.0 * h);
      g[2] = -w / (2.0 * h);
    }
    return g;
  };
  out.gradient = RealVector::Zero(size);
  ComplexVector lambda = scheme.solve_adjoint(load(m));
  const auto& rows = scheme.pde_rows();
  for (int k = m - 1; k >= 0; --k) {
    for (int j = 0; j < size; ++j) {
      if (rows[j]) out.gradient[j] -= std::real(std::conj(lambda[j]) * (levels[k + 1][j] + levels[k][j]));
    }
    if (k >= 1) lambda = scheme.solve_adjoint(load(k) + scheme.apply_rhs_adjoint(lambda));
  }

  for (int j = 0; j + 1 < size; ++j) {
    const Real d = p_candidate[j + 1] - p_candidate[j];
    out.regularization += reg_weight * d * d / h;
    out.gradient[j] -= 2.0 * reg_weight * d / h;
    out.gradient[j + 1] += 2.0 * reg_weight * d / h;
  }
  out.value = out.misfit + out.regularization;
  return out;
}

Real relative_l2_error(const CoefficientField& estimate, const CoefficientField& truth) {
  require_same_grid(estimate.grid(), truth.grid(), "estimate and truth");
  const Real denom = truth.values().norm();
  const Real diff = (estimate.values() - truth.values()).norm();
  return denom > 0.0 ? diff / denom : diff;
}

ReconstructionResult reconstruct(const CauchyTrace& data, const InverseProblemSpec& spec,
                                 Real reg_weight, const CoefficientField& p_init,
                                 const ReconstructionOptions& options) {
  validate(spec);
  require(data.tgrid == spec.tgrid, "data length does not match the time grid");
  require_same_grid(p_init.grid(), spec.sgrid(), "p_init and spec");
  const int size = spec.sgrid().size();
  require(options.free_nodes.empty() || static_cast<int>(options.free_nodes.size()) == size,
          "free-node mask length does not match grid");

  auto mask = [&](RealVector v) {
    if (!options.free_nodes.empty()) {
      for (int j = 0; j < size; ++j) {
        if (!options.free_nodes[j]) v[j] = 0.0;
      }
    }
    return v;
  };
  auto evaluate = [&](const RealVector& x) {
    ObjectiveValue ov = objective_and_gradient(x, data, spec, reg_weight);
    ov.gradient = mask(std::move(ov.gradient));
    return ov;
  };

  RealVector x = p_init.values();
  ObjectiveValue current = evaluate(x);
  ReconstructionResult result{p_init.with_role(Role::PotentialP), {current.value}, std::nullopt, 0,
                              false, "max_iters"};

  std::deque<std::pair<RealVector, RealVector>> pairs;
  int iter = 0;
  int stalled = 0;
  for (; iter < options.max_iters; ++iter) {
    if (current.gradient.cwiseAbs().maxCoeff() <= options.gtol) {
      result.converged = true;
      result.stop_reason = "gradient";
      break;
    }
    // Two-loop recursion.
    RealVector d = -current.gradient;
    std::vector<Real> alpha(pairs.size());
    for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = pairs[i];
      alpha[i] = s.dot(d) / y.dot(s);
      d -= alpha[i] * y;
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      d *= s.dot(y) / y.dot(y);
    } else {
      d /= std::max(1.0, current.gradient.norm());
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const Real beta = y.dot(d) / y.dot(s);
      d += (alpha[i] - beta) * s;
    }
    d = mask(std::move(d));
    Real slope = current.gradient.dot(d);
    if (!(slope < 0.0)) {
      pairs.clear();
      d = -current.gradient / std::max(1.0, current.gradient.norm());
      slope = current.gradient.dot(d);
    }

    Real step = 1.0;
    bool accepted = false;
    ObjectiveValue trial;
    RealVector x_trial;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      x_trial = x + step * d;
      trial = evaluate(x_trial);
      if (trial.value <= current.value + options.armijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.stop_reason = "line search failed";
      break;
    }
    const RealVector s = x_trial - x;
    const RealVector y = trial.gradient - current.gradient;
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      pairs.emplace_back(s, y);
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }
    const Real previous = current.value;
    x = std::move(x_trial);
    current = std::move(trial);
    result.objective_history.push_back(current.value);
    if (previous - current.value <= options.ftol * std::max(std::abs(previous), 1e-300)) {
      if (++stalled >= options.patience) {
        result.stop_reason = "objective stalled";
        ++iter;
        break;
      }
    } else {
      stalled = 0;
    }
  }
  result.iterations = iter;
  result.p_estimate = CoefficientField(spec.sgrid(), x, Role::PotentialP);
  return result;
}

ReconstructionResult reconstruct_layered(const CauchyTrace& data, const InverseProblemSpec& spec,
                                         Real reg_weight, const CoefficientField& p_init,
                                         int stages, const ReconstructionOptions& options) {
  require(stages >= 1, "layer stripping needs at least one stage");
  const int n = spec.sgrid().n();
  CoefficientField current = p_init;
  ReconstructionResult total{p_init, {}, std::nullopt, 0, true, "gradient"};
  int head = -1;
  for (int s = 1; s <= stages; ++s) {
    const int tail = static_cast<int>(std::lround(static_cast<Real>(n) * s / stages));
    ReconstructionOptions stage = options;
    stage.free_nodes.assign(n + 1, false);
    for (int j = head + 1; j <= n; ++j) stage.free_nodes[j] = true;
    ReconstructionResult r = reconstruct(data, spec, reg_weight, current, stage);
    if (total.objective_history.empty()) {
      total.objective_history = r.objective_history;
    } else {
      total.objective_history.insert(total.objective_history.end(),
                                     r.objective_history.begin() + 1, r.objective_history.end());
    }
    total.iterations += r.iterations;
    total.converged = total.converged && r.converged;
    if (!r.converged) total.stop_reason = r.stop_reason;
    current = r.p_estimate;
    head = tail;
  }
  total.p_estimate = current;
  return total;
}

LocalChainReport local_uniqueness_check(const CoefficientField& a, const CoefficientField& p,
                                        const CoefficientField& q, const CoefficientField& b) {
  require(b.role() == Role::Initial, "b must be an initial-value field");
  require_same_grid(a.grid(), b.grid(), "a and b");
  const SpaceGrid g = a.grid();
  const int n = g.n();
  const Real h = g.h();
  const Real scale = max_abs(b.values());
  require(scale > 0.0, "b vanishes identically");

  LocalChainReport rep;
  rep.x = g.nodes();
  rep.lhs = RealVector::Zero(n + 1);
  rep.rhs = RealVector::Zero(n + 1);
  if (std::abs(b[0]) > 1e-10 * scale) {
    rep.positive_initial_value = true;
    return rep;
  }

  // b = x * b~ with b~(0) = b'(0).
  RealVector btilde(n + 1);
  btilde[0] = left_slope(b[0], b[1], b[2], h);
  for (int j = 1; j <= n; ++j) btilde[j] = b[j] / g.node(j);
  Real kappa = std::abs(btilde[0]);
  for (int j = 1; j <= n && g.node(j) <= 0.25 * g.ell(); ++j) kappa = std::min(kappa, std::abs(btilde[j]));
  if (!(kappa > kSlopeTolerance * scale / g.ell())) {
    rep.hypothesis_violated = true;
    rep.kappa = 0.0;
    return rep;
  }
  rep.kappa = kappa;

  const Kernel k = solve_kernel(a, p, q);
  const Real btilde_sup = max_abs(btilde);
  const Real bxx_sup = max_abs(second_derivative(b.values(), h));
  const Real a_sup = max_abs(a.values());

  for (int i = 1; i <= n; ++i) {
    const Real x = g.node(i);
    const Real ksup = k.column(i).cwiseAbs().maxCoeff();
    Real contrast = 0.0;
    for (int j = 0; j <= i; ++j) contrast = std::max(contrast, std::abs(q[i] - p[j]));
    rep.lhs[i] = kappa * std::abs(q[i] - p[i]) * x;
    // int_0^x |K (q(x) - p(y)) y b~(y)| dy + int_0^x |a K (y b~)''| dy
    rep.rhs[i] = x * x * ksup * contrast * btilde_sup + x * a_sup * ksup * bxx_sup;
  }

  rep.epsilon_star = 0.0;
  for (int i = 1; i <= n; ++i) {
    const bool equal_here = q[i] == p[i];
    if (!(equal_here || rep.lhs[i] > rep.rhs[i])) break;
    rep.epsilon_star = g.node(i);
  }
  return rep;
}

Real distinguishability_gap(const CoefficientField& p, const CoefficientField& q,
                            const InverseProblemSpec& spec) {
  validate(spec);
  const TraceComponent which = fitted_component(spec.bc);
  auto trace = [&](const CoefficientField& pot) {
    return component(extract_cauchy_trace(forward_solve_anchored(spec.sigma, spec.a, pot, spec.b,
                                                                 spec.bc, spec.tgrid, spec.anchor)),
                     which);
  };
  const ComplexVector tp = trace(p);
  const ComplexVector tq = trace(q);
  return (tp - tq).cwiseAbs().maxCoeff();
}

}  // namespace xformlab
