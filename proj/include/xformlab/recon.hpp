#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xformlab/core.hpp"
#include "xformlab/evolve.hpp"

namespace xformlab {

struct InverseProblemSpec {
  Sigma sigma = Sigma::parabolic();
  CoefficientField a;
  CoefficientField b;
  BoundaryConditionSpec bc;
  TimeGrid tgrid;
  Anchor anchor = Anchor::Start;
  Real noise_level = 0.0;
  std::uint64_t seed = 0;

  const SpaceGrid& sgrid() const { return a.grid(); }
};

/// Throws on hard violations; returns warnings (e.g. b with a multiple zero).
std::vector<std::string> validate(const InverseProblemSpec& spec);

/// Which half of the Cauchy pair the misfit uses: the one the left boundary
/// condition does not already fix.
enum class TraceComponent { Value, Slope };
TraceComponent fitted_component(const BoundaryConditionSpec& bc);
const ComplexVector& component(const CauchyTrace& trace, TraceComponent which);

/// Forward solve + trace extraction + seeded additive noise.
CauchyTrace simulate_cauchy_data(const InverseProblemSpec& spec, const CoefficientField& p_true);

struct ObjectiveValue {
  Real value = 0.0;
  Real misfit = 0.0;
  Real regularization = 0.0;
  RealVector gradient;
};

/// J(p) = dt sum_k |trace_sim[k] - trace_data[k]|^2 + w h sum_j |(p_{j+1} - p_j) / h|^2,
/// gradient by the discrete adjoint of the Crank-Nicolson march.
ObjectiveValue objective_and_gradient(const RealVector& p_candidate, const CauchyTrace& data,
                                      const InverseProblemSpec& spec, Real reg_weight);

struct ReconstructionOptions {
  int max_iters = 500;
  Real gtol = 1e-9;
  int memory = 10;
  Real armijo = 1e-4;
  /// Stop after `patience` consecutive steps with relative decrease below ftol.
  Real ftol = 1e-13;
  int patience = 10;
  /// Nodes allowed to move; empty means all.
  std::vector<bool> free_nodes;
};

struct ReconstructionResult {
  CoefficientField p_estimate;
  std::vector<Real> objective_history;
  std::optional<Real> relative_l2_error;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
};

ReconstructionResult reconstruct(const CauchyTrace& data, const InverseProblemSpec& spec,
                                 Real reg_weight, const CoefficientField& p_init,
                                 const ReconstructionOptions& options = {});

/// Layer stripping: stage s fits every node not yet frozen, then freezes the
/// prefix [0, x_s] with x_s = s ell / stages.
ReconstructionResult reconstruct_layered(const CauchyTrace& data, const InverseProblemSpec& spec,
                                         Real reg_weight, const CoefficientField& p_init,
                                         int stages, const ReconstructionOptions& options = {});

Real relative_l2_error(const CoefficientField& estimate, const CoefficientField& truth);

struct LocalChainReport {
  Real kappa = 0.0;
  RealVector x;
  /// kappa |q(x) - p(x)| x
  RealVector lhs;
  /// Majorant of the two integral terms, evaluated with the computed kernel.
  RealVector rhs;
  /// Largest x such that on (0, x] either p = q or lhs > rhs strictly, i.e.
  /// equal data would force p = q there.
  Real epsilon_star = 0.0;
  /// b(0) != 0: the chain is not needed (positive-b case).
  bool positive_initial_value = false;
  /// b vanishes at 0 to second order: kappa = 0.
  bool hypothesis_violated = false;
};

LocalChainReport local_uniqueness_check(const CoefficientField& a, const CoefficientField& p,
                                        const CoefficientField& q, const CoefficientField& b);

/// max_t |trace_p(t) - trace_q(t)| in the unconstrained trace component.
Real distinguishability_gap(const CoefficientField& p, const CoefficientField& q,
                            const InverseProblemSpec& spec);

}  // namespace xformlab
