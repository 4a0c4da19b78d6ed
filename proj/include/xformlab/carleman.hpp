#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xformlab/core.hpp"

namespace xformlab {

using RealMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// psi(t,x) = ell + 2 - x - N (t - t0)^2 and alpha = exp(lambda psi) on a grid pair.
struct WeightSpec {
  SpaceGrid sgrid;
  TimeGrid tgrid;
  Real lambda;
  Real t0;
  Real N;
  RealMatrix psi;
  RealMatrix alpha;

  Real max_alpha() const { return alpha.maxCoeff(); }
};

/// Rejects t0 outside (0, T), lambda <= 0, and any node with psi >= 0 at t = 0 or t = T.
WeightSpec build_weight(const SpaceGrid& sgrid, const TimeGrid& tgrid, Real t0, Real lambda);

/// Quintic smoothstep from 0 below `lower` to 1 above `upper`.
class Cutoff {
 public:
  Cutoff(Real lower, Real upper);

  /// Thresholds 2 + delta and ell + 2 - x0 - delta.
  static Cutoff for_point(Real ell, Real x0, Real delta);

  Real lower() const { return lower_; }
  Real upper() const { return upper_; }
  Real operator()(Real s) const;

 private:
  Real lower_;
  Real upper_;
};

RealVector cutoff_mu(Real delta, Real x0, Real ell, const RealVector& s);

/// Both sides of the weighted inequality. The weight exp(2 tau phi) is applied
/// as exp(2 tau (phi - top)) with top the largest phi where the integrand is
/// nonzero; true values are the stored ones times exp(log_scale).
struct CarlemanSides {
  Real lhs = 0.0;
  Real rhs = 0.0;
  Real log_scale = 0.0;

  Real ratio() const { return lhs / rhs; }
};

/// Where a test function breaks z = z_x = 0 at x = 0 or z = 0 on the rest of the boundary.
struct SupportViolation {
  Real magnitude = 0.0;
  int time_index = 0;
  int space_index = 0;
};

SupportViolation support_violation(const EvolutionField& z);

/// lhs = int (tau |z_x|^2 + tau^3 |z|^2) e^{2 tau alpha},
/// rhs = int |sigma z_t - a z_xx + p z|^2 e^{2 tau alpha}, centered stencils, interior nodes.
/// Throws ValidationError when the support condition fails beyond `tolerance` * max|z|.
CarlemanSides carleman_sides(const EvolutionField& z, const WeightSpec& weight, Real tau,
                             const Sigma& sigma, const CoefficientField& a,
                             const CoefficientField& p, Real tolerance = 1e-10);

struct CarlemanReport {
  std::vector<Real> tau_grid;
  /// [member][tau]
  std::vector<std::vector<Real>> lhs;
  std::vector<std::vector<Real>> rhs;
  std::vector<std::vector<Real>> log_scale;
  Real fitted_C = 0.0;
  Real max_ratio = 0.0;
  bool degenerate = false;
  bool violation = false;

  static constexpr Real kSlack = 1.25;
};

/// fitted_C from the smallest tau, max_ratio over the rest; violation when
/// max_ratio > 1.25 fitted_C.
CarlemanReport carleman_study(const std::vector<EvolutionField>& family, const WeightSpec& weight,
                              std::vector<Real> tau_grid, const Sigma& sigma,
                              const CoefficientField& a, const CoefficientField& p);

/// Polynomial bump [s(1-s)]^k [r(1-r)]^k on the box [x_lo, x_hi] x [t_lo, t_hi].
struct Bump {
  Real x_lo, x_hi, t_lo, t_hi;
  int power = 4;
  Complex amplitude = 1.0;
};

EvolutionField sample_bump(const Bump& bump, const SpaceGrid& sgrid, const TimeGrid& tgrid);

/// Seeded family of bumps with boxes inside [x_lo, x_hi] x [t_lo, t_hi].
std::vector<Bump> random_bumps(int count, std::uint64_t seed, Real x_lo, Real x_hi, Real t_lo,
                               Real t_hi);

struct UcpConstants {
  Real C4 = 0.0;
  Real C5 = 0.0;
};

struct UcpSeparation {
  /// 2 + delta: exponent of the commutator bound.
  Real upper_exponent = 0.0;
  /// ell + 2 - x0 - delta: exponent of the localized lower bound.
  Real lower_exponent = 0.0;
  UcpConstants constants;
  std::vector<Real> tau;
  /// ln C4 + 2 tau (2 + delta)
  std::vector<Real> log_upper;
  /// ln C5 + 2 tau (ell + 2 - x0 - delta)
  std::vector<Real> log_lower;
  /// Smallest tau >= 0 beyond which the lower bound strictly exceeds the upper one.
  std::optional<Real> crossing_tau;
  bool separated = false;
};

/// Tabulates both exponentials. delta must lie in (0, (ell - x0) / 2]; at the
/// right end the exponents coincide and the verdict is false.
UcpSeparation ucp_separation_demo(Real ell, Real x0, Real delta, const std::vector<Real>& tau_grid,
                                  const UcpConstants& constants);

/// Fits C4 = max_tau S e^{-2 tau (2+delta)} and C5 = min_tau L e^{-2 tau (ell+2-x0-delta)}
/// for v = mu(psi) z, S = int |P v - mu P z|^2 e^{2 tau psi},
/// L = int (tau |v_x|^2 + tau^3 |v|^2) e^{2 tau psi}.
UcpConstants fit_ucp_constants(const EvolutionField& z, const WeightSpec& weight, Real x0,
                               Real delta, const std::vector<Real>& tau_grid, const Sigma& sigma,
                               const CoefficientField& a, const CoefficientField& p);

}  // namespace xformlab
