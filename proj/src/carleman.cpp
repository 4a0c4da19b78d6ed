#include "xformlab/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace xformlab {

WeightSpec build_weight(const SpaceGrid& sgrid, const TimeGrid& tgrid, Real t0, Real lambda) {
  const Real T = tgrid.horizon();
  const Real ell = sgrid.ell();
  if (!(t0 > 0.0 && t0 < T)) throw ValidationError("t0 must lie strictly inside (0, T)");
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");

  const Real N = (ell + 3.0) / std::min((T - t0) * (T - t0), t0 * t0);
  WeightSpec w{sgrid, tgrid, lambda, t0, N, RealMatrix(tgrid.size(), sgrid.size()),
               RealMatrix(tgrid.size(), sgrid.size())};
  for (int k = 0; k < tgrid.size(); ++k) {
    const Real dt = tgrid.node(k) - t0;
    for (int j = 0; j < sgrid.size(); ++j) {
      w.psi(k, j) = ell + 2.0 - sgrid.node(j) - N * dt * dt;
    }
  }
  for (int k : {0, tgrid.m()}) {
    for (int j = 0; j < sgrid.size(); ++j) {
      if (!(w.psi(k, j) < 0.0)) {
        std::ostringstream os;
        os << "weight is not negative at t = " << tgrid.node(k) << ", x = " << sgrid.node(j);
        throw ValidationError(os.str());
      }
    }
  }
  w.alpha = (lambda * w.psi.array()).exp().matrix();
  return w;
}

Cutoff::Cutoff(Real lower, Real upper) : lower_(lower), upper_(upper) {
  if (!(lower < upper)) {
    std::ostringstream os;
    os << "cutoff thresholds out of order: " << lower << " >= " << upper;
    throw ValidationError(os.str());
  }
}

Cutoff Cutoff::for_point(Real ell, Real x0, Real delta) {
  if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  return {2.0 + delta, ell + 2.0 - x0 - delta};
}

Real Cutoff::operator()(Real s) const {
  if (s <= lower_) return 0.0;
  if (s >= upper_) return 1.0;
  const Real r = (s - lower_) / (upper_ - lower_);
  return r * r * r * (10.0 + r * (-15.0 + 6.0 * r));
}

RealVector cutoff_mu(Real delta, Real x0, Real ell, const RealVector& s) {
  const Cutoff mu = Cutoff::for_point(ell, x0, delta);
  return s.unaryExpr([&](Real v) { return mu(v); });
}

SupportViolation support_violation(const EvolutionField& z) {
  SupportViolation worst;
  const int m = z.tgrid.m();
  const int n = z.sgrid.n();
  const Real h = z.sgrid.h();
  auto consider = [&](Real mag, int k, int j) {
    if (mag > worst.magnitude) worst = {mag, k, j};
  };
  for (int k = 0; k <= m; ++k) {
    consider(std::abs(z(k, 0)), k, 0);
    consider(std::abs(z(k, n)), k, n);
    consider(z.sgrid.ell() * std::abs(left_slope(z(k, 0), z(k, 1), z(k, 2), h)), k, 0);
  }
  for (int j = 0; j <= n; ++j) {
    consider(std::abs(z(0, j)), 0, j);
    consider(std::abs(z(m, j)), m, j);
  }
  return worst;
}

namespace {

struct Stencil {
  Complex z, zt, zx, zxx;
};

Stencil stencil(const EvolutionField& z, int k, int j) {
  const Real h = z.sgrid.h();
  const Real dt = z.tgrid.dt();
  return {z(k, j), (z(k + 1, j) - z(k - 1, j)) / (2.0 * dt), (z(k, j + 1) - z(k, j - 1)) / (2.0 * h),
          (z(k, j + 1) - 2.0 * z(k, j) + z(k, j - 1)) / (h * h)};
}

Complex apply_operator(const Stencil& s, Complex sigma, Real a, Real p) {
  return sigma * s.zt - a * s.zxx + p * s.z;
}

void require_field_grids(const EvolutionField& z, const WeightSpec& w, const CoefficientField& a,
                         const CoefficientField& p) {
  require(z.sgrid == w.sgrid && z.tgrid == w.tgrid, "grid mismatch: test function and weight");
  require_same_grid(z.sgrid, a.grid(), "test function and a");
  require_same_grid(z.sgrid, p.grid(), "test function and p");
}

// Interior-node sums of energy and source densities under exp(2 tau (phi - top)),
// top = max phi over the nodes where either density is nonzero.
template <typename Energy, typename Source>
CarlemanSides weighted_sums(const RealMatrix& phi, Real tau, const SpaceGrid& s, const TimeGrid& t,
                            Energy energy, Source source) {
  RealMatrix e = RealMatrix::Zero(t.size(), s.size());
  RealMatrix f = RealMatrix::Zero(t.size(), s.size());
  Real top = -std::numeric_limits<Real>::infinity();
  for (int k = 1; k < t.m(); ++k) {
    for (int j = 1; j < s.n(); ++j) {
      e(k, j) = energy(k, j);
      f(k, j) = source(k, j);
      if (e(k, j) != 0.0 || f(k, j) != 0.0) top = std::max(top, phi(k, j));
    }
  }
  if (!std::isfinite(top)) top = phi.block(1, 1, t.m() - 1, s.n() - 1).maxCoeff();
  CarlemanSides out;
  out.log_scale = 2.0 * tau * top;
  const Real cell = s.h() * t.dt();
  for (int k = 1; k < t.m(); ++k) {
    for (int j = 1; j < s.n(); ++j) {
      if (e(k, j) == 0.0 && f(k, j) == 0.0) continue;
      const Real w = std::exp(2.0 * tau * (phi(k, j) - top)) * cell;
      out.lhs += w * e(k, j);
      out.rhs += w * f(k, j);
    }
  }
  return out;
}

}  // namespace

CarlemanSides carleman_sides(const EvolutionField& z, const WeightSpec& weight, Real tau,
                             const Sigma& sigma, const CoefficientField& a,
                             const CoefficientField& p, Real tolerance) {
  require_field_grids(z, weight, a, p);
  require(tau > 0.0, "tau must be positive");
  const Real scale = z.values.cwiseAbs().maxCoeff();
  const SupportViolation v = support_violation(z);
  if (v.magnitude > tolerance * scale) {
    std::ostringstream os;
    os << "test function violates the support condition at t = " << z.tgrid.node(v.time_index)
       << ", x = " << z.sgrid.node(v.space_index) << " (magnitude " << v.magnitude << ")";
    throw ValidationError(os.str());
  }
  const Complex s = sigma.value();
  return weighted_sums(
      weight.alpha, tau, z.sgrid, z.tgrid,
      [&](int k, int j) {
        const Stencil st = stencil(z, k, j);
        return tau * std::norm(st.zx) + tau * tau * tau * std::norm(st.z);
      },
      [&](int k, int j) { return std::norm(apply_operator(stencil(z, k, j), s, a[j], p[j])); });
}

CarlemanReport carleman_study(const std::vector<EvolutionField>& family, const WeightSpec& weight,
                              std::vector<Real> tau_grid, const Sigma& sigma,
                              const CoefficientField& a, const CoefficientField& p) {
  require(!family.empty(), "empty test-function family");
  require(!tau_grid.empty(), "empty tau grid");
  std::sort(tau_grid.begin(), tau_grid.end());

  CarlemanReport r;
  r.tau_grid = tau_grid;
  bool any_defined = false;
  for (const EvolutionField& z : family) {
    std::vector<Real> lhs, rhs, logs;
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
      const CarlemanSides sides = carleman_sides(z, weight, tau_grid[i], sigma, a, p);
      lhs.push_back(sides.lhs);
      rhs.push_back(sides.rhs);
      logs.push_back(sides.log_scale);
      if (!(sides.rhs > 0.0)) continue;
      any_defined = true;
      const Real ratio = sides.ratio();
      if (i == 0) {
        r.fitted_C = std::max(r.fitted_C, ratio);
      } else {
        r.max_ratio = std::max(r.max_ratio, ratio);
      }
    }
    r.lhs.push_back(std::move(lhs));
    r.rhs.push_back(std::move(rhs));
    r.log_scale.push_back(std::move(logs));
  }
  r.degenerate = !any_defined || !(r.fitted_C > 0.0);
  r.violation = r.degenerate || r.max_ratio > CarlemanReport::kSlack * r.fitted_C;
  return r;
}

EvolutionField sample_bump(const Bump& bump, const SpaceGrid& sgrid, const TimeGrid& tgrid) {
  require(bump.x_lo < bump.x_hi && bump.t_lo < bump.t_hi, "bump box is empty");
  require(bump.power >= 2, "bump power must be at least 2");
  auto profile = [&](Real v, Real lo, Real hi) {
    if (v <= lo || v >= hi) return 0.0;
    const Real s = (v - lo) / (hi - lo);
    return std::pow(4.0 * s * (1.0 - s), bump.power);
  };
  EvolutionField z(sgrid, tgrid);
  for (int k = 0; k < tgrid.size(); ++k) {
    const Real ft = profile(tgrid.node(k), bump.t_lo, bump.t_hi);
    for (int j = 0; j < sgrid.size(); ++j) {
      z.values(k, j) = bump.amplitude * ft * profile(sgrid.node(j), bump.x_lo, bump.x_hi);
    }
  }
  return z;
}

std::vector<Bump> random_bumps(int count, std::uint64_t seed, Real x_lo, Real x_hi, Real t_lo,
                               Real t_hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> unit(0.0, 1.0);
  std::vector<Bump> out;
  for (int i = 0; i < count; ++i) {
    Bump b;
    // Each box keeps at least half the available extent in both directions.
    const Real wx = (x_hi - x_lo) * (0.5 + 0.5 * unit(rng));
    const Real wt = (t_hi - t_lo) * (0.5 + 0.5 * unit(rng));
    b.x_lo = x_lo + (x_hi - x_lo - wx) * unit(rng);
    b.x_hi = b.x_lo + wx;
    b.t_lo = t_lo + (t_hi - t_lo - wt) * unit(rng);
    b.t_hi = b.t_lo + wt;
    b.power = 3 + static_cast<int>(3.0 * unit(rng));
    b.amplitude = 0.5 + unit(rng);
    out.push_back(b);
  }
  return out;
}

UcpSeparation ucp_separation_demo(Real ell, Real x0, Real delta, const std::vector<Real>& tau_grid,
                                  const UcpConstants& constants) {
  if (!(x0 > 0.0 && x0 < ell)) throw ValidationError("x0 must lie inside (0, ell)");
  if (!(delta > 0.0 && delta <= 0.5 * (ell - x0))) {
    throw ValidationError("delta must lie in (0, (ell - x0) / 2]");
  }
  if (!(constants.C4 >= 0.0 && constants.C5 >= 0.0)) {
    throw ValidationError("constants must be nonnegative");
  }
  UcpSeparation r;
  r.upper_exponent = 2.0 + delta;
  r.lower_exponent = ell + 2.0 - x0 - delta;
  r.constants = constants;
  const Real ln4 = std::log(constants.C4);
  const Real ln5 = std::log(constants.C5);
  for (Real tau : tau_grid) {
    r.tau.push_back(tau);
    r.log_upper.push_back(ln4 + 2.0 * tau * r.upper_exponent);
    r.log_lower.push_back(ln5 + 2.0 * tau * r.lower_exponent);
  }
  const Real gap = r.lower_exponent - r.upper_exponent;
  if (gap > 0.0 && constants.C5 > 0.0) {
    r.crossing_tau = constants.C4 > 0.0 ? std::max(0.0, (ln4 - ln5) / (2.0 * gap)) : 0.0;
    r.separated = true;
  }
  return r;
}

UcpConstants fit_ucp_constants(const EvolutionField& z, const WeightSpec& weight, Real x0,
                               Real delta, const std::vector<Real>& tau_grid, const Sigma& sigma,
                               const CoefficientField& a, const CoefficientField& p) {
  require_field_grids(z, weight, a, p);
  require(!tau_grid.empty(), "empty tau grid");
  const Real ell = z.sgrid.ell();
  const Cutoff mu = Cutoff::for_point(ell, x0, delta);
  const Real e_upper = 2.0 + delta;
  const Real e_lower = ell + 2.0 - x0 - delta;

  EvolutionField v(z.sgrid, z.tgrid);
  RealMatrix mu_values(z.tgrid.size(), z.sgrid.size());
  for (int k = 0; k < z.tgrid.size(); ++k) {
    for (int j = 0; j < z.sgrid.size(); ++j) {
      mu_values(k, j) = mu(weight.psi(k, j));
      v.values(k, j) = mu_values(k, j) * z(k, j);
    }
  }

  const Complex s = sigma.value();
  Real ln4 = -std::numeric_limits<Real>::infinity();
  Real ln5 = std::numeric_limits<Real>::infinity();
  for (Real tau : tau_grid) {
    require(tau > 0.0, "tau must be positive");
    const CarlemanSides sums = weighted_sums(
        weight.psi, tau, z.sgrid, z.tgrid,
        [&](int k, int j) {
          const Stencil st = stencil(v, k, j);
          return tau * std::norm(st.zx) + tau * tau * tau * std::norm(st.z);
        },
        [&](int k, int j) {
          const Complex commutator = apply_operator(stencil(v, k, j), s, a[j], p[j]) -
                                     mu_values(k, j) * apply_operator(stencil(z, k, j), s, a[j], p[j]);
          return std::norm(commutator);
        });
    ln4 = std::max(ln4, std::log(sums.rhs) + sums.log_scale - 2.0 * tau * e_upper);
    ln5 = std::min(ln5, std::log(sums.lhs) + sums.log_scale - 2.0 * tau * e_lower);
  }
  return {std::exp(ln4), std::exp(ln5)};
}

}  // namespace xformlab
