#include "xformlab/transform.hpp"

#include <cmath>
#include <sstream>

#include "xformlab/evolve.hpp"

namespace xformlab {

EvolutionField transform_field(const EvolutionField& u, const Kernel& k) {
  require(k.tri().base() == u.sgrid, "grid mismatch: kernel and field");
  EvolutionField v(u.sgrid, u.tgrid);
  for (int t = 0; t < u.tgrid.size(); ++t) {
    const ComplexVector row = u.row(t);
    v.values.row(t) = (row + apply_kernel(k, row)).transpose();
  }
  return v;
}

IntertwiningReport intertwining_residual(const EvolutionField& u, const Kernel& k,
                                         const Sigma& sigma, const CoefficientField& a,
                                         const CoefficientField& p, const CoefficientField& q,
                                         Real gate) {
  require_same_grid(u.sgrid, a.grid(), "field and a");
  require_same_grid(u.sgrid, q.grid(), "field and q");
  require(k.tri().base() == u.sgrid, "grid mismatch: kernel and field");

  const Real own = pde_residual(u, sigma, a, p);
  if (gate < 0.0) gate = residual_gate(u.sgrid, u.tgrid, residual_scale(u, a));
  if (!(own <= gate)) {
    std::ostringstream os;
    os << "intertwining check refused: u fails its own PDE residual gate (" << own << " > "
       << gate << ")";
    throw ValidationError(os.str());
  }

  const EvolutionField v = transform_field(u, k);
  const CauchyTrace tu = extract_cauchy_trace(u);
  const CauchyTrace tv = extract_cauchy_trace(v);

  const Real h2 = u.sgrid.h() * u.sgrid.h();
  const Real dt = u.tgrid.dt();
  const Complex s = sigma.value();
  IntertwiningReport r;
  for (int t = 1; t < u.tgrid.m(); ++t) {
    for (int j = 1; j < u.sgrid.n(); ++j) {
      const Complex vt = (v(t + 1, j) - v(t - 1, j)) / (2.0 * dt);
      const Complex vxx = (v(t, j + 1) - 2.0 * v(t, j) + v(t, j - 1)) / h2;
      const Complex forcing = a[0] * k(j, 0) * tu.ux0[t];
      r.interior_residual =
          std::max(r.interior_residual, std::abs(s * vt - a[j] * vxx + q[j] * v(t, j) + forcing));
    }
  }
  r.trace_gap_value = (tv.u0 - tu.u0).cwiseAbs().maxCoeff();
  r.trace_gap_slope = (tv.ux0 - tu.ux0).cwiseAbs().maxCoeff();
  return r;
}

IntertwiningReport intertwining_refinement(const IntertwiningReport& coarse,
                                           const IntertwiningReport& fine) {
  IntertwiningReport r = fine;
  r.refinement_ratio = coarse.interior_residual / fine.interior_residual;
  return r;
}

OrthogonalityProfile data_orthogonality(const Kernel& k, const ComplexVector& w) {
  OrthogonalityProfile out;
  out.x = k.tri().base().nodes();
  out.profile = apply_kernel(k, w);
  out.max_magnitude = max_abs(out.profile);
  return out;
}

OrthogonalityProfile data_orthogonality(const Kernel& k, const RealVector& w) {
  return data_orthogonality(k, ComplexVector(w.cast<Complex>()));
}

}  // namespace xformlab
