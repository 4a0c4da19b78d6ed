#include "xformlab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace xformlab {

std::string format_real(Real v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : "nan";
}

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const char* header) { out_ += header; out_ += '\n'; }

  template <typename... Values>
  void row(Values... values) {
    const Real cells[] = {static_cast<Real>(values)...};
    for (std::size_t i = 0; i < sizeof...(Values); ++i) {
      if (i > 0) out_ += ',';
      out_ += format_real(cells[i]);
    }
    out_ += '\n';
  }

  std::string str() && { return std::move(out_); }

 private:
  std::string out_;
};

}  // namespace

std::string coefficient_csv(const CoefficientField& f) {
  CsvWriter w("x,value");
  for (int j = 0; j < f.size(); ++j) w.row(f.grid().node(j), f[j]);
  return std::move(w).str();
}

std::string evolution_csv(const EvolutionField& u) {
  CsvWriter w("t,x,re,im");
  for (int k = 0; k < u.tgrid.size(); ++k) {
    for (int j = 0; j < u.sgrid.size(); ++j) {
      w.row(u.tgrid.node(k), u.sgrid.node(j), u(k, j).real(), u(k, j).imag());
    }
  }
  return std::move(w).str();
}

std::string trace_csv(const CauchyTrace& trace) {
  CsvWriter w("t,re_u0,im_u0,re_ux0,im_ux0");
  for (int k = 0; k < trace.tgrid.size(); ++k) {
    w.row(trace.tgrid.node(k), trace.u0[k].real(), trace.u0[k].imag(), trace.ux0[k].real(),
          trace.ux0[k].imag());
  }
  return std::move(w).str();
}

std::string kernel_csv(const Kernel& k) {
  CsvWriter w("x,y,K");
  const SpaceGrid& g = k.tri().base();
  for (int i = 0; i <= g.n(); ++i) {
    for (int j = 0; j <= i; ++j) w.row(g.node(i), g.node(j), k(i, j));
  }
  return std::move(w).str();
}

std::string characteristic_csv(const CharacteristicCurve& c) {
  CsvWriter w("x,y");
  for (std::size_t i = 0; i < c.x.size(); ++i) w.row(c.x[i], c.y[i]);
  return std::move(w).str();
}

std::string intertwining_csv(const IntertwiningReport& r) {
  CsvWriter w("interior_residual,trace_gap_value,trace_gap_slope");
  w.row(r.interior_residual, r.trace_gap_value, r.trace_gap_slope);
  return std::move(w).str();
}

std::string carleman_csv(const CarlemanReport& r, std::size_t member) {
  require(member < r.lhs.size(), "no such family member");
  CsvWriter w("tau,lhs,rhs,ratio,log_scale");
  for (std::size_t i = 0; i < r.tau_grid.size(); ++i) {
    const Real lhs = r.lhs[member][i];
    const Real rhs = r.rhs[member][i];
    w.row(r.tau_grid[i], lhs, rhs, rhs > 0.0 ? lhs / rhs : std::nan(""), r.log_scale[member][i]);
  }
  return std::move(w).str();
}

std::string reconstruction_csv(const CoefficientField& truth, const CoefficientField& estimate) {
  require_same_grid(truth.grid(), estimate.grid(), "truth and estimate");
  CsvWriter w("x,p_true,p_estimate");
  for (int j = 0; j < truth.size(); ++j) w.row(truth.grid().node(j), truth[j], estimate[j]);
  return std::move(w).str();
}

CoefficientField read_coefficient_csv(const std::filesystem::path& path, const SpaceGrid& grid,
                                      Role role) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open coefficient file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x,value") {
    throw ValidationError(path.string() + ": expected header 'x,value'");
  }
  std::vector<Real> values;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    Real x = 0.0, v = 0.0;
    const char* b = line.data();
    const char* e = b + line.size();
    const bool ok = comma != std::string::npos &&
                    std::from_chars(b, b + comma, x).ec == std::errc() &&
                    std::from_chars(b + comma + 1, e, v).ec == std::errc();
    if (!ok) throw ValidationError(path.string() + ": malformed row " + std::to_string(row));
    const int j = static_cast<int>(values.size());
    if (j > grid.n() || std::abs(x - grid.node(j)) > 1e-9 * grid.ell()) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) +
                            " does not match the grid node");
    }
    values.push_back(v);
  }
  if (static_cast<int>(values.size()) != grid.size()) {
    throw ValidationError(path.string() + ": expected " + std::to_string(grid.size()) + " rows");
  }
  return {grid, Eigen::Map<RealVector>(values.data(), grid.size()), role};
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace xformlab
