#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xformlab/carleman.hpp"
#include "xformlab/core.hpp"
#include "xformlab/goursat.hpp"
#include "xformlab/transform.hpp"

namespace xformlab {

/// Shortest round-trip decimal form; independent of the global locale.
std::string format_real(Real v);

std::string coefficient_csv(const CoefficientField& f);
std::string evolution_csv(const EvolutionField& u);
std::string trace_csv(const CauchyTrace& trace);
std::string kernel_csv(const Kernel& k);
std::string characteristic_csv(const CharacteristicCurve& c);
std::string intertwining_csv(const IntertwiningReport& r);
/// One member of a study: tau,lhs,rhs,ratio,log_scale.
std::string carleman_csv(const CarlemanReport& r, std::size_t member);
std::string reconstruction_csv(const CoefficientField& truth, const CoefficientField& estimate);

/// Reads an `x,value` file; node count and positions must match `grid`.
CoefficientField read_coefficient_csv(const std::filesystem::path& path, const SpaceGrid& grid,
                                      Role role);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace xformlab
