#pragma once

#include <cstdint>
#include <string>

#include "nhrm/common.hpp"
#include "nhrm/profile.hpp"

namespace nhrm {

/// Entry laws, each scaled to mean zero and E|x_ij|^2 = s_ij.
///  complex-gaussian: real and imaginary parts independent, variance s_ij/2 each
///  real-gaussian:    real N(0, s_ij)
///  rademacher:       sqrt(s_ij) times a uniform 4th root of unity
///  uniform:          uniform on the complex disk of radius sqrt(2 s_ij)
enum class EntryLaw { complex_gaussian, real_gaussian, rademacher, uniform };

EntryLaw parse_entry_law(const std::string& name);
std::string to_string(EntryLaw law);

struct EnsembleSpec {
  EntryLaw law = EntryLaw::complex_gaussian;
  VarianceProfile profile;
  std::uint64_t seed = 0;
  std::uint64_t sample_index = 0;
};

/// Random matrix with independent entries of variance s_ij. Deterministic in
/// (seed, sample_index) and independent of the order samples are drawn in.
ComplexMatrix sample_matrix(const EnsembleSpec& spec);

/// Hermitian Wigner matrix with complex Gaussian off-diagonal entries of
/// variance half_width^2/(4n) and real Gaussian diagonal of the same
/// variance; its semicircle is supported on [-half_width, half_width].
ComplexMatrix sample_wigner(int n, std::uint64_t seed, double half_width = 1.0,
                            std::uint64_t sample_index = 0);

}  // namespace nhrm
