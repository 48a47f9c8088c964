#include "nhrm/sampler.hpp"

#include <cmath>

#include "nhrm/rng.hpp"

namespace nhrm {

EntryLaw parse_entry_law(const std::string& name) {
  if (name == "complex-gaussian") return EntryLaw::complex_gaussian;
  if (name == "real-gaussian") return EntryLaw::real_gaussian;
  if (name == "rademacher") return EntryLaw::rademacher;
  if (name == "uniform") return EntryLaw::uniform;
  throw InvalidArgument("unknown entry law '" + name + "'");
}

std::string to_string(EntryLaw law) {
  switch (law) {
    case EntryLaw::complex_gaussian: return "complex-gaussian";
    case EntryLaw::real_gaussian: return "real-gaussian";
    case EntryLaw::rademacher: return "rademacher";
    case EntryLaw::uniform: return "uniform";
  }
  return "?";
}

namespace {

// Unit-variance variate of the given law: E xi = 0, E|xi|^2 = 1.
cplx unit_variate(EntryLaw law, Rng& rng) {
  switch (law) {
    case EntryLaw::complex_gaussian: {
      const double re = rng.normal();
      const double im = rng.normal();
      return {re * M_SQRT1_2, im * M_SQRT1_2};
    }
    case EntryLaw::real_gaussian:
      return {rng.normal(), 0.0};
    case EntryLaw::rademacher: {
      static constexpr cplx roots[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
      return roots[rng.bits() >> 62];
    }
    case EntryLaw::uniform: {
      // |xi|^2 uniform on [0, 2] gives a uniform point on the disk of radius sqrt(2).
      const double r = std::sqrt(2.0 * rng.uniform());
      return std::polar(r, 2.0 * std::numbers::pi * rng.uniform());
    }
  }
  return {};
}

}  // namespace

ComplexMatrix sample_matrix(const EnsembleSpec& spec) {
  const int n = spec.profile.n();
  const RealMatrix& s = spec.profile.s();
  Rng rng(spec.seed, Stream::matrix, spec.sample_index);
  ComplexMatrix x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = std::sqrt(s(i, j)) * unit_variate(spec.law, rng);
  return x;
}

ComplexMatrix sample_wigner(int n, std::uint64_t seed, double half_width, std::uint64_t sample_index) {
  require(n >= 2, "sample_wigner: n must be at least 2");
  require(half_width > 0.0, "sample_wigner: half_width must be positive");
  const double sigma = half_width / (2.0 * std::sqrt(static_cast<double>(n)));
  Rng rng(seed, Stream::wigner, sample_index);
  ComplexMatrix w(n, n);
  for (int i = 0; i < n; ++i) {
    w(i, i) = sigma * rng.normal();
    for (int j = i + 1; j < n; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      w(i, j) = sigma * M_SQRT1_2 * cplx(re, im);
      w(j, i) = std::conj(w(i, j));
    }
  }
  return w;
}

}  // namespace nhrm
