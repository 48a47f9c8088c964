#pragma once

#include <functional>
#include <vector>

#include "nhrm/common.hpp"

namespace nhrm {

/// A = Q T Q^* with Q unitary and T upper triangular.
struct SchurForm {
  ComplexMatrix q;
  ComplexMatrix t;

  ComplexVector eigenvalues() const { return t.diagonal(); }
};

SchurForm schur(const ComplexMatrix& a);

/// Matrix exponential by scaling and squaring with Pade approximation.
ComplexMatrix expm(const ComplexMatrix& a);

/// Calls visit(k, E) with E = exp(times[k] * A) for strictly increasing,
/// nonnegative `times`. A must be upper triangular (a Schur factor), and the
/// exponentials are built incrementally: E(t_k) = exp((t_k - t_{k-1}) A) E(t_{k-1}),
/// with one Pade evaluation per distinct increment.
void for_each_triangular_exp(const ComplexMatrix& a_upper, const std::vector<double>& times,
                             const std::function<void(std::size_t, const ComplexMatrix&)>& visit);

/// Largest real part of the spectrum.
double spectral_abscissa(const ComplexVector& eigenvalues);

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `order` points (Newton iteration on P_order).
GaussRule gauss_legendre(int order);

/// Stable solution of A Y + Y A^* = C given the Schur form of A.
/// Requires lambda_i + conj(lambda_j) != 0 for all eigenvalue pairs.
ComplexMatrix solve_lyapunov(const SchurForm& a, const ComplexMatrix& c);

}  // namespace nhrm
