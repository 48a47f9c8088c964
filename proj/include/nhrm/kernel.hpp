#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nhrm/common.hpp"
#include "nhrm/profile.hpp"

namespace nhrm {

/// Spectral parameters (zeta1, zeta2) outside the unit disk.
struct SpectralPoint {
  cplx zeta1;
  cplx zeta2;

  /// min(|zeta1|, |zeta2|) - 1.
  double delta() const { return std::min(std::abs(zeta1), std::abs(zeta2)) - 1.0; }
  /// zeta1 * conj(zeta2), the only combination the kernel depends on.
  cplx product() const { return zeta1 * std::conj(zeta2); }
};

/// Circle |zeta| = radius sampled at `nodes` equispaced points.
struct Contour {
  double radius = 1.5;
  int nodes = 256;

  void validate() const;
  cplx node(int k) const;
};

/// f analytic on a disk: either polynomial coefficients a_0..a_m or a callable.
class AnalyticFunction {
public:
  static AnalyticFunction polynomial(std::vector<cplx> coefficients);
  static AnalyticFunction monomial(int degree);
  static AnalyticFunction callable(std::function<cplx(cplx)> fn, std::string name = "callable");

  cplx operator()(cplx z) const;
  bool is_polynomial() const { return !fn_; }
  const std::vector<cplx>& coefficients() const { return coeffs_; }
  const std::string& name() const { return name_; }

  /// f(A) by Horner's rule. Only available for polynomials.
  ComplexMatrix apply(const ComplexMatrix& a) const;

private:
  std::vector<cplx> coeffs_;
  std::function<cplx(cplx)> fn_;
  std::string name_;
};

/// <(zeta1 conj(zeta2) - S)^{-1} 1> by dense LU. Throws NumericalError when
/// the reciprocal condition estimate drops below 1e-13; when `rcond` is given
/// the estimate is written there.
cplx kernel_value(const VarianceProfile& p, const SpectralPoint& pt, double* rcond = nullptr);

/// Same kernel at an arbitrary product c = zeta1 conj(zeta2).
cplx kernel_at_product(const VarianceProfile& p, cplx c, double* rcond = nullptr);

struct KernelDecomposition {
  cplx perron_part;
  cplx complement_part;
  cplx total() const { return perron_part + complement_part; }
};

/// Splits the kernel into the Perron term <v_l><v_r>/(<v_l,v_r>(c - 1)) and
/// the complement term <Q (c - S)^{-1} Q 1>.
KernelDecomposition kernel_decomposition(const VarianceProfile& p, const PerronPair& pp, const SpectralPoint& pt);

enum class QuadratureMode {
  /// One kernel solve per node pair, the literal double contour integral.
  double_loop,
  /// One kernel solve per distinct product zeta1 conj(zeta2) (m instead of m^2).
  factorized,
};

struct FunctionalOptions {
  QuadratureMode mode = QuadratureMode::factorized;
  /// Relative tolerance for the half-node convergence check; <= 0 disables it.
  double tolerance = 1e-9;
};

/// (1/2 pi i)^2 of the double contour integral of f(zeta1) g(conj zeta2) K(zeta1, zeta2)
/// with zeta2 on the negatively oriented circle (so conj zeta2 runs positively).
/// For polynomial f, g this is sum_k a_k b_k <S^k 1>.
cplx functional_trace(const VarianceProfile& p, const AnalyticFunction& f, const AnalyticFunction& g,
                      const Contour& c = {}, const FunctionalOptions& opts = {});

/// Contour-quadrature evaluation of tr_N f(X) g(X^*) from resolvents of X.
/// Throws if an eigenvalue of X lies on or outside the contour.
cplx empirical_functional_trace(const ComplexMatrix& x, const AnalyticFunction& f, const AnalyticFunction& g,
                                const Contour& c = {});

/// tr_N (X - zeta1)^{-1} (X^* - conj zeta2)^{-1} via two LU factorizations.
cplx empirical_resolvent_product(const ComplexMatrix& x, const SpectralPoint& pt);

}  // namespace nhrm
