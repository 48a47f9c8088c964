#pragma once

#include <vector>

#include "nhrm/common.hpp"

// Reference values computed by routes that share no code with the main
// algorithms (power series, plain loops, dense eigensolvers).
namespace nhrm::oracle {

/// sum_k a_k b_k <S^k 1>, with S^k 1 built by explicit loops.
cplx polynomial_series(const RealMatrix& s, const std::vector<cplx>& a, const std::vector<cplx>& b);

/// Modified Bessel functions I_0, I_1 by their power series.
double bessel_i0(double x);
double bessel_i1(double x);

/// e^{-2t} I_1(2t) / t, the semicircle squared-norm value (1 at t = 0).
double semicircle_sqnorm(double t);

/// Spectral radius from a dense nonsymmetric eigensolver.
double dense_spectral_radius(const RealMatrix& s);

}  // namespace nhrm::oracle
