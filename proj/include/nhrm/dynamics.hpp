#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nhrm/common.hpp"
#include "nhrm/profile.hpp"

namespace nhrm {

enum class CurveSource { empirical_trace, empirical_mc, prediction };

std::string to_string(CurveSource source);

struct CurveMeta {
  double g = 1.0;
  std::string profile_id;
  CurveSource source = CurveSource::prediction;
  std::uint64_t seed = 0;
};

/// Squared-norm curve t -> E||u_t||^2. `stderr_values` is empty unless the
/// curve is a Monte Carlo estimate.
struct DecayCurve {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> stderr_values;
  CurveMeta meta;
};

struct AutocorrCurve {
  std::vector<double> taus;
  std::vector<double> values;
  double g = 0.0;
};

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  /// Root mean square of the regression residuals.
  double residual = 0.0;
  int points = 0;
};

/// `per_decade` points per factor of ten from t_min to t_max (both included).
std::vector<double> geometric_grid(double t_min, double t_max, int per_decade);
/// `count` equispaced points from t0 to t1 inclusive.
std::vector<double> uniform_grid(double t0, double t1, int count);

/// (1/2 pi) int_0^{2 pi} exp(2t(g cos(theta) - 1)) d theta = e^{-2t} I_0(2gt),
/// by the trapezoidal rule with node doubling until the relative change is below `tol`.
double bessel_average(double t, double g, double tol = 1e-13);

/// c_S e^{-2t} I_0(2gt) with c_S = <v_l><v_r>/<v_l, v_r>.
DecayCurve predicted_sqnorm(const PerronPair& pp, double g, const std::vector<double>& times,
                            const std::string& profile_id = "");

/// Largest t * max(0, spectral abscissa of gX - I) tolerated before the
/// exponentials are considered to overflow the working range.
inline constexpr double kGrowthHorizon = 300.0;

/// tr_N[e^{t(gX^* - I)} e^{t(gX - I)}] = ||e^{t(gT - I)}||_F^2 / N from one Schur
/// factorization X = Q T Q^*.
DecayCurve empirical_sqnorm_trace(const ComplexMatrix& x, double g, const std::vector<double>& times);

/// Average of ||e^{t(gX - I)} u_0||^2 over `n_init` uniform unit vectors u_0.
DecayCurve empirical_sqnorm_mc(const ComplexMatrix& x, double g, const std::vector<double>& times, int n_init,
                               std::uint64_t seed);

/// tr_N e^{2t(W - I)} for Hermitian W, via its eigenvalues.
DecayCurve hermitian_sqnorm(const ComplexMatrix& w, const std::vector<double>& times);

/// (2/pi) int_{-1}^{1} e^{2t(x-1)} sqrt(1 - x^2) dx by adaptive Gauss-Kronrod.
DecayCurve semicircle_prediction(const std::vector<double>& times);

/// e^{-tau sqrt(1 - g^2)} / (2 sqrt(1 - g^2)), for 0 < g < 1.
AutocorrCurve predicted_autocorr(double g, const std::vector<double>& taus);

struct AutocorrOptions {
  /// Upper limit of the u-integral; 0 picks it from the spectral abscissa.
  double u_max = 0.0;
  /// Gauss-Legendre nodes per unit-length panel.
  int quad_nodes = 12;
  double panel_width = 1.0;
  /// Relative bound on the neglected tail int_{u_max}^inf.
  double tail_tolerance = 1e-10;
};

/// R(tau) = e^{-tau} int_0^{u_max} e^{-2u} tr_N(e^{gX(u+tau)} e^{gX^* u}) du by
/// composite Gauss-Legendre quadrature in the Schur basis of X.
AutocorrCurve empirical_autocorr(const ComplexMatrix& x, double g, const std::vector<double>& taus,
                                 const AutocorrOptions& opts = {});

/// R(tau) = tr_N[e^{(gX - I)tau} Sigma] with (gX - I) Sigma + Sigma (gX - I)^* = -I.
AutocorrCurve lyapunov_autocorr(const ComplexMatrix& x, double g, const std::vector<double>& taus);

/// Time average of <u_t, u_{t+tau}>/N along one Euler-Maruyama path of
/// du = (gX - I)u dt + dB. A smoke check only; it carries sampling noise.
AutocorrCurve simulate_autocorr(const ComplexMatrix& x, double g, const std::vector<double>& taus, double dt,
                                double t_total, std::uint64_t seed);

/// Least-squares slope of log(value) against log(t) over t in [t_min, t_max].
ExponentFit fit_decay_exponent(const DecayCurve& curve, double t_min, double t_max);

/// Least-squares decay rate of log(value) against tau over [t_min, t_max],
/// returned positive for decaying curves.
double fit_decay_rate(const AutocorrCurve& curve, double t_min, double t_max);

/// Columns t_or_tau,value,source,g,profile_id,seed.
void write_curve_csv(const DecayCurve& curve, const std::string& path);

}  // namespace nhrm
