#include "nhrm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "nhrm/linalg.hpp"
#include "nhrm/rng.hpp"

namespace nhrm {

namespace {

void check_times(const std::vector<double>& times) {
  require(!times.empty(), "time grid is empty");
  for (std::size_t k = 0; k < times.size(); ++k)
    require(std::isfinite(times[k]) && times[k] >= 0.0 && (k == 0 || times[k] > times[k - 1]),
            "time grid must be nonnegative and strictly increasing");
}

void check_g(double g, bool critical_allowed) {
  if (critical_allowed)
    require(g > 0.0 && g <= 1.0, "coupling g must lie in (0, 1]");
  else
    require(g > 0.0 && g < 1.0, "coupling g must lie in (0, 1)");
}

// Upper-triangular gT - I from the Schur form of X, plus the abscissa of gX - I.
struct ShiftedSchur {
  ComplexMatrix q;
  ComplexMatrix a;
  double abscissa;
};

ShiftedSchur shifted_schur(const ComplexMatrix& x, double g) {
  require(x.rows() == x.cols() && x.rows() > 0, "matrix must be square and nonempty");
  const SchurForm sf = schur(x);
  ShiftedSchur out{sf.q, g * sf.t, 0.0};
  out.a.diagonal().array() -= 1.0;
  out.abscissa = spectral_abscissa(out.a.diagonal());
  return out;
}

void guard_growth(double abscissa, double t) {
  if (t * std::max(0.0, abscissa) > kGrowthHorizon)
    throw NumericalError("exponential growth beyond the supported horizon at t = " + std::to_string(t),
                         abscissa);
}

struct LineFit {
  double slope, intercept, residual;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "fit window needs at least two distinct abscissae");
  LineFit f{sxy / sxx, 0.0, 0.0};
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

}  // namespace

std::string to_string(CurveSource source) {
  switch (source) {
    case CurveSource::empirical_trace: return "empirical-trace";
    case CurveSource::empirical_mc: return "empirical-mc";
    case CurveSource::prediction: return "prediction";
  }
  return "unknown";
}

std::vector<double> geometric_grid(double t_min, double t_max, int per_decade) {
  require(t_min > 0.0 && t_max > t_min, "geometric grid needs 0 < t_min < t_max");
  require(per_decade >= 1, "geometric grid needs at least one point per decade");
  const int count = static_cast<int>(std::ceil(per_decade * std::log10(t_max / t_min)));
  std::vector<double> out;
  for (int k = 0; k <= count; ++k) out.push_back(t_min * std::pow(t_max / t_min, static_cast<double>(k) / count));
  out.back() = t_max;
  return out;
}

std::vector<double> uniform_grid(double t0, double t1, int count) {
  require(count >= 2 && t1 > t0, "uniform grid needs t1 > t0 and at least two points");
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) out[k] = t0 + (t1 - t0) * k / (count - 1);
  out.back() = t1;
  return out;
}

double bessel_average(double t, double g, double tol) {
  require(t >= 0.0, "bessel_average: t must be nonnegative");
  auto trapezoid = [&](int m) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k) acc += std::exp(2.0 * t * (g * std::cos(2.0 * std::numbers::pi * k / m) - 1.0));
    return acc / m;
  };
  int m = 16;
  double prev = trapezoid(m);
  while (m < (1 << 22)) {
    m *= 2;
    const double cur = trapezoid(m);
    if (std::abs(cur - prev) <= tol * std::abs(cur)) return cur;
    prev = cur;
  }
  throw NumericalError("bessel_average: trapezoidal rule did not converge", std::abs(prev));
}

DecayCurve predicted_sqnorm(const PerronPair& pp, double g, const std::vector<double>& times,
                            const std::string& profile_id) {
  check_g(g, true);
  check_times(times);
  const double c_s = pp.weight();
  DecayCurve c;
  c.times = times;
  c.meta = {g, profile_id, CurveSource::prediction, 0};
  for (double t : times) c.values.push_back(c_s * bessel_average(t, g));
  return c;
}

DecayCurve empirical_sqnorm_trace(const ComplexMatrix& x, double g, const std::vector<double>& times) {
  check_g(g, true);
  check_times(times);
  const ShiftedSchur s = shifted_schur(x, g);
  guard_growth(s.abscissa, times.back());
  const double n = static_cast<double>(x.rows());
  DecayCurve c;
  c.times = times;
  c.values.resize(times.size());
  c.meta = {g, "", CurveSource::empirical_trace, 0};
  for_each_triangular_exp(s.a, times, [&](std::size_t k, const ComplexMatrix& e) { c.values[k] = e.squaredNorm() / n; });
  return c;
}

DecayCurve empirical_sqnorm_mc(const ComplexMatrix& x, double g, const std::vector<double>& times, int n_init,
                               std::uint64_t seed) {
  check_g(g, true);
  check_times(times);
  require(n_init >= 1, "empirical_sqnorm_mc: n_init must be positive");
  const ShiftedSchur s = shifted_schur(x, g);
  guard_growth(s.abscissa, times.back());
  const auto n = x.rows();

  ComplexMatrix u(n, n_init);
  for (int j = 0; j < n_init; ++j) {
    Rng rng(seed, Stream::initial_vectors, static_cast<std::uint64_t>(j));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = rng.normal();
      u(i, j) = cplx(re, rng.normal());
    }
    u.col(j).normalize();
  }
  const ComplexMatrix w = s.q.adjoint() * u;

  DecayCurve c;
  c.times = times;
  c.values.resize(times.size());
  c.stderr_values.resize(times.size());
  c.meta = {g, "", CurveSource::empirical_mc, seed};
  for_each_triangular_exp(s.a, times, [&](std::size_t k, const ComplexMatrix& e) {
    const RealVector norms = (e.triangularView<Eigen::Upper>() * w).colwise().squaredNorm().transpose();
    const double m = norms.mean();
    c.values[k] = m;
    c.stderr_values[k] =
        n_init > 1 ? std::sqrt((norms.array() - m).square().sum() / (n_init - 1) / n_init) : 0.0;
  });
  return c;
}

DecayCurve hermitian_sqnorm(const ComplexMatrix& w, const std::vector<double>& times) {
  check_times(times);
  require(w.rows() == w.cols(), "hermitian_sqnorm: matrix must be square");
  require((w - w.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff()),
          "hermitian_sqnorm: matrix must be Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(w, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("hermitian_sqnorm: eigensolver failed", 0.0);
  const RealVector lambda = es.eigenvalues();
  DecayCurve c;
  c.times = times;
  c.meta = {1.0, "wigner", CurveSource::empirical_trace, 0};
  for (double t : times) c.values.push_back((2.0 * t * (lambda.array() - 1.0)).exp().mean());
  return c;
}

DecayCurve semicircle_prediction(const std::vector<double>& times) {
  check_times(times);
  DecayCurve c;
  c.times = times;
  c.meta = {1.0, "semicircle", CurveSource::prediction, 0};
  for (double t : times) {
    // x = cos(phi) removes the square-root endpoint singularities.
    auto f = [t](double phi) {
      const double s = std::sin(phi);
      return std::exp(2.0 * t * (std::cos(phi) - 1.0)) * s * s;
    };
    double err = 0.0;
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, std::numbers::pi, 20, 1e-14, &err);
    c.values.push_back(2.0 / std::numbers::pi * v);
  }
  return c;
}

AutocorrCurve predicted_autocorr(double g, const std::vector<double>& taus) {
  check_g(g, false);
  check_times(taus);
  const double r = std::sqrt(1.0 - g * g);
  AutocorrCurve c;
  c.taus = taus;
  c.g = g;
  for (double tau : taus) c.values.push_back(std::exp(-tau * r) / (2.0 * r));
  return c;
}

AutocorrCurve empirical_autocorr(const ComplexMatrix& x, double g, const std::vector<double>& taus,
                                 const AutocorrOptions& opts) {
  check_g(g, false);
  check_times(taus);
  require(opts.quad_nodes >= 2 && opts.panel_width > 0.0 && opts.tail_tolerance > 0.0,
          "empirical_autocorr: invalid quadrature options");
  const ShiftedSchur s = shifted_schur(x, g);
  if (!(s.abscissa < 0.0)) throw NumericalError("empirical_autocorr: gX - I is not stable", s.abscissa);
  const auto n = x.rows();
  const double nn = static_cast<double>(n);
  const GaussRule rule = gauss_legendre(opts.quad_nodes);

  // Gauss nodes sit at the same offsets in every panel, so their exponentials
  // are computed once and shifted by the panel start.
  auto integrate = [&](double u_max, double& tail) {
    const int panels = std::max(1, static_cast<int>(std::ceil(u_max / opts.panel_width)));
    const double h = u_max / panels;
    std::vector<ComplexMatrix> offset(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      offset[i] = ComplexMatrix(s.a * (0.5 * h * (rule.nodes[i] + 1.0))).exp();
    const ComplexMatrix step = ComplexMatrix(s.a * h).exp();
    ComplexMatrix start = ComplexMatrix::Identity(n, n);
    ComplexMatrix sigma = ComplexMatrix::Zero(n, n);
    for (int p = 0; p < panels; ++p) {
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const ComplexMatrix e = offset[i].triangularView<Eigen::Upper>() * start;
        sigma.noalias() += (0.5 * h * rule.weights[i]) * (e * e.adjoint());
      }
      start = (step.triangularView<Eigen::Upper>() * start).eval();
    }
    // int_{u_max}^inf ||e^{Au}||^2 <= ||e^{A u_max}||^2 / (2 |abscissa|) up to non-normal transients.
    tail = start.squaredNorm() / nn / (2.0 * -s.abscissa);
    return sigma;
  };

  double u_max = opts.u_max;
  const bool automatic = u_max <= 0.0;
  if (automatic) u_max = std::ceil(std::log(1.0 / opts.tail_tolerance) / (2.0 * -s.abscissa));
  double tail = 0.0;
  ComplexMatrix sigma = integrate(u_max, tail);
  for (int extra = 0; automatic && extra < 4; ++extra) {
    if (tail <= opts.tail_tolerance * trace_n(sigma).real()) break;
    u_max *= 2.0;
    sigma = integrate(u_max, tail);
  }
  if (tail > opts.tail_tolerance * trace_n(sigma).real())
    throw NumericalError("empirical_autocorr: truncated tail exceeds tolerance; increase u_max", tail);

  AutocorrCurve c;
  c.taus = taus;
  c.g = g;
  c.values.resize(taus.size());
  const ComplexMatrix sigma_t = sigma.transpose();
  for_each_triangular_exp(s.a, taus, [&](std::size_t k, const ComplexMatrix& e) {
    c.values[k] = e.cwiseProduct(sigma_t).sum().real() / nn;
  });
  return c;
}

AutocorrCurve lyapunov_autocorr(const ComplexMatrix& x, double g, const std::vector<double>& taus) {
  check_g(g, false);
  check_times(taus);
  require(x.rows() == x.cols(), "lyapunov_autocorr: matrix must be square");
  const auto n = x.rows();
  ComplexMatrix a = g * x;
  a.diagonal().array() -= 1.0;
  const SchurForm sf = schur(a);
  if (!(spectral_abscissa(sf.eigenvalues()) < 0.0))
    throw NumericalError("lyapunov_autocorr: gX - I is not stable", spectral_abscissa(sf.eigenvalues()));
  const ComplexMatrix sigma = solve_lyapunov(sf, -ComplexMatrix::Identity(n, n));
  AutocorrCurve c;
  c.taus = taus;
  c.g = g;
  for (double tau : taus) c.values.push_back(trace_n(ComplexMatrix(expm(a * tau) * sigma)).real());
  return c;
}

AutocorrCurve simulate_autocorr(const ComplexMatrix& x, double g, const std::vector<double>& taus, double dt,
                                double t_total, std::uint64_t seed) {
  check_g(g, false);
  check_times(taus);
  require(dt > 0.0 && t_total > taus.back(), "simulate_autocorr: need dt > 0 and t_total beyond the last lag");
  const auto n = x.rows();
  ComplexMatrix a = g * x;
  a.diagonal().array() -= 1.0;
  const double rate = -spectral_abscissa(a.eigenvalues());
  if (!(rate > 0.0)) throw NumericalError("simulate_autocorr: gX - I is not stable", -rate);

  Rng rng(seed, Stream::noise, 0);
  const double amp = std::sqrt(dt / 2.0);
  ComplexVector u = ComplexVector::Zero(n);
  auto step = [&] {
    ComplexVector noise(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = rng.normal();
      noise(i) = amp * cplx(re, rng.normal());
    }
    u += dt * (a * u) + noise;
  };
  const auto burn = static_cast<long>(std::ceil(10.0 / rate / dt));
  for (long k = 0; k < burn; ++k) step();

  // Record on a coarse grid; lags are rounded to it.
  const long stride = std::max(1L, std::lround(0.01 / dt));
  const double rec_dt = stride * dt;
  const auto records = static_cast<long>(t_total / rec_dt);
  std::vector<ComplexVector> path;
  path.reserve(records);
  for (long r = 0; r < records; ++r) {
    path.push_back(u);
    for (long k = 0; k < stride; ++k) step();
  }
  AutocorrCurve c;
  c.taus = taus;
  c.g = g;
  for (double tau : taus) {
    const long lag = std::lround(tau / rec_dt);
    double acc = 0.0;
    const long count = records - lag;
    for (long r = 0; r < count; ++r) acc += path[r].dot(path[r + lag]).real();
    c.values.push_back(acc / count / static_cast<double>(n));
  }
  return c;
}

ExponentFit fit_decay_exponent(const DecayCurve& curve, double t_min, double t_max) {
  require(t_min > 0.0 && t_max > t_min, "fit_decay_exponent: window must satisfy 0 < t_min < t_max");
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    const double t = curve.times[k];
    if (t < t_min || t > t_max) continue;
    require(curve.values[k] > 0.0, "fit_decay_exponent: nonpositive value in window");
    lx.push_back(std::log(t));
    ly.push_back(std::log(curve.values[k]));
  }
  require(lx.size() >= 2, "fit_decay_exponent: fewer than two points in window");
  const LineFit f = least_squares(lx, ly);
  return {f.slope, f.intercept, t_min, t_max, f.residual, static_cast<int>(lx.size())};
}

double fit_decay_rate(const AutocorrCurve& curve, double t_min, double t_max) {
  require(t_max > t_min && t_min >= 0.0, "fit_decay_rate: window must satisfy 0 <= t_min < t_max");
  std::vector<double> tx, ly;
  for (std::size_t k = 0; k < curve.taus.size(); ++k) {
    const double t = curve.taus[k];
    if (t < t_min || t > t_max) continue;
    require(curve.values[k] > 0.0, "fit_decay_rate: nonpositive value in window");
    tx.push_back(t);
    ly.push_back(std::log(curve.values[k]));
  }
  require(tx.size() >= 2, "fit_decay_rate: fewer than two points in window");
  return -least_squares(tx, ly).slope;
}

void write_curve_csv(const DecayCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.precision(17);
  out << "t_or_tau,value,source,g,profile_id,seed\n";
  for (std::size_t k = 0; k < curve.times.size(); ++k)
    out << curve.times[k] << ',' << curve.values[k] << ',' << to_string(curve.meta.source) << ','
        << curve.meta.g << ',' << curve.meta.profile_id << ',' << curve.meta.seed << '\n';
  if (!out) throw Error("write failed for " + path);
}

}  // namespace nhrm
