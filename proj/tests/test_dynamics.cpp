#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "nhrm/dynamics.hpp"
#include "nhrm/oracles.hpp"
#include "nhrm/profile.hpp"
#include "nhrm/sampler.hpp"

using namespace nhrm;

namespace {

const char* const kTwoBlock = "two-block:within=1,across=0.5,across_reverse=0.2,split=0.3";
const double kLimit = 1.0 / (2.0 * std::sqrt(std::numbers::pi));

ComplexMatrix draw(const char* profile, int n, std::uint64_t seed, EntryLaw law = EntryLaw::complex_gaussian) {
  return sample_matrix({law, build_profile(profile, n, seed), seed, 0});
}

DecayCurve synthetic(const std::vector<double>& t, double (*f)(double)) {
  DecayCurve c;
  c.times = t;
  for (double x : t) c.values.push_back(f(x));
  return c;
}

}  // namespace

TEST_CASE("time grids") {
  const auto g = geometric_grid(1.0, 100.0, 10);
  CHECK(g.size() == 21);
  CHECK(g.front() == 1.0);
  CHECK(g.back() == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(g[10] == doctest::Approx(10.0).epsilon(1e-13));
  const auto u = uniform_grid(0.0, 5.0, 11);
  CHECK(u.size() == 11);
  CHECK(u[4] == doctest::Approx(2.0));
  CHECK(u.back() == 5.0);
  CHECK_THROWS_AS(geometric_grid(0.0, 1.0, 10), InvalidArgument);
  CHECK_THROWS_AS(uniform_grid(0.0, 1.0, 1), InvalidArgument);
}

TEST_CASE("Bessel average against the power series") {
  CHECK(bessel_average(0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bessel_average(1.0, 1.0) == doctest::Approx(std::exp(-2.0) * oracle::bessel_i0(2.0)).epsilon(1e-13));
  CHECK(std::abs(bessel_average(1.0, 1.0) - 0.30851) < 1e-5);
  for (double t : {0.1, 0.7, 3.0, 12.0, 25.0})
    for (double g : {0.0, 0.3, 0.9, 1.0})
      CHECK(bessel_average(t, g) == doctest::Approx(std::exp(-2.0 * t) * oracle::bessel_i0(2.0 * g * t)).epsilon(1e-12));
}

TEST_CASE("predicted squared norm") {
  const PerronPair c = perron_vectors(build_profile("constant", 10));
  const DecayCurve zero = predicted_sqnorm(c, 1.0, {0.0});
  CHECK(zero.values[0] == doctest::Approx(1.0).epsilon(1e-15));
  const DecayCurve far = predicted_sqnorm(c, 1.0, {100.0});
  CHECK(std::abs(std::sqrt(100.0) * far.values[0] / kLimit - 1.0) <= 0.01);

  // Prefactor <v_l><v_r>/<v_l,v_r> for a non-row-stochastic profile.
  const PerronPair tb = perron_vectors(build_profile(kTwoBlock, 20));
  const double w = tb.v_l.mean() * tb.v_r.mean() / (tb.v_l.dot(tb.v_r) / 20.0);
  CHECK(predicted_sqnorm(tb, 0.7, {2.0}).values[0] == doctest::Approx(w * bessel_average(2.0, 0.7)).epsilon(1e-13));

  const DecayCurve window = predicted_sqnorm(c, 1.0, geometric_grid(50.0, 200.0, 40));
  const double slope = fit_decay_exponent(window, 50.0, 200.0).slope;
  CHECK(slope >= -0.52);
  CHECK(slope <= -0.48);
}

TEST_CASE("empirical squared norm: trivial cases and a direct oracle") {
  const ComplexMatrix zero = ComplexMatrix::Zero(6, 6);
  const DecayCurve z = empirical_sqnorm_trace(zero, 0.8, {0.0, 0.5, 2.0});
  CHECK(z.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 0; i < z.times.size(); ++i)
    CHECK(z.values[i] == doctest::Approx(std::exp(-2.0 * z.times[i])).epsilon(1e-13));

  const ComplexMatrix x = draw(kTwoBlock, 40, 3);
  const std::vector<double> times = {0.0, 0.5, 1.5, 4.0};
  const DecayCurve c = empirical_sqnorm_trace(x, 0.9, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const ComplexMatrix e = (times[i] * (0.9 * x - ComplexMatrix::Identity(40, 40))).exp();
    CHECK(c.values[i] == doctest::Approx(e.squaredNorm() / 40.0).epsilon(1e-10));
    CHECK(c.values[i] > 0.0);
  }
}

TEST_CASE("Monte Carlo squared norm agrees with the trace") {
  const ComplexMatrix x = draw("constant", 100, 4);
  const std::vector<double> times = uniform_grid(0.0, 5.0, 6);
  const DecayCurve trace = empirical_sqnorm_trace(x, 1.0, times);
  const DecayCurve mc = empirical_sqnorm_mc(x, 1.0, times, 2000, 11);
  CHECK(mc.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < times.size(); ++i) {
    CAPTURE(times[i]);
    CHECK(std::abs(mc.values[i] - trace.values[i]) <= 3.0 * mc.stderr_values[i]);
  }
  const DecayCurve again = empirical_sqnorm_mc(x, 1.0, times, 50, 11);
  const DecayCurve once = empirical_sqnorm_mc(x, 1.0, times, 50, 11);
  CHECK(again.values == once.values);
}

TEST_CASE("difference from the prediction decays exponentially at short times") {
  const ComplexMatrix x = draw(kTwoBlock, 400, 5);
  const PerronPair pp = perron_vectors(build_profile(kTwoBlock, 400));
  const std::vector<double> times = uniform_grid(1.0, 10.0, 10);
  const DecayCurve emp = empirical_sqnorm_trace(x, 1.0, times);
  const DecayCurve pred = predicted_sqnorm(pp, 1.0, times);
  AutocorrCurve diff;
  diff.taus = times;
  for (std::size_t i = 0; i < times.size(); ++i) diff.values.push_back(std::abs(emp.values[i] - pred.values[i]));
  CHECK(fit_decay_rate(diff, 1.0, 10.0) > 0.0);
}

TEST_CASE("critical decay of one large sample") {
  const ComplexMatrix x = draw("constant", 1000, 6);
  const DecayCurve c = empirical_sqnorm_trace(x, 1.0, uniform_grid(0.5, 60.0, 120));
  for (double v : c.values) CHECK(v > 0.0);
  const double slope = fit_decay_exponent(c, 10.0, 60.0).slope;
  CHECK(std::abs(slope + 0.5) <= 0.1);
}

TEST_CASE("decay slope is universal across entry laws") {
  const VarianceProfile p = build_profile("constant", 800);
  const std::vector<double> times = uniform_grid(0.5, 60.0, 120);
  std::vector<double> slopes;
  for (EntryLaw law : {EntryLaw::complex_gaussian, EntryLaw::real_gaussian, EntryLaw::rademacher}) {
    const ComplexMatrix x = sample_matrix({law, p, 12, 0});
    slopes.push_back(fit_decay_exponent(empirical_sqnorm_trace(x, 1.0, times), 10.0, 60.0).slope);
  }
  CAPTURE(slopes[0]);
  CAPTURE(slopes[1]);
  CAPTURE(slopes[2]);
  const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
  CHECK(*hi - *lo <= 0.2);
  CHECK(std::abs(*hi - (-0.5)) <= 0.1);
  CHECK(std::abs(*lo - (-0.5)) <= 0.1);
}

TEST_CASE("semicircle prediction and Hermitian decay") {
  const std::vector<double> times = {0.0, 0.5, 3.0, 20.0, 50.0};
  const DecayCurve pred = semicircle_prediction(times);
  for (std::size_t i = 0; i < times.size(); ++i)
    CHECK(pred.values[i] == doctest::Approx(oracle::semicircle_sqnorm(times[i])).epsilon(1e-10));
  CHECK(std::abs(pred.values[4] / (kLimit * std::pow(50.0, -1.5)) - 1.0) <= 0.03);

  const ComplexMatrix zero = ComplexMatrix::Zero(3, 3);
  CHECK(hermitian_sqnorm(zero, {0.0, 1.0}).values[1] == doctest::Approx(std::exp(-2.0)));
  const ComplexMatrix w = sample_wigner(300, 2);
  const DecayCurve h = hermitian_sqnorm(w, {0.0, 1.0, 4.0});
  CHECK(h.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  for (double t : {1.0, 4.0}) {
    const ComplexMatrix e = (2.0 * t * (w - ComplexMatrix::Identity(300, 300))).exp();
    CHECK(h.values[t == 1.0 ? 1 : 2] == doctest::Approx(trace_n(e).real()).epsilon(1e-10));
  }
  CHECK_THROWS_AS(hermitian_sqnorm(draw("constant", 5, 1), {1.0}), InvalidArgument);
}

TEST_CASE("Hermitian decay of one large Wigner sample") {
  const ComplexMatrix w = sample_wigner(2000, 8);
  const DecayCurve c = hermitian_sqnorm(w, uniform_grid(0.5, 50.0, 100));
  CHECK(std::abs(fit_decay_exponent(c, 10.0, 50.0).slope + 1.5) <= 0.1);
}

TEST_CASE("predicted autocorrelation") {
  CHECK(predicted_autocorr(0.6, {0.0}).values[0] == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(predicted_autocorr(1e-9, {1.0}).values[0] == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-9));
  const AutocorrCurve c = predicted_autocorr(0.8, uniform_grid(0.0, 5.0, 21));
  CHECK(fit_decay_rate(c, 0.0, 5.0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK_THROWS_AS(predicted_autocorr(1.0, {0.0}), InvalidArgument);
  CHECK_THROWS_AS(predicted_autocorr(0.0, {0.0}), InvalidArgument);
}

TEST_CASE("empirical autocorrelation") {
  const std::vector<double> taus = uniform_grid(0.0, 5.0, 11);
  const ComplexMatrix zero = ComplexMatrix::Zero(4, 4);
  const AutocorrCurve z = empirical_autocorr(zero, 0.5, taus);
  const AutocorrCurve zl = lyapunov_autocorr(zero, 0.5, taus);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    CHECK(z.values[i] == doctest::Approx(std::exp(-taus[i]) / 2.0).epsilon(1e-10));
    CHECK(zl.values[i] == doctest::Approx(std::exp(-taus[i]) / 2.0).epsilon(1e-12));
  }

  const ComplexMatrix x = draw("constant", 100, 9);
  const AutocorrCurve quad = empirical_autocorr(x, 0.5, taus);
  const AutocorrCurve lyap = lyapunov_autocorr(x, 0.5, taus);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    CHECK(std::abs(quad.values[i] - lyap.values[i]) <= 1e-6);
    CHECK(quad.values[i] <= quad.values[0] + 1e-12);
  }

  const ComplexMatrix x400 = draw("constant", 400, 10);
  const AutocorrCurve emp = empirical_autocorr(x400, 0.5, taus);
  const AutocorrCurve pred = predicted_autocorr(0.5, taus);
  for (std::size_t i = 0; i < taus.size(); ++i) CHECK(std::abs(emp.values[i] / pred.values[i] - 1.0) <= 0.05);
}

TEST_CASE("Euler-Maruyama smoke run") {
  const ComplexMatrix x = draw("constant", 30, 13);
  const AutocorrCurve sim = simulate_autocorr(x, 0.5, {0.0, 1.0}, 1e-3, 200.0, 5);
  const AutocorrCurve lyap = lyapunov_autocorr(x, 0.5, {0.0, 1.0});
  CHECK(std::isfinite(sim.values[0]));
  CHECK(std::abs(sim.values[0] / lyap.values[0] - 1.0) < 0.25);
  CHECK(sim.values[1] < sim.values[0]);
}

TEST_CASE("fits on synthetic curves") {
  const DecayCurve p = synthetic(geometric_grid(1.0, 1000.0, 10), [](double t) { return 1.0 / std::sqrt(t); });
  const ExponentFit f = fit_decay_exponent(p, 1.0, 1000.0);
  CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(f.points == 31);
  CHECK(f.residual < 1e-12);

  AutocorrCurve e;
  e.taus = uniform_grid(0.0, 5.0, 21);
  for (double t : e.taus) e.values.push_back(3.0 * std::exp(-0.6 * t));
  CHECK(fit_decay_rate(e, 0.0, 5.0) == doctest::Approx(0.6).epsilon(1e-10));

  CHECK_THROWS_AS(fit_decay_exponent(p, 2000.0, 3000.0), InvalidArgument);
}

TEST_CASE("curve CSV") {
  const PerronPair c = perron_vectors(build_profile("constant", 4));
  DecayCurve curve = predicted_sqnorm(c, 1.0, {0.0, 1.0}, "constant");
  const auto path = (std::filesystem::temp_directory_path() / "nhrm_curve_test.csv").string();
  write_curve_csv(curve, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "t_or_tau,value,source,g,profile_id,seed");
  CHECK(row.rfind("0,1,prediction,1,constant,0", 0) == 0);
  std::filesystem::remove(path);
}
