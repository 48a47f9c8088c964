#include "nhrm/harness/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "nhrm/dynamics.hpp"
#include "nhrm/harness/acceptance.hpp"
#include "nhrm/kernel.hpp"
#include "nhrm/mde.hpp"
#include "nhrm/oracles.hpp"
#include "nhrm/profile.hpp"
#include "nhrm/sampler.hpp"

namespace nhrm {

namespace {

using nlohmann::json;

json cjson(cplx c) { return json::array({c.real(), c.imag()}); }

cplx from_cjson(const json& j) { return {j[0].get<double>(), j[1].get<double>()}; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Check at_most(const std::string& name, double value, double bound) {
  return {name, value, "<= " + fmt(bound), value <= bound};
}

Check at_least(const std::string& name, double value, double bound) {
  return {name, value, ">= " + fmt(bound), value >= bound};
}

Check within(const std::string& name, double value, double lo, double hi) {
  return {name, value, "in [" + fmt(lo) + ", " + fmt(hi) + "]", value >= lo && value <= hi};
}

Check no_failures(const std::vector<SampleRow>& rows) {
  double failed = 0;
  for (const auto& r : rows) failed += r.ok ? 0 : 1;
  return {"failed samples", failed, "== 0", failed == 0};
}

struct Context {
  const ExperimentConfig& cfg;
  SpectralPoint pt;
  RunReport report;

  explicit Context(const ExperimentConfig& c) : cfg(c), pt{c.zeta1, c.zeta2} {
    report.experiment = to_string(c.experiment);
    report.config = to_json(c);
    report.config.erase("workers");
    report.config.erase("out_dir");
    report.config_hash = config_hash(c);
    report.seed = c.seed;
  }

  VarianceProfile profile() const { return build_profile(cfg.profile, cfg.n, cfg.seed); }

  ComplexMatrix draw(const VarianceProfile& p, std::uint64_t index) const {
    return sample_matrix(EnsembleSpec{parse_entry_law(cfg.law), p, cfg.seed, index});
  }

  std::vector<SampleRow> samples(const std::function<json(std::uint64_t)>& fn) {
    report.samples = run_samples(cfg.samples, cfg.workers, fn);
    return report.samples;
  }
};

void kernel_mc(Context& c) {
  const VarianceProfile p = c.profile();
  const cplx predicted = kernel_value(p, c.pt);
  c.report.predicted = {{"kernel", cjson(predicted)}};
  const auto rows = c.samples([&](std::uint64_t i) {
    const cplx v = empirical_resolvent_product(c.draw(p, i), c.pt);
    return json{{"value", cjson(v)}, {"abs_error", std::abs(v - predicted)}};
  });
  std::vector<double> re;
  cplx sum = 0.0;
  for (const auto& r : rows)
    if (r.ok) {
      const cplx v = from_cjson(r.values["value"]);
      re.push_back(v.real());
      sum += v;
    }
  c.report.summary = aggregate(re);
  const double err = re.empty() ? std::numeric_limits<double>::infinity()
                                : std::abs(sum / static_cast<double>(re.size()) - predicted);
  c.report.checks.push_back(at_most("|sample mean - kernel|", err, c.cfg.tolerance));
  c.report.checks.push_back(no_failures(rows));
}

void functional(Context& c) {
  const VarianceProfile p = c.profile();
  const AnalyticFunction f = AnalyticFunction::monomial(c.cfg.degree);
  const cplx predicted = functional_trace(p, f, f, c.cfg.contour);
  const cplx series = oracle::polynomial_series(p.s(), f.coefficients(), f.coefficients());
  c.report.predicted = {{"functional", cjson(predicted)}, {"series", cjson(series)}};
  c.report.checks.push_back(at_most("|functional - series|", std::abs(predicted - series), c.cfg.tolerance));
  const auto rows = c.samples([&](std::uint64_t i) {
    const ComplexMatrix x = c.draw(p, i);
    const cplx emp = empirical_functional_trace(x, f, f, c.cfg.contour);
    const cplx direct = trace_n(ComplexMatrix(f.apply(x) * f.apply(x.adjoint())));
    return json{{"empirical", cjson(emp)}, {"direct", cjson(direct)}, {"difference", std::abs(emp - direct)}};
  });
  std::vector<double> re;
  double worst = 0.0;
  for (const auto& r : rows)
    if (r.ok) {
      re.push_back(from_cjson(r.values["empirical"]).real());
      worst = std::max(worst, r.values["difference"].get<double>());
    }
  c.report.summary = aggregate(re);
  if (!rows.empty()) c.report.checks.push_back(at_most("max |contour - direct|", worst, c.cfg.tolerance));
  c.report.checks.push_back(no_failures(rows));
}

void mde_check(Context& c) {
  const VarianceProfile p = c.profile();
  const double bound = c.cfg.kappa * c.pt.delta() * c.pt.delta();
  MdeOptions opts;
  opts.kappa = c.cfg.kappa;
  const BlockDiag4 m0 = mde_solve(p, c.pt, 0.0, 0.0, opts);
  const double dist = (m0.flatten() - mde_exact_zero(c.pt, p.n()).flatten()).cwiseAbs().maxCoeff();
  const BlockDiag4 mr = mde_solve(p, c.pt, 0.5 * bound, 0.5 * bound, opts);
  const cplx dalpha = mde_dalpha_kernel(p, c.pt, c.cfg.alpha, opts);
  const cplx kernel = kernel_value(p, c.pt);
  c.report.predicted = {{"kernel", cjson(kernel)}};
  c.report.extra = {{"dalpha_kernel", cjson(dalpha)},
                    {"iterations", mr.iterations},
                    {"newton_steps", mr.newton_steps}};
  c.report.checks.push_back(at_most("residual at alpha = z = 0", m0.residual, 1e-12));
  c.report.checks.push_back(at_most("|M(0) - M_0|", dist, 1e-12));
  c.report.checks.push_back(at_most("residual at real (alpha, z)", mr.residual, 1e-12));
  c.report.checks.push_back(at_most("imaginary part at real (alpha, z)", mr.max_imag_part(), 1e-12));
  c.report.checks.push_back(at_most("|d/dalpha tr M31 - kernel|", std::abs(dalpha - kernel), c.cfg.tolerance));
}

void f_operator(Context& c) {
  const VarianceProfile p = c.profile();
  const FSpectrum fs = f_operator_top_spectrum(p, c.pt);
  const double rmin = std::min(std::abs(c.pt.zeta1), std::abs(c.pt.zeta2));
  const double top = 1.0 / (rmin * rmin);
  c.report.predicted = {{"top_eigenvalue", top}, {"extreme_eigenvalues", fs.predicted}};
  std::vector<double> head(fs.eigenvalues.begin(), fs.eigenvalues.begin() + std::min<std::size_t>(8, fs.eigenvalues.size()));

  std::vector<double> deltas{0.1, 0.2, 0.5}, sig;
  for (double d : deltas)
    sig.push_back(stability_min_singular_value(
        p, SpectralPoint{std::polar(1.0 + d, std::arg(c.pt.zeta1)), std::polar(1.0 + d, std::arg(c.pt.zeta2))}));
  DecayCurve inv;
  inv.times = deltas;
  for (double s : sig) inv.values.push_back(1.0 / s);
  const ExponentFit fit = fit_decay_exponent(inv, deltas.front(), deltas.back());
  c.report.extra = {{"top_eigenvalues", head},
                    {"eigen_residuals", fs.eigen_residuals},
                    {"stability_deltas", deltas},
                    {"stability_min_singular_values", sig},
                    {"inverse_norm_exponent", fit.slope}};
  c.report.checks.push_back(at_most("| |lambda_max| - 1/min|zeta|^2 |", std::abs(fs.max_abs_eigenvalue - top), c.cfg.tolerance));
  c.report.checks.push_back(at_most("max distance of predicted eigenvalues", fs.max_predicted_error, c.cfg.tolerance));
  c.report.checks.push_back(at_most("max eigenmatrix residual", fs.max_eigen_residual, c.cfg.tolerance));
  c.report.checks.push_back(at_least("exponent of ||L0^-1|| in delta", fit.slope, -1.2));
}

void linearization(Context& c) {
  const VarianceProfile p = c.profile();
  const auto rows = c.samples([&](std::uint64_t i) {
    const ComplexMatrix x = c.draw(p, i);
    const LinearizationResult a = linearization_check(x, c.pt, c.cfg.alpha, c.cfg.kappa);
    const LinearizationResult b = linearization_check(x, c.pt, 2.0 * c.cfg.alpha, c.cfg.kappa);
    return json{{"error", a.error()},
                {"error_doubled", b.error()},
                {"ratio", b.error() / a.error()},
                {"direct", cjson(a.direct)},
                {"gap", a.gap.min_abs_eigenvalue}};
  });
  std::vector<double> ratios;
  for (const auto& r : rows)
    if (r.ok) ratios.push_back(r.values["ratio"].get<double>());
  c.report.summary = aggregate(ratios);
  c.report.predicted = {{"ratio", 4.0}};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double r : ratios) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  c.report.checks.push_back(at_least("min doubling ratio", lo, 4.0 - c.cfg.tolerance));
  c.report.checks.push_back(at_most("max doubling ratio", hi, 4.0 + c.cfg.tolerance));
  c.report.checks.push_back(no_failures(rows));
}

void gap(Context& c) {
  const VarianceProfile p = c.profile();
  const auto rows = c.samples([&](std::uint64_t i) {
    const GapReport g = gap_report(c.draw(p, i), c.pt, c.cfg.alpha, c.cfg.kappa);
    return json{{"min_abs_eigenvalue", g.min_abs_eigenvalue}, {"threshold", g.threshold}, {"psi", g.psi}};
  });
  std::vector<double> mins;
  int with_gap = 0;
  for (const auto& r : rows)
    if (r.ok) {
      mins.push_back(r.values["min_abs_eigenvalue"].get<double>());
      with_gap += r.values["psi"].get<bool>() ? 1 : 0;
    }
  c.report.summary = aggregate(mins);
  c.report.predicted = {{"threshold", c.cfg.kappa * c.pt.delta() * c.pt.delta() / 2.0}};
  const double frac = static_cast<double>(with_gap) / std::max(1, c.cfg.samples);
  c.report.checks.push_back(at_least("fraction of samples with the gap", frac, 1.0 - c.cfg.tolerance));
}

// Mean and standard error over samples of per-time curves stored as "values".
void curve_stats(const std::vector<SampleRow>& rows, std::size_t len, std::vector<double>& mean,
                 std::vector<double>& se) {
  mean.assign(len, std::nan(""));
  se.assign(len, std::nan(""));
  for (std::size_t k = 0; k < len; ++k) {
    std::vector<double> v;
    for (const auto& r : rows)
      if (r.ok) v.push_back(r.values["values"][k].get<double>());
    if (v.empty()) continue;
    const Aggregate a = aggregate(v);
    mean[k] = a.mean;
    se[k] = a.std_error;
  }
}

void decay_common(Context& c, bool hermitian) {
  const std::vector<double> times = c.cfg.grid.build();
  DecayCurve predicted;
  std::function<DecayCurve(std::uint64_t)> empirical;
  std::optional<VarianceProfile> p;
  if (hermitian) {
    predicted = semicircle_prediction(times);
    empirical = [&](std::uint64_t i) { return hermitian_sqnorm(sample_wigner(c.cfg.n, c.cfg.seed, 1.0, i), times); };
  } else {
    p = c.profile();
    predicted = predicted_sqnorm(perron_vectors(*p), c.cfg.g, times, p->id());
    empirical = [&](std::uint64_t i) { return empirical_sqnorm_trace(c.draw(*p, i), c.cfg.g, times); };
  }
  const auto rows = c.samples([&](std::uint64_t i) {
    const DecayCurve e = empirical(i);
    return json{{"values", e.values}};
  });
  std::vector<double> mean, se;
  curve_stats(rows, times.size(), mean, se);

  CurveTable table{"decay", {"t", "empirical_mean", "empirical_stderr", "predicted"}, {}};
  for (std::size_t k = 0; k < times.size(); ++k) table.rows.push_back({times[k], mean[k], se[k], predicted.values[k]});
  c.report.curve = table;

  const double target = hermitian ? -1.5 : -0.5;
  const ExponentFit pfit = fit_decay_exponent(predicted, c.cfg.fit_min, c.cfg.fit_max);
  c.report.predicted = {{"slope", target}, {"prediction_fit_slope", pfit.slope}};
  if (c.cfg.samples == 0) {
    c.report.checks.push_back(
        within("prediction log-log slope", pfit.slope, target - c.cfg.tolerance, target + c.cfg.tolerance));
    return;
  }
  DecayCurve emp;
  emp.times = times;
  emp.values = mean;
  const ExponentFit efit = fit_decay_exponent(emp, c.cfg.fit_min, c.cfg.fit_max);
  std::vector<double> slopes;
  for (const auto& r : rows)
    if (r.ok) {
      DecayCurve one;
      one.times = times;
      one.values = r.values["values"].get<std::vector<double>>();
      slopes.push_back(fit_decay_exponent(one, c.cfg.fit_min, c.cfg.fit_max).slope);
    }
  c.report.summary = aggregate(slopes);
  c.report.extra = {{"empirical_fit", {{"slope", efit.slope}, {"intercept", efit.intercept}, {"residual", efit.residual}}}};
  c.report.checks.push_back(
      within("empirical log-log slope", efit.slope, target - c.cfg.tolerance, target + c.cfg.tolerance));
  c.report.checks.push_back(no_failures(rows));
}

void autocorr(Context& c) {
  const std::vector<double> taus = c.cfg.grid.build();
  const AutocorrCurve predicted = predicted_autocorr(c.cfg.g, taus);
  const VarianceProfile p = c.profile();
  c.report.predicted = {{"rate", std::sqrt(1.0 - c.cfg.g * c.cfg.g)}, {"value_at_zero", predicted.values.front()}};
  const auto rows = c.samples([&](std::uint64_t i) {
    return json{{"values", empirical_autocorr(c.draw(p, i), c.cfg.g, taus).values}};
  });
  std::vector<double> mean, se;
  curve_stats(rows, taus.size(), mean, se);
  CurveTable table{"autocorr", {"tau", "empirical", "predicted", "relative_error"}, {}};
  double worst = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const double rel = std::abs(mean[k] - predicted.values[k]) / predicted.values[k];
    worst = std::max(worst, rel);
    table.rows.push_back({taus[k], mean[k], predicted.values[k], rel});
  }
  c.report.curve = table;
  if (c.cfg.samples == 0) {
    const double rate = fit_decay_rate(predicted, taus.front(), taus.back());
    c.report.checks.push_back(at_most("|fitted rate - sqrt(1 - g^2)|", std::abs(rate - std::sqrt(1.0 - c.cfg.g * c.cfg.g)), 1e-10));
    return;
  }
  c.report.checks.push_back(at_most("max relative error", worst, c.cfg.tolerance));
  c.report.checks.push_back(no_failures(rows));
}

void accept_all(Context& c, const std::function<void(const std::string&)>& progress) {
  AcceptanceOptions opts;
  if (progress) opts.on_result = [&](const CriterionResult& r) { progress(format_result(r)); };
  opts.seed = c.cfg.seed;
  opts.workers = c.cfg.workers;
  const auto results = run_acceptance(opts);
  for (const auto& r : results)
    c.report.checks.push_back({"criterion " + std::to_string(r.id) + ": " + r.title, r.pass ? 1.0 : 0.0, "== 1", r.pass});
  c.report.extra = acceptance_report(results);
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const std::function<void(const std::string&)>& progress) {
  validate(cfg);
  Context c(cfg);
  switch (cfg.experiment) {
    case Experiment::kernel_mc: kernel_mc(c); break;
    case Experiment::functional: functional(c); break;
    case Experiment::mde_check: mde_check(c); break;
    case Experiment::f_operator: f_operator(c); break;
    case Experiment::linearization: linearization(c); break;
    case Experiment::gap: gap(c); break;
    case Experiment::decay: decay_common(c, false); break;
    case Experiment::hermitian_decay: decay_common(c, true); break;
    case Experiment::autocorr: autocorr(c); break;
    case Experiment::accept_all: accept_all(c, progress); break;
  }
  return c.report;
}

}  // namespace nhrm
