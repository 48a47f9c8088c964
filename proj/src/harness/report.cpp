#include "nhrm/harness/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "nhrm/rng.hpp"

namespace nhrm {

std::string code_version() { return std::string("nhrm 1.0.0; ") + kRngVersion; }

Aggregate aggregate(const std::vector<double>& x) {
  std::vector<double> v;
  for (double a : x)
    if (std::isfinite(a)) v.push_back(a);
  Aggregate g;
  g.count = static_cast<int>(v.size());
  if (v.empty()) {
    g.mean = g.median = g.std_error = std::nan("");
    return g;
  }
  double s = 0.0;
  for (double a : v) s += a;
  g.mean = s / g.count;
  double ss = 0.0;
  for (double a : v) ss += (a - g.mean) * (a - g.mean);
  g.std_error = g.count > 1 ? std::sqrt(ss / (g.count - 1) / g.count) : 0.0;
  std::sort(v.begin(), v.end());
  g.median = g.count % 2 ? v[g.count / 2] : 0.5 * (v[g.count / 2 - 1] + v[g.count / 2]);
  return g;
}

bool RunReport::pass() const {
  if (checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["provenance"] = {{"config_hash", config_hash}, {"seed", seed}, {"code_version", code_version()}};
  j["config"] = config;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : samples) {
    nlohmann::json row = {{"index", r.index}, {"ok", r.ok}};
    if (r.ok)
      row["values"] = r.values;
    else
      row["error"] = r.error;
    rows.push_back(row);
  }
  j["samples"] = rows;
  if (summary)
    j["aggregate"] = {{"count", summary->count},
                      {"mean", summary->mean},
                      {"median", summary->median},
                      {"std_error", summary->std_error}};
  j["predicted"] = predicted;
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : checks)
    cj.push_back({{"name", c.name}, {"value", c.value}, {"condition", c.condition}, {"pass", c.pass}});
  j["checks"] = cj;
  j["pass"] = pass();
  if (curve) j["curve"] = {{"kind", curve->kind}, {"columns", curve->columns}, {"rows", curve->rows}};
  if (!extra.empty()) j["extra"] = extra;
  return j;
}

void write_report_json(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << report.to_json().dump(2) << '\n';
  if (!out) throw Error("write failed for " + path);
}

void emit_plot_data(const RunReport& report, const std::string& path) {
  if (!report.curve || report.curve->rows.empty()) throw Error("no curve data");
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.precision(17);
  const auto& c = *report.curve;
  for (std::size_t i = 0; i < c.columns.size(); ++i) out << (i ? "," : "") << c.columns[i];
  out << '\n';
  for (const auto& row : c.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path);
}

std::vector<SampleRow> run_samples(int count, int workers,
                                   const std::function<nlohmann::json(std::uint64_t)>& fn) {
  std::vector<SampleRow> rows(std::max(0, count));
  if (count <= 0) return rows;
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, count);

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      SampleRow& row = rows[i];
      row.index = static_cast<std::uint64_t>(i);
      try {
        row.values = fn(row.index);
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace nhrm
