#include "nhrm/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <queue>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "nhrm/rng.hpp"

namespace nhrm {

namespace {

constexpr double kPerronTol = 1e-12;
constexpr double kPerronAccept = 1e-10;
constexpr int kDenseFallbackMax = 512;

int power_budget(int n) {
  return static_cast<int>(std::ceil(10.0 * n * std::log(static_cast<double>(std::max(n, 2)))));
}

bool all_reachable(const RealMatrix& s, bool transpose) {
  const int n = static_cast<int>(s.rows());
  std::vector<char> seen(n, 0);
  std::queue<int> todo;
  todo.push(0);
  seen[0] = 1;
  int count = 1;
  while (!todo.empty()) {
    const int i = todo.front();
    todo.pop();
    for (int j = 0; j < n; ++j) {
      const double w = transpose ? s(j, i) : s(i, j);
      if (w > 0.0 && !seen[j]) {
        seen[j] = 1;
        ++count;
        todo.push(j);
      }
    }
  }
  return count == n;
}

// Collatz-Wielandt: for x > 0, min_i (Sx)_i/x_i <= rho(S) <= max_i (Sx)_i/x_i.
// Returns {lower, upper}.
std::pair<double, double> collatz_wielandt(const RealMatrix& s, const RealVector& x) {
  const RealVector sx = s * x;
  const RealVector ratio = sx.cwiseQuotient(x);
  return {ratio.minCoeff(), ratio.maxCoeff()};
}

// Shifted power iteration for the Perron vector of a nonnegative matrix.
// Returns false if the residual bound is not met within the budget.
bool power_perron(const RealMatrix& s, double rho, RealVector& v) {
  const int n = static_cast<int>(s.rows());
  v = RealVector::Ones(n);
  const int budget = power_budget(n);
  for (int it = 0; it < budget; ++it) {
    RealVector sv = s * v;
    if ((sv - rho * v).norm() <= kPerronTol * v.norm()) return (v.array() > 0.0).all();
    v = (sv + v) / (1.0 + rho);
    v /= v.norm();
  }
  return (s * v - rho * v).norm() <= kPerronTol * v.norm() && (v.array() > 0.0).all();
}

RealVector dense_perron(const RealMatrix& s) {
  Eigen::EigenSolver<RealMatrix> es(s, true);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed", 0.0);
  const auto& ev = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i)
    if (ev(i).real() > ev(best).real()) best = i;
  RealVector v = es.eigenvectors().col(best).real();
  if (v.sum() < 0.0) v = -v;
  return v;
}

RealVector perron_one_side(const RealMatrix& s, double rho) {
  RealVector v;
  if (power_perron(s, rho, v)) return v;
  if (s.rows() <= kDenseFallbackMax) return dense_perron(s);
  throw NumericalError("power iteration did not converge within budget (near-reducible profile?)",
                       (s * v - rho * v).norm() / v.norm());
}

std::string trim(const std::string& str) {
  const auto b = str.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = str.find_last_not_of(" \t\r\n");
  return str.substr(b, e - b + 1);
}

}  // namespace

VarianceProfile::VarianceProfile(RealMatrix s, std::string id) : s_(std::move(s)), id_(std::move(id)) {
  require(s_.rows() > 0 && s_.rows() == s_.cols(), "variance profile must be a non-empty square matrix");
  require(s_.allFinite(), "variance profile has non-finite entries");
  require((s_.array() >= 0.0).all(), "variance profile has negative entries");
  rho_ = spectral_radius(s_);
}

bool VarianceProfile::irreducible() const {
  if (n() == 1) return s_(0, 0) > 0.0;
  return all_reachable(s_, false) && all_reachable(s_, true);
}

double PerronPair::weight() const {
  return mean(v_l) * mean(v_r) / (v_l.dot(v_r) / static_cast<double>(v_l.size()));
}

double spectral_radius(const RealMatrix& s) {
  const int n = static_cast<int>(s.rows());
  if (s.isZero(0.0)) return 0.0;
  RealVector x = RealVector::Ones(n);
  auto [lo, hi] = collatz_wielandt(s, x);
  const int budget = power_budget(n);
  for (int it = 0; it < budget && hi - lo > 1e-15 * hi; ++it) {
    if (!(x.array() > 0.0).all()) break;
    x = (s * x + x);
    x /= x.norm();
    if (!(x.array() > 0.0).all()) break;
    std::tie(lo, hi) = collatz_wielandt(s, x);
  }
  if ((x.array() > 0.0).all() && hi - lo <= 1e-14 * hi) return 0.5 * (lo + hi);
  Eigen::EigenSolver<RealMatrix> es(s, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed", 0.0);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

ProfileKind parse_profile_kind(const std::string& name) {
  if (name == "constant") return ProfileKind::constant;
  if (name == "row-stochastic-random" || name == "row-stochastic") return ProfileKind::row_stochastic_random;
  if (name == "two-block") return ProfileKind::two_block;
  if (name == "from-file") return ProfileKind::from_file;
  throw InvalidArgument("unknown profile kind '" + name + "'");
}

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::constant: return "constant";
    case ProfileKind::row_stochastic_random: return "row-stochastic-random";
    case ProfileKind::two_block: return "two-block";
    case ProfileKind::from_file: return "from-file";
  }
  return "?";
}

double ProfileParams::get(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

VarianceProfile build_profile(ProfileKind kind, int n, const ProfileParams& params, std::uint64_t seed) {
  RealMatrix s;
  std::string id = to_string(kind);
  switch (kind) {
    case ProfileKind::constant:
      require(n >= 2, "profile dimension must be at least 2");
      return VarianceProfile(RealMatrix::Constant(n, n, 1.0 / n), id);
    case ProfileKind::row_stochastic_random: {
      require(n >= 2, "profile dimension must be at least 2");
      const double lo = params.get("min_entry", 0.1);
      require(lo > 0.0 && lo <= 1.0, "row-stochastic-random: min_entry must lie in (0, 1]");
      Rng rng(seed, Stream::profile, 0);
      s.resize(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = lo + (1.0 - lo) * rng.uniform();
      s.array().colwise() /= s.rowwise().sum().array();
      break;
    }
    case ProfileKind::two_block: {
      require(n >= 2, "profile dimension must be at least 2");
      const double within = params.get("within", 1.0);
      const double across = params.get("across", 0.5);
      const double across_rev = params.get("across_reverse", across);
      const double split = params.get("split", 0.5);
      require(within >= 0.0 && across >= 0.0 && across_rev >= 0.0, "two-block: weights must be nonnegative");
      require(split > 0.0 && split < 1.0, "two-block: split must lie in (0, 1)");
      const int n1 = std::clamp(static_cast<int>(std::lround(split * n)), 1, n - 1);
      s.resize(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const bool bi = i < n1, bj = j < n1;
          s(i, j) = (bi == bj ? within : (bi ? across : across_rev)) / n;
        }
      break;
    }
    case ProfileKind::from_file: {
      require(!params.path.empty(), "from-file profile requires a path");
      s = read_profile_csv(params.path);
      require(n <= 0 || s.rows() == n, "profile file dimension does not match requested n");
      require(s.rows() >= 2, "profile dimension must be at least 2");
      id = "file:" + params.path;
      break;
    }
  }
  VarianceProfile raw(std::move(s), id);
  if (!raw.irreducible()) throw InvalidArgument(id + ": profile is reducible");
  return normalize_profile(raw);
}

VarianceProfile build_profile(const std::string& spec, int n, std::uint64_t seed) {
  const auto colon = spec.find(':');
  const ProfileKind kind = parse_profile_kind(trim(spec.substr(0, colon)));
  ProfileParams params;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      require(eq != std::string::npos, "profile parameter '" + item + "' is not key=value");
      const std::string key = trim(item.substr(0, eq));
      const std::string val = trim(item.substr(eq + 1));
      if (key == "path") {
        params.path = val;
      } else {
        try {
          params.values[key] = std::stod(val);
        } catch (const std::exception&) {
          throw InvalidArgument("profile parameter '" + key + "' is not a number");
        }
      }
    }
  }
  return build_profile(kind, n, params, seed);
}

RealMatrix read_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open profile file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const std::string t = trim(cell);
        row.push_back(std::stod(t, &used));
        if (used != t.size()) throw InvalidArgument("");
      } catch (const std::exception&) {
        throw InvalidArgument("profile file '" + path + "': malformed cell '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto n = rows.size();
  require(n > 0, "profile file '" + path + "' is empty");
  RealMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    require(rows[i].size() == n, "profile file '" + path + "' is not a square matrix");
    for (std::size_t j = 0; j < n; ++j) s(i, j) = rows[i][j];
  }
  return s;
}

void write_profile_csv(const VarianceProfile& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << std::setprecision(17);
  for (int i = 0; i < p.n(); ++i) {
    for (int j = 0; j < p.n(); ++j) out << (j ? "," : "") << p.s()(i, j);
    out << "\n";
  }
}

VarianceProfile normalize_profile(const VarianceProfile& p) {
  if (!(p.rho() > 0.0)) throw InvalidArgument("cannot normalize a profile with zero spectral radius");
  if (p.rho() == 1.0) return p;
  return VarianceProfile(p.s() / p.rho(), p.id());
}

PerronPair perron_vectors(const VarianceProfile& p) {
  if (!p.irreducible()) throw InvalidArgument("Perron vectors requested for a reducible profile");
  const double rho = p.rho();
  PerronPair pp;
  pp.eigenvalue = rho;
  pp.v_r = perron_one_side(p.s(), rho);
  pp.v_l = perron_one_side(p.s().transpose(), rho);
  const double n = p.n();
  pp.v_r /= pp.v_r.sum() / n;
  pp.v_l /= pp.v_l.dot(pp.v_r) / n;

  const double res_r = (p.s() * pp.v_r - rho * pp.v_r).norm() / pp.v_r.norm();
  const double res_l = (p.s().transpose() * pp.v_l - rho * pp.v_l).norm() / pp.v_l.norm();
  if (res_r > kPerronAccept || res_l > kPerronAccept)
    throw NumericalError("Perron residual above tolerance", std::max(res_r, res_l));
  if (!(pp.v_r.array() > 0.0).all() || !(pp.v_l.array() > 0.0).all())
    throw NumericalError("Perron vector has non-positive entries", std::min(pp.v_r.minCoeff(), pp.v_l.minCoeff()));
  return pp;
}

ComplexVector apply_S(const VarianceProfile& p, const ComplexVector& d) {
  require(d.size() == p.n(), "apply_S: dimension mismatch");
  return p.s().cast<cplx>() * d;
}

ComplexVector apply_S_adjoint(const VarianceProfile& p, const ComplexVector& d) {
  require(d.size() == p.n(), "apply_S_adjoint: dimension mismatch");
  return p.s().transpose().cast<cplx>() * d;
}

ComplexVector project_Q(const PerronPair& pp, const ComplexVector& r) {
  require(r.size() == pp.v_r.size(), "project_Q: dimension mismatch");
  const cplx coef = pp.v_l.cast<cplx>().dot(r) / pp.v_l.dot(pp.v_r);
  return r - coef * pp.v_r.cast<cplx>();
}

RealMatrix projection_matrix(const PerronPair& pp) {
  const auto n = pp.v_r.size();
  return RealMatrix::Identity(n, n) - pp.v_r * pp.v_l.transpose() / pp.v_l.dot(pp.v_r);
}

std::vector<cplx> circle_points(double radius, int count, double exclude) {
  std::vector<cplx> pts;
  for (int k = 0; k < count; ++k) {
    const cplx z = std::polar(radius, 2.0 * std::numbers::pi * k / count);
    if (std::abs(z - 1.0) > exclude) pts.push_back(z);
  }
  return pts;
}

GapCheckReport resolvent_gap_check(const VarianceProfile& p, double epsilon, const std::vector<cplx>& points,
                                   double bound) {
  require(epsilon > 0.0 && epsilon < 0.5, "resolvent_gap_check: epsilon must lie in (0, 1/2)");
  require(!points.empty(), "resolvent_gap_check: no test points");
  const PerronPair pp = perron_vectors(p);
  const ComplexMatrix q = projection_matrix(pp).cast<cplx>();
  const ComplexMatrix s = p.s().cast<cplx>();
  const auto n = p.n();

  GapCheckReport rep;
  rep.test_points = points;
  for (const cplx z : points) {
    require(std::abs(z) >= 1.0 - 2.0 * epsilon - 1e-12, "resolvent_gap_check: test point inside |z| < 1 - 2 eps");
    require(std::abs(z - 1.0) > epsilon, "resolvent_gap_check: test point inside the disk around 1");
    Eigen::PartialPivLU<ComplexMatrix> lu(s - z * ComplexMatrix::Identity(n, n));
    const double rcond = lu.rcond();
    if (!(rcond > 1e-12))
      throw NumericalError("resolvent_gap_check: test point too close to an eigenvalue of S", rcond);
    const ComplexMatrix m = q * lu.solve(q);
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    rep.norms.push_back(svd.singularValues()(0));
  }
  rep.max_norm = *std::max_element(rep.norms.begin(), rep.norms.end());
  rep.pass = rep.max_norm <= bound;
  return rep;
}

}  // namespace nhrm
