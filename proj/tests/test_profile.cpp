#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <Eigen/Eigenvalues>

#include "nhrm/oracles.hpp"
#include "nhrm/profile.hpp"
#include "nhrm/rng.hpp"

using namespace nhrm;

namespace {

RealVector random_vector(int n, std::uint64_t seed) {
  Rng rng(seed, Stream::profile, 99);
  RealVector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

// Dense eigenvector of m for its eigenvalue of largest real part, made positive.
RealVector dense_perron(const RealMatrix& m) {
  Eigen::EigenSolver<RealMatrix> es(m);
  Eigen::Index k = 0;
  es.eigenvalues().real().maxCoeff(&k);
  RealVector v = es.eigenvectors().col(k).real();
  if (v.sum() < 0) v = -v;
  return v;
}

}  // namespace

TEST_CASE("constant profile has entries 1/n and spectral radius one") {
  const VarianceProfile p = build_profile(ProfileKind::constant, 4);
  CHECK(p.s().minCoeff() == 0.25);
  CHECK(p.s().maxCoeff() == 0.25);
  for (int n : {2, 7, 50}) CHECK(build_profile(ProfileKind::constant, n).rho() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two-block profile matches a dense eigensolver") {
  ProfileParams params;
  params.values = {{"within", 0.3}, {"across", 0.1}};
  const VarianceProfile p = build_profile(ProfileKind::two_block, 4, params);
  CHECK(std::abs(oracle::dense_spectral_radius(p.s()) - 1.0) < 1e-10);
  const PerronPair pp = perron_vectors(p);
  RealVector vr = dense_perron(p.s());
  RealVector vl = dense_perron(p.s().transpose());
  vr /= vr.mean();
  vl /= vl.dot(vr) / 4.0;
  CHECK((pp.v_r - vr).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((pp.v_l - vl).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("build_profile rejects bad input") {
  CHECK_THROWS_AS(build_profile(ProfileKind::constant, 0), InvalidArgument);
  CHECK_THROWS_AS(build_profile(ProfileKind::constant, -3), InvalidArgument);
  ProfileParams reducible;
  reducible.values = {{"within", 1.0}, {"across", 0.0}};
  CHECK_THROWS_AS(build_profile(ProfileKind::two_block, 6, reducible), InvalidArgument);
  CHECK_THROWS_AS(build_profile("no-such-kind", 4), InvalidArgument);
}

TEST_CASE("normalize_profile") {
  const VarianceProfile c = build_profile(ProfileKind::constant, 5);
  CHECK((normalize_profile(c).s() - c.s()).cwiseAbs().maxCoeff() == 0.0);

  const VarianceProfile rs = build_profile(ProfileKind::row_stochastic_random, 6, {}, 11);
  const VarianceProfile scaled(RealMatrix(7.0 * rs.s()));
  CHECK((normalize_profile(scaled).s() - normalize_profile(rs).s()).cwiseAbs().maxCoeff() < 1e-12);

  Rng rng(3, Stream::profile, 0);
  RealMatrix m(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = 0.1 + rng.uniform();
  const VarianceProfile norm = normalize_profile(VarianceProfile(m));
  CHECK(std::abs(oracle::dense_spectral_radius(norm.s()) - 1.0) < 1e-10);

  CHECK_THROWS_AS(normalize_profile(VarianceProfile(RealMatrix::Zero(3, 3))), InvalidArgument);
}

TEST_CASE("VarianceProfile validates entries") {
  RealMatrix neg = RealMatrix::Constant(2, 2, 0.5);
  neg(0, 1) = -0.1;
  CHECK_THROWS_AS(VarianceProfile{neg}, InvalidArgument);
  CHECK_THROWS_AS(VarianceProfile{RealMatrix(2, 3)}, InvalidArgument);
  RealMatrix nan = RealMatrix::Constant(2, 2, 0.5);
  nan(1, 1) = std::nan("");
  CHECK_THROWS_AS(VarianceProfile{nan}, InvalidArgument);
}

TEST_CASE("Perron vectors of small explicit profiles") {
  const PerronPair c = perron_vectors(build_profile(ProfileKind::constant, 6));
  CHECK((c.v_r.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((c.v_l.array() - 1.0).abs().maxCoeff() < 1e-12);

  RealMatrix s(2, 2);
  s << 0.5, 0.5, 0.25, 0.75;
  const PerronPair pp = perron_vectors(VarianceProfile(s));
  // v_r ~ (1, 1) and v_l ~ (1, 2), scaled to <v_r> = 1 and <v_l, v_r> = 1.
  CHECK(pp.v_r(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pp.v_r(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pp.v_l(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pp.v_l(1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(pp.weight() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Perron residuals and normalization for every profile kind") {
  for (const char* spec : {"constant", "row-stochastic", "two-block:within=1,across=0.5,across_reverse=0.2,split=0.3"})
    for (int n : {2, 10, 100}) {
      CAPTURE(spec);
      CAPTURE(n);
      const VarianceProfile p = build_profile(spec, n, 5);
      const PerronPair pp = perron_vectors(p);
      CHECK((p.s() * pp.v_r - pp.v_r).norm() <= 1e-10 * pp.v_r.norm());
      CHECK((p.s().transpose() * pp.v_l - pp.v_l).norm() <= 1e-10 * pp.v_l.norm());
      CHECK(pp.v_r.minCoeff() > 0.0);
      CHECK(pp.v_l.minCoeff() > 0.0);
      CHECK(pp.v_r.mean() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(pp.v_l.dot(pp.v_r) / n == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("apply_S and its adjoint") {
  const VarianceProfile c = build_profile(ProfileKind::constant, 8);
  CHECK((apply_S(c, ComplexVector::Ones(8)).array() - 1.0).abs().maxCoeff() < 1e-14);

  const VarianceProfile p = build_profile("two-block:within=1,across=0.5,across_reverse=0.2,split=0.3", 9);
  for (int j = 0; j < 9; ++j) {
    ComplexVector e = ComplexVector::Zero(9);
    e(j) = 1.0;
    CHECK((apply_S(p, e).real() - p.s().col(j)).cwiseAbs().maxCoeff() == 0.0);
  }

  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const ComplexVector a = random_vector(9, 2 * trial).cast<cplx>() + cplx(0, 1) * random_vector(9, 2 * trial + 1).cast<cplx>();
    const ComplexVector b = random_vector(9, 500 + trial).cast<cplx>();
    CHECK((apply_S(p, a) - p.s().cast<cplx>() * a).cwiseAbs().maxCoeff() < 1e-12);
    // <a, S b> = <S^T a, b>, with the right side also summed by hand.
    cplx by_hand = 0.0;
    for (int i = 0; i < 9; ++i)
      for (int k = 0; k < 9; ++k) by_hand += std::conj(a(k) * p.s()(k, i)) * b(i);
    CHECK(std::abs(a.dot(apply_S(p, b)) - by_hand) < 1e-12);
    CHECK(std::abs(apply_S_adjoint(p, a).dot(b) - by_hand) < 1e-12);
  }
  CHECK_THROWS_AS(apply_S(p, ComplexVector::Ones(3)), InvalidArgument);
}

TEST_CASE("projection Q") {
  const VarianceProfile p = build_profile("two-block:within=1,across=0.5,across_reverse=0.2,split=0.3", 12);
  const PerronPair pp = perron_vectors(p);
  CHECK(project_Q(pp, pp.v_r.cast<cplx>()).cwiseAbs().maxCoeff() < 1e-12);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const ComplexVector r = random_vector(12, t).cast<cplx>();
    const ComplexVector q = project_Q(pp, r);
    CHECK((project_Q(pp, q) - q).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(pp.v_l.cast<cplx>().dot(q)) < 1e-12);
  }
  const PerronPair rs = perron_vectors(build_profile(ProfileKind::row_stochastic_random, 12, {}, 4));
  CHECK(project_Q(rs, ComplexVector::Ones(12)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resolvent gap check") {
  const VarianceProfile c = build_profile(ProfileKind::constant, 10);
  const GapCheckReport r = resolvent_gap_check(c, 0.04, {0.95}, 2.0);
  CHECK(r.max_norm == doctest::Approx(1.0 / 0.95).epsilon(1e-12));
  CHECK(r.pass);

  const GapCheckReport far = resolvent_gap_check(c, 0.1, circle_points(1.2, 16, 0.1), 10.0);
  CHECK(std::isfinite(far.max_norm));

  // Symmetric two-block profile: the subdominant eigenvalue sets the gap.
  const VarianceProfile tb = build_profile("two-block:within=1,across=0.5", 10);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(tb.s());
  const double second = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(8)));
  const double gap = 1.0 - second;
  const double eps = gap / 4.0;
  const GapCheckReport g = resolvent_gap_check(tb, eps, circle_points(1.0 - 2.0 * eps, 64, eps), 2.0 / gap);
  CHECK(g.pass);

  CHECK_THROWS_AS(resolvent_gap_check(c, 0.04, {0.5}, 2.0), InvalidArgument);
  CHECK_THROWS_AS(resolvent_gap_check(c, 0.04, {1.01}, 2.0), InvalidArgument);
}

TEST_CASE("irreducibility and CSV round trip") {
  RealMatrix block = RealMatrix::Zero(4, 4);
  block.topLeftCorner(2, 2).setConstant(0.5);
  block.bottomRightCorner(2, 2).setConstant(0.5);
  CHECK_FALSE(VarianceProfile(block).irreducible());
  block(0, 3) = 0.1;
  CHECK_FALSE(VarianceProfile(block).irreducible());
  block(3, 0) = 0.1;
  CHECK(VarianceProfile(block).irreducible());

  const VarianceProfile p = build_profile(ProfileKind::row_stochastic_random, 5, {}, 9);
  const auto path = (std::filesystem::temp_directory_path() / "nhrm_profile_test.csv").string();
  write_profile_csv(p, path);
  ProfileParams params;
  params.path = path;
  const VarianceProfile back = build_profile(ProfileKind::from_file, 0, params);
  CHECK(back.n() == 5);
  CHECK((back.s() - p.s()).cwiseAbs().maxCoeff() < 1e-15);
  std::remove(path.c_str());
}
