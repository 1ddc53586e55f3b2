#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rjepa/analysis.hpp"
#include "rjepa/errors.hpp"

using namespace rjepa;

TEST_CASE("participation ratio conventions") {
  CHECK(participation_ratio({1.0, 1.0, 1.0, 1.0}) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(participation_ratio({5.0, 0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(participation_ratio({}) == 1.0);
  CHECK(participation_ratio({0.0, 0.0}) == 1.0);
  // tiny negative eigenvalues from numerics are clamped, not amplified
  CHECK(participation_ratio({1.0, -1e-15}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("covariance spectrum of prescaled two-frame features") {
  // columns h(1)/sqrt(2), h(2)/sqrt(2) with h(1)=(1,1), h(2)=(1,-1): H H^T = I
  const double r = 1.0 / std::sqrt(2.0);
  Matrix h{{r, r}, {r, -r}};
  SpectrumReport rep = covariance_spectrum(h);
  REQUIRE(rep.eigenvalues.size() == 2);
  CHECK(rep.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.participation_ratio == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(rep.above_threshold == 2);
  CHECK(rep.pca_coords.rows() == 2);
  CHECK(rep.pca_coords.cols() == 2);
}

TEST_CASE("spectrum of rank-one features collapses to one direction") {
  Matrix h(3, 40);
  Rng rng(4);
  Vec dir = {1.0, 2.0, -1.0};
  for (int t = 0; t < 40; ++t) {
    const double a = rng.normal();
    for (int i = 0; i < 3; ++i) h(i, t) = a * dir[i] / std::sqrt(40.0);
  }
  SpectrumReport rep = covariance_spectrum(h);
  CHECK(rep.participation_ratio == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.above_threshold == 1);
  // second pca row carries (numerically) nothing
  double second = 0.0;
  for (int t = 0; t < rep.pca_coords.cols(); ++t)
    second = std::max(second, std::abs(rep.pca_coords(1, t)));
  CHECK(second < 1e-6);
  CHECK_THROWS_AS(covariance_spectrum(Matrix(3, 1)), ValidationError);
}

TEST_CASE("closed-form scalar moments at tau = 0.5") {
  Matrix u{{0.5}};
  Matrix sigma{{1.0}};
  MomentReport rep = moment_closed_form(u, sigma);
  REQUIRE(rep.t000.size() == 1);
  // 3 sigma^4 / (1 - tau^4) = 3 / 0.9375
  CHECK(rep.t000[0] == doctest::Approx(3.2).epsilon(1e-12));
  CHECK(rep.t011[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(rep.t122[0] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("moment input guards") {
  Matrix ok_u = Matrix::diag({0.5, 0.2});
  Matrix ok_sigma = Matrix::identity(2);
  Matrix dense_u = ok_u;
  dense_u(0, 1) = 0.1;
  CHECK_THROWS_AS(moment_closed_form(dense_u, ok_sigma), ValidationError);
  CHECK_THROWS_AS(moment_closed_form(Matrix::diag({1.0, 0.2}), ok_sigma), ValidationError);
  Matrix asym = ok_sigma;
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(moment_closed_form(ok_u, asym), ValidationError);
  Matrix indef{{1.0, 2.0}, {2.0, 1.0}};
  CHECK_THROWS_AS(moment_closed_form(ok_u, indef), ValidationError);
  CHECK_THROWS_AS(moment_closed_form(Matrix::diag(Vec(5, 0.1)), Matrix::identity(5)),
                  CapacityError);
  CHECK_THROWS_AS(moment_monte_carlo(ok_u, ok_sigma, 500, 0, 1), ValidationError);
}

TEST_CASE("monte carlo reproduces the closed form within 3 standard errors") {
  // deterministic given the seed, so this is a pinned regression, not a coin flip
  Matrix u = Matrix::diag({0.5, -0.3});
  Matrix sigma{{1.0, 0.4}, {0.4, 0.8}};
  MomentReport cf = moment_closed_form(u, sigma);
  MomentReport mc = moment_monte_carlo(u, sigma, 40000, 0, 2024);
  const Vec* closed[3] = {&cf.t000, &cf.t011, &cf.t122};
  const Vec* est[3] = {&mc.mc000, &mc.mc011, &mc.mc122};
  const Vec* se[3] = {&mc.se000, &mc.se011, &mc.se122};
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < closed[k]->size(); ++i) {
      const double gap = std::abs((*est[k])[i] - (*closed[k])[i]);
      REQUIRE(gap <= 3.0 * (*se[k])[i]);
      REQUIRE((*se[k])[i] > 0.0);
    }
  // and the estimates are actually informative, not huge-variance noise
  CHECK(std::abs(mc.mc000[0] - cf.t000[0]) / cf.t000[0] < 0.15);
}

TEST_CASE("monte carlo is bitwise reproducible") {
  Matrix u{{0.4}};
  Matrix sigma{{2.0}};
  MomentReport a = moment_monte_carlo(u, sigma, 12000, 0, 7);
  MomentReport b = moment_monte_carlo(u, sigma, 12000, 0, 7);
  CHECK(a.mc000[0] == b.mc000[0]);
  CHECK(a.se122[0] == b.se122[0]);
}

TEST_CASE("loglog slope fits an exact power law") {
  Vec x = {1.0, 2.0, 4.0, 8.0};
  Vec y;
  for (double v : x) y.push_back(3.0 * v * v);
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), ValidationError);
  CHECK_THROWS_AS(loglog_slope({1.0, 2.0}, {1.0, -1.0}), ValidationError);
}

TEST_CASE("lagged tensors scale as tau^2 and tau^3 in the small-tau family") {
  const Vec grid = {0.125, 0.2, 0.3, 0.4, 0.5};
  auto [s011, s122] = tau_scaling_check(Matrix::identity(2), grid);
  CHECK(s011 > 1.9);
  CHECK(s011 < 2.15);
  CHECK(s122 > 2.9);
  CHECK(s122 < 3.15);
  CHECK_THROWS_AS(tau_scaling_check(Matrix::identity(2), Vec{0.1, 0.2, 0.3}), ValidationError);
  CHECK_THROWS_AS(tau_scaling_check(Matrix::identity(2), Vec{0.1, 0.2, 0.3, 0.7}),
                  ValidationError);
}

TEST_CASE("scaling bench counts memory exactly and fits clean slopes") {
  BenchReport rtrl = scaling_bench({4, 8}, 6, BenchMode::FullRtrl, 3);
  REQUIRE(rtrl.rows.size() == 2);
  CHECK(rtrl.rows[0].state_reals == 8u * 4 * 4 * 4);
  CHECK(rtrl.rows[1].state_reals == 8u * 8 * 8 * 8);
  CHECK(rtrl.memory_slope == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(rtrl.rows[0].mode == "full_rtrl");

  BenchReport rfp = scaling_bench({4, 8, 16}, 6, BenchMode::Rfp, 3);
  for (const auto& row : rfp.rows) {
    const std::size_t n = static_cast<std::size_t>(row.n);
    REQUIRE(row.state_reals == 8u * n * n);
    REQUIRE(row.ms_per_step > 0.0);
  }
  CHECK(rfp.memory_slope == doctest::Approx(2.0).epsilon(1e-12));

  BenchReport bptt = scaling_bench({4, 8}, 6, BenchMode::Bptt, 3);
  CHECK(bptt.rows[1].state_reals > bptt.rows[0].state_reals);

  CHECK_THROWS_AS(scaling_bench({4}, 6, BenchMode::Rfp, 3), ValidationError);
}

TEST_CASE("bench csv layout") {
  BenchReport rep;
  rep.rows.push_back({"rfp", 32, 0.125, 8192});
  rep.time_slope = 2.0;
  rep.memory_slope = 2.0;
  std::ostringstream out;
  write_bench_csv(rep, out);
  const std::string s = out.str();
  CHECK(s.find("mode,n,ms_per_step,state_reals") == 0);
  CHECK(s.find("rfp,32,") != std::string::npos);
  CHECK(s.find("slope") != std::string::npos);
}
