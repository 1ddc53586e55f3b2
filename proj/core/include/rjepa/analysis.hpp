#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rjepa/matrix.hpp"

namespace rjepa {

// Spectrum of H H^T. The caller pre-scales columns (h(t)/sqrt(T)) so the
// product is the time-averaged feature covariance.
struct SpectrumReport {
  Vec eigenvalues;  // descending
  double participation_ratio = 1.0;
  Matrix pca_coords;    // top-2 eigenvector projections of the columns of H
  int above_threshold = 0;  // eigenvalues > 1% of the largest
};

SpectrumReport covariance_spectrum(const Matrix& h);

// (sum lambda)^2 / sum lambda^2; 1 for an all-zero spectrum by convention
double participation_ratio(const Vec& eigenvalues);

// Fourth-moment tensors of the linear chain c(t) = U c(t-1) + b(t),
// b ~ N(0, Sigma): the single-shock component, i.e. the solution of
//   vec T(0,0,0)  = [I - U x U x U x U]^{-1} vec T^B
//   vec T(0,1,1)  = [U x U x I x I] vec T(0,0,0)
//   vec T(1,2,2)  = [U^2 x U x I x I] vec T(0,0,0)
// with T^B the Wick fourth moment of b. Cross-shock pairings are excluded on
// both paths (the recursion drops them, and the sampler below propagates each
// innovation separately), which keeps the two verifiable against each other.
struct MomentReport {
  int n = 0;
  Vec t000, t011, t122;        // closed form, row-major vec of the n^4 tensors
  Vec mc000, mc011, mc122;     // Monte-Carlo estimates
  Vec se000, se011, se122;     // jackknife standard errors
  double slope011 = 0.0;       // log-log slope of |vec T(0,1,1)| vs tau
  double slope122 = 0.0;
};

// U diagonal with spectral radius < 1, Sigma symmetric PD, n <= 4 (the solve
// has n^4 unknowns)
MomentReport moment_closed_form(const Matrix& u, const Matrix& sigma);

// Propagates each sampled innovation through U^k and accumulates the lagged
// fourth-moment contributions; burn_in acts as a floor on the horizon.
MomentReport moment_monte_carlo(const Matrix& u, const Matrix& sigma, long samples, long burn_in,
                                std::uint64_t seed);

// Scalar-family scaling: U = tau * I per grid point, closed form only.
// Needs >= 4 grid points in (0, 0.5].
std::pair<double, double> tau_scaling_check(const Matrix& sigma, const Vec& tau_grid);

// least-squares slope of log(y) vs log(x)
double loglog_slope(const Vec& x, const Vec& y);

enum class BenchMode { Rfp, FullRtrl, Bptt };

struct BenchRow {
  std::string mode;
  int n = 0;
  double ms_per_step = 0.0;
  std::size_t state_reals = 0;  // counted, not measured
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double time_slope = 0.0;    // log-log wall-time vs n
  double memory_slope = 0.0;  // log-log counted reals vs n
};

BenchReport scaling_bench(const std::vector<int>& sizes, int T, BenchMode mode,
                          std::uint64_t seed);

void write_bench_csv(const BenchReport& report, std::ostream& out);

}  // namespace rjepa
