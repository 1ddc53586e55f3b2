#include "rjepa/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "rjepa/errors.hpp"
#include "rjepa/linalg.hpp"
#include "rjepa/oracles.hpp"
#include "rjepa/rng.hpp"

namespace rjepa {

namespace {

constexpr double kSpectrumThreshold = 0.01;  // "above threshold" = > 1% of top eigenvalue

void check_moment_inputs(const Matrix& u, const Matrix& sigma) {
  const int n = u.rows();
  if (n == 0 || u.cols() != n) throw ShapeError("U must be square and non-empty");
  if (sigma.rows() != n || sigma.cols() != n) throw ShapeError("Sigma must match U");
  if (n > 4) throw CapacityError("moment solve has n^4 unknowns; n <= 4");
  double radius = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j)
        radius = std::max(radius, std::fabs(u(i, j)));
      else if (u(i, j) != 0.0)
        throw ValidationError("U must be diagonal");
    }
  if (!(radius < 1.0)) throw ValidationError("spectral radius of U must be < 1");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (std::fabs(sigma(i, j) - sigma(j, i)) > 1e-9 * std::max(1.0, sigma.max_abs()))
        throw ValidationError("Sigma must be symmetric");
  cholesky(sigma);  // PD or throws
}

Vec wick_fourth(const Matrix& sigma) {
  const int n = sigma.rows();
  Vec tb(static_cast<std::size_t>(n) * n * n * n);
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn)
          tb[idx++] = sigma(i, j) * sigma(m, nn) + sigma(i, m) * sigma(j, nn) +
                      sigma(i, nn) * sigma(j, m);
  return tb;
}

Matrix kron4(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d) {
  return kron(kron(kron(a, b), c), d);
}

}  // namespace

double participation_ratio(const Vec& eigenvalues) {
  double s1 = 0.0, s2 = 0.0;
  for (double v : eigenvalues) {
    const double lam = std::max(v, 0.0);
    s1 += lam;
    s2 += lam * lam;
  }
  if (s2 < 1e-300) return 1.0;
  return s1 * s1 / s2;
}

SpectrumReport covariance_spectrum(const Matrix& h) {
  if (h.cols() < 2) throw ValidationError("need at least 2 feature columns");
  const int d = h.rows();
  Matrix cov = matmul(h, h.transposed());
  EigResult eig = sym_eig(cov);

  SpectrumReport rep;
  rep.eigenvalues = eig.values;
  rep.participation_ratio = participation_ratio(eig.values);

  const double top = eig.values.empty() ? 0.0 : eig.values[0];
  for (double v : eig.values)
    if (top > 0.0 && v > kSpectrumThreshold * top) ++rep.above_threshold;

  const int ncomp = std::min(2, d);
  rep.pca_coords = Matrix(ncomp, h.cols());
  for (int k = 0; k < ncomp; ++k) {
    const Vec dir = eig.vectors.column(k);
    for (int t = 0; t < h.cols(); ++t) rep.pca_coords(k, t) = dot(dir, h.column(t));
  }
  return rep;
}

MomentReport moment_closed_form(const Matrix& u, const Matrix& sigma) {
  check_moment_inputs(u, sigma);
  const int n = u.rows();
  const int n4 = n * n * n * n;

  MomentReport rep;
  rep.n = n;

  const Matrix u4 = kron4(u, u, u, u);
  Matrix lhs = Matrix::identity(n4);
  lhs.add_scaled(u4, -1.0);
  rep.t000 = solve_linear(lhs, wick_fourth(sigma));

  const Matrix eye = Matrix::identity(n);
  rep.t011 = matvec(kron4(u, u, eye, eye), rep.t000);
  rep.t122 = matvec(kron4(matmul(u, u), u, eye, eye), rep.t000);
  return rep;
}

MomentReport moment_monte_carlo(const Matrix& u, const Matrix& sigma, long samples, long burn_in,
                                std::uint64_t seed) {
  check_moment_inputs(u, sigma);
  if (samples < 10000) throw ValidationError("need at least 1e4 samples");
  const int n = u.rows();
  const std::size_t n4 = static_cast<std::size_t>(n) * n * n * n;

  double tau_max = 0.0;
  for (int i = 0; i < n; ++i) tau_max = std::max(tau_max, std::fabs(u(i, i)));
  // horizon: the slowest-decaying contribution shrinks as tau^(3k)
  long horizon = 0;
  if (tau_max > 1e-12)
    horizon = static_cast<long>(std::ceil(-16.0 * std::log(10.0) / (3.0 * std::log(tau_max))));
  horizon = std::min(std::max(horizon, burn_in), 20000L);

  const Matrix chol = cholesky(sigma);
  Rng rng(seed);

  std::array<Vec, 3> sum, sumsq;
  for (auto* acc : {&sum, &sumsq})
    for (auto& v : *acc) v.assign(n4, 0.0);

  Vec g(n), y(n), y1(n), y2(n);
  std::array<Vec, 3> contrib;
  for (auto& c : contrib) c.resize(n4);

  for (long s = 0; s < samples; ++s) {
    for (int i = 0; i < n; ++i) g[i] = rng.normal();
    y = matvec(chol, g);
    for (auto& c : contrib) std::fill(c.begin(), c.end(), 0.0);

    for (long k = 0; k <= horizon; ++k) {
      for (int i = 0; i < n; ++i) y1[i] = u(i, i) * y[i];
      for (int i = 0; i < n; ++i) y2[i] = u(i, i) * y1[i];
      std::size_t idx = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double p000 = y[i] * y[j];
          const double p011 = y1[i] * y1[j];
          const double p122 = y2[i] * y1[j];
          for (int m = 0; m < n; ++m)
            for (int nn = 0; nn < n; ++nn) {
              const double tail = y[m] * y[nn];
              contrib[0][idx] += p000 * tail;
              contrib[1][idx] += p011 * tail;
              contrib[2][idx] += p122 * tail;
              ++idx;
            }
        }
      std::swap(y, y1);
    }

    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < n4; ++i) {
        sum[c][i] += contrib[c][i];
        sumsq[c][i] += contrib[c][i] * contrib[c][i];
      }
  }

  MomentReport rep;
  rep.n = n;
  const double N = static_cast<double>(samples);
  auto finish = [&](int c, Vec& mean_out, Vec& se_out) {
    mean_out.resize(n4);
    se_out.resize(n4);
    for (std::size_t i = 0; i < n4; ++i) {
      const double mean = sum[c][i] / N;
      mean_out[i] = mean;
      // leave-one-out jackknife of the mean collapses to the usual SE
      const double var = std::max(0.0, sumsq[c][i] - N * mean * mean);
      se_out[i] = std::sqrt(var / (N * (N - 1.0)));
    }
  };
  finish(0, rep.mc000, rep.se000);
  finish(1, rep.mc011, rep.se011);
  finish(2, rep.mc122, rep.se122);
  return rep;
}

double loglog_slope(const Vec& x, const Vec& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope fit needs >= 2 points");
  const int n = static_cast<int>(x.size());
  Vec lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0) throw ValidationError("log-log fit needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  if (den < 1e-300) throw ValidationError("slope fit needs distinct x values");
  return num / den;
}

std::pair<double, double> tau_scaling_check(const Matrix& sigma, const Vec& tau_grid) {
  if (tau_grid.size() < 4) throw ValidationError("tau grid needs at least 4 points");
  for (double tau : tau_grid)
    if (!(tau > 0.0 && tau <= 0.5)) throw ValidationError("tau grid must lie in (0, 0.5]");
  const int n = sigma.rows();
  Vec norm011, norm122;
  for (double tau : tau_grid) {
    Matrix u = Matrix::identity(n);
    u.scale(tau);
    MomentReport rep = moment_closed_form(u, sigma);
    norm011.push_back(vec_norm(rep.t011));
    norm122.push_back(vec_norm(rep.t122));
  }
  return {loglog_slope(tau_grid, norm011), loglog_slope(tau_grid, norm122)};
}

BenchReport scaling_bench(const std::vector<int>& sizes, int T, BenchMode mode,
                          std::uint64_t seed) {
  if (sizes.size() < 2) throw ValidationError("bench needs at least 2 sizes");
  if (T < 2) throw ValidationError("bench needs T >= 2");

  BenchReport rep;
  const char* mode_name =
      mode == BenchMode::Rfp ? "rfp" : (mode == BenchMode::FullRtrl ? "full_rtrl" : "bptt");

  for (int n : sizes) {
    Rng rng(Rng::substream_seed(seed, static_cast<std::uint64_t>(n)));
    JepaModel model = make_desk_model(n, n, n, PredictorKind::Linear, false, rng.next_u64());
    model.rgc = RgcWeights::random(n, 0.25 / std::sqrt(static_cast<double>(n)), false, rng);

    std::vector<Vec> patches(T, Vec(n));
    for (auto& p : patches)
      for (auto& v : p) v = rng.normal();

    double best_ms = 0.0;
    std::size_t reals = 0;
    for (int rep_i = 0; rep_i < 4; ++rep_i) {  // first pass warms allocations
      const auto t0 = std::chrono::steady_clock::now();
      switch (mode) {
        case BenchMode::Rfp: {
          RfpResult r = rfp_grad(model, patches);
          reals = r.sens_reals;
          break;
        }
        case BenchMode::FullRtrl: {
          RtrlResult r = full_rtrl_grad(model, patches);
          reals = r.tensor_reals;
          break;
        }
        case BenchMode::Bptt: {
          BpttResult r = bptt_grad(model, patches);
          reals = r.trajectory_reals;
          break;
        }
      }
      const auto t1 = std::chrono::steady_clock::now();
      const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      if (rep_i == 0) continue;
      best_ms = best_ms == 0.0 ? ms : std::min(best_ms, ms);
    }

    BenchRow row;
    row.mode = mode_name;
    row.n = n;
    row.ms_per_step = std::max(best_ms / T, 1e-7);
    row.state_reals = reals;
    rep.rows.push_back(row);
  }

  Vec ns, times, mems;
  for (const auto& row : rep.rows) {
    ns.push_back(row.n);
    times.push_back(row.ms_per_step);
    mems.push_back(static_cast<double>(row.state_reals));
  }
  rep.time_slope = loglog_slope(ns, times);
  rep.memory_slope = loglog_slope(ns, mems);
  return rep;
}

void write_bench_csv(const BenchReport& report, std::ostream& out) {
  out << "mode,n,ms_per_step,state_reals\n";
  for (const auto& row : report.rows)
    out << row.mode << ',' << row.n << ',' << row.ms_per_step << ',' << row.state_reals << '\n';
  out << "# time_slope=" << report.time_slope << " memory_slope=" << report.memory_slope << '\n';
}

}  // namespace rjepa
