#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rjepa/errors.hpp"
#include "rjepa/rgc.hpp"
#include "rjepa/time_decay.hpp"

using namespace rjepa;

namespace {
RgcWeights ones_1x1() {
  RgcWeights w = RgcWeights::zeros(1);
  for (int k = 0; k < 4; ++k) w.w[k](0, 0) = 1.0;
  return w;
}
}  // namespace

TEST_CASE("first step from zero state passes input through, any weights") {
  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 6);
    RgcWeights w = RgcWeights::random(n, 1.5, false, rng);
    Vec x(n);
    for (auto& v : x) v = rng.normal();
    RgcState out = rgc_step(RgcState::zero(n), x, w);
    for (int i = 0; i < n; ++i) {
      REQUIRE(out.s[i] == x[i]);
      REQUIRE(out.m[i] == x[i]);
    }
  }
}

TEST_CASE("zero weights make the cell a passthrough at every step") {
  RgcWeights w = RgcWeights::zeros(3);
  RgcState st = RgcState::zero(3);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    Vec x(3);
    for (auto& v : x) v = rng.normal();
    st = rgc_step(st, x, w);
    for (int i = 0; i < 3; ++i) {
      CHECK(st.s[i] == x[i]);
      CHECK(st.m[i] == x[i]);
    }
  }
}

TEST_CASE("scalar step, unit weights, s=m=0.5, x=1") {
  RgcState st{{0.5}, {0.5}};
  RgcGates g;
  RgcState out = rgc_step(st, Vec{1.0}, ones_1x1(), &g);
  const double th = std::tanh(0.5);
  CHECK(g.a[0][0] == doctest::Approx(th).epsilon(1e-12));
  CHECK(g.b[0][0] == doctest::Approx(th).epsilon(1e-12));
  const double want = (1.0 - th) * 1.0 + th * 0.5;
  CHECK(want == doctest::Approx(0.768941).epsilon(1e-6));
  CHECK(out.s[0] == doctest::Approx(want).epsilon(1e-15));
  CHECK(out.m[0] == doctest::Approx(want).epsilon(1e-15));  // symmetric by construction
}

TEST_CASE("shape mismatch throws") {
  RgcWeights w = RgcWeights::zeros(2);
  CHECK_THROWS_AS(rgc_step(RgcState::zero(2), Vec{1.0}, w), ShapeError);
  CHECK_THROWS_AS(rgc_step(RgcState::zero(3), Vec{1, 2, 3}, w), ShapeError);
}

TEST_CASE("diagonal_gates validation rejects off-diagonal entries") {
  Rng rng(2);
  RgcWeights w = RgcWeights::random(3, 0.5, true, rng);
  w.validate();
  w.w[1](0, 2) = 1e-9;
  CHECK_THROWS_AS(w.validate(), ValidationError);
}

TEST_CASE("states stay finite and loosely bounded over long runs") {
  Rng rng(23);
  RgcWeights w = RgcWeights::random(4, 1.0, false, rng);
  RgcState st = RgcState::zero(4);
  double max_x = 0.0;
  for (int t = 1; t <= 10000; ++t) {
    Vec x(4);
    for (auto& v : x) {
      v = rng.uniform(-1.0, 1.0);
      max_x = std::max(max_x, std::abs(v));
    }
    st = rgc_step(st, x, w);
    for (int i = 0; i < 4; ++i) {
      REQUIRE(std::isfinite(st.s[i]));
      REQUIRE(std::abs(st.s[i]) <= 2.0 * t * max_x);
      REQUIRE(std::abs(st.m[i]) <= 2.0 * t * max_x);
    }
  }
}

TEST_CASE("gate factors: zero weights annihilate mu, x=0 annihilates mu1") {
  RgcWeights wz = RgcWeights::zeros(2);
  RgcState st{{0.3, -0.4}, {0.1, 0.2}};
  RgcGateFactors f = rgc_gate_factors(st, Vec{1.0, -1.0}, wz);
  for (int nu = 0; nu < 2; ++nu)
    for (int i = 0; i < 2; ++i) {
      CHECK(f.mu0[nu][i] == 0.0);
      CHECK(f.mu1[nu][i] == 0.0);
    }

  Rng rng(6);
  RgcWeights w = RgcWeights::random(2, 0.8, false, rng);
  RgcGateFactors fx0 = rgc_gate_factors(st, Vec{0.0, 0.0}, w);
  for (int nu = 0; nu < 2; ++nu)
    for (int i = 0; i < 2; ++i) CHECK(fx0.mu1[nu][i] == 0.0);
}

TEST_CASE("gate factors: identity W^(0) gives mu0 = (1-tanh^2(c))c + tanh(c)") {
  RgcWeights w = RgcWeights::zeros(3, true);
  w.w[0] = Matrix::identity(3);
  RgcState st{{0.7, -0.2, 1.3}, {0.0, 0.0, 0.0}};
  RgcGateFactors f = rgc_gate_factors(st, Vec{0, 0, 0}, w);
  for (int i = 0; i < 3; ++i) {
    const double c = st.s[i];
    const double th = std::tanh(c);
    CHECK(f.mu0[0][i] == doctest::Approx((1 - th * th) * c + th).epsilon(1e-14));
  }
}

TEST_CASE("source terms: zero-weight cases") {
  RgcWeights wz = RgcWeights::zeros(2);
  RgcState st{{0.5, -1.0}, {0.2, 0.3}};
  Vec x = {0.0, 0.0};
  RgcSourceTerms src = rgc_source_terms(st, x, wz);
  // b=0 so f'(b)=1 and J^(0,0) = s s^T
  Matrix want = outer(st.s, st.s);
  CHECK(relative_error(src.j0[0], want) < 1e-15);
  CHECK(src.j1[0].max_abs() == 0.0);  // x=0 kills the input source
  RgcState zero = RgcState::zero(2);
  RgcSourceTerms src2 = rgc_source_terms(zero, Vec{1.0, 1.0}, wz);
  CHECK(src2.j0[0].max_abs() == 0.0);  // zero previous state
}

TEST_CASE("factors and sources from cached gates match scratch recomputation bitwise") {
  Rng rng(31);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 5);
    RgcWeights w = RgcWeights::random(n, 0.9, rep % 2 == 0, rng);
    RgcState st{Vec(n), Vec(n)};
    Vec x(n);
    for (int i = 0; i < n; ++i) {
      st.s[i] = rng.normal();
      st.m[i] = rng.normal();
      x[i] = rng.normal();
    }
    RgcGates g = rgc_gates(st, w);
    RgcGateFactors a = rgc_gate_factors(st, x, w, g);
    RgcGateFactors b = rgc_gate_factors(st, x, w);
    RgcSourceTerms sa = rgc_source_terms(st, x, w, g);
    RgcSourceTerms sb = rgc_source_terms(st, x, w);
    for (int nu = 0; nu < 2; ++nu) {
      for (int i = 0; i < n; ++i) {
        REQUIRE(a.mu0[nu][i] == b.mu0[nu][i]);
        REQUIRE(a.mu1[nu][i] == b.mu1[nu][i]);
      }
      REQUIRE(relative_error(sa.j0[nu], sb.j0[nu]) == 0.0);
      REQUIRE(relative_error(sa.j1[nu], sb.j1[nu]) == 0.0);
    }
  }
}

TEST_CASE("dense jacobians match finite differences of one step") {
  Rng rng(13);
  const int n = 4;
  RgcWeights w = RgcWeights::random(n, 0.7, false, rng);
  RgcState st{Vec(n), Vec(n)};
  Vec x(n);
  for (int i = 0; i < n; ++i) {
    st.s[i] = rng.normal();
    st.m[i] = rng.normal();
    x[i] = rng.normal();
  }
  RgcDenseJacobians jac = rgc_dense_jacobians(st, x, w);
  const double eps = 1e-6;
  for (int nu = 0; nu < 2; ++nu)
    for (int j = 0; j < n; ++j) {
      RgcState plus = st, minus = st;
      plus.c(nu)[j] += eps;
      minus.c(nu)[j] -= eps;
      RgcState op = rgc_step(plus, x, w);
      RgcState om = rgc_step(minus, x, w);
      for (int i = 0; i < n; ++i) {
        const double d_same = (op.c(nu)[i] - om.c(nu)[i]) / (2 * eps);
        const double d_other = (op.c(1 - nu)[i] - om.c(1 - nu)[i]) / (2 * eps);
        CHECK(jac.A[nu](i, j) == doctest::Approx(d_same).epsilon(1e-6));
        CHECK(jac.B[1 - nu](i, j) == doctest::Approx(d_other).epsilon(1e-6));
      }
    }
}

TEST_CASE("time decay: zero tau is pure feedforward") {
  TimeDecayParams p;
  p.tau = {0.0, 0.0};
  Rng rng(8);
  p.p = {Matrix::gaussian(3, 2, 1.0, rng), Matrix::gaussian(2, 3, 1.0, rng)};
  LayeredVecs c = time_decay_zero_state(p);
  Vec x = {1.0, -2.0};
  LayeredVecs out = time_decay_step(c, x, p);
  Vec l1 = matvec(p.p[0], x);
  CHECK(relative_error(out[0], l1) < 1e-15);
  CHECK(relative_error(out[1], matvec(p.p[1], l1)) < 1e-15);
}

TEST_CASE("time decay scalar chain: 0.5*2 + 3 = 4") {
  TimeDecayParams p;
  p.tau = {0.5};
  p.p = {Matrix{{1.0}}};
  LayeredVecs out = time_decay_step({Vec{2.0}}, Vec{3.0}, p);
  CHECK(out[0][0] == 4.0);
}

TEST_CASE("time decay linearity") {
  TimeDecayParams p;
  p.tau = {0.3, 0.8};
  Rng rng(21);
  p.p = {Matrix::gaussian(4, 3, 1.0, rng), Matrix::gaussian(2, 4, 1.0, rng)};
  for (int rep = 0; rep < 10; ++rep) {
    LayeredVecs c1 = {Vec(4), Vec(2)}, c2 = {Vec(4), Vec(2)};
    Vec x1(3), x2(3);
    for (auto& v : c1[0]) v = rng.normal();
    for (auto& v : c1[1]) v = rng.normal();
    for (auto& v : c2[0]) v = rng.normal();
    for (auto& v : c2[1]) v = rng.normal();
    for (auto& v : x1) v = rng.normal();
    for (auto& v : x2) v = rng.normal();
    const double al = 0.7, be = -1.3;
    LayeredVecs mix = {vec_add(vec_scale(c1[0], al), vec_scale(c2[0], be)),
                       vec_add(vec_scale(c1[1], al), vec_scale(c2[1], be))};
    LayeredVecs got = time_decay_step(mix, vec_add(vec_scale(x1, al), vec_scale(x2, be)), p);
    LayeredVecs o1 = time_decay_step(c1, x1, p);
    LayeredVecs o2 = time_decay_step(c2, x2, p);
    for (int l = 0; l < 2; ++l)
      CHECK(relative_error(got[l], vec_add(vec_scale(o1[l], al), vec_scale(o2[l], be))) < 1e-12);
  }
}

TEST_CASE("time decay validation: |tau| >= 1 rejected") {
  TimeDecayParams p;
  p.tau = {1.0};
  p.p = {Matrix{{1.0}}};
  CHECK_THROWS_AS(p.validate(), ValidationError);
}
