#include <doctest.h>
#include <omp.h>

#include <cmath>

#include "bdst/adam.hpp"
#include "bdst/autodiff.hpp"
#include "bdst/kernels.hpp"
#include "oracles.hpp"

using namespace bdst;
using doctest::Approx;

namespace {

Tensor make(Shape s, std::vector<Real> v) { return Tensor(std::move(s), std::move(v)); }

std::vector<Real> forward(const Tensor& x, const std::function<Var(Var)>& op) {
  Tape t(false);
  const auto out = op(t.constant(x));
  return {out.value().values().begin(), out.value().values().end()};
}

std::vector<Real> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(rng.normal());
  return v;
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("shape checks") {
    CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<Real>{1, 2, 3}), DimensionError);
    Tensor t(Shape{2, 3});
    CHECK(t.size() == 6);
    CHECK(shape_str(t.shape()) == "[2x3]");
    t.at(1, 2) = 4;
    CHECK(t[5] == 4);
  }

  TEST_CASE("non-finite detection") {
    auto t = make({2}, {1, std::nanf("")});
    CHECK_THROWS_AS(t.check_finite("t"), NumericError);
  }
}

TEST_SUITE("ops") {
  TEST_CASE("matmul examples") {
    Tape t(false);
    auto id = t.constant(make({2, 2}, {1, 0, 0, 1}));
    auto col = t.constant(make({2, 1}, {3, 4}));
    auto r = ad::matmul(id, col);
    CHECK(r.value()[0] == 3);
    CHECK(r.value()[1] == 4);
    auto row = t.constant(make({1, 2}, {1, 2}));
    CHECK(ad::matmul(row, col).value()[0] == 11);
    CHECK_THROWS_AS(ad::matmul(col, col), DimensionError);
  }

  TEST_CASE("softmax examples") {
    auto u = forward(make({3}, {0, 0, 0}), [](Var x) { return ad::softmax(x, 0); });
    for (auto v : u) CHECK(v == Approx(1.0 / 3));
    auto l = forward(make({3}, {0, std::log(2.0f), std::log(3.0f)}), [](Var x) { return ad::softmax(x, 0); });
    CHECK(l[0] == Approx(1.0 / 6));
    CHECK(l[1] == Approx(2.0 / 6));
    CHECK(l[2] == Approx(3.0 / 6));
    auto big = forward(make({2}, {1000, 0}), [](Var x) { return ad::softmax(x, 0); });
    CHECK(std::isfinite(big[0]));
    CHECK(big[0] == Approx(1.0));
    CHECK(big[1] == Approx(0.0));
    CHECK_THROWS_AS(forward(Tensor(Shape{0}), [](Var x) { return ad::softmax(x, 0); }), DimensionError);
  }

  TEST_CASE("softmax rows sum to one") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto x = random_values(12, seed);
      for (auto& v : x) v *= 20;
      auto y = forward(make({3, 4}, x), [](Var v) { return ad::softmax(v, 1); });
      for (int r = 0; r < 3; ++r) {
        double s = 0;
        for (int c = 0; c < 4; ++c) s += y[r * 4 + c];
        CHECK(std::fabs(s - 1.0) < 1e-6);
      }
    }
  }

  TEST_CASE("masked softmax zeroes masked columns") {
    const std::vector<std::uint8_t> mask{1, 1, 0};
    auto y = forward(make({1, 3}, {1, 2, 3}), [&](Var v) { return ad::masked_softmax_rows(v, mask); });
    CHECK(y[2] == 0);
    CHECK(y[0] + y[1] == Approx(1.0));
  }

  TEST_CASE("layer norm examples") {
    Tape t(false);
    auto ln = [&](std::vector<Real> v) {
      const auto n = v.size();
      auto out = ad::layer_norm(t.constant(make({n}, std::move(v))), t.constant(make({n}, std::vector<Real>(n, 1))),
                                t.constant(Tensor(Shape{n})), 1e-12f);
      return std::vector<Real>(out.value().values().begin(), out.value().values().end());
    };
    for (auto v : ln({1, 1, 1})) CHECK(v == Approx(0.0));
    auto two = ln({1, 3});
    CHECK(two[0] == Approx(-1.0));
    CHECK(two[1] == Approx(1.0));
    CHECK_THROWS_AS(ln({}), DimensionError);
  }

  TEST_CASE("gelu matches x * Phi(x)") {
    auto y = forward(make({4}, {0, 1, 8, -2}), [](Var x) { return ad::gelu(x); });
    CHECK(y[0] == 0);
    CHECK(y[1] == Approx(0.5 * (1 + std::erf(1 / std::sqrt(2.0)))).epsilon(1e-6));
    CHECK(y[1] == Approx(0.8413447).epsilon(1e-6));
    CHECK(y[2] == Approx(8.0));
    CHECK(y[3] == Approx(-2 * 0.5 * (1 + std::erf(-2 / std::sqrt(2.0)))));
  }

  TEST_CASE("dropout") {
    Rng rng(3);
    Tape t(false);
    auto x = t.constant(Tensor(Shape{100000}, std::vector<Real>(100000, 1)));
    CHECK(ad::dropout(x, 0, true, rng).value() == x.value());
    CHECK(ad::dropout(x, 0.3f, false, rng).value() == x.value());
    auto y = ad::dropout(x, 0.3f, true, rng);
    double mean = 0;
    for (auto v : y.value().values()) mean += v;
    mean /= 100000;
    CHECK(mean >= 0.98);
    CHECK(mean <= 1.02);
    CHECK_THROWS_AS(ad::dropout(x, 1.0f, true, rng), ArgumentError);
    CHECK_THROWS_AS(ad::dropout(x, -0.1f, true, rng), ArgumentError);
  }

  TEST_CASE("dropout is reproducible") {
    Tape t(false);
    auto x = t.constant(Tensor(Shape{64}, std::vector<Real>(64, 1)));
    Rng a(9), b(9);
    const Tensor first = ad::dropout(x, 0.5f, true, a).value();
    const Tensor second = ad::dropout(x, 0.5f, true, b).value();
    CHECK(first == second);
  }

  TEST_CASE("cross entropy") {
    Tape t;
    CHECK(ad::cross_entropy(t.constant(make({2}, {0, 0})), 0).value()[0] == Approx(std::log(2.0)));
    CHECK(ad::cross_entropy(t.constant(make({2}, {10, -10})), 0).value()[0] == Approx(0.0).epsilon(1e-6));
    CHECK_THROWS_AS(ad::cross_entropy(t.constant(make({2}, {0, 0})), 2), ArgumentError);

    Tensor logits = make({3}, {0.5f, -1, 2});
    logits.set_requires_grad(true);
    auto loss = ad::cross_entropy(t.param(logits), 1);
    t.backward(loss);
    const auto p = oracle::masked_probs({0.5, -1, 2}, {1, 1, 1});
    CHECK(logits.grad()[0] == Approx(p[0]));
    CHECK(logits.grad()[1] == Approx(p[1] - 1));
    CHECK(logits.grad()[2] == Approx(p[2]));
  }

  TEST_CASE("backward basics") {
    Tensor x = make({1}, {3});
    x.set_requires_grad(true);
    {
      Tape t;
      auto v = t.param(x);
      t.backward(ad::mul(v, v));
    }
    CHECK(x.grad()[0] == Approx(6));

    Tensor y(Shape{2, 3}, random_values(6, 1), true);
    {
      Tape t;
      t.backward(ad::sum(t.param(y)));
    }
    for (auto g : y.grad()) CHECK(g == 1);
    {
      Tape t;
      t.backward(ad::sum(t.param(y)));
    }
    for (auto g : y.grad()) CHECK(g == 2);
    y.zero_grad();
    for (auto g : y.grad()) CHECK(g == 0);

    Tape t;
    CHECK_THROWS_AS(t.backward(t.param(y)), DimensionError);
  }

  TEST_CASE("deferred flush") {
    Tensor x = make({1}, {2});
    x.set_requires_grad(true);
    Tape t;
    auto v = t.param(x);
    t.backward(ad::scale(v, 4), false);
    CHECK(x.grad()[0] == 0);
    t.flush_param_grads();
    CHECK(x.grad()[0] == 4);
  }
}

TEST_SUITE("kernels") {
  TEST_CASE("gemm matches naive product") {
    for (auto ta : {kernels::Trans::No, kernels::Trans::Yes}) {
      for (auto tb : {kernels::Trans::No, kernels::Trans::Yes}) {
        const std::size_t m = 7, n = 5, k = 9;
        auto a = random_values(m * k, 1);
        auto b = random_values(k * n, 2);
        std::vector<Real> c(m * n);
        kernels::serial::gemm(ta, tb, m, n, k, a.data(), b.data(), c.data(), false);
        const auto ref = oracle::matmul(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()),
                                        m, n, k, ta == kernels::Trans::Yes, tb == kernels::Trans::Yes);
        for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == Approx(ref[i]).epsilon(1e-5));
      }
    }
  }

  TEST_CASE("openmp kernels are bit-identical to serial") {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    const std::size_t m = 67, n = 45, k = 38;
    auto a = random_values(m * k, 3);
    auto b = random_values(k * n, 4);
    auto c0 = random_values(m * n, 5);
    for (bool acc : {false, true}) {
      for (auto ta : {kernels::Trans::No, kernels::Trans::Yes}) {
        for (auto tb : {kernels::Trans::No, kernels::Trans::Yes}) {
          auto s = c0, p = c0;
          kernels::serial::gemm(ta, tb, m, n, k, a.data(), b.data(), s.data(), acc);
          kernels::omp::gemm(ta, tb, m, n, k, a.data(), b.data(), p.data(), acc);
          CHECK(s == p);
        }
      }
    }
    std::vector<std::uint8_t> mask(n, 1);
    mask[3] = 0;
    std::vector<Real> s(m * n), p(m * n);
    kernels::serial::softmax_rows(m, n, c0.data(), mask.data(), s.data());
    kernels::omp::softmax_rows(m, n, c0.data(), mask.data(), p.data());
    CHECK(s == p);
    omp_set_num_threads(saved);
  }
}

TEST_SUITE("rng") {
  TEST_CASE("same seed, same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
      CHECK(a.next_u64() == b.next_u64());
      CHECK(a.normal() == b.normal());
    }
  }

  TEST_CASE("derived seeds differ") {
    CHECK(derive_seed(1, 1) != derive_seed(1, 2));
    CHECK(derive_seed(1, 1, 0) != derive_seed(1, 1, 1));
    CHECK(derive_seed(1, 1) == derive_seed(1, 1));
  }

  TEST_CASE("truncated normal bound") {
    Rng r(1);
    for (int i = 0; i < 10000; ++i) CHECK(std::fabs(r.truncated_normal(0.02)) <= 0.04);
  }

  TEST_CASE("below stays in range") {
    Rng r(2);
    for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("first step moves by lr") {
    Tensor w = make({1}, {1});
    w.set_requires_grad(true);
    w.grad()[0] = 1;
    std::vector<Tensor*> ps{&w};
    AdamState st(AdamHyper{0.1}, ps);
    adam_step(ps, st);
    CHECK(w[0] == Approx(0.9).epsilon(1e-6));
    CHECK(st.step_count == 1);
  }

  TEST_CASE("zero gradient leaves parameter") {
    Tensor w = make({1}, {1});
    w.set_requires_grad(true);
    std::vector<Tensor*> ps{&w};
    AdamState st(AdamHyper{0.1}, ps);
    adam_step(ps, st);
    CHECK(w[0] == 1);
  }

  TEST_CASE("converges on a quadratic") {
    Tensor w = make({1}, {0});
    w.set_requires_grad(true);
    std::vector<Tensor*> ps{&w};
    AdamState st(AdamHyper{0.1}, ps);
    for (int i = 0; i < 200; ++i) {
      w.grad()[0] = 2 * (w[0] - 3);
      adam_step(ps, st);
      CHECK(st.step_count == static_cast<std::uint64_t>(i + 1));
    }
    CHECK(std::fabs(w[0] - 3) < 0.1);
  }

  TEST_CASE("shape mismatch") {
    Tensor a = make({2}, {0, 0}), b = make({3}, {0, 0, 0});
    a.set_requires_grad(true);
    b.set_requires_grad(true);
    std::vector<Tensor*> one{&a};
    std::vector<Tensor*> other{&b};
    AdamState st(AdamHyper{}, one);
    CHECK_THROWS_AS(adam_step(other, st), DimensionError);
  }
}
