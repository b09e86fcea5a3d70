#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ubf/error.hpp"
#include "ubf/postproc.hpp"

using namespace ubf;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("analytic signal") {
  SUBCASE("constant passes through") {
    const std::vector<double> c(16, -2.0);
    for (auto z : hilbert_analytic(c)) {
      CHECK(z.real() == doctest::Approx(-2.0).epsilon(1e-12));
      CHECK(std::abs(z.imag()) <= 1e-12);
      CHECK(std::abs(z) == doctest::Approx(2.0).epsilon(1e-12));
    }
  }
  SUBCASE("exact-bin cosine and sine") {
    const std::size_t m = 64;
    for (std::size_t k : {1u, 5u, 17u, 31u}) {
      std::vector<double> cosv(m), sinv(m);
      for (std::size_t n = 0; n < m; ++n) {
        cosv[n] = std::cos(2 * kPi * k * n / m);
        sinv[n] = std::sin(2 * kPi * k * n / m);
      }
      const auto a = hilbert_analytic(cosv);
      const auto b = hilbert_analytic(sinv);
      for (std::size_t n = 0; n < m; ++n) {
        CHECK(std::abs(std::abs(a[n]) - 1.0) <= 1e-9);
        CHECK(std::abs(b[n].imag() + cosv[n]) <= 1e-9);
        CHECK(std::abs(a[n].real() - cosv[n]) <= 1e-9);
      }
    }
  }
  SUBCASE("linearity and real part") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> x(77), y(77), s(77);
    for (std::size_t n = 0; n < 77; ++n) {
      x[n] = g(rng);
      y[n] = g(rng);
      s[n] = x[n] + y[n];
    }
    const auto ax = hilbert_analytic(x), ay = hilbert_analytic(y), as = hilbert_analytic(s);
    for (std::size_t n = 0; n < 77; ++n) {
      CHECK(std::abs(as[n] - ax[n] - ay[n]) <= 1e-9);
      CHECK(std::abs(ax[n].real() - x[n]) <= 1e-9 * std::max(1.0, std::abs(x[n])));
    }
  }
  SUBCASE("energy identity") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    const std::size_t m = 128;
    std::vector<double> x(m);
    double mean = 0.0;
    for (double& v : x) {
      v = g(rng);
      mean += v;
    }
    mean /= m;
    for (double& v : x) v -= mean;
    double nyq = 0.0, rf = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      nyq += (n % 2 ? -1.0 : 1.0) * x[n];
      rf += x[n] * x[n];
    }
    const auto a = hilbert_analytic(x);
    double an = 0.0;
    for (auto z : a) an += std::norm(z);
    const double expected = 2.0 * rf - nyq * nyq / static_cast<double>(m);
    CHECK(std::abs(an - expected) <= 1e-6 * expected);
  }
  CHECK_THROWS_AS(hilbert_analytic(std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("envelope") {
  RfImage zero(16, 3);
  for (const auto out = envelope(zero); double v : out.values()) CHECK(v == 0.0);

  RfImage col(64, 2);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < 64; ++i) {
    col(i, 0) = std::cos(2 * kPi * 8 * i / 64.0);
    col(i, 1) = g(rng);
  }
  const auto env = envelope(col);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(env(i, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(env(i, 1) >= std::abs(col(i, 1)) - 1e-9);
  }
}

TEST_CASE("log compression") {
  Array2<double> env(1, 4);
  env(0, 0) = 2.0;
  env(0, 1) = 0.2;
  env(0, 2) = 2e-6;
  env(0, 3) = 0.0;
  const auto b = log_compress(env);
  CHECK(b.dynamic_range == 60.0);
  CHECK(b.data(0, 0) == 0.0);
  CHECK(b.data(0, 1) == doctest::Approx(-20.0).epsilon(1e-14));
  CHECK(b.data(0, 2) == -60.0);
  CHECK(b.data(0, 3) == -60.0);
  CHECK(log_compress(env, 10.0).data(0, 1) == -10.0);
  CHECK_THROWS_AS(log_compress(Array2<double>(3, 3)), NumericError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Array2<double> r(20, 20);
  for (double& v : r.values()) v = u(rng);
  const auto ref = log_compress(r);
  for (double v : ref.data.values()) CHECK((v <= 0.0 && v >= -60.0));
  for (double alpha : {0.25, 2.0, 1024.0, 0.5}) {
    Array2<double> s = r;
    for (double& v : s.values()) v *= alpha;
    CHECK(log_compress(s).data == ref.data);
  }
  for (double alpha : {0.3, 7.1, 1e5}) {
    Array2<double> s = r;
    for (double& v : s.values()) v *= alpha;
    const auto out = log_compress(s);
    for (std::size_t k = 0; k < out.data.size(); ++k) CHECK(std::abs(out.data.values()[k] - ref.data.values()[k]) <= 1e-12);
  }
}
