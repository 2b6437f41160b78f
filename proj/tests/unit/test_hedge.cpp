#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dmeg/hedge.hpp"
#include "oracles.hpp"

using namespace dmeg;

TEST_CASE("combine") {
  ExpertWeights two(2, 0.1, false);
  const std::vector<double> s2{0.2, 0.8};
  CHECK(combine(two, s2) == doctest::Approx(0.5).epsilon(1e-15));

  // p = (0.25, 0.25, 0.5): cumulative grads chosen so the softmax lands there
  ExpertWeights three(3, std::log(2.0), false);
  three.update(std::vector<double>{1.0, 1.0, 0.0});
  const std::vector<double> s3{0.1, 0.3, 0.5};
  CHECK(three.p()[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(combine(three, s3) == doctest::Approx(0.35).epsilon(1e-14));

  CHECK_THROWS(combine(two, std::vector<double>{0.1, 0.2, 0.3}));
  ExpertWeights art(2, 0.1, true);
  CHECK_THROWS(combine(art, s2));
}

TEST_CASE("all mass on the artificial expert predicts the constraint class") {
  ExpertWeights w(3, 1.0, true);
  w.freeze_on(0);
  const std::vector<double> s{0.3, 0.1, 0.9};
  CHECK(combine(w, s, artificial_prediction(1)) == 1.0);
  CHECK(combine(w, s, artificial_prediction(0)) == 0.0);
}

TEST_CASE("grad_p") {
  const std::vector<double> s{0.5, 1.0};
  auto g = grad_p(-2.0, s, std::nullopt, 100.0);
  CHECK(g == std::vector<double>{-1.0, -2.0});
  g = grad_p(0.0, s, 1.0, 100.0);
  CHECK(g == std::vector<double>{0.0, 0.0, 0.0});
  g = grad_p(3.0, std::vector<double>{0.4, 0.4, 0.4}, std::nullopt, 100.0);
  CHECK(g[0] == g[1]);
  CHECK(g[1] == g[2]);
  g = grad_p(-50.0, s, 1.0, 4.0);  // artificial entry first, then clipped
  CHECK(g == std::vector<double>{-4.0, -4.0, -4.0});
}

TEST_CASE("EG closed-form example") {
  ExpertWeights w(2, std::log(2.0), false);
  CHECK(w.p()[0] == 0.5);
  w.update(std::vector<double>{1.0, 0.0});
  CHECK(w.p()[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(w.p()[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("zero gradients keep p uniform") {
  ExpertWeights w(5, 0.3, true);
  for (int t = 0; t < 100; ++t) w.update(std::vector<double>(6, 0.0));
  for (double v : w.p()) CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("incremental EG equals the cumulative closed form at every round") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  ExpertWeights w(7, 0.01, true);
  std::vector<double> cum(8, 0.0);
  for (int t = 0; t < 5000; ++t) {
    std::vector<double> g(8);
    for (std::size_t k = 0; k < g.size(); ++k) {
      g[k] = u(rng);
      cum[k] += g[k];
    }
    w = eg_update_experts(w, g);
    const auto ref = oracle::eg_closed_form(cum, 0.01);
    double sum = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      REQUIRE(std::abs(w.p()[k] - ref[k]) <= 1e-12);
      REQUIRE(w.p()[k] >= 0.0);
      sum += w.p()[k];
    }
    REQUIRE(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("EG is invariant to a common shift of the gradient") {
  ExpertWeights a(4, 0.2, false), b(4, 0.2, false);
  const std::vector<double> g{0.3, -1.0, 2.0, 0.0};
  std::vector<double> shifted = g;
  for (double& v : shifted) v += 17.0;
  a.update(g);
  b.update(shifted);
  for (std::size_t k = 0; k < 4; ++k) CHECK(a.p()[k] == doctest::Approx(b.p()[k]).epsilon(1e-12));
}

TEST_CASE("EG rejects bad gradients") {
  ExpertWeights w(3, 0.1, false);
  CHECK_THROWS(w.update(std::vector<double>{1.0, 2.0}));
  CHECK_THROWS(w.update(std::vector<double>{1.0, NAN, 0.0}));
  CHECK_THROWS(ExpertWeights(0, 0.1, false));
}

TEST_CASE("frozen weights stay put") {
  ExpertWeights w(3, 1.0, false);
  w.freeze_on(2);
  w.update(std::vector<double>{-5.0, -5.0, 5.0});
  CHECK(w.p()[2] == 1.0);
  CHECK(w.cumulative_grad()[2] == 5.0);
}

TEST_CASE("dual variable") {
  DualVariable d(10.0, 0.5);
  CHECK(d.lambda() == 0.0);  // round 1 plays lambda_0 = 0
  d.update(0.0);
  CHECK(d.lambda() == 5.0);

  DualVariable e(1.0, 1.0);
  e = eg_update_lambda(e, std::log(3.0));
  CHECK(e.lambda() == doctest::Approx(0.75).epsilon(1e-15));

  DualVariable big(3.0, 1.0);
  for (int i = 0; i < 2000; ++i) big.update(4.0);
  CHECK(big.lambda() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(big.lambda() <= 3.0);
  for (int i = 0; i < 4000; ++i) big.update(-4.0);
  CHECK(big.lambda() >= 0.0);
  CHECK(big.lambda() < 1e-100);

  CHECK_THROWS(DualVariable(0.5, 0.1));
  CHECK_THROWS(d.update(INFINITY));
}

TEST_CASE("theorem rates and certificate") {
  const auto r = theorem_rates(1.0, 1.0, 10000, 3);
  CHECK(r.eta == doctest::Approx(0.011774).epsilon(1e-4));
  CHECK(r.eta == doctest::Approx(std::sqrt(std::log(4.0) / 1e4)).epsilon(1e-14));
  CHECK(r.eta_lambda == doctest::Approx(0.008326).epsilon(1e-4));
  CHECK(r.num_experts == 4);
  const auto r2 = theorem_rates(2.0, 4.0, 10000, 3);
  CHECK(r2.eta == doctest::Approx(r.eta / 2));
  CHECK(r2.eta_lambda == doctest::Approx(r.eta_lambda / 4));

  CHECK(constraint_certificate(1.0, 1.0, 1000000, 3, 0.2) == doctest::Approx(0.204711).epsilon(1e-5));
  CHECK(constraint_certificate(1.0, 1.0, 1000000, 3, 0.2) == 0.2 + 4.0 * std::sqrt(std::log(4.0) / 1e6));
  const double s1 = constraint_certificate(1.0, 0.5, 5000, 4, 0.2) - 0.2;
  const double s2 = constraint_certificate(2.0, 0.5, 5000, 4, 0.2) - 0.2;
  CHECK(s2 == doctest::Approx(2 * s1).epsilon(1e-14));
  CHECK(constraint_certificate(1.0, 1.0, 1LL << 60, 3, 0.2) == doctest::Approx(0.2).epsilon(1e-6));
  CHECK_THROWS(theorem_rates(0.0, 1.0, 10, 1));
  CHECK_THROWS(constraint_certificate(1.0, 1.0, 0, 1, 0.2));
}

TEST_CASE("dual regret against the best fixed lambda") {
  // Linear losses f_t(lambda) = -lambda * g_t (the Lagrangian is affine in lambda
  // and the dual player maximizes it). Best fixed point is an endpoint.
  const long long T = 10000;
  const double g2 = 1.0, lmax = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = theorem_rates(1.0, g2, T, 1);
    DualVariable d(lmax, r.eta_lambda);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-g2, g2);
    const double bias = 0.3 * u(rng);
    double gain = 0.0, total = 0.0;
    for (long long t = 0; t < T; ++t) {
      const double g = std::clamp(u(rng) + bias, -g2, g2);
      gain += d.lambda() * g;
      total += g;
      d.update(g);
    }
    const double best = std::max(0.0, lmax * total);
    CHECK((best - gain) / T <= 2 * g2 * lmax * std::sqrt(std::log(2.0) / T));
  }
}
