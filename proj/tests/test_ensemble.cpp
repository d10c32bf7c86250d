#include <doctest.h>

#include <random>
#include <sstream>

#include "kge/ensemble.hpp"
#include "kge/error.hpp"
#include "properties.hpp"
#include "support.hpp"

using namespace kge;

namespace {

EmbeddingState vec_state(std::vector<double> v) {
  EmbeddingState s{ModelKind::kDistMult, Matrix(1, v.size()), Matrix(1, v.size())};
  std::copy(v.begin(), v.end(), s.entities.row(0).begin());
  return s;
}

Evaluator scripted(std::vector<double> values) {
  auto pos = std::make_shared<std::size_t>(0);
  return [values, pos](const EmbeddingState&) { return values.at((*pos)++); };
}

}  // namespace

TEST_CASE("swa absorb examples") {
  SwaState s;
  const auto a = vec_state({1, 3});
  swa_absorb(s, a);
  CHECK(s.theta == a);
  CHECK(s.n_models == 1);
  swa_absorb(s, vec_state({3, 1}));
  CHECK(s.n_models == 2);
  CHECK(s.theta.entities(0, 0) == 2.0);
  CHECK(s.theta.entities(0, 1) == 2.0);
  CHECK_THROWS_AS(swa_absorb(s, vec_state({1, 2, 3})), ContractError);
}

TEST_CASE("swa equals the explicit mean") {
  const auto r = test::swa_mean_identity(5, 5);
  CHECK_MESSAGE(r.ok, r.detail);
  const auto big = test::swa_mean_identity(9, 100);
  CHECK_MESSAGE(big.ok, big.detail);
}

TEST_CASE("aswa hard update") {
  AswaState a{vec_state({0, 0}), 3, 0.4, {}};
  const auto next = vec_state({1, 1});
  CHECK(aswa_epoch_step(a, 1, next, scripted({0.5})) == AswaAction::kHard);
  CHECK(a.val_aswa == 0.5);
  CHECK(a.alpha_count == 1);
  CHECK(a.theta == next);
  REQUIRE(a.log.size() == 1);
  CHECK_FALSE(a.log[0].val_lookahead.has_value());
}

TEST_CASE("aswa soft update averages with one prior member") {
  AswaState a{vec_state({0, 2}), 1, 0.4, {}};
  CHECK(aswa_epoch_step(a, 2, vec_state({2, 4}), scripted({0.3, 0.45})) == AswaAction::kSoft);
  CHECK(a.val_aswa == 0.45);
  CHECK(a.alpha_count == 2);
  CHECK(a.theta.entities(0, 0) == 1.0);
  CHECK(a.theta.entities(0, 1) == 3.0);
  REQUIRE(a.log.size() == 1);
  CHECK(a.log[0].val_lookahead == 0.45);
}

TEST_CASE("aswa reject leaves the state untouched") {
  AswaState a{vec_state({0, 2}), 1, 0.4, {}};
  const auto theta = a.theta;
  CHECK(aswa_epoch_step(a, 3, vec_state({2, 4}), scripted({0.3, 0.35})) == AswaAction::kReject);
  CHECK(a.theta == theta);
  CHECK(a.alpha_count == 1);
  CHECK(a.val_aswa == 0.4);
  // Ties reject too.
  CHECK(aswa_epoch_step(a, 4, vec_state({2, 4}), scripted({0.4, 0.4})) == AswaAction::kReject);
}

TEST_CASE("aswa non-finite score") {
  AswaState a = AswaState::start(vec_state({0}));
  CHECK_THROWS_AS(aswa_epoch_step(a, 1, vec_state({1}), scripted({std::nan("")})), EvalError);
  AswaState b{vec_state({0}), 1, 0.5, {}};
  CHECK_THROWS_AS(aswa_epoch_step(b, 1, vec_state({1}), scripted({0.1, INFINITY})), EvalError);
}

TEST_CASE("aswa properties over scripted sequences") {
  const auto r = test::aswa_properties(21, 50);
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("aswa log csv") {
  AswaState a = AswaState::start(vec_state({0}));
  aswa_epoch_step(a, 1, vec_state({1}), scripted({0.5}));
  aswa_epoch_step(a, 2, vec_state({1}), scripted({0.25, 0.75}));
  std::ostringstream out;
  write_aswa_log_csv(out, a.log);
  const std::string csv = out.str();
  CHECK(csv.rfind("epoch,val_running,val_lookahead,action,val_aswa\n", 0) == 0);
  CHECK(csv.find("1,0.5,,hard,0.5") != std::string::npos);
  CHECK(csv.find("2,0.25,0.75,soft,0.75") != std::string::npos);
}

TEST_CASE("snape weights") {
  SnapshotEnsemble e;
  snape_capture(e, vec_state({1}), 0.5);
  CHECK(e.weights == std::vector<double>{1.0});
  snape_capture(e, vec_state({2}), 0.25);
  CHECK(e.weights[0] == doctest::Approx(1.0 / 3));
  CHECK(e.weights[1] == doctest::Approx(2.0 / 3));

  const std::vector<double> ones{1, 1, 1};
  for (double w : inverse_loss_weights(ones)) CHECK(w == doctest::Approx(1.0 / 3));

  CHECK_THROWS_AS(snape_capture(e, vec_state({1}), 0.0), ContractError);
  CHECK_THROWS_AS(snape_capture(e, vec_state({1}), -1.0), ContractError);
}

TEST_CASE("snape weights form a probability vector invariant to loss scaling") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> losses(1 + rng() % 8);
    for (double& x : losses) x = u(rng);
    const auto w = inverse_loss_weights(losses);
    double sum = 0;
    for (double x : w) {
      CHECK(x > 0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    auto scaled = losses;
    for (double& x : scaled) x *= 123.0;
    const auto w2 = inverse_loss_weights(scaled);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(w[i] - w2[i]) <= 1e-12);
    for (std::size_t i = 1; i < w.size(); ++i) CHECK(std::abs(w[i] * losses[i] - w[0] * losses[0]) <= 1e-12);
  }
}

TEST_CASE("snape scores") {
  std::mt19937_64 rng(6);
  const auto s1 = test::random_state(rng, ModelKind::kComplEx, 7, 3, 4);
  const auto s2 = test::random_state(rng, ModelKind::kComplEx, 7, 3, 4);

  SnapshotEnsemble one;
  snape_capture(one, s1, 0.7);
  CHECK(snape_score_all_tails(one, 2, 1) == score_all_tails(s1, 2, 1));

  SnapshotEnsemble same;
  snape_capture(same, s1, 0.3);
  snape_capture(same, s1, 0.9);
  const auto ref = score_all_tails(s1, 4, 0);
  const auto got = snape_score_all_tails(same, 4, 0);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(got[i] - ref[i]) <= 1e-12 * (1 + std::abs(ref[i])));

  SnapshotEnsemble two;
  snape_capture(two, s1, 0.5);
  snape_capture(two, s2, 0.25);
  for (EntityId h = 0; h < 7; ++h) {
    const auto a = score_all_tails(s1, h, 2), b = score_all_tails(s2, h, 2);
    const auto mix = snape_score_all_tails(two, h, 2);
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(std::abs(mix[i] - (a[i] / 3.0 + 2.0 * b[i] / 3.0)) <= 1e-12 * (1 + std::abs(mix[i])));
  }

  SnapshotEnsemble empty;
  CHECK_THROWS_AS(snape_score_all_tails(empty, 0, 0), ContractError);
}
