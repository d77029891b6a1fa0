#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dvaw/meta.hpp"
#include "dvaw/oracle.hpp"
#include "dvaw/rng.hpp"

using namespace dvaw;

namespace {

// Predicts a fixed constant regardless of the input.
class ConstLearner : public SubLearner {
 public:
  ConstLearner(std::string id, double v) : id_(std::move(id)), v_(v) {}
  double begin_round(const Vec&, const TrustRegion& region) override {
    hint_ = region.y_ref;
    return v_;
  }
  double end_round(double y) override { return sq_loss(y, v_); }
  const std::string& id() const override { return id_; }
  double last_hint() const override { return hint_; }

 private:
  std::string id_;
  double v_;
  double hint_ = 0.0;
};

// Predicts the trust-region centre.
class EchoRefLearner : public SubLearner {
 public:
  explicit EchoRefLearner(std::string id) : id_(std::move(id)) {}
  double begin_round(const Vec&, const TrustRegion& region) override {
    last_ = region.y_ref;
    return last_;
  }
  double end_round(double y) override { return sq_loss(y, last_); }
  const std::string& id() const override { return id_; }
  double last_hint() const override { return last_; }

 private:
  std::string id_;
  double last_ = 0.0;
};

Vec from(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vec random_simplex(Rng& rng, int n) {
  Vec v(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    v(i) = 0.05 + rng.next_unit();
    sum += v(i);
  }
  return v / sum;
}

}  // namespace

TEST_CASE("expert pools start at the prior") {
  const ExpertsState uniform = make_experts(4);
  CHECK(uniform.n == 4);
  for (int i = 0; i < 4; ++i) CHECK(uniform.p(i) == 0.25);
  CHECK(uniform.round == 0);
  CHECK(uniform.max_loss_seen == 0.0);

  const ExpertsState skew = make_experts(from({0.2, 0.8}));
  CHECK(skew.p1(1) == 0.8);
  CHECK(skew.p(1) == 0.8);

  CHECK_THROWS_AS(make_experts(0), std::invalid_argument);
  CHECK_THROWS_AS(make_experts(-3), std::invalid_argument);
  CHECK_THROWS_AS(make_experts(from({0.5, 0.6})), std::invalid_argument);
  CHECK_THROWS_AS(make_experts(from({-0.1, 1.1})), std::invalid_argument);
}

TEST_CASE("mixing schedule values and shape") {
  // Values frozen from tests/oracles/meta_cases.py.
  CHECK(beta_schedule(0) == doctest::Approx(0.26894142136999512).epsilon(1e-15));
  CHECK(beta_schedule(1) == doctest::Approx(0.13490255526292368).epsilon(1e-15));
  CHECK(beta_schedule(10) == doctest::Approx(0.012012037102371308).epsilon(1e-15));
  for (int t = 0; t < 200; ++t) {
    CHECK(beta_schedule(t + 1) < beta_schedule(t));
    CHECK(beta_schedule(t) > 0.0);
    CHECK(beta_schedule(t) < 1.0);
  }
  CHECK_THROWS_AS(beta_schedule(-1), std::invalid_argument);
}

TEST_CASE("one reweighting step with pinned parameters") {
  const Vec p = from({0.5, 0.5});
  const Vec p1 = from({0.5, 0.5});

  // Frozen from tests/oracles/meta_cases.py: alpha=1, losses (0, ln 2),
  // beta=0 gives (2/3, 1/3).
  const Vec out = fixed_share_step(p, from({0.0, std::log(2.0)}), 1.0, 0.0, p1);
  CHECK(out(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(out(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  // Equal losses with no mixing leave the weights alone.
  const Vec same = fixed_share_step(p, from({3.0, 3.0}), 2.0, 0.0, p1);
  CHECK(same(0) == doctest::Approx(0.5).epsilon(1e-15));

  // Full mixing lands exactly on the prior.
  const Vec prior = fixed_share_step(from({0.9, 0.1}), from({0.0, 5.0}), 1.0,
                                     1.0, from({0.25, 0.75}));
  CHECK(prior(0) == 0.25);
  CHECK(prior(1) == 0.75);

  // A single expert keeps all the mass.
  const Vec one = fixed_share_step(from({1.0}), from({7.0}), 1.0, 0.5, from({1.0}));
  CHECK(one(0) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(fixed_share_step(p, from({0.0}), 1.0, 0.0, p1),
                  std::invalid_argument);
  CHECK_THROWS_AS(fixed_share_step(p, from({0.0, -1.0}), 1.0, 0.0, p1),
                  std::invalid_argument);
  CHECK_THROWS_AS(fixed_share_step(p, from({0.0, 1.0}), -1.0, 0.0, p1),
                  std::invalid_argument);
  CHECK_THROWS_AS(fixed_share_step(p, from({0.0, 1.0}), 1.0, 1.5, p1),
                  std::invalid_argument);
}

TEST_CASE("stateful update sizes the modulus from the running max") {
  ExpertsState s = make_experts(2);
  s = fixed_share_update(s, from({0.5, 2.0}));
  CHECK(s.max_loss_seen == 2.0);
  CHECK(s.last_alpha == 0.25);  // the new max is already covered
  CHECK(s.round == 1);
  CHECK(s.last_beta == beta_schedule(1));

  s = fixed_share_update(s, from({1.0, 1.0}));
  CHECK(s.max_loss_seen == 2.0);
  CHECK(s.last_alpha == 0.25);
  CHECK(s.round == 2);
  CHECK(s.last_beta == beta_schedule(2));
}

TEST_CASE("zero losses cap the modulus instead of dividing by zero") {
  ExpertsState s = make_experts(3);
  s = fixed_share_update(s, from({0.0, 0.0, 0.0}));
  CHECK(s.last_alpha == 1.0 / (2.0 * kAlphaLossFloor));
  CHECK(s.last_alpha == 5e11);
}

TEST_CASE("weights stay on the simplex and the modulus never grows") {
  Rng rng(63);
  ExpertsState s = make_experts(5);
  double prev_alpha = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 120; ++t) {
    Vec losses(5);
    for (int i = 0; i < 5; ++i) losses(i) = 4.0 * rng.next_unit();
    s = fixed_share_update(s, losses);
    CHECK(std::fabs(s.p.sum() - 1.0) <= 1e-12);
    CHECK(s.p.minCoeff() > 0.0);
    CHECK(s.last_alpha <= prev_alpha);
    prev_alpha = s.last_alpha;
  }
}

TEST_CASE("aggregation is the weighted average of predictions") {
  CHECK(aggregate(from({1.0, 0.0}), from({3.0, 9.0})) == 3.0);
  CHECK(aggregate(from({0.5, 0.5}), from({2.0, 2.0})) == 2.0);
  CHECK(aggregate(from({0.25, 0.75}), from({0.0, 4.0})) == 3.0);
  CHECK_THROWS_AS(aggregate(from({0.3, 0.3}), from({0.0, 4.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(aggregate(from({1.0}), from({0.0, 4.0})),
                  std::invalid_argument);
}

TEST_CASE("losses in the prediction hull are exp-concave at the running modulus") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(5));
    Vec preds(n);
    for (int i = 0; i < n; ++i) preds(i) = 3.0 * rng.next_gaussian();
    const double y = 3.0 * rng.next_gaussian();
    double max_loss = 0.0;
    for (int i = 0; i < n; ++i) max_loss = std::max(max_loss, sq_loss(y, preds(i)));
    const double alpha = 1.0 / (2.0 * std::max(max_loss, kAlphaLossFloor));
    const Vec p = random_simplex(rng, n);
    const Vec q = random_simplex(rng, n);
    const Vec mid = 0.5 * (p + q);
    const double ep = std::exp(-alpha * sq_loss(y, aggregate(p, preds)));
    const double eq = std::exp(-alpha * sq_loss(y, aggregate(q, preds)));
    const double em = std::exp(-alpha * sq_loss(y, aggregate(mid, preds)));
    CHECK(em >= 0.5 * ep + 0.5 * eq - 1e-12);
  }
}

TEST_CASE("runner construction validates the pool and prior") {
  CHECK_THROWS_AS(ClippedMetaRunner({}, RefPolicy::zero()),
                  std::invalid_argument);
  std::vector<std::unique_ptr<SubLearner>> experts;
  experts.push_back(std::make_unique<ConstLearner>("a", 1.0));
  CHECK_THROWS_AS(
      ClippedMetaRunner(std::move(experts), RefPolicy::zero(), from({0.5, 0.5})),
      std::invalid_argument);
}

TEST_CASE("a single expert passes through after clipping") {
  std::vector<std::unique_ptr<SubLearner>> experts;
  experts.push_back(std::make_unique<ConstLearner>("c5", 5.0));
  ClippedMetaRunner runner(std::move(experts), RefPolicy::previous_label());

  // Round 1: centre 0, radius 0, so the prediction collapses to 0.
  const Vec x = Vec::Constant(1, 1.0);
  const MetaRound& r1 = runner.step(x, 2.0);
  CHECK(r1.aggregate_pred == 0.0);
  CHECK(r1.raw[0] == 5.0);
  CHECK(r1.clipped[0] == 0.0);
  CHECK(r1.meta_loss == sq_loss(2.0, 0.0));

  // Round 2: centre 2, radius 2, so 5 clips to 4.
  const MetaRound& r2 = runner.step(x, 3.0);
  CHECK(r2.y_ref == 2.0);
  CHECK(r2.radius_before == 2.0);
  CHECK(r2.clipped[0] == 4.0);
  CHECK(r2.aggregate_pred == 4.0);
}

TEST_CASE("a pool of centre echoes predicts the centre") {
  std::vector<std::unique_ptr<SubLearner>> experts;
  for (int i = 0; i < 3; ++i)
    experts.push_back(std::make_unique<EchoRefLearner>("e" + std::to_string(i)));
  Stream stream;
  Rng rng(9);
  for (int t = 0; t < 20; ++t)
    stream.push_back({Vec::Constant(1, 1.0), rng.next_gaussian()});
  const auto rounds =
      run_clipped_meta(std::move(experts), RefPolicy::previous_label(), stream);
  double prev = 0.0;
  for (size_t t = 0; t < rounds.size(); ++t) {
    CHECK(rounds[t].y_ref == prev);
    // The simplex weights sum to 1 only to machine precision, so the
    // aggregate of identical echoes can sit one ulp off the centre.
    CHECK(rounds[t].aggregate_pred == doctest::Approx(prev).epsilon(1e-14));
    CHECK(rounds[t].meta_loss ==
          doctest::Approx(sq_loss(stream[t].y, prev)).epsilon(1e-12));
    prev = stream[t].y;
  }
}

TEST_CASE("rounds are recorded faithfully") {
  std::vector<std::unique_ptr<SubLearner>> experts;
  experts.push_back(std::make_unique<ConstLearner>("lo", -4.0));
  experts.push_back(std::make_unique<ConstLearner>("hi", 4.0));
  ClippedMetaRunner runner(std::move(experts), RefPolicy::previous_label());
  Rng rng(25);
  const Vec x = Vec::Constant(1, 1.0);
  double m = 0.0;
  double prev_label = 0.0;
  Vec p = from({0.5, 0.5});
  for (int t = 1; t <= 40; ++t) {
    const double y = 2.0 * rng.next_gaussian();
    const MetaRound& r = runner.step(x, y);
    CHECK(r.t == t);
    const double y_ref = t == 1 ? 0.0 : prev_label;
    CHECK(r.y_ref == y_ref);
    CHECK(r.radius_before == m);
    const TrustRegion region{y_ref, m};
    double agg = 0.0;
    for (int i = 0; i < 2; ++i) {
      CHECK(r.weights[i] == p(i));  // weights as they stood entering the round
      CHECK(r.clipped[i] == clip(r.raw[i], region));
      CHECK(r.clipped_losses[i] == sq_loss(y, r.clipped[i]));
      CHECK(r.hints[i] == y_ref);
      agg += p(i) * r.clipped[i];
    }
    CHECK(r.aggregate_pred == doctest::Approx(agg).epsilon(1e-15));
    CHECK(r.meta_loss == sq_loss(y, r.aggregate_pred));
    const double m_next = update_radius(region, y).radius;
    CHECK(r.radius_after == m_next);

    // The recorded alpha/beta are what the post-round reweighting used.
    const ExpertsState& s = runner.experts_state();
    CHECK(r.alpha == s.last_alpha);
    CHECK(r.beta == s.last_beta);
    CHECK(r.beta == beta_schedule(t));

    p = s.p;
    m = m_next;
    prev_label = y;
  }
}

TEST_CASE("pool loss tracks the best clipped expert") {
  Rng rng(101);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(7));
    std::vector<std::unique_ptr<SubLearner>> experts;
    for (int i = 0; i < n; ++i)
      experts.push_back(std::make_unique<ConstLearner>(
          "c" + std::to_string(i), 2.0 * rng.next_gaussian()));
    const int T = 40 + static_cast<int>(rng.next_below(161));
    Stream stream;
    for (int t = 0; t < T; ++t)
      stream.push_back({Vec::Constant(1, 1.0),
                        std::sin(0.1 * t) + 0.3 * rng.next_gaussian()});
    const auto rounds =
        run_clipped_meta(std::move(experts), RefPolicy::previous_label(), stream);

    double meta_sum = 0.0;
    std::vector<double> expert_sum(n, 0.0);
    for (const MetaRound& r : rounds) {
      meta_sum += r.meta_loss;
      for (int i = 0; i < n; ++i) expert_sum[i] += r.clipped_losses[i];
    }
    const double best = *std::min_element(expert_sum.begin(), expert_sum.end());
    const MetaRound& last = rounds.back();
    const double ceiling = bound_fixed_share(last.alpha, last.beta, 1.0 / n);
    CHECK(meta_sum - best <= ceiling + 1e-9 * std::max(1.0, std::fabs(ceiling)));
  }
}
