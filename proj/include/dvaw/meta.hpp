#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dvaw/hinting.hpp"
#include "dvaw/types.hpp"

namespace dvaw {

// Losses this small are treated as zero when sizing the exp-concavity
// modulus, which caps alpha at 5e11 instead of letting it blow up before the
// first nonzero loss arrives.
inline constexpr double kAlphaLossFloor = 1e-12;

// Weights over a finite pool of experts, reweighted multiplicatively and
// mixed back towards the prior so that late starters can still take over.
struct ExpertsState {
  int n = 0;
  Vec p;                     // current simplex point
  Vec p1;                    // prior (mixing target)
  double max_loss_seen = 0.0;
  int round = 0;             // completed rounds
  double last_alpha = 0.0;   // modulus used by the most recent update
  double last_beta = 0.0;    // mixing rate used by the most recent update
};

// Uniform prior over n experts.
ExpertsState make_experts(int n);
// Custom prior: entries must be positive and sum to 1 (1e-9 tolerance).
ExpertsState make_experts(Vec p1);

// Mixing rate applied after round t: 1 / ((e+t) ln^2(e+t) + 1). Decreasing,
// and summable slowly enough that a restarted expert always keeps weight.
double beta_schedule(int t);

// One reweighting with explicit parameters (the stateful update below picks
// alpha and beta itself; tests can pin them):
//   q_i  ∝ p_i * exp(-alpha * loss_i)
//   p'   = (1-beta) q + beta p1
// Computed in log space with max subtraction.
Vec fixed_share_step(const Vec& p, const Vec& losses, double alpha, double beta,
                     const Vec& p1);

// Full update for one observed round: fold the round's losses into the
// running max FIRST (so the modulus already covers them), set
// alpha = 1/(2*max(max_loss_seen, floor)), advance the round counter, and mix
// with beta_schedule(new round count).
ExpertsState fixed_share_update(const ExpertsState& s, const Vec& losses);

// Weighted prediction <p, preds>.
double aggregate(const Vec& p, const Vec& preds);

// Anything that can play one round of the prediction protocol. begin_round
// sees the feature and the current trust region (whose centre doubles as the
// shared label hint) and returns a raw prediction; end_round sees the label
// and returns the learner's own loss on that raw prediction.
class SubLearner {
 public:
  virtual ~SubLearner() = default;
  virtual double begin_round(const Vec& x, const TrustRegion& region) = 0;
  virtual double end_round(double y) = 0;
  virtual const std::string& id() const = 0;
  // The label hint consumed by the most recent begin_round.
  virtual double last_hint() const = 0;
};

// Everything observable about one aggregated round.
struct MetaRound {
  int t = 0;                  // 1-indexed
  double y_ref = 0.0;
  double radius_before = 0.0; // M_t
  double radius_after = 0.0;  // M_{t+1}
  double aggregate_pred = 0.0;
  double y = 0.0;
  double meta_loss = 0.0;
  double alpha = 0.0;         // modulus used this round
  double beta = 0.0;          // mixing rate used this round
  std::vector<double> raw;            // expert predictions before clipping
  std::vector<double> clipped;        // after clipping to the region
  std::vector<double> weights;        // p_t (before this round's update)
  std::vector<double> clipped_losses; // losses fed to the reweighting
  std::vector<double> hints;          // label hint each expert consumed
};

// Drives a pool of sub-learners through the clip-aggregate-reweight loop:
// per round, build the trust region from the reference policy and the
// running radius, clip every expert prediction into it, predict the
// weight-average of the clipped values, then grow the radius and reweight on
// the clipped losses. Experts always see the true label.
class ClippedMetaRunner {
 public:
  ClippedMetaRunner(std::vector<std::unique_ptr<SubLearner>> experts,
                    RefPolicy policy,
                    std::optional<Vec> prior = std::nullopt);

  // Run one full round; the returned reference stays valid until next step.
  const MetaRound& step(const Vec& x, double y);

  const ExpertsState& experts_state() const { return state_; }
  const std::vector<std::unique_ptr<SubLearner>>& learners() const { return experts_; }
  double radius() const { return m_; }
  int round() const { return round_; }

 private:
  std::vector<std::unique_ptr<SubLearner>> experts_;
  RefPolicy policy_;
  ExpertsState state_;
  double m_ = 0.0;
  double last_label_ = 0.0;
  int round_ = 0;
  MetaRound row_;
};

// Convenience wrapper collecting all rounds of a stream.
std::vector<MetaRound> run_clipped_meta(
    std::vector<std::unique_ptr<SubLearner>> experts, RefPolicy policy,
    const Stream& stream, std::optional<Vec> prior = std::nullopt);

}  // namespace dvaw
