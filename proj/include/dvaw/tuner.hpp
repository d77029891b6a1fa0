#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dvaw/forecaster.hpp"
#include "dvaw/hinting.hpp"
#include "dvaw/meta.hpp"
#include "dvaw/types.hpp"

namespace dvaw {

// How sub-learners obtain their label hints.
enum class HintMode {
  external,        // hint = the round's reference point (shared)
  self_confident,  // hint = the learner's own clipped fixed point
};

// Geometric ladder of effective horizons eta in [2d, dT], mapped to discount
// factors gamma = eta/(1+eta), plus the greedy gamma = 0 endpoint.
struct DiscountGrid {
  int d = 0;
  long T = 0;
  double b = 0.0;
  double eta_min = 0.0;
  double eta_max = 0.0;
  std::vector<double> etas;    // eta_min * b^i, capped at eta_max (included once)
  std::vector<double> gammas;  // {0} then eta/(1+eta) in ladder order
};

// Throws std::invalid_argument unless d >= 1, T >= 1, b > 1.
DiscountGrid build_grid(int d, long T, double b);

// Discounted forecaster wrapped as a pool expert.
class DiscountedLearner : public SubLearner {
 public:
  DiscountedLearner(int dim, double lambda, double gamma, HintMode mode,
                    std::string id);
  double begin_round(const Vec& x, const TrustRegion& region) override;
  double end_round(double y) override;
  const std::string& id() const override { return id_; }

  double last_hint() const override { return last_hint_; }
  const DiscountState& state() const { return state_; }

 private:
  DiscountState state_;
  HintMode mode_;
  std::string id_;
  double last_hint_ = 0.0;
};

// The gamma = 0 endpoint: predicts the hint itself (the one-round horizon
// limit). Under either hint mode this is the region's reference point.
class GreedyHintLearner : public SubLearner {
 public:
  explicit GreedyHintLearner(std::string id) : id_(std::move(id)) {}
  double begin_round(const Vec& x, const TrustRegion& region) override;
  double end_round(double y) override;
  const std::string& id() const override { return id_; }
  double last_hint() const override { return last_pred_; }

 private:
  std::string id_;
  double last_pred_ = 0.0;
};

// One expert per grid discount, sharing a single trust-region pipeline.
std::vector<std::unique_ptr<SubLearner>> make_bank(const DiscountGrid& grid,
                                                   double lambda, HintMode mode);

// Dyadic interval [start, end] of 0-indexed rounds: level i, index k covers
// [k*2^i, (k+1)*2^i - 1], truncated at T-1.
struct CoverInterval {
  int level = 0;
  long k = 0;
  long start = 0;
  long end = 0;
};

// All dyadic intervals over horizon T at levels 0..floor(log2(T)) whose
// start lies below T (ends truncated to T-1).
std::vector<CoverInterval> geometric_cover(long T);

// Exact disjoint tiling of [s, tau] by untruncated dyadic intervals: walk
// left to right, always taking the largest aligned block that still fits.
// At most 2*ceil(log2(tau - s + 2)) pieces.
std::vector<CoverInterval> partition_interval(long s, long tau, long T);

// Expert that runs a fresh learner inside its interval and echoes the
// reference point outside it. The inner state is created lazily at the
// interval's first round and freed after its last, so the number of live
// forecasters stays bounded by (#discounts) * (#levels).
class IntervalLearner : public SubLearner {
 public:
  struct LiveCounter {
    long live = 0;
    long peak = 0;
  };

  IntervalLearner(int dim, double lambda, double gamma, HintMode mode,
                  CoverInterval iv, std::string id,
                  LiveCounter* counter = nullptr);
  double begin_round(const Vec& x, const TrustRegion& region) override;
  double end_round(double y) override;
  const std::string& id() const override { return id_; }
  double last_hint() const override { return last_hint_; }
  const CoverInterval& interval() const { return iv_; }
  double gamma() const { return gamma_; }
  bool active() const { return pos_ >= iv_.start && pos_ <= iv_.end; }

 private:
  int dim_;
  double lambda_;
  double gamma_;
  HintMode mode_;
  CoverInterval iv_;
  std::string id_;
  LiveCounter* counter_;
  std::optional<DiscountState> core_;
  long pos_ = 0;  // 0-indexed round about to be played
  double last_pred_ = 0.0;
  double last_hint_ = 0.0;
};

struct SaConfig {
  int d = 1;
  long T = 1;
  double lambda = 1.0;
  double b = 2.0;
  HintMode mode = HintMode::external;
  RefPolicy policy = RefPolicy::previous_label();
  long expert_cap = 100000;  // reject banks larger than this
};

// Per-round scalars of a strongly-adaptive run (expert vectors are streamed
// to the observer instead of stored: banks can hold thousands of experts).
struct SlimRound {
  int t = 0;
  double y_ref = 0.0;
  double radius_before = 0.0;
  double radius_after = 0.0;
  double aggregate_pred = 0.0;
  double y = 0.0;
  double meta_loss = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct SaResult {
  DiscountGrid grid;
  std::vector<CoverInterval> cover;
  std::vector<std::string> expert_ids;  // bank order: gamma-major, interval-minor
  std::vector<SlimRound> rounds;
  long peak_live_states = 0;
};

using RoundObserver = std::function<void(const MetaRound&)>;

// One aggregated run over the whole (discount x interval) bank. The observer,
// when given, sees the full per-expert round record before it is recycled.
SaResult run_strongly_adaptive(const SaConfig& cfg, const Stream& stream,
                               const RoundObserver& observer = {});

}  // namespace dvaw
