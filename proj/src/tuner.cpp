#include "dvaw/tuner.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dvaw/io.hpp"

namespace dvaw {

DiscountGrid build_grid(int d, long T, double b) {
  if (d < 1) throw std::invalid_argument("build_grid: d must be >= 1");
  if (T < 1) throw std::invalid_argument("build_grid: T must be >= 1");
  if (!(b > 1.0)) throw std::invalid_argument("build_grid: b must exceed 1");

  DiscountGrid g;
  g.d = d;
  g.T = T;
  g.b = b;
  g.eta_min = 2.0 * d;
  g.eta_max = static_cast<double>(d) * static_cast<double>(T);

  double v = g.eta_min;
  while (v < g.eta_max) {
    g.etas.push_back(v);
    v *= b;
  }
  g.etas.push_back(g.eta_max);  // cap, exactly once

  g.gammas.push_back(0.0);
  for (double eta : g.etas) g.gammas.push_back(eta / (1.0 + eta));
  return g;
}

DiscountedLearner::DiscountedLearner(int dim, double lambda, double gamma,
                                     HintMode mode, std::string id)
    : state_(dim, lambda, gamma), mode_(mode), id_(std::move(id)) {}

double DiscountedLearner::begin_round(const Vec& x, const TrustRegion& region) {
  last_hint_ = mode_ == HintMode::external
                   ? region.y_ref
                   : self_confident_hint(state_, x, region);
  return state_.begin_round(x, last_hint_).prediction;
}

double DiscountedLearner::end_round(double y) { return state_.end_round(y); }

double GreedyHintLearner::begin_round(const Vec&, const TrustRegion& region) {
  // Both hint modes degenerate to the reference point here: the external
  // hint *is* the reference, and every point of the region is a fixed point
  // of clip-the-own-prediction when the prediction equals the hint.
  last_pred_ = region.y_ref;
  return last_pred_;
}

double GreedyHintLearner::end_round(double y) { return sq_loss(y, last_pred_); }

std::vector<std::unique_ptr<SubLearner>> make_bank(const DiscountGrid& grid,
                                                   double lambda, HintMode mode) {
  std::vector<std::unique_ptr<SubLearner>> bank;
  bank.reserve(grid.gammas.size());
  for (double gamma : grid.gammas) {
    std::string id = "g=" + format_double(gamma);
    if (gamma == 0.0) {
      bank.push_back(std::make_unique<GreedyHintLearner>(std::move(id)));
    } else {
      bank.push_back(std::make_unique<DiscountedLearner>(grid.d, lambda, gamma,
                                                         mode, std::move(id)));
    }
  }
  return bank;
}

std::vector<CoverInterval> geometric_cover(long T) {
  if (T < 1) throw std::invalid_argument("geometric_cover: T must be >= 1");
  std::vector<CoverInterval> out;
  for (int i = 0; (1L << i) <= T; ++i) {
    const long len = 1L << i;
    for (long k = 0; k * len <= T - 1; ++k) {
      CoverInterval iv;
      iv.level = i;
      iv.k = k;
      iv.start = k * len;
      iv.end = std::min((k + 1) * len - 1, T - 1);
      out.push_back(iv);
    }
  }
  return out;
}

std::vector<CoverInterval> partition_interval(long s, long tau, long T) {
  if (T < 1) throw std::invalid_argument("partition_interval: T must be >= 1");
  if (s < 0 || tau < s || tau > T - 1)
    throw std::invalid_argument("partition_interval: need 0 <= s <= tau <= T-1");
  std::vector<CoverInterval> out;
  long p = s;
  while (p <= tau) {
    int i = 0;
    // Largest aligned block starting at p that stays inside [s, tau].
    while ((p % (1L << (i + 1))) == 0 && p + (1L << (i + 1)) - 1 <= tau) ++i;
    CoverInterval piece;
    piece.level = i;
    piece.k = p >> i;
    piece.start = p;
    piece.end = p + (1L << i) - 1;
    out.push_back(piece);
    p = piece.end + 1;
  }
  return out;
}

IntervalLearner::IntervalLearner(int dim, double lambda, double gamma,
                                 HintMode mode, CoverInterval iv, std::string id,
                                 LiveCounter* counter)
    : dim_(dim), lambda_(lambda), gamma_(gamma), mode_(mode), iv_(iv),
      id_(std::move(id)), counter_(counter) {
  if (gamma_ < 0.0 || gamma_ > 1.0)
    throw std::invalid_argument("IntervalLearner: gamma must lie in [0, 1]");
}

double IntervalLearner::begin_round(const Vec& x, const TrustRegion& region) {
  if (active() && gamma_ > 0.0) {
    if (!core_) {
      core_.emplace(dim_, lambda_, gamma_);
      if (counter_) {
        ++counter_->live;
        counter_->peak = std::max(counter_->peak, counter_->live);
      }
    }
    last_hint_ = mode_ == HintMode::external
                     ? region.y_ref
                     : self_confident_hint(*core_, x, region);
    last_pred_ = core_->begin_round(x, last_hint_).prediction;
  } else {
    // Outside the interval (or the greedy discount): echo the reference.
    last_hint_ = region.y_ref;
    last_pred_ = region.y_ref;
  }
  return last_pred_;
}

double IntervalLearner::end_round(double y) {
  const double loss = sq_loss(y, last_pred_);
  if (core_ && active()) core_->end_round(y);
  if (pos_ == iv_.end && core_) {
    core_.reset();
    if (counter_) --counter_->live;
  }
  ++pos_;
  return loss;
}

SaResult run_strongly_adaptive(const SaConfig& cfg, const Stream& stream,
                               const RoundObserver& observer) {
  if (static_cast<long>(stream.size()) != cfg.T)
    throw std::invalid_argument("run_strongly_adaptive: stream length != T");

  SaResult res;
  res.grid = build_grid(cfg.d, cfg.T, cfg.b);
  res.cover = geometric_cover(cfg.T);

  const long n_experts =
      static_cast<long>(res.grid.gammas.size()) * static_cast<long>(res.cover.size());
  if (n_experts > cfg.expert_cap) {
    std::ostringstream msg;
    msg << "run_strongly_adaptive: bank of " << n_experts
        << " experts exceeds the cap of " << cfg.expert_cap;
    throw std::invalid_argument(msg.str());
  }

  auto counter = std::make_unique<IntervalLearner::LiveCounter>();
  std::vector<std::unique_ptr<SubLearner>> bank;
  bank.reserve(static_cast<size_t>(n_experts));
  for (double gamma : res.grid.gammas) {
    for (const CoverInterval& iv : res.cover) {
      std::ostringstream id;
      id << "g=" << format_double(gamma) << "|i=[" << iv.start << "," << iv.end << "]";
      bank.push_back(std::make_unique<IntervalLearner>(
          cfg.d, cfg.lambda, gamma, cfg.mode, iv, id.str(), counter.get()));
      res.expert_ids.push_back(bank.back()->id());
    }
  }

  ClippedMetaRunner runner(std::move(bank), cfg.policy);
  res.rounds.reserve(stream.size());
  for (const StreamRecord& r : stream) {
    const MetaRound& row = runner.step(r.x, r.y);
    res.rounds.push_back(SlimRound{row.t, row.y_ref, row.radius_before,
                                   row.radius_after, row.aggregate_pred, row.y,
                                   row.meta_loss, row.alpha, row.beta});
    if (observer) observer(row);
  }
  res.peak_live_states = counter->peak;
  return res;
}

}  // namespace dvaw
