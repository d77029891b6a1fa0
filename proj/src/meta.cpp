#include "dvaw/meta.hpp"

#include <cmath>
#include <stdexcept>

namespace dvaw {

ExpertsState make_experts(int n) {
  if (n < 1) throw std::invalid_argument("need at least one expert");
  Vec p1 = Vec::Constant(n, 1.0 / n);
  ExpertsState s;
  s.n = n;
  s.p = p1;
  s.p1 = std::move(p1);
  return s;
}

ExpertsState make_experts(Vec p1) {
  const int n = static_cast<int>(p1.size());
  if (n < 1) throw std::invalid_argument("need at least one expert");
  if ((p1.array() <= 0.0).any())
    throw std::invalid_argument("prior entries must be positive");
  if (std::fabs(p1.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("prior must sum to 1");
  ExpertsState s;
  s.n = n;
  s.p = p1;
  s.p1 = std::move(p1);
  return s;
}

double beta_schedule(int t) {
  if (t < 0) throw std::invalid_argument("beta_schedule needs t >= 0");
  const double e = std::exp(1.0);
  const double l = std::log(e + t);
  return 1.0 / ((e + t) * l * l + 1.0);
}

Vec fixed_share_step(const Vec& p, const Vec& losses, double alpha, double beta,
                     const Vec& p1) {
  const auto n = p.size();
  if (losses.size() != n || p1.size() != n)
    throw std::invalid_argument("fixed_share_step: size mismatch");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must be finite and >= 0");
  if (!(beta >= 0.0) || !(beta <= 1.0))
    throw std::invalid_argument("beta must lie in [0, 1]");
  if (!losses.allFinite() || (losses.array() < 0.0).any())
    throw std::invalid_argument("losses must be finite and >= 0");

  Vec lq(n);
  for (Eigen::Index i = 0; i < n; ++i)
    lq(i) = std::log(p(i)) - alpha * losses(i);
  const double m = lq.maxCoeff();
  if (!std::isfinite(m))
    throw std::invalid_argument("fixed_share_step: all weights vanished");
  Vec q = (lq.array() - m).exp();
  q /= q.sum();
  return (1.0 - beta) * q + beta * p1;
}

ExpertsState fixed_share_update(const ExpertsState& s, const Vec& losses) {
  if (losses.size() != s.n)
    throw std::invalid_argument("fixed_share_update: size mismatch");
  ExpertsState out = s;
  out.max_loss_seen = std::max(s.max_loss_seen, losses.maxCoeff());
  out.last_alpha = 1.0 / (2.0 * std::max(out.max_loss_seen, kAlphaLossFloor));
  out.round = s.round + 1;
  out.last_beta = beta_schedule(out.round);
  out.p = fixed_share_step(s.p, losses, out.last_alpha, out.last_beta, s.p1);
  return out;
}

double aggregate(const Vec& p, const Vec& preds) {
  if (p.size() != preds.size())
    throw std::invalid_argument("aggregate: size mismatch");
  if (std::fabs(p.sum() - 1.0) > 1e-6)
    throw std::invalid_argument("aggregate: weights are not a simplex point");
  return p.dot(preds);
}

ClippedMetaRunner::ClippedMetaRunner(std::vector<std::unique_ptr<SubLearner>> experts,
                                     RefPolicy policy, std::optional<Vec> prior)
    : experts_(std::move(experts)), policy_(std::move(policy)),
      state_(prior ? make_experts(std::move(*prior))
                   : make_experts(static_cast<int>(experts_.size()))) {
  if (experts_.empty()) throw std::invalid_argument("empty expert pool");
  if (state_.n != static_cast<int>(experts_.size()))
    throw std::invalid_argument("prior size does not match expert pool");
  const size_t n = experts_.size();
  row_.raw.resize(n);
  row_.clipped.resize(n);
  row_.weights.resize(n);
  row_.clipped_losses.resize(n);
  row_.hints.resize(n);
}

const MetaRound& ClippedMetaRunner::step(const Vec& x, double y) {
  if (!std::isfinite(y)) throw std::invalid_argument("label is not finite");
  const int t = round_ + 1;
  const double y_ref = policy_.ref_for(t, last_label_);
  const TrustRegion region{y_ref, m_};
  const size_t n = experts_.size();

  for (size_t i = 0; i < n; ++i) {
    row_.raw[i] = experts_[i]->begin_round(x, region);
    row_.clipped[i] = clip(row_.raw[i], region);
    row_.weights[i] = state_.p(static_cast<Eigen::Index>(i));
    row_.hints[i] = experts_[i]->last_hint();
  }
  Eigen::Map<const Vec> clipped(row_.clipped.data(), static_cast<Eigen::Index>(n));
  const double yhat = aggregate(state_.p, clipped);

  Vec losses(n);
  for (size_t i = 0; i < n; ++i) {
    losses(static_cast<Eigen::Index>(i)) = sq_loss(y, row_.clipped[i]);
    row_.clipped_losses[i] = losses(static_cast<Eigen::Index>(i));
  }
  for (auto& e : experts_) e->end_round(y);

  const TrustRegion grown = update_radius(region, y);
  state_ = fixed_share_update(state_, losses);

  row_.t = t;
  row_.y_ref = y_ref;
  row_.radius_before = region.radius;
  row_.radius_after = grown.radius;
  row_.aggregate_pred = yhat;
  row_.y = y;
  row_.meta_loss = sq_loss(y, yhat);
  row_.alpha = state_.last_alpha;
  row_.beta = state_.last_beta;

  m_ = grown.radius;
  last_label_ = y;
  round_ = t;
  return row_;
}

std::vector<MetaRound> run_clipped_meta(
    std::vector<std::unique_ptr<SubLearner>> experts, RefPolicy policy,
    const Stream& stream, std::optional<Vec> prior) {
  ClippedMetaRunner runner(std::move(experts), std::move(policy), std::move(prior));
  std::vector<MetaRound> rows;
  rows.reserve(stream.size());
  for (const StreamRecord& r : stream) rows.push_back(runner.step(r.x, r.y));
  return rows;
}

}  // namespace dvaw
