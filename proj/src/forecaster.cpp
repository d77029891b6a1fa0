#include "dvaw/forecaster.hpp"

#include <cmath>
#include <stdexcept>

namespace dvaw {

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }

void check_feature(const Vec& x, int dim) {
  if (x.size() != dim)
    throw std::invalid_argument("feature dimension mismatch");
  if (!all_finite(x)) throw std::invalid_argument("feature has non-finite entries");
}

void check_scalar(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
}

}  // namespace

DiscountState::DiscountState(int dim, double lambda, double gamma)
    : dim_(dim), lambda_(lambda), gamma_(gamma) {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lambda must be positive");
  if (!(gamma > 0.0) || !(gamma <= 1.0))
    throw std::invalid_argument("gamma must lie in (0, 1]");
  sigma_ = lambda * Mat::Identity(dim, dim);
  theta_ = Vec::Zero(dim);
  last_weights_ = Vec::Zero(dim);
}

Eigen::LLT<Mat> DiscountState::factor(Mat& m) const {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  // One retry with a small diagonal bump, then give up. This should never
  // fire for sane inputs (the matrix is gamma^t * lambda * I plus PSD terms).
  const double jitter = 1e-10 * m.trace() / static_cast<double>(dim_);
  m.diagonal().array() += jitter;
  ++jitter_events_;
  llt.compute(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("covariance factorization failed after jitter retry");
  return llt;
}

RoundOutput DiscountState::begin_round(const Vec& x, double hint) {
  if (mid_round_) throw std::logic_error("begin_round called twice without end_round");
  check_feature(x, dim_);
  check_scalar(hint, "hint");

  sigma_ = gamma_ * sigma_ + x * x.transpose();
  Eigen::LLT<Mat> llt = factor(sigma_);

  const Vec rhs = hint * x + gamma_ * theta_;
  Vec w = llt.solve(rhs);
  const double pred = x.dot(w);

  mid_round_ = true;
  x_cur_ = x;
  pred_cur_ = pred;
  last_weights_ = w;
  return RoundOutput{std::move(w), pred, hint};
}

double DiscountState::end_round(double y) {
  if (!mid_round_) throw std::logic_error("end_round called without a pending begin_round");
  check_scalar(y, "label");
  const double loss = sq_loss(y, pred_cur_);
  theta_ = y * x_cur_ + gamma_ * theta_;
  ++round_;
  mid_round_ = false;
  return loss;
}

Projection DiscountState::project(const Vec& x) const {
  if (mid_round_) throw std::logic_error("project called mid-round");
  check_feature(x, dim_);
  Mat m = gamma_ * sigma_ + x * x.transpose();
  Eigen::LLT<Mat> llt = factor(m);
  const double a = x.dot(llt.solve(x));
  const double c = gamma_ * x.dot(llt.solve(theta_));
  return Projection{a, c};
}

StateSnapshot DiscountState::snapshot() const {
  if (mid_round_) throw std::logic_error("snapshot taken mid-round");
  return StateSnapshot{dim_, lambda_, gamma_, sigma_, last_weights_, round_};
}

Vec ftrl_solve(const Stream& history, double gamma, double lambda,
               const Vec& x_now, double hint) {
  if (!(gamma > 0.0) || !(gamma <= 1.0))
    throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const int d = static_cast<int>(x_now.size());
  if (d < 1) throw std::invalid_argument("empty feature vector");
  check_scalar(hint, "hint");

  const int t = static_cast<int>(history.size()) + 1;
  Mat a = std::pow(gamma, t) * lambda * Mat::Identity(d, d);
  Vec b = hint * x_now;
  a += x_now * x_now.transpose();
  for (int s = 1; s < t; ++s) {
    const StreamRecord& r = history[static_cast<size_t>(s - 1)];
    check_feature(r.x, d);
    const double wgt = std::pow(gamma, t - s);
    a += wgt * r.x * r.x.transpose();
    b += wgt * r.y * r.x;
  }
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) {
    a.diagonal().array() += 1e-10 * a.trace() / d;
    llt.compute(a);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("ftrl_solve: factorization failed");
  }
  return llt.solve(b);
}

Vec md_step(const StateSnapshot& snap, const std::optional<PrevRound>& prev,
            const Vec& x_now, double hint) {
  const int d = snap.dim;
  check_feature(x_now, d);
  check_scalar(hint, "hint");
  if (snap.round == 0 && prev.has_value())
    throw std::invalid_argument("md_step: previous round supplied before any round ran");
  if (snap.round > 0 && !prev.has_value())
    throw std::invalid_argument("md_step: previous round missing");

  Mat a = snap.gamma * snap.sigma + x_now * x_now.transpose();
  Vec b = hint * x_now + snap.gamma * (snap.sigma * snap.weights);
  if (prev) {
    check_feature(prev->record.x, d);
    b += snap.gamma * (prev->record.y - prev->hint) * prev->record.x;
  }
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) {
    a.diagonal().array() += 1e-10 * a.trace() / d;
    llt.compute(a);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("md_step: factorization failed");
  }
  return llt.solve(b);
}

}  // namespace dvaw
