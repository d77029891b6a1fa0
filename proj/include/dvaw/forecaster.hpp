#pragma once

#include <optional>

#include "dvaw/types.hpp"

namespace dvaw {

// Output of one prediction step.
struct RoundOutput {
  Vec weights;       // w_t actually used this round
  double prediction; // <x_t, w_t>
  double hint_used;  // the label hint the step was given
};

// Leverage decomposition of the prediction at the pending feature x:
// prediction = a * hint + c with a = x' Sigma_t^{-1} x in [0,1) and
// c = gamma * x' Sigma_t^{-1} theta_t, where Sigma_t already includes x.
struct Projection {
  double a;
  double c;
};

// Frozen copy of the recursive state, as it stands between rounds.
struct StateSnapshot {
  int dim;
  double lambda;
  double gamma;
  Mat sigma;    // Sigma_{t-1}
  Vec weights;  // w_{t-1} (zero before the first round)
  int round;    // completed rounds
};

// Recursive discounted ridge forecaster.
//
// State: Sigma_0 = lambda*I, theta_1 = 0. Round t:
//   Sigma_t = x_t x_t' + gamma * Sigma_{t-1}
//   w_t     = Sigma_t^{-1} (hint_t * x_t + gamma * theta_t)
//   predict <x_t, w_t>, observe y_t, loss = (y_t - <x_t,w_t>)^2 / 2
//   theta_{t+1} = y_t x_t + gamma * theta_t
//
// Rounds are two-phase: begin_round(x, hint) -> end_round(y). Calling them
// out of order throws std::logic_error.
class DiscountState {
 public:
  // Throws std::invalid_argument unless dim >= 1, lambda > 0, gamma in (0,1].
  DiscountState(int dim, double lambda, double gamma);

  // Phase one: absorb x into Sigma, solve for w_t, return the prediction.
  RoundOutput begin_round(const Vec& x, double hint);

  // Phase two: absorb the label, return this round's loss.
  double end_round(double y);

  // Leverage/carry pair at x for the *next* round (does not mutate state;
  // uses the same discount-then-rank-one update and factorization policy as
  // begin_round). Valid only between rounds.
  Projection project(const Vec& x) const;

  StateSnapshot snapshot() const;

  int dim() const { return dim_; }
  double lambda_reg() const { return lambda_; }
  double gamma() const { return gamma_; }
  const Mat& sigma() const { return sigma_; }
  const Vec& theta() const { return theta_; }
  int round() const { return round_; }
  bool mid_round() const { return mid_round_; }
  // Number of times a failed factorization was retried with added jitter.
  int jitter_events() const { return jitter_events_; }

 private:
  int dim_;
  double lambda_;
  double gamma_;
  Mat sigma_;
  Vec theta_;
  int round_ = 0;
  bool mid_round_ = false;
  Vec last_weights_;
  Vec x_cur_;
  double pred_cur_ = 0.0;
  mutable int jitter_events_ = 0;

  Eigen::LLT<Mat> factor(Mat& m) const;
};

// Exact minimizer of
//   (hint - <x_now, w>)^2/2
//   + gamma * sum_{s=0}^{t-1} gamma^{t-1-s} loss_s(w)
// over the full history (t = |history| + 1), where loss_0(w) = lambda/2 |w|^2
// and loss_s(w) = (y_s - <x_s, w>)^2 / 2. Batch counterpart of begin_round.
Vec ftrl_solve(const Stream& history, double gamma, double lambda,
               const Vec& x_now, double hint);

// One mirror-descent step from the previous round's state:
//   argmin_w [gamma*loss_{t-1} - gamma*hinted_{t-1} + hinted_t](w)
//            + gamma * D(w | w_{t-1})
// with the Bregman divergence of w -> |w|^2_{Sigma_{t-1}} / 2. For the first
// round (snapshot.round == 0, prev empty) this is
//   argmin_w hinted_1(w) + gamma * D(w | 0),
// which coincides with ftrl_solve on an empty history.
struct PrevRound {
  StreamRecord record;
  double hint;
};
Vec md_step(const StateSnapshot& snap, const std::optional<PrevRound>& prev,
            const Vec& x_now, double hint);

}  // namespace dvaw
