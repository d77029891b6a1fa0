#pragma once

#include <vector>

#include "dvaw/forecaster.hpp"
#include "dvaw/types.hpp"

namespace dvaw {

// Closed interval [y_ref - radius, y_ref + radius] of plausible labels.
struct TrustRegion {
  double y_ref = 0.0;
  double radius = 0.0;

  double lo() const { return y_ref - radius; }
  double hi() const { return y_ref + radius; }
};

// Project v onto the region.
double clip(double v, const TrustRegion& region);

// Fold one observed label into the region: the radius grows to cover
// |y - y_ref|; the reference point is left alone (the caller re-centres it
// each round).
TrustRegion update_radius(const TrustRegion& region, double y);

// Where the per-round reference point comes from.
enum class RefKind { zero, previous_label, external };

class RefPolicy {
 public:
  static RefPolicy zero() { return RefPolicy(RefKind::zero, {}); }
  static RefPolicy previous_label() { return RefPolicy(RefKind::previous_label, {}); }
  static RefPolicy external(std::vector<double> values) {
    return RefPolicy(RefKind::external, std::move(values));
  }

  // Reference for 1-indexed round t. previous_label yields 0 at t = 1 and
  // the last observed label afterwards; external reads values[t-1] and
  // throws std::invalid_argument when the sequence is too short.
  double ref_for(int t, double prev_label) const;

  RefKind kind() const { return kind_; }

 private:
  RefPolicy(RefKind k, std::vector<double> v) : kind_(k), values_(std::move(v)) {}
  RefKind kind_;
  std::vector<double> values_;
};

// The label hint that agrees with the forecaster's own clipped prediction:
// the unique fixed point of  h -> clip(a*h + c, region),  where (a, c) is the
// forecaster's leverage/carry pair at x (a in [0,1) makes the map a
// contraction). Interior fixed point c/(1-a) when it lies in the region,
// otherwise the nearer endpoint.
//
// `lagged` is a cheaper heuristic escape hatch: clip the prediction the
// *previous* weights would make at x. No regret statement is attached to it.
double self_confident_hint(const DiscountState& state, const Vec& x,
                           const TrustRegion& region, bool lagged = false);

}  // namespace dvaw
