#include "dvaw/hinting.hpp"

#include <cmath>
#include <stdexcept>

namespace dvaw {

double clip(double v, const TrustRegion& region) {
  if (!(region.radius >= 0.0))
    throw std::invalid_argument("trust region radius must be >= 0");
  return std::min(std::max(v, region.lo()), region.hi());
}

TrustRegion update_radius(const TrustRegion& region, double y) {
  if (!std::isfinite(y)) throw std::invalid_argument("label is not finite");
  return TrustRegion{region.y_ref, std::max(region.radius, std::fabs(y - region.y_ref))};
}

double RefPolicy::ref_for(int t, double prev_label) const {
  if (t < 1) throw std::invalid_argument("rounds are 1-indexed");
  switch (kind_) {
    case RefKind::zero:
      return 0.0;
    case RefKind::previous_label:
      return t == 1 ? 0.0 : prev_label;
    case RefKind::external:
      if (static_cast<size_t>(t) > values_.size())
        throw std::invalid_argument("external reference sequence too short");
      return values_[static_cast<size_t>(t - 1)];
  }
  throw std::logic_error("unreachable");
}

double self_confident_hint(const DiscountState& state, const Vec& x,
                           const TrustRegion& region, bool lagged) {
  if (lagged) {
    const StateSnapshot snap = state.snapshot();
    return clip(x.dot(snap.weights), region);
  }
  const Projection p = state.project(x);
  const double denom = 1.0 - p.a;
  // a < 1 holds in exact arithmetic; guard the degenerate float case by
  // sending the interior point to the boundary the carry points at.
  double interior;
  if (denom <= 0.0) {
    interior = p.c >= 0.0 ? region.hi() : region.lo();
  } else {
    interior = p.c / denom;
  }
  if (interior >= region.lo() && interior <= region.hi()) return interior;
  return interior > region.hi() ? region.hi() : region.lo();
}

}  // namespace dvaw
