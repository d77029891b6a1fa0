#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dvaw/forecaster.hpp"
#include "dvaw/hinting.hpp"
#include "dvaw/rng.hpp"

using namespace dvaw;

namespace {

Vec scalar_vec(double v) { return Vec::Constant(1, v); }

Vec random_vec(Rng& rng, int d) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.next_gaussian();
  return v;
}

// One completed round chosen so that probing with x = 1 gives a leverage of
// exactly 0.5 and a carry of exactly 1.0 (recipe and fixed-point values
// frozen from tests/oracles/hint_fixed_points.py).
DiscountState half_leverage_state() {
  DiscountState s(1, 1.0, 0.5);
  const double x1 = std::sqrt(1.5);
  s.begin_round(scalar_vec(x1), 0.0);
  s.end_round(4.0 / x1);
  return s;
}

}  // namespace

TEST_CASE("clipping clamps values into the trust region") {
  CHECK(clip(5.0, TrustRegion{0.0, 1.0}) == 1.0);
  CHECK(clip(0.3, TrustRegion{0.0, 1.0}) == 0.3);
  CHECK(clip(-7.0, TrustRegion{2.0, 3.0}) == -1.0);
  CHECK(clip(2.5, TrustRegion{2.5, 0.0}) == 2.5);
  CHECK_THROWS_AS(clip(0.0, TrustRegion{0.0, -1.0}), std::invalid_argument);
}

TEST_CASE("trust region bounds come from center and radius") {
  const TrustRegion r{2.0, 3.0};
  CHECK(r.lo() == -1.0);
  CHECK(r.hi() == 5.0);
}

TEST_CASE("radius growth folds in the worst deviation seen") {
  CHECK(update_radius(TrustRegion{1.0, 0.0}, 3.0).radius == 2.0);
  CHECK(update_radius(TrustRegion{1.0, 0.0}, 3.0).y_ref == 1.0);
  CHECK(update_radius(TrustRegion{1.0, 5.0}, 3.0).radius == 5.0);

  // Reference fold frozen from tests/oracles/hint_fixed_points.py:
  // labels (1, -1, 4) against center 0 give radii (1, 1, 4).
  const double labels[] = {1.0, -1.0, 4.0};
  const double expected[] = {1.0, 1.0, 4.0};
  double m = 0.0;
  for (int i = 0; i < 3; ++i) {
    m = update_radius(TrustRegion{0.0, m}, labels[i]).radius;
    CHECK(m == expected[i]);
  }
}

TEST_CASE("reference policies pick the region center") {
  const RefPolicy zero = RefPolicy::zero();
  CHECK(zero.ref_for(1, 3.3) == 0.0);
  CHECK(zero.ref_for(7, -2.0) == 0.0);

  const RefPolicy prev = RefPolicy::previous_label();
  CHECK(prev.ref_for(1, 123.0) == 0.0);
  CHECK(prev.ref_for(2, 3.3) == 3.3);

  const RefPolicy ext = RefPolicy::external({1.0, 2.0, 3.0});
  CHECK(ext.ref_for(1, 0.0) == 1.0);
  CHECK(ext.ref_for(3, 0.0) == 3.0);
  CHECK_THROWS_AS(ext.ref_for(4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(zero.ref_for(0, 0.0), std::invalid_argument);
}

TEST_CASE("self-consistent hint solves the clipped affine fixed point") {
  // Fixed points frozen from tests/oracles/hint_fixed_points.py for the
  // map h -> clip(0.5 * h + 1, region).
  DiscountState s = half_leverage_state();
  const Vec probe = scalar_vec(1.0);

  const Projection p = s.project(probe);
  CHECK(p.a == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.c == doctest::Approx(1.0).epsilon(1e-12));

  const double wide = self_confident_hint(s, probe, TrustRegion{0.0, 10.0});
  CHECK(wide == doctest::Approx(2.0).epsilon(1e-12));

  const double unit = self_confident_hint(s, probe, TrustRegion{0.0, 1.0});
  CHECK(unit == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate feature pins the hint to the clipped carry") {
  DiscountState s = half_leverage_state();
  const double h = self_confident_hint(s, Vec::Zero(1), TrustRegion{5.0, 1.0});
  CHECK(h == 4.0);  // clip(0, [4, 6])
}

TEST_CASE("hints are fixed points of their own clipped update") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_below(4));
    DiscountState s(d, 0.5 + rng.next_unit(), 0.3 + 0.69 * rng.next_unit());
    const int warm = 1 + static_cast<int>(rng.next_below(8));
    for (int t = 0; t < warm; ++t) {
      s.begin_round(random_vec(rng, d), 0.0);
      s.end_round(rng.next_gaussian());
    }
    const Vec x = random_vec(rng, d);
    const TrustRegion region{rng.next_gaussian(), 0.1 + 3.0 * rng.next_unit()};
    const double h = self_confident_hint(s, x, region);
    const Projection p = s.project(x);
    CHECK(std::fabs(h - clip(p.a * h + p.c, region)) <= 1e-10);
  }
}

TEST_CASE("interior hints reproduce the forecaster's own prediction") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_below(3));
    DiscountState s(d, 1.0, 0.5 + 0.49 * rng.next_unit());
    for (int t = 0; t < 5; ++t) {
      s.begin_round(random_vec(rng, d), 0.0);
      s.end_round(rng.next_gaussian());
    }
    const Vec x = random_vec(rng, d);
    const TrustRegion region{0.0, 1e6};  // wide enough to keep the point interior
    const double h = self_confident_hint(s, x, region);
    const RoundOutput out = s.begin_round(x, h);
    CHECK(std::fabs(out.prediction - h) <= 1e-10 * std::max(1.0, std::fabs(h)));
    s.end_round(rng.next_gaussian());
  }
}

TEST_CASE("lagged variant clips the stale prediction") {
  DiscountState s = half_leverage_state();
  const Vec x = scalar_vec(2.0);
  const TrustRegion region{0.0, 1.5};
  const double expected = clip(x.dot(s.snapshot().weights), region);
  CHECK(self_confident_hint(s, x, region, true) == expected);
}

TEST_CASE("clipped predictions obey the trust-region loss ceiling") {
  Rng rng(47);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_below(3));
    DiscountState s(d, 1.0, 0.4 + 0.6 * rng.next_unit());
    double m = 0.0;
    double prev_label = 0.0;
    const int T = 30;
    for (int t = 1; t <= T; ++t) {
      const double y_ref = t == 1 ? 0.0 : prev_label;
      const TrustRegion region{y_ref, m};
      const Vec x = random_vec(rng, d);
      const double hint = self_confident_hint(s, x, region);
      const double raw = s.begin_round(x, hint).prediction;
      const double clipped = clip(raw, region);
      const double y = 2.0 * rng.next_gaussian();
      s.end_round(y);
      const double m_next = update_radius(region, y).radius;
      const double lhs = (y - clipped) * (y - clipped);
      const double ceil_wide = 4.0 * m_next * m_next;
      const double ceil_raw = (y - raw) * (y - raw) + m_next * m_next - m * m;
      CHECK(lhs <= std::min(ceil_wide, ceil_raw) + 1e-9);
      m = m_next;
      prev_label = y;
    }
  }
}

TEST_CASE("radius is the running maximum of reference deviations") {
  Rng rng(8);
  double m = 0.0;
  double expect = 0.0;
  for (int t = 0; t < 50; ++t) {
    const double y = 3.0 * rng.next_gaussian();
    const double ref = rng.next_gaussian();
    const double folded = update_radius(TrustRegion{ref, m}, y).radius;
    expect = std::max(expect, std::fabs(y - ref));
    CHECK(folded >= m);  // never shrinks
    m = folded;
  }
  CHECK(m >= expect - 1e-15);
}
