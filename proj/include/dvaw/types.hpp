#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dvaw {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One observed round: feature vector and label.
struct StreamRecord {
  Vec x;
  double y = 0.0;
};

using Stream = std::vector<StreamRecord>;

// Comparator sequence u_1..u_T (one d-vector per round).
using Comparator = std::vector<Vec>;

// Squared-error loss of a scalar prediction.
inline double sq_loss(double y, double pred) {
  const double r = y - pred;
  return 0.5 * r * r;
}

// Loss of a linear predictor w on round record r.
inline double lin_loss(const StreamRecord& r, const Vec& w) {
  return sq_loss(r.y, r.x.dot(w));
}

}  // namespace dvaw
