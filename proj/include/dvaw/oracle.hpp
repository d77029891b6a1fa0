#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dvaw/types.hpp"

namespace dvaw {

// One checkable inequality: measured left side, certified right side, their
// gap, and the named summands of the right side (in a stable order).
struct BoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  std::vector<std::pair<std::string, double>> terms;
};

// Discount-weighted variability of a comparator path: for each transition
// t = 1..T-1, the positive parts of per-loss differences between u_{t+1} and
// u_t, averaged with weights gamma^{t-s} over s = 0..t and normalized. The
// s = 0 slot is the ridge reference loss lambda/2 |w|^2. gamma = 0 keeps only
// the s = t slot (the limit of the weights); gamma = 1 is the plain average.
double variability(const Stream& stream, const Comparator& u, double gamma,
                   double lambda);

// Largest per-transition jump, summed: sum_t max_s [loss_s(u_{t+1}) -
// loss_s(u_t)]_+ over observed losses s = 1..T. An upper proxy for
// variability at any discount once the ridge slot is included; the overload
// with lambda adds that slot to the max.
double worst_case_variability(const Stream& stream, const Comparator& u);
double worst_case_variability(const Stream& stream, const Comparator& u,
                              double lambda);

// Running discounted objective
//   F_t(w) = gamma^t * lambda/2 |w|^2 + sum_{s=1}^t gamma^{t-s} loss_s(w).
double discounted_objective(const Stream& stream, const Vec& w, int t,
                            double gamma, double lambda);

// sum_t [ (y_t - pred_t)^2 - (y_t - <x_t, u_t>)^2 ] / 2. Throws on length
// mismatch.
double dynamic_regret(const std::vector<double>& predictions,
                      const Stream& stream, const Comparator& u);

// The discount that balances the hint-residual mass V = d/2 sum (y_t -
// hint_t)^2 against the comparator variability: the root of
//   gamma = sqrt(V) / (sqrt(V) + sqrt(P(gamma))),
// found by a 256-cell scan plus bisection. V = 0 gives 0; a still comparator
// gives 1. The residual of the returned root is below 1e-6.
double solve_gamma_star(const Stream& stream, const Comparator& u,
                        double lambda, const std::vector<double>& hints);

// Same fixed point with V replaced by d * sum_t loss_t(u_t) (the comparator's
// own loss mass).
double solve_gamma_smallloss(const Stream& stream, const Comparator& u,
                             double lambda);

// Certified regret ceiling for the discounted forecaster run with the given
// hints against the comparator path. Terms, in order:
//   ridge_term       gamma * lambda/2 * |u_1|^2
//   logdet_term      d/2 * max_t (y_t - hint_t)^2
//                        * ln(1 + sum_t gamma^{T-t}|x_t|^2 / (lambda d))
//   variability_term gamma * sum_{t<T} [F_t(u_{t+1}) - F_t(u_t)]
//   stability_term   d/2 * ln(1/gamma) * sum_t (y_t - hint_t)^2
// When predictions are supplied, lhs is their measured dynamic regret.
BoundReport bound_general_dvaw(const Stream& stream, const Comparator& u,
                               double gamma, double lambda,
                               const std::vector<double>& hints,
                               const std::vector<double>& predictions = {});

// Interval overhead of the reweighted pool:
//   (2 ln(1/(beta_final * p1j)) + 1) / alpha_final.
double bound_fixed_share(double alpha_final, double beta_final, double p1j);

// Hard instance for dynamic regret: cycling basis features, labels drawn
// uniformly from {-Y*sigma, +Y*sigma} with sigma = sqrt(dP / (2TY^2)), and a
// blockwise comparator that reproduces every label exactly. Requires
// d*P <= 2*T*Y^2 (sigma <= 1).
struct AdversarialInstance {
  Stream stream;
  Comparator comparator;
  double sigma = 0.0;
};
AdversarialInstance adversarial_stream(int d, long T, double Y, double P,
                                       std::uint64_t seed);

}  // namespace dvaw
