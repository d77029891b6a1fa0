#include "dvaw/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "dvaw/rng.hpp"

namespace dvaw {

namespace {

void check_pair(const Stream& stream, const Comparator& u) {
  if (stream.empty()) throw std::invalid_argument("empty stream");
  if (u.size() != stream.size())
    throw std::invalid_argument("comparator length != stream length");
}

double ridge_ref_loss(const Vec& w, double lambda) {
  return 0.5 * lambda * w.squaredNorm();
}

double pos(double v) { return v > 0.0 ? v : 0.0; }

// Positive parts of the loss differences along one transition, indexed
// s = 0 (ridge slot) .. t (observed losses).
struct TransitionTable {
  // brackets[t-1][s] = [loss_s(u_{t+1}) - loss_s(u_t)]_+ for t = 1..T-1.
  std::vector<std::vector<double>> brackets;

  TransitionTable(const Stream& stream, const Comparator& u, double lambda) {
    const size_t T = stream.size();
    if (T < 2) return;
    brackets.resize(T - 1);
    for (size_t t = 1; t < T; ++t) {
      auto& row = brackets[t - 1];
      row.resize(t + 1);
      row[0] = pos(ridge_ref_loss(u[t], lambda) - ridge_ref_loss(u[t - 1], lambda));
      for (size_t s = 1; s <= t; ++s)
        row[s] = pos(lin_loss(stream[s - 1], u[t]) - lin_loss(stream[s - 1], u[t - 1]));
    }
  }

  double eval(double gamma) const {
    double total = 0.0;
    for (const auto& row : brackets) {
      const size_t t = row.size() - 1;
      if (gamma == 0.0) {
        total += row[t];
        continue;
      }
      double num = 0.0, den = 0.0, w = 1.0;
      for (size_t s = t + 1; s-- > 0;) {  // s = t down to 0, weight gamma^{t-s}
        num += w * row[s];
        den += w;
        w *= gamma;
      }
      total += num / den;
    }
    return total;
  }
};

}  // namespace

double variability(const Stream& stream, const Comparator& u, double gamma,
                   double lambda) {
  check_pair(stream, u);
  if (!(gamma >= 0.0) || !(gamma <= 1.0))
    throw std::invalid_argument("variability: gamma must lie in [0, 1]");
  if (!(lambda > 0.0)) throw std::invalid_argument("variability: lambda must be positive");
  return TransitionTable(stream, u, lambda).eval(gamma);
}

double worst_case_variability(const Stream& stream, const Comparator& u) {
  check_pair(stream, u);
  const size_t T = stream.size();
  double total = 0.0;
  for (size_t t = 1; t < T; ++t) {
    double worst = 0.0;
    for (size_t s = 1; s <= T; ++s)
      worst = std::max(
          worst, pos(lin_loss(stream[s - 1], u[t]) - lin_loss(stream[s - 1], u[t - 1])));
    total += worst;
  }
  return total;
}

double worst_case_variability(const Stream& stream, const Comparator& u,
                              double lambda) {
  check_pair(stream, u);
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const size_t T = stream.size();
  double total = 0.0;
  for (size_t t = 1; t < T; ++t) {
    double worst = pos(ridge_ref_loss(u[t], lambda) - ridge_ref_loss(u[t - 1], lambda));
    for (size_t s = 1; s <= T; ++s)
      worst = std::max(
          worst, pos(lin_loss(stream[s - 1], u[t]) - lin_loss(stream[s - 1], u[t - 1])));
    total += worst;
  }
  return total;
}

double discounted_objective(const Stream& stream, const Vec& w, int t,
                            double gamma, double lambda) {
  if (t < 0 || static_cast<size_t>(t) > stream.size())
    throw std::invalid_argument("discounted_objective: t out of range");
  if (!(gamma > 0.0) || !(gamma <= 1.0))
    throw std::invalid_argument("discounted_objective: gamma must lie in (0, 1]");
  if (!(lambda > 0.0))
    throw std::invalid_argument("discounted_objective: lambda must be positive");
  double total = std::pow(gamma, t) * ridge_ref_loss(w, lambda);
  double wgt = 1.0;
  for (int s = t; s >= 1; --s) {  // weight gamma^{t-s}
    total += wgt * lin_loss(stream[static_cast<size_t>(s - 1)], w);
    wgt *= gamma;
  }
  return total;
}

double dynamic_regret(const std::vector<double>& predictions,
                      const Stream& stream, const Comparator& u) {
  check_pair(stream, u);
  if (predictions.size() != stream.size())
    throw std::invalid_argument("dynamic_regret: prediction length != stream length");
  double total = 0.0;
  for (size_t t = 0; t < stream.size(); ++t)
    total += sq_loss(stream[t].y, predictions[t]) - lin_loss(stream[t], u[t]);
  return total;
}

namespace {

// Root of g(gamma) = gamma*(sqrt(V) + sqrt(P(gamma))) - sqrt(V) on [0, 1].
double balance_discount(double V, const TransitionTable& table) {
  if (V <= 0.0) return 0.0;
  const double sv = std::sqrt(V);
  auto g = [&](double gamma) {
    return gamma * (sv + std::sqrt(table.eval(gamma))) - sv;
  };
  const int cells = 256;
  double lo = 0.0, hi = 1.0;
  double glo = g(0.0);
  for (int k = 1; k <= cells; ++k) {
    const double x = static_cast<double>(k) / cells;
    const double gx = g(x);
    if (glo <= 0.0 && gx >= 0.0) {
      lo = static_cast<double>(k - 1) / cells;
      hi = x;
      break;
    }
    glo = gx;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) <= 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double solve_gamma_star(const Stream& stream, const Comparator& u,
                        double lambda, const std::vector<double>& hints) {
  check_pair(stream, u);
  if (hints.size() != stream.size())
    throw std::invalid_argument("solve_gamma_star: hint length != stream length");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double d = static_cast<double>(stream[0].x.size());
  double V = 0.0;
  for (size_t t = 0; t < stream.size(); ++t) {
    const double r = stream[t].y - hints[t];
    V += r * r;
  }
  V *= 0.5 * d;
  return balance_discount(V, TransitionTable(stream, u, lambda));
}

double solve_gamma_smallloss(const Stream& stream, const Comparator& u,
                             double lambda) {
  check_pair(stream, u);
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double d = static_cast<double>(stream[0].x.size());
  double V = 0.0;
  for (size_t t = 0; t < stream.size(); ++t) V += lin_loss(stream[t], u[t]);
  V *= d;
  return balance_discount(V, TransitionTable(stream, u, lambda));
}

BoundReport bound_general_dvaw(const Stream& stream, const Comparator& u,
                               double gamma, double lambda,
                               const std::vector<double>& hints,
                               const std::vector<double>& predictions) {
  check_pair(stream, u);
  if (hints.size() != stream.size())
    throw std::invalid_argument("bound_general_dvaw: hint length != stream length");
  if (!(gamma > 0.0) || !(gamma <= 1.0))
    throw std::invalid_argument("bound_general_dvaw: gamma must lie in (0, 1]");
  if (!(lambda > 0.0))
    throw std::invalid_argument("bound_general_dvaw: lambda must be positive");

  const size_t T = stream.size();
  const double d = static_cast<double>(stream[0].x.size());

  const double ridge = gamma * 0.5 * lambda * u[0].squaredNorm();

  double max_res2 = 0.0, sum_res2 = 0.0, energy = 0.0;
  double wgt = 1.0;  // gamma^{T-t}, walking t = T down to 1
  for (size_t t = T; t >= 1; --t) {
    const double r = stream[t - 1].y - hints[t - 1];
    max_res2 = std::max(max_res2, r * r);
    sum_res2 += r * r;
    energy += wgt * stream[t - 1].x.squaredNorm();
    wgt *= gamma;
  }
  const double logdet = 0.5 * d * max_res2 * std::log1p(energy / (lambda * d));

  double drift = 0.0;
  for (size_t t = 1; t < T; ++t)
    drift += discounted_objective(stream, u[t], static_cast<int>(t), gamma, lambda) -
             discounted_objective(stream, u[t - 1], static_cast<int>(t), gamma, lambda);
  drift *= gamma;

  const double stability = 0.5 * d * std::log(1.0 / gamma) * sum_res2;

  BoundReport rep;
  rep.terms = {{"ridge_term", ridge},
               {"logdet_term", logdet},
               {"variability_term", drift},
               {"stability_term", stability}};
  rep.rhs = ridge + logdet + drift + stability;
  rep.lhs = predictions.empty() ? 0.0 : dynamic_regret(predictions, stream, u);
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

double bound_fixed_share(double alpha_final, double beta_final, double p1j) {
  if (!(alpha_final > 0.0))
    throw std::invalid_argument("bound_fixed_share: alpha must be positive");
  if (!(beta_final > 0.0) || !(beta_final <= 1.0))
    throw std::invalid_argument("bound_fixed_share: beta must lie in (0, 1]");
  if (!(p1j > 0.0) || !(p1j <= 1.0))
    throw std::invalid_argument("bound_fixed_share: p1j must lie in (0, 1]");
  return (2.0 * std::log(1.0 / (beta_final * p1j)) + 1.0) / alpha_final;
}

AdversarialInstance adversarial_stream(int d, long T, double Y, double P,
                                       std::uint64_t seed) {
  if (d < 1 || T < 1) throw std::invalid_argument("adversarial_stream: d, T must be >= 1");
  if (!(Y > 0.0)) throw std::invalid_argument("adversarial_stream: Y must be positive");
  if (!(P >= 0.0)) throw std::invalid_argument("adversarial_stream: P must be >= 0");
  if (d * P > 2.0 * static_cast<double>(T) * Y * Y)
    throw std::invalid_argument(
        "adversarial_stream: need d*P <= 2*T*Y^2 (unit label scale)");

  AdversarialInstance inst;
  inst.sigma = std::sqrt(d * P / (2.0 * static_cast<double>(T) * Y * Y));
  const double amp = Y * inst.sigma;

  Rng rng(seed);
  const long blocks = (T + d - 1) / d;
  std::vector<Vec> block_u(static_cast<size_t>(blocks), Vec::Zero(d));
  inst.stream.resize(static_cast<size_t>(T));
  for (long t = 1; t <= T; ++t) {
    const int coord = static_cast<int>(t % d);
    const double y = (rng.next_u64() & 1ULL) ? amp : -amp;
    Vec x = Vec::Zero(d);
    x(coord) = 1.0;
    inst.stream[static_cast<size_t>(t - 1)] = StreamRecord{std::move(x), y};
    block_u[static_cast<size_t>((t - 1) / d)](coord) = y;
  }
  inst.comparator.resize(static_cast<size_t>(T));
  for (long t = 1; t <= T; ++t)
    inst.comparator[static_cast<size_t>(t - 1)] = block_u[static_cast<size_t>((t - 1) / d)];
  return inst;
}

}  // namespace dvaw
