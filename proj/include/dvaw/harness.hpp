#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dvaw/oracle.hpp"
#include "dvaw/types.hpp"

namespace dvaw {

inline constexpr int kFormatVersion = 1;

// What data the experiment runs on.
struct StreamSpec {
  std::string kind;                // iid_linear | piecewise | drift | sign_flip | adversarial
  Vec u;                           // iid_linear: the fixed weights
  std::vector<Vec> u_list;         // piecewise: one weight vector per segment
  std::vector<long> switch_times;  // piecewise: 1-indexed first rounds of segments 2..k
  double noise_sd = 0.0;           // iid_linear | piecewise | drift
  double step_sd = 0.0;            // drift: per-round weight step scale
  double Y = 1.0;                  // sign_flip | adversarial: label scale
  double P = 0.0;                  // adversarial: variability budget
};

// Which learner(s) to run.
struct LearnerSpec {
  std::string kind = "single";  // single | oracle_gamma | flat_grid | strongly_adaptive
  double gamma = 1.0;           // single
};

// What to measure regret against.
struct ComparatorSpec {
  std::string kind = "true_weights";  // true_weights | piecewise_fit | file
  std::vector<long> segments;         // piecewise_fit: 1-indexed starts of segments 2..k
  std::string path;                   // file: CSV of t,u1..ud
};

struct ExperimentConfig {
  int d = 1;
  long T = 1;
  double lambda = 1.0;
  double b = 2.0;
  std::string hint_mode = "external";       // external | self_confident
  std::string ref_policy = "previous_label";  // zero | previous_label | external
  std::vector<double> ref_values;           // external policy sequence
  StreamSpec stream;
  LearnerSpec learners;
  ComparatorSpec comparator;
  std::uint64_t seed = 0;
  long trace_experts = 64;   // emit per-expert trace rows only up to this bank size
  long expert_cap = 100000;  // strongly_adaptive bank ceiling
};

// JSON round trip (throws std::invalid_argument on malformed input).
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

struct GenResult {
  Stream stream;
  Comparator truth;  // the generating weights (defined for every kind)
};

// Deterministic in (cfg.stream, cfg.seed, cfg.d, cfg.T).
GenResult gen_stream(const ExperimentConfig& cfg);

// Ridge fit per segment: (lambda I + sum x x')^{-1} sum y x, replicated over
// the segment's rounds. Utility comparator only.
Comparator piecewise_fit(const Stream& stream, const std::vector<long>& seg_starts,
                         double lambda);

struct RunOutcome {
  bool ok = true;
  std::vector<std::string> failures;  // machine-readable "check:detail" items
};

// Run the configured experiment, write the artifact set (config.json,
// stream.csv, comparator.csv, trace.csv, hints.csv, meta.csv when a pool ran,
// report.json) into out_dir, and evaluate the enabled bound checks.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                          bool check);

// Re-derive every verdict in out_dir from the files alone: schema, loss
// arithmetic, prefix sums, comparator consistency, and each recorded bound.
RunOutcome verify_dir(const std::string& dir);

}  // namespace dvaw
