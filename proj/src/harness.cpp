#include "dvaw/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dvaw/forecaster.hpp"
#include "dvaw/hinting.hpp"
#include "dvaw/io.hpp"
#include "dvaw/meta.hpp"
#include "dvaw/rng.hpp"
#include "dvaw/tuner.hpp"

namespace dvaw {

namespace {

using njson = nlohmann::ordered_json;

constexpr double kCheckTol = 1e-9;

bool leq_with_tol(double lhs, double rhs) {
  return lhs <= rhs + kCheckTol * std::max(1.0, std::fabs(rhs));
}

bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

Vec json_to_vec(const njson& a, const char* what) {
  if (!a.is_array() || a.empty())
    throw std::invalid_argument(std::string("config: ") + what + " must be a non-empty array");
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

njson vec_to_json(const Vec& v) {
  njson a = njson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec gaussian_vec(Rng& rng, int d) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.next_gaussian();
  return v;
}

RefPolicy make_policy(const ExperimentConfig& cfg) {
  if (cfg.ref_policy == "zero") return RefPolicy::zero();
  if (cfg.ref_policy == "previous_label") return RefPolicy::previous_label();
  if (cfg.ref_policy == "external") {
    if (static_cast<long>(cfg.ref_values.size()) < cfg.T)
      throw std::invalid_argument("config: ref_values shorter than T");
    return RefPolicy::external(cfg.ref_values);
  }
  throw std::invalid_argument("config: unknown ref_policy: " + cfg.ref_policy);
}

HintMode make_mode(const ExperimentConfig& cfg) {
  if (cfg.hint_mode == "external") return HintMode::external;
  if (cfg.hint_mode == "self_confident") return HintMode::self_confident;
  throw std::invalid_argument("config: unknown hint_mode: " + cfg.hint_mode);
}

// Reference sequence a policy would produce on this stream (computable
// up front because references only look backwards).
std::vector<double> policy_refs(const RefPolicy& pol, const Stream& stream) {
  std::vector<double> refs(stream.size());
  double prev = 0.0;
  for (size_t t = 0; t < stream.size(); ++t) {
    refs[t] = pol.ref_for(static_cast<int>(t) + 1, prev);
    prev = stream[t].y;
  }
  return refs;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  if (j.contains("format_version") && j["format_version"].get<long>() != kFormatVersion)
    throw std::invalid_argument("config: unsupported format_version");

  ExperimentConfig c;
  c.d = j.value("d", 1);
  c.T = j.value("T", 1L);
  c.lambda = j.value("lambda", 1.0);
  c.b = j.value("b", 2.0);
  c.hint_mode = j.value("hint_mode", std::string("external"));
  c.ref_policy = j.value("ref_policy", std::string("previous_label"));
  if (j.contains("ref_values"))
    for (const auto& v : j["ref_values"]) c.ref_values.push_back(v.get<double>());
  if (!j.contains("seed")) throw std::invalid_argument("config: seed is required");
  c.seed = j["seed"].get<std::uint64_t>();
  c.trace_experts = j.value("trace_experts", 64L);
  c.expert_cap = j.value("expert_cap", 100000L);

  if (c.d < 1 || c.T < 1) throw std::invalid_argument("config: d and T must be >= 1");
  if (!(c.lambda > 0.0)) throw std::invalid_argument("config: lambda must be positive");

  if (!j.contains("stream") || !j["stream"].is_object())
    throw std::invalid_argument("config: stream object is required");
  const njson& s = j["stream"];
  c.stream.kind = s.value("kind", std::string());
  c.stream.noise_sd = s.value("noise_sd", 0.0);
  c.stream.step_sd = s.value("step_sd", 0.0);
  c.stream.Y = s.value("Y", 1.0);
  c.stream.P = s.value("P", 0.0);
  if (s.contains("u")) c.stream.u = json_to_vec(s["u"], "stream.u");
  if (s.contains("u_list"))
    for (const auto& a : s["u_list"]) c.stream.u_list.push_back(json_to_vec(a, "stream.u_list"));
  if (s.contains("switch_times"))
    for (const auto& v : s["switch_times"]) c.stream.switch_times.push_back(v.get<long>());

  if (j.contains("learners")) {
    const njson& l = j["learners"];
    c.learners.kind = l.value("kind", std::string("single"));
    c.learners.gamma = l.value("gamma", 1.0);
  }
  if (j.contains("comparator")) {
    const njson& k = j["comparator"];
    c.comparator.kind = k.value("kind", std::string("true_weights"));
    if (k.contains("segments"))
      for (const auto& v : k["segments"]) c.comparator.segments.push_back(v.get<long>());
    c.comparator.path = k.value("path", std::string());
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  njson j;
  j["format_version"] = kFormatVersion;
  j["d"] = cfg.d;
  j["T"] = cfg.T;
  j["lambda"] = cfg.lambda;
  j["b"] = cfg.b;
  j["hint_mode"] = cfg.hint_mode;
  j["ref_policy"] = cfg.ref_policy;
  if (!cfg.ref_values.empty()) j["ref_values"] = cfg.ref_values;
  njson s;
  s["kind"] = cfg.stream.kind;
  if (cfg.stream.u.size() > 0) s["u"] = vec_to_json(cfg.stream.u);
  if (!cfg.stream.u_list.empty()) {
    njson ul = njson::array();
    for (const Vec& v : cfg.stream.u_list) ul.push_back(vec_to_json(v));
    s["u_list"] = ul;
  }
  if (!cfg.stream.switch_times.empty()) s["switch_times"] = cfg.stream.switch_times;
  s["noise_sd"] = cfg.stream.noise_sd;
  s["step_sd"] = cfg.stream.step_sd;
  s["Y"] = cfg.stream.Y;
  s["P"] = cfg.stream.P;
  j["stream"] = s;
  njson l;
  l["kind"] = cfg.learners.kind;
  l["gamma"] = cfg.learners.gamma;
  j["learners"] = l;
  njson k;
  k["kind"] = cfg.comparator.kind;
  if (!cfg.comparator.segments.empty()) k["segments"] = cfg.comparator.segments;
  if (!cfg.comparator.path.empty()) k["path"] = cfg.comparator.path;
  j["comparator"] = k;
  j["seed"] = cfg.seed;
  j["trace_experts"] = cfg.trace_experts;
  j["expert_cap"] = cfg.expert_cap;
  return j.dump(2) + "\n";
}

GenResult gen_stream(const ExperimentConfig& cfg) {
  const int d = cfg.d;
  const long T = cfg.T;
  const StreamSpec& sp = cfg.stream;
  Rng rng(cfg.seed);
  GenResult r;
  r.stream.reserve(static_cast<size_t>(T));
  r.truth.reserve(static_cast<size_t>(T));

  if (sp.kind == "iid_linear") {
    if (sp.u.size() != d) throw std::invalid_argument("gen_stream: stream.u must have d entries");
    for (long t = 0; t < T; ++t) {
      Vec x = gaussian_vec(rng, d);
      const double y = x.dot(sp.u) + sp.noise_sd * rng.next_gaussian();
      r.stream.push_back({std::move(x), y});
      r.truth.push_back(sp.u);
    }
  } else if (sp.kind == "piecewise") {
    if (sp.u_list.empty()) throw std::invalid_argument("gen_stream: u_list is required");
    for (const Vec& u : sp.u_list)
      if (u.size() != d) throw std::invalid_argument("gen_stream: u_list entries must have d entries");
    if (sp.switch_times.size() + 1 != sp.u_list.size())
      throw std::invalid_argument("gen_stream: need |switch_times| = |u_list| - 1");
    long prev = 1;
    for (long st : sp.switch_times) {
      if (st <= prev || st > T)
        throw std::invalid_argument("gen_stream: switch_times must be increasing and lie in (1, T]");
      prev = st;
    }
    size_t seg = 0;
    for (long t = 1; t <= T; ++t) {
      while (seg < sp.switch_times.size() && t >= sp.switch_times[seg]) ++seg;
      const Vec& u = sp.u_list[seg];
      Vec x = gaussian_vec(rng, d);
      const double y = x.dot(u) + sp.noise_sd * rng.next_gaussian();
      r.stream.push_back({std::move(x), y});
      r.truth.push_back(u);
    }
  } else if (sp.kind == "drift") {
    Vec u = gaussian_vec(rng, d);
    for (long t = 0; t < T; ++t) {
      Vec x = gaussian_vec(rng, d);
      const double y = x.dot(u) + sp.noise_sd * rng.next_gaussian();
      r.stream.push_back({std::move(x), y});
      r.truth.push_back(u);
      u += sp.step_sd * gaussian_vec(rng, d);
    }
  } else if (sp.kind == "sign_flip") {
    if (d != 1) throw std::invalid_argument("gen_stream: sign_flip needs d = 1");
    if (!(sp.Y > 0.0)) throw std::invalid_argument("gen_stream: sign_flip needs Y > 0");
    for (long t = 1; t <= T; ++t) {
      const double y = t <= T / 2 ? -sp.Y : sp.Y;
      Vec x = Vec::Ones(1);
      r.stream.push_back({std::move(x), y});
      r.truth.push_back(Vec::Constant(1, y));
    }
  } else if (sp.kind == "adversarial") {
    AdversarialInstance inst = adversarial_stream(d, T, sp.Y, sp.P, cfg.seed);
    r.stream = std::move(inst.stream);
    r.truth = std::move(inst.comparator);
  } else {
    throw std::invalid_argument("gen_stream: unknown stream kind: " + sp.kind);
  }
  return r;
}

Comparator piecewise_fit(const Stream& stream, const std::vector<long>& seg_starts,
                         double lambda) {
  if (stream.empty()) throw std::invalid_argument("piecewise_fit: empty stream");
  if (!(lambda > 0.0)) throw std::invalid_argument("piecewise_fit: lambda must be positive");
  const long T = static_cast<long>(stream.size());
  const int d = static_cast<int>(stream[0].x.size());
  std::vector<long> starts = {1};
  for (long s : seg_starts) {
    if (s <= starts.back() || s > T)
      throw std::invalid_argument("piecewise_fit: segment starts must be increasing and lie in (1, T]");
    starts.push_back(s);
  }
  starts.push_back(T + 1);

  Comparator out(static_cast<size_t>(T));
  for (size_t seg = 0; seg + 1 < starts.size(); ++seg) {
    Mat a = lambda * Mat::Identity(d, d);
    Vec b = Vec::Zero(d);
    for (long t = starts[seg]; t < starts[seg + 1]; ++t) {
      const StreamRecord& rec = stream[static_cast<size_t>(t - 1)];
      a += rec.x * rec.x.transpose();
      b += rec.y * rec.x;
    }
    const Vec u = a.ldlt().solve(b);
    for (long t = starts[seg]; t < starts[seg + 1]; ++t)
      out[static_cast<size_t>(t - 1)] = u;
  }
  return out;
}

namespace {

Comparator resolve_comparator(const ExperimentConfig& cfg, const Stream& stream,
                              const Comparator& truth) {
  const std::string& kind = cfg.comparator.kind;
  if (kind == "true_weights") return truth;
  if (kind == "piecewise_fit") return piecewise_fit(stream, cfg.comparator.segments, cfg.lambda);
  if (kind == "file") {
    const auto rows = parse_csv(read_file(cfg.comparator.path));
    if (rows.empty()) throw std::invalid_argument("comparator file: empty");
    if (rows.size() != static_cast<size_t>(cfg.T) + 1)
      throw std::invalid_argument("comparator file: wrong row count");
    Comparator u(static_cast<size_t>(cfg.T));
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != static_cast<size_t>(cfg.d) + 1)
        throw std::invalid_argument("comparator file: wrong column count");
      Vec v(cfg.d);
      for (int c = 0; c < cfg.d; ++c) v(c) = parse_double(rows[i][static_cast<size_t>(c) + 1]);
      u[i - 1] = v;
    }
    return u;
  }
  throw std::invalid_argument("config: unknown comparator kind: " + kind);
}

std::string stream_csv(const Stream& stream) {
  std::ostringstream out;
  const int d = static_cast<int>(stream[0].x.size());
  out << "t,y";
  for (int c = 1; c <= d; ++c) out << ",x" << c;
  out << "\n";
  for (size_t t = 0; t < stream.size(); ++t) {
    out << (t + 1) << ',' << format_double(stream[t].y);
    for (int c = 0; c < d; ++c) out << ',' << format_double(stream[t].x(c));
    out << "\n";
  }
  return out.str();
}

std::string comparator_csv(const Comparator& u) {
  std::ostringstream out;
  const int d = static_cast<int>(u[0].size());
  out << "t";
  for (int c = 1; c <= d; ++c) out << ",u" << c;
  out << "\n";
  for (size_t t = 0; t < u.size(); ++t) {
    out << (t + 1);
    for (int c = 0; c < d; ++c) out << ',' << format_double(u[t](c));
    out << "\n";
  }
  return out.str();
}

// Per-learner cumulative state while emitting trace rows.
struct TraceWriter {
  std::ostringstream body;
  std::map<std::string, std::pair<double, double>> cums;  // id -> (loss, regret)

  TraceWriter() { body << "t,learner_id,prediction,y,loss,cumulative_loss,cumulative_regret_vs_comparator\n"; }

  void row(long t, const std::string& id, double pred, double y, double comp_loss) {
    const double loss = sq_loss(y, pred);
    auto& c = cums[id];
    c.first += loss;
    c.second += loss - comp_loss;
    body << t << ',' << id << ',' << format_double(pred) << ',' << format_double(y)
         << ',' << format_double(loss) << ',' << format_double(c.first) << ','
         << format_double(c.second) << "\n";
  }
};

struct HintWriter {
  std::ostringstream body;
  HintWriter() { body << "t,learner_id,hint\n"; }
  void row(long t, const std::string& id, double hint) {
    body << t << ',' << id << ',' << format_double(hint) << "\n";
  }
};

struct MetaWriter {
  std::ostringstream body;
  MetaWriter() { body << "t,y_ref,radius_before,radius_after,alpha,beta,aggregate\n"; }
  void row(const MetaRound& r) {
    body << r.t << ',' << format_double(r.y_ref) << ',' << format_double(r.radius_before)
         << ',' << format_double(r.radius_after) << ',' << format_double(r.alpha) << ','
         << format_double(r.beta) << ',' << format_double(r.aggregate_pred) << "\n";
  }
};

njson report_entry(const std::string& check, const std::string& learner_id,
                   bool passed, bool offline_verifiable, const BoundReport& rep,
                   const std::map<std::string, double>& params) {
  njson e;
  e["check"] = check;
  e["learner_id"] = learner_id;
  e["passed"] = passed;
  e["offline_verifiable"] = offline_verifiable;
  e["lhs"] = rep.lhs;
  e["rhs"] = rep.rhs;
  e["slack"] = rep.slack;
  njson p;
  for (const auto& [k, v] : params) p[k] = v;
  e["params"] = p;
  njson t;
  for (const auto& [k, v] : rep.terms) t[k] = v;
  e["terms"] = t;
  return e;
}

double comp_loss_at(const Stream& stream, const Comparator& comp, size_t t0) {
  return lin_loss(stream[t0], comp[t0]);
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                          bool check) {
  RunOutcome outcome;
  auto fail = [&](const std::string& m) {
    outcome.ok = false;
    outcome.failures.push_back(m);
  };

  const GenResult gen = gen_stream(cfg);
  const Stream& stream = gen.stream;
  const Comparator comp = resolve_comparator(cfg, stream, gen.truth);
  const RefPolicy policy = make_policy(cfg);
  const HintMode mode = make_mode(cfg);
  const long T = cfg.T;

  TraceWriter trace;
  HintWriter hints;
  std::optional<MetaWriter> meta_file;
  njson reports = njson::array();

  const std::string& kind = cfg.learners.kind;

  if (kind == "single" || kind == "oracle_gamma") {
    const std::vector<double> refs = policy_refs(policy, stream);
    double gamma = cfg.learners.gamma;
    std::map<std::string, double> params;
    std::string id = "dvaw";
    bool force_external = false;
    if (kind == "oracle_gamma") {
      // Balance the hint residuals the reference sequence would leave against
      // the comparator's variability; run at that discount with those hints.
      const double g_star = solve_gamma_star(stream, comp, cfg.lambda, refs);
      gamma = std::min(std::max(g_star, 1e-8), 1.0);
      params["gamma_star"] = g_star;
      id = "dvaw_star";
      force_external = true;
    }
    if (!(gamma > 0.0) || gamma > 1.0)
      throw std::invalid_argument("run_experiment: learner gamma must lie in (0, 1]");

    DiscountState st(cfg.d, cfg.lambda, gamma);
    std::vector<double> used_hints, preds;
    double radius = 0.0;
    for (long t = 1; t <= T; ++t) {
      const StreamRecord& rec = stream[static_cast<size_t>(t - 1)];
      const TrustRegion region{refs[static_cast<size_t>(t - 1)], radius};
      const double hint = (force_external || mode == HintMode::external)
                              ? region.y_ref
                              : self_confident_hint(st, rec.x, region);
      const RoundOutput out = st.begin_round(rec.x, hint);
      st.end_round(rec.y);
      used_hints.push_back(hint);
      preds.push_back(out.prediction);
      trace.row(t, id, out.prediction, rec.y, comp_loss_at(stream, comp, static_cast<size_t>(t - 1)));
      hints.row(t, id, hint);
      radius = std::max(radius, std::fabs(rec.y - region.y_ref));
    }
    if (check) {
      BoundReport rep = bound_general_dvaw(stream, comp, gamma, cfg.lambda, used_hints, preds);
      const bool passed = leq_with_tol(rep.lhs, rep.rhs);
      if (!passed) fail("general_dvaw:" + id);
      params["gamma"] = gamma;
      params["lambda"] = cfg.lambda;
      reports.push_back(report_entry("general_dvaw", id, passed, true, rep, params));
    }
  } else if (kind == "flat_grid" || kind == "strongly_adaptive") {
    const bool flat = kind == "flat_grid";
    long n_experts = 0;
    std::vector<std::string> ids;
    std::vector<double> cum_clipped, cum_raw_regret;
    std::vector<double> meta_losses;
    double meta_cum_regret = 0.0;
    double final_radius = 0.0, final_alpha = 0.0, final_beta = 0.0;
    meta_file.emplace();

    auto absorb = [&](const MetaRound& row, const std::vector<std::string>& lids,
                      bool emit_experts) {
      const size_t t0 = static_cast<size_t>(row.t - 1);
      const double closs = comp_loss_at(stream, comp, t0);
      for (size_t i = 0; i < lids.size(); ++i) {
        cum_clipped[i] += row.clipped_losses[i];
        cum_raw_regret[i] += sq_loss(row.y, row.raw[i]) - closs;
        if (emit_experts) {
          trace.row(row.t, lids[i], row.raw[i], row.y, closs);
          hints.row(row.t, lids[i], row.hints[i]);
        }
      }
      meta_losses.push_back(row.meta_loss);
      meta_cum_regret += row.meta_loss - closs;
      trace.row(row.t, "meta", row.aggregate_pred, row.y, closs);
      meta_file->row(row);
      final_radius = row.radius_after;
      final_alpha = row.alpha;
      final_beta = row.beta;
    };

    if (flat) {
      const DiscountGrid grid = build_grid(cfg.d, T, cfg.b);
      auto bank = make_bank(grid, cfg.lambda, mode);
      n_experts = static_cast<long>(bank.size());
      for (const auto& e : bank) ids.push_back(e->id());
      cum_clipped.assign(ids.size(), 0.0);
      cum_raw_regret.assign(ids.size(), 0.0);
      const bool emit = n_experts <= cfg.trace_experts;
      ClippedMetaRunner runner(std::move(bank), policy);
      for (const StreamRecord& rec : stream)
        absorb(runner.step(rec.x, rec.y), ids, emit);
    } else {
      SaConfig sa;
      sa.d = cfg.d;
      sa.T = T;
      sa.lambda = cfg.lambda;
      sa.b = cfg.b;
      sa.mode = mode;
      sa.policy = policy;
      sa.expert_cap = cfg.expert_cap;
      // Mirror the bank layout (discount-major, interval-minor) up front so
      // the observer can label rows as they stream past.
      const DiscountGrid grid = build_grid(cfg.d, T, cfg.b);
      const auto cover = geometric_cover(T);
      for (double gamma : grid.gammas)
        for (const CoverInterval& iv : cover) {
          std::ostringstream lid;
          lid << "g=" << format_double(gamma) << "|i=[" << iv.start << "," << iv.end << "]";
          ids.push_back(lid.str());
        }
      n_experts = static_cast<long>(ids.size());
      const bool emit = n_experts <= cfg.trace_experts;
      cum_clipped.assign(ids.size(), 0.0);
      cum_raw_regret.assign(ids.size(), 0.0);
      run_strongly_adaptive(sa, stream,
                            [&](const MetaRound& row) { absorb(row, ids, emit); });
    }

    if (check) {
      double meta_loss_sum = 0.0;
      for (double v : meta_losses) meta_loss_sum += v;
      const double p1j = 1.0 / static_cast<double>(n_experts);
      const double fs_rhs = bound_fixed_share(final_alpha, final_beta, p1j);

      // Aggregated loss never strays far from the best clipped expert.
      const auto best_clipped = std::min_element(cum_clipped.begin(), cum_clipped.end());
      BoundReport fs_rep;
      fs_rep.lhs = meta_loss_sum - *best_clipped;
      fs_rep.rhs = fs_rhs;
      fs_rep.slack = fs_rep.rhs - fs_rep.lhs;
      fs_rep.terms = {{"fixed_share_term", fs_rhs}};
      const bool fs_pass = leq_with_tol(fs_rep.lhs, fs_rep.rhs);
      if (!fs_pass) fail("fixed_share_full:meta");
      reports.push_back(report_entry(
          "fixed_share_full", "meta", fs_pass, n_experts <= cfg.trace_experts, fs_rep,
          {{"alpha_final", final_alpha}, {"beta_final", final_beta}, {"p1j", p1j}}));

      // Meta regret versus the comparator decomposes through any expert.
      const auto best_raw = std::min_element(cum_raw_regret.begin(), cum_raw_regret.end());
      const double clip_pen = 0.5 * final_radius * final_radius;
      BoundReport dec_rep;
      dec_rep.lhs = meta_cum_regret;
      dec_rep.rhs = *best_raw + fs_rhs + clip_pen;
      dec_rep.slack = dec_rep.rhs - dec_rep.lhs;
      dec_rep.terms = {{"best_expert_regret", *best_raw},
                       {"fixed_share_term", fs_rhs},
                       {"clip_penalty_term", clip_pen}};
      const bool dec_pass = leq_with_tol(dec_rep.lhs, dec_rep.rhs);
      if (!dec_pass) fail("clipped_meta_decomposition:meta");
      reports.push_back(report_entry(
          "clipped_meta_decomposition", "meta", dec_pass, n_experts <= cfg.trace_experts,
          dec_rep,
          {{"alpha_final", final_alpha}, {"beta_final", final_beta}, {"p1j", p1j}}));
    }
  } else {
    throw std::invalid_argument("run_experiment: unknown learner kind: " + kind);
  }

  std::filesystem::create_directories(out_dir);
  atomic_write(out_dir + "/config.json", config_to_json(cfg));
  atomic_write(out_dir + "/stream.csv", stream_csv(stream));
  atomic_write(out_dir + "/comparator.csv", comparator_csv(comp));
  atomic_write(out_dir + "/trace.csv", trace.body.str());
  atomic_write(out_dir + "/hints.csv", hints.body.str());
  if (meta_file) atomic_write(out_dir + "/meta.csv", meta_file->body.str());
  njson rj;
  rj["format_version"] = kFormatVersion;
  rj["reports"] = reports;
  atomic_write(out_dir + "/report.json", rj.dump(2) + "\n");
  return outcome;
}

namespace {

struct ParsedTraceRow {
  long t;
  double pred, y, loss, cum_loss, cum_regret;
};

struct ParsedMetaRow {
  long t;
  double y_ref, radius_before, radius_after, alpha, beta, aggregate;
};

}  // namespace

RunOutcome verify_dir(const std::string& dir) {
  RunOutcome out;
  auto fail = [&](const std::string& m) {
    out.ok = false;
    out.failures.push_back(m);
  };

  ExperimentConfig cfg;
  try {
    cfg = config_from_json(read_file(dir + "/config.json"));
  } catch (const std::exception& e) {
    fail(std::string("schema:config:") + e.what());
    return out;
  }

  // Stream.
  Stream stream;
  try {
    const auto rows = parse_csv(read_file(dir + "/stream.csv"));
    if (rows.size() != static_cast<size_t>(cfg.T) + 1)
      throw std::invalid_argument("row count != T");
    if (rows[0].size() != static_cast<size_t>(cfg.d) + 2 || rows[0][0] != "t" || rows[0][1] != "y")
      throw std::invalid_argument("bad header");
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != static_cast<size_t>(cfg.d) + 2)
        throw std::invalid_argument("bad column count");
      if (parse_long(rows[i][0]) != static_cast<long>(i))
        throw std::invalid_argument("t not contiguous");
      StreamRecord rec;
      rec.y = parse_double(rows[i][1]);
      rec.x = Vec(cfg.d);
      for (int c = 0; c < cfg.d; ++c)
        rec.x(c) = parse_double(rows[i][static_cast<size_t>(c) + 2]);
      stream.push_back(std::move(rec));
    }
  } catch (const std::exception& e) {
    fail(std::string("schema:stream:") + e.what());
    return out;
  }

  // Comparator.
  Comparator comp;
  try {
    const auto rows = parse_csv(read_file(dir + "/comparator.csv"));
    if (rows.size() != static_cast<size_t>(cfg.T) + 1)
      throw std::invalid_argument("row count != T");
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != static_cast<size_t>(cfg.d) + 1)
        throw std::invalid_argument("bad column count");
      Vec v(cfg.d);
      for (int c = 0; c < cfg.d; ++c)
        v(c) = parse_double(rows[i][static_cast<size_t>(c) + 1]);
      comp.push_back(std::move(v));
    }
  } catch (const std::exception& e) {
    fail(std::string("schema:comparator:") + e.what());
    return out;
  }

  // Trace.
  std::vector<std::string> learner_order;
  std::map<std::string, std::vector<ParsedTraceRow>> trace;
  try {
    const auto rows = parse_csv(read_file(dir + "/trace.csv"));
    if (rows.empty() ||
        rows[0] != std::vector<std::string>{"t", "learner_id", "prediction", "y", "loss",
                                            "cumulative_loss",
                                            "cumulative_regret_vs_comparator"})
      throw std::invalid_argument("bad header");
    if (rows.size() == 1) throw std::invalid_argument("no data rows");
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != 7) throw std::invalid_argument("bad column count");
      ParsedTraceRow r;
      r.t = parse_long(rows[i][0]);
      r.pred = parse_double(rows[i][2]);
      r.y = parse_double(rows[i][3]);
      r.loss = parse_double(rows[i][4]);
      r.cum_loss = parse_double(rows[i][5]);
      r.cum_regret = parse_double(rows[i][6]);
      auto it = trace.find(rows[i][1]);
      if (it == trace.end()) {
        learner_order.push_back(rows[i][1]);
        it = trace.emplace(rows[i][1], std::vector<ParsedTraceRow>{}).first;
      }
      it->second.push_back(r);
    }
  } catch (const std::exception& e) {
    fail(std::string("schema:trace:") + e.what());
    return out;
  }

  // Per-learner arithmetic integrity.
  for (const std::string& id : learner_order) {
    const auto& rows = trace[id];
    double cl = 0.0, cr = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
      const ParsedTraceRow& r = rows[i];
      if (r.t != static_cast<long>(i) + 1) {
        fail("integrity:trace:" + id + ":rounds_not_contiguous");
        break;
      }
      const size_t t0 = static_cast<size_t>(r.t - 1);
      if (r.y != stream[t0].y) {
        fail("integrity:trace:" + id + ":label_mismatch");
        break;
      }
      if (!close_rel(r.loss, sq_loss(r.y, r.pred), 1e-12)) {
        fail("integrity:trace:" + id + ":loss_mismatch");
        break;
      }
      cl += r.loss;
      cr += r.loss - lin_loss(stream[t0], comp[t0]);
      if (!close_rel(r.cum_loss, cl, 1e-9) || !close_rel(r.cum_regret, cr, 1e-9)) {
        fail("integrity:trace:" + id + ":prefix_sum_mismatch");
        break;
      }
    }
  }

  // Meta state file, if the run had a pool.
  std::vector<ParsedMetaRow> meta_rows;
  if (file_exists(dir + "/meta.csv")) {
    try {
      const auto rows = parse_csv(read_file(dir + "/meta.csv"));
      if (rows.empty() ||
          rows[0] != std::vector<std::string>{"t", "y_ref", "radius_before", "radius_after",
                                              "alpha", "beta", "aggregate"})
        throw std::invalid_argument("bad header");
      if (rows.size() != static_cast<size_t>(cfg.T) + 1)
        throw std::invalid_argument("row count != T");
      for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 7) throw std::invalid_argument("bad column count");
        ParsedMetaRow m;
        m.t = parse_long(rows[i][0]);
        m.y_ref = parse_double(rows[i][1]);
        m.radius_before = parse_double(rows[i][2]);
        m.radius_after = parse_double(rows[i][3]);
        m.alpha = parse_double(rows[i][4]);
        m.beta = parse_double(rows[i][5]);
        m.aggregate = parse_double(rows[i][6]);
        meta_rows.push_back(m);
      }
    } catch (const std::exception& e) {
      fail(std::string("schema:meta:") + e.what());
      return out;
    }
    double radius = 0.0;
    double prev_label = 0.0;
    RefPolicy pol = make_policy(cfg);
    for (const ParsedMetaRow& m : meta_rows) {
      if (!close_rel(m.beta, beta_schedule(static_cast<int>(m.t)), 1e-12)) {
        fail("integrity:meta:beta_schedule_mismatch");
        break;
      }
      if (!close_rel(m.radius_before, radius, 1e-12)) {
        fail("integrity:meta:radius_chain_broken");
        break;
      }
      const double y = stream[static_cast<size_t>(m.t - 1)].y;
      if (!close_rel(m.y_ref, pol.ref_for(static_cast<int>(m.t), prev_label), 1e-12)) {
        fail("integrity:meta:y_ref_mismatch");
        break;
      }
      const double grown = std::max(m.radius_before, std::fabs(y - m.y_ref));
      if (!close_rel(m.radius_after, grown, 1e-12)) {
        fail("integrity:meta:radius_update_mismatch");
        break;
      }
      radius = m.radius_after;
      prev_label = y;
    }
  }

  // Hints.
  std::map<std::string, std::vector<double>> hints;
  if (file_exists(dir + "/hints.csv")) {
    try {
      const auto rows = parse_csv(read_file(dir + "/hints.csv"));
      if (rows.empty() || rows[0] != std::vector<std::string>{"t", "learner_id", "hint"})
        throw std::invalid_argument("bad header");
      for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 3) throw std::invalid_argument("bad column count");
        hints[rows[i][1]].push_back(parse_double(rows[i][2]));
      }
    } catch (const std::exception& e) {
      fail(std::string("schema:hints:") + e.what());
      return out;
    }
  }

  // Reports.
  njson rj;
  try {
    rj = njson::parse(read_file(dir + "/report.json"));
    if (!rj.is_object() || rj.value("format_version", -1L) != kFormatVersion ||
        !rj.contains("reports") || !rj["reports"].is_array())
      throw std::invalid_argument("bad envelope");
  } catch (const std::exception& e) {
    fail(std::string("schema:report:") + e.what());
    return out;
  }

  auto check_report = [&](const njson& e, const BoundReport& rec) {
    const std::string check = e.value("check", std::string());
    if (!close_rel(e.value("lhs", 0.0), rec.lhs, 1e-9)) fail("report:" + check + ":lhs_mismatch");
    if (!close_rel(e.value("rhs", 0.0), rec.rhs, 1e-9)) fail("report:" + check + ":rhs_mismatch");
    for (const auto& [name, val] : rec.terms) {
      if (!e["terms"].contains(name) || !close_rel(e["terms"][name].get<double>(), val, 1e-9)) {
        fail("report:" + check + ":term_mismatch:" + name);
        return;
      }
    }
    const bool recomputed_pass = leq_with_tol(rec.lhs, rec.rhs);
    if (recomputed_pass != e.value("passed", false))
      fail("report:" + check + ":verdict_mismatch");
    if (!recomputed_pass) fail("report:" + check + ":bound_violated");
  };

  for (const njson& e : rj["reports"]) {
    const std::string check = e.value("check", std::string());
    const std::string id = e.value("learner_id", std::string());
    if (!e.value("offline_verifiable", true)) continue;  // expert rows withheld by design
    if (check == "general_dvaw") {
      if (!trace.count(id) || !hints.count(id)) {
        fail("report:general_dvaw:missing_rows:" + id);
        continue;
      }
      const auto& rows = trace[id];
      if (rows.size() != stream.size()) {
        fail("report:general_dvaw:short_trace:" + id);
        continue;
      }
      std::vector<double> preds(rows.size());
      for (size_t i = 0; i < rows.size(); ++i) preds[i] = rows[i].pred;
      const double gamma = e["params"].value("gamma", 0.0);
      const double lambda = e["params"].value("lambda", 0.0);
      BoundReport rec;
      try {
        rec = bound_general_dvaw(stream, comp, gamma, lambda, hints[id], preds);
      } catch (const std::exception& ex) {
        fail(std::string("report:general_dvaw:recompute_error:") + ex.what());
        continue;
      }
      check_report(e, rec);
    } else if (check == "fixed_share_full" || check == "clipped_meta_decomposition") {
      if (meta_rows.empty() || !trace.count("meta")) {
        fail("report:" + check + ":missing_meta_rows");
        continue;
      }
      std::vector<std::string> experts;
      for (const std::string& lid : learner_order)
        if (lid != "meta") experts.push_back(lid);
      if (experts.empty()) {
        fail("report:" + check + ":missing_expert_rows");
        continue;
      }
      const size_t T = stream.size();
      bool short_rows = false;
      for (const auto& lid : experts)
        if (trace[lid].size() != T) short_rows = true;
      if (short_rows || trace["meta"].size() != T) {
        fail("report:" + check + ":short_trace");
        continue;
      }
      double meta_loss_sum = 0.0, meta_regret = 0.0;
      for (size_t t = 0; t < T; ++t) {
        meta_loss_sum += trace["meta"][t].loss;
        meta_regret += trace["meta"][t].loss - lin_loss(stream[t], comp[t]);
      }
      std::vector<double> cum_clipped(experts.size(), 0.0), cum_raw_regret(experts.size(), 0.0);
      double running_max = 0.0;
      bool alpha_ok = true;
      for (size_t t = 0; t < T; ++t) {
        const TrustRegion region{meta_rows[t].y_ref, meta_rows[t].radius_before};
        for (size_t j = 0; j < experts.size(); ++j) {
          const double raw = trace[experts[j]][t].pred;
          const double cl = sq_loss(stream[t].y, clip(raw, region));
          cum_clipped[j] += cl;
          cum_raw_regret[j] += sq_loss(stream[t].y, raw) - lin_loss(stream[t], comp[t]);
          running_max = std::max(running_max, cl);
        }
        const double alpha = 1.0 / (2.0 * std::max(running_max, kAlphaLossFloor));
        if (!close_rel(meta_rows[t].alpha, alpha, 1e-9)) alpha_ok = false;
      }
      if (!alpha_ok) {
        fail("report:" + check + ":alpha_chain_mismatch");
        continue;
      }
      const double p1j = e["params"].value("p1j", 0.0);
      double fs_rhs;
      try {
        fs_rhs = bound_fixed_share(meta_rows.back().alpha, meta_rows.back().beta, p1j);
      } catch (const std::exception& ex) {
        fail(std::string("report:") + check + ":recompute_error:" + ex.what());
        continue;
      }
      BoundReport rec;
      if (check == "fixed_share_full") {
        rec.lhs = meta_loss_sum - *std::min_element(cum_clipped.begin(), cum_clipped.end());
        rec.rhs = fs_rhs;
        rec.terms = {{"fixed_share_term", fs_rhs}};
      } else {
        const double best = *std::min_element(cum_raw_regret.begin(), cum_raw_regret.end());
        const double clip_pen = 0.5 * meta_rows.back().radius_after * meta_rows.back().radius_after;
        rec.lhs = meta_regret;
        rec.rhs = best + fs_rhs + clip_pen;
        rec.terms = {{"best_expert_regret", best},
                     {"fixed_share_term", fs_rhs},
                     {"clip_penalty_term", clip_pen}};
      }
      rec.slack = rec.rhs - rec.lhs;
      check_report(e, rec);
    } else {
      fail("report:unknown_check:" + check);
    }
  }
  return out;
}

}  // namespace dvaw
