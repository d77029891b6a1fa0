#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dvaw/harness.hpp"
#include "dvaw/io.hpp"
#include "dvaw/tuner.hpp"

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("DVAW_OUT")) return env;
  return "./dvaw_out";
}

dvaw::ExperimentConfig load_config(const std::string& path, bool seed_given,
                                   std::uint64_t seed) {
  dvaw::ExperimentConfig cfg = dvaw::config_from_json(dvaw::read_file(path));
  if (seed_given) cfg.seed = seed;
  return cfg;
}

int report(const dvaw::RunOutcome& outcome, const std::string& verb) {
  if (outcome.ok) {
    std::cout << verb << ": ok\n";
    return 0;
  }
  std::cout << verb << ": FAILED\n";
  for (const std::string& f : outcome.failures) std::cout << "  " << f << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discounted online ridge regression: simulate, run, verify, cover"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = default_out_dir();
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string check_flag = "on";
  long cover_T = 0;
  std::string partition_arg;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", config_path, "experiment config JSON")->required();
    sub->add_option("--out", out_dir, "output directory (default $DVAW_OUT or ./dvaw_out)");
    sub->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate the stream and comparator only");
  add_common(sim, true);

  CLI::App* run = app.add_subcommand("run", "run learners, write artifacts, evaluate checks");
  add_common(run, true);
  run->add_option("--check", check_flag, "evaluate bound checks: on|off")
      ->check(CLI::IsMember({"on", "off"}));

  CLI::App* ver = app.add_subcommand("verify", "recheck a written artifact directory");
  ver->add_option("--out", out_dir, "artifact directory (default $DVAW_OUT or ./dvaw_out)");

  CLI::App* cov = app.add_subcommand("cover", "print the dyadic interval cover");
  cov->add_option("--T", cover_T, "horizon")->required();
  cov->add_option("--partition", partition_arg, "tile [s,tau]: comma-separated pair s,tau");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const dvaw::ExperimentConfig cfg = load_config(config_path, seed_given, seed);
      const dvaw::GenResult gen = dvaw::gen_stream(cfg);
      std::filesystem::create_directories(out_dir);
      dvaw::atomic_write(out_dir + "/config.json", dvaw::config_to_json(cfg));
      std::ostringstream s1;
      s1 << "t,y";
      const int d = cfg.d;
      for (int c = 1; c <= d; ++c) s1 << ",x" << c;
      s1 << "\n";
      for (size_t t = 0; t < gen.stream.size(); ++t) {
        s1 << (t + 1) << ',' << dvaw::format_double(gen.stream[t].y);
        for (int c = 0; c < d; ++c) s1 << ',' << dvaw::format_double(gen.stream[t].x(c));
        s1 << "\n";
      }
      dvaw::atomic_write(out_dir + "/stream.csv", s1.str());
      std::ostringstream s2;
      s2 << "t";
      for (int c = 1; c <= d; ++c) s2 << ",u" << c;
      s2 << "\n";
      for (size_t t = 0; t < gen.truth.size(); ++t) {
        s2 << (t + 1);
        for (int c = 0; c < d; ++c) s2 << ',' << dvaw::format_double(gen.truth[t](c));
        s2 << "\n";
      }
      dvaw::atomic_write(out_dir + "/comparator.csv", s2.str());
      std::cout << "simulate: wrote " << out_dir << "\n";
      return 0;
    }
    if (run->parsed()) {
      const dvaw::ExperimentConfig cfg = load_config(config_path, seed_given, seed);
      return report(dvaw::run_experiment(cfg, out_dir, check_flag == "on"), "run");
    }
    if (ver->parsed()) {
      return report(dvaw::verify_dir(out_dir), "verify");
    }
    if (cov->parsed()) {
      if (!partition_arg.empty()) {
        const auto comma = partition_arg.find(',');
        if (comma == std::string::npos)
          throw std::invalid_argument("--partition expects s,tau");
        const long s = dvaw::parse_long(partition_arg.substr(0, comma));
        const long tau = dvaw::parse_long(partition_arg.substr(comma + 1));
        for (const auto& p : dvaw::partition_interval(s, tau, cover_T))
          std::cout << "level=" << p.level << " k=" << p.k << " [" << p.start << ","
                    << p.end << "]\n";
      } else {
        for (const auto& iv : dvaw::geometric_cover(cover_T))
          std::cout << "level=" << iv.level << " k=" << iv.k << " [" << iv.start << ","
                    << iv.end << "]\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
