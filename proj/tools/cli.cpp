#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "magd/config.hpp"
#include "magd/harness.hpp"
#include "magd/verify.hpp"

namespace magd::cli {
namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"--topology", "topology", "cycle or star"},
    {"--d", "d", "node count"},
    {"--seeds", "seeds", "comma-separated run seeds"},
    {"--methods", "methods", "comma-separated subset of magd,gossip,sgd"},
    {"--max-iters", "max_iters", "iteration budget per run"},
    {"--gamma", "gamma", "MAGD step override"},
    {"--gamma-scale", "gamma_scale", "multiplier on the derived step"},
    {"--out", "output_path", "output directory"},
    {"--mc-trials", "mc_trials", "Monte Carlo trials per lemma check"},
    {"--mixing-horizon", "mixing_horizon", "mixing simulation steps (0 = auto)"},
    {"--threads", "threads", "worker threads (0 = hardware count)"},
};

/// Option values of one subcommand, collected as config settings.
struct CommandFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  CLI::Option* config_option = nullptr;

  void attach(CLI::App* app) {
    config_option = app->add_option("--config", config_path, "key = value config file");
    for (const FlagSpec& f : kFlags) {
      options[f.key] = app->add_option(f.flag, values[f.key], f.help);
    }
  }

  ExperimentConfig load() const {
    std::vector<Setting> settings;
    for (const FlagSpec& f : kFlags) {
      if (options.at(f.key)->count() > 0) settings.push_back({f.key, values.at(f.key), f.flag});
    }
    std::optional<std::filesystem::path> file;
    if (config_option->count() > 0) file = config_path;
    return load_config(file, settings);
  }

  bool given(const std::string& key) const { return options.at(key)->count() > 0; }
};

void print_constants(std::ostream& out, const RunManifest& m) {
  out << "tau=" << m.constants.tau << (m.mixing_reached ? "" : " (horizon reached)") << '\n'
      << "mu=" << format_real(m.constants.mu) << '\n'
      << "L=" << format_real(m.constants.L_smooth) << '\n'
      << "delta=" << format_real(m.constants.delta) << '\n'
      << "sigma=" << format_real(m.constants.sigma) << '\n'
      << "gamma=" << format_real(m.params.gamma) << " (" << to_string(m.gamma_source) << ")\n"
      << "beta=" << format_real(m.params.beta) << '\n'
      << "eta=" << format_real(m.params.eta) << '\n'
      << "theta=" << format_real(m.params.theta) << '\n'
      << "M=" << m.params.M << '\n'
      << "N=" << m.params.N << '\n';
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
}

int do_run(const CommandFlags& flags, std::ostream& out) {
  const ExperimentConfig config = flags.load();
  const RunManifest m = run_experiment(config);
  print_constants(out, m);
  for (const RunRecord& r : m.runs) {
    out << to_string(r.method) << " seed=" << r.seed << " status=" << to_string(r.termination)
        << " iters=" << (r.records - 1) << " oracle_calls=" << r.final_oracle_calls
        << " dist_sq=" << format_real(r.final_dist_sq) << '\n';
  }
  out << "manifest=" << (std::filesystem::path(config.output_path) / kManifestName).string()
      << '\n';
  return m.any_failed() ? kRunFailure : kOk;
}

int do_verify(const CommandFlags& flags, std::ostream& out) {
  const ExperimentConfig config = flags.load();
  const LemmaReport report = verify_lemmas(config);
  const std::string text = report_to_text(report);
  out << text;
  if (flags.given("output_path")) {
    write_file(std::filesystem::path(config.output_path) / "lemma_report.txt", text);
  }
  out << (report.all_passed() ? "all checks passed" : "verification FAILED") << '\n';
  return report.all_passed() ? kOk : kVerificationFailure;
}

int do_mixing(const CommandFlags& flags, std::ostream& out) {
  const ExperimentConfig config = flags.load();
  std::int64_t horizon = 0;
  const MixingEstimate est = mixing_for(config, &horizon);
  out << "tau=" << est.tau << '\n'
      << "reached=" << (est.reached ? "yes" : "no") << '\n'
      << "horizon=" << horizon << '\n'
      << "surrogate=per_edge_marginal_max\n";
  if (flags.given("output_path")) {
    std::string csv = "step,tv\n";
    for (const auto& [k, tv] : est.tv_curve) csv += std::to_string(k) + "," + format_real(tv) + "\n";
    write_file(std::filesystem::path(config.output_path) / "mixing.csv", csv);
  }
  return kOk;
}

int do_params(const CommandFlags& flags, std::ostream& out) {
  const ExperimentConfig config = flags.load();
  const Analysis a = analyze(config);
  const DerivedParams d = params_for(config, a.constants);
  RunManifest m;
  m.constants = a.constants;
  m.mixing_reached = a.mixing.reached;
  m.params = d.params;
  m.gamma_source = d.binding;
  print_constants(out, m);
  out << "gamma_smoothness=" << format_real(d.gamma_smoothness) << '\n'
      << "gamma_noise=" << format_real(d.gamma_noise) << '\n'
      << "gamma_horizon=" << format_real(d.gamma_horizon) << '\n'
      << "gossip_gamma=" << format_real(gossip_step(config, a.constants)) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Markov accelerated gradient descent on Markov-varying consensus graphs", "magd"};
  app.require_subcommand(1);
  CommandFlags run_flags, verify_flags, mixing_flags, params_flags;
  run_flags.attach(app.add_subcommand("run", "run methods x seeds and write traces"));
  verify_flags.attach(app.add_subcommand("verify", "Monte Carlo estimator lemma checks"));
  mixing_flags.attach(app.add_subcommand("mixing", "estimate the chain mixing time"));
  params_flags.attach(app.add_subcommand("params", "print derived constants and parameters"));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kUsage;
  }

  try {
    if (app.got_subcommand("run")) return do_run(run_flags, out);
    if (app.got_subcommand("verify")) return do_verify(verify_flags, out);
    if (app.got_subcommand("mixing")) return do_mixing(mixing_flags, out);
    return do_params(params_flags, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const NonFiniteIterate& e) {
    err << "run failure: " << e.what() << '\n';
    return kRunFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRunFailure;
  }
}

}  // namespace magd::cli
