#include "magd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace magd {

std::int64_t auto_mixing_horizon(int d) {
  const double pairs = 0.5 * d * (d - 1.0);
  return static_cast<std::int64_t>(std::ceil(2.0 * std::log(4.0) * pairs)) + 10;
}

MixingEstimate mixing_for(const ExperimentConfig& config, std::int64_t* horizon_used) {
  const ChainConfig chain =
      chain_config_for(make_topology(config.topology, config.d), config.flip_probability);
  const std::int64_t horizon =
      config.mixing_horizon > 0 ? config.mixing_horizon : auto_mixing_horizon(config.d);
  if (horizon_used) *horizon_used = horizon;
  Rng rng(config.analysis_seed, StreamRole::kMixing);
  return estimate_mixing_time(chain, horizon, config.mixing_replicas, rng);
}

Analysis analyze(const ExperimentConfig& config) {
  config.validate();
  Analysis a;
  a.topology = make_topology(config.topology, config.d);
  a.chain = chain_config_for(a.topology, config.flip_probability);
  a.mixing = mixing_for(config, &a.mixing_horizon);
  const Eigen::MatrixXd mean = stationary_mean_laplacian(a.chain);
  a.spectral = spectral_constants(mean);
  Rng noise_rng(config.analysis_seed, StreamRole::kNoiseCertification);
  a.noise = certify_noise_constants(a.chain, mean, config.delta_samples, noise_rng);
  a.constants = {a.spectral.mu, a.spectral.L_smooth, a.noise.delta, a.noise.sigma, a.mixing.tau};
  a.constants.validate();
  return a;
}

DerivedParams params_for(const ExperimentConfig& config, const ProblemConstants& constants) {
  DeriveOptions opt;
  opt.iterations = config.max_iters;
  opt.gamma_override = config.gamma_override;
  opt.gamma_scale = config.gamma_scale;
  return derive_params_detailed(constants, opt);
}

double gossip_step(const ExperimentConfig& config, const ProblemConstants& constants) {
  return config.gossip_gamma.value_or(1.0 / constants.L_smooth);
}

double sgd_step(const ExperimentConfig& config, const ProblemConstants& constants) {
  return config.sgd_gamma.value_or(1.0 / constants.L_smooth);
}

bool RunManifest::any_failed() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.failed(); });
}

std::string trace_file_name(Method method, std::uint64_t seed) {
  return std::string(to_string(method)) + "_seed" + std::to_string(seed) + ".csv";
}

ConsensusProblem make_problem(const ChainConfig& chain, std::uint64_t seed) {
  Rng init(seed, StreamRole::kInit);
  return ConsensusProblem(chain, default_initial_point(chain.d, init));
}

EdgeFlipChain make_chain(const ConsensusProblem& problem, std::uint64_t seed) {
  return EdgeFlipChain(GraphState::base_only(problem.universe()),
                       problem.chain_config().flip_probability, Rng(seed, StreamRole::kChain));
}

Trace run_method(Method method, const ConsensusProblem& problem, const AgdParams& params,
                 double baseline_gamma, std::uint64_t seed, const StopRule& stop,
                 const IterateObserver& observer) {
  EdgeFlipChain chain = make_chain(problem, seed);
  Trace trace;
  switch (method) {
    case Method::kMagd: {
      Rng batch(seed, StreamRole::kBatch);
      trace = run_magd(problem, params, chain, batch, stop, observer);
      break;
    }
    case Method::kGossip:
      trace = run_gossip(problem, baseline_gamma, params.mu, chain, stop, observer);
      break;
    case Method::kSgd:
      trace = run_markov_sgd(problem, baseline_gamma, params.mu, chain, stop, observer);
      break;
  }
  trace.seed = seed;
  return trace;
}

namespace {

struct Job {
  Method method;
  std::uint64_t seed;
};

RunRecord execute(const ExperimentConfig& config, const ChainConfig& chain,
                  const RunManifest& m, const Job& job, const std::filesystem::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  const ConsensusProblem problem = make_problem(chain, job.seed);
  const double sum0 = problem.x0().sum();
  double drift = 0.0;
  auto observer = [&](const IterateView& v) {
    for (const Eigen::VectorXd* p : {&v.x, &v.x_f, &v.x_g}) {
      drift = std::max(drift, std::abs(p->sum() - sum0) / (1.0 + std::abs(sum0)));
    }
  };
  StopRule stop;
  stop.max_iters = config.max_iters;
  stop.dist_sq_floor = config.dist_sq_floor;
  const double baseline = job.method == Method::kGossip ? m.gossip_gamma : m.sgd_gamma;
  const Trace trace = run_method(job.method, problem, m.params, baseline, job.seed, stop, observer);

  RunRecord r;
  r.method = job.method;
  r.seed = job.seed;
  r.trace_file = trace_file_name(job.method, job.seed);
  r.termination = trace.termination;
  r.records = trace.records.size();
  r.final_oracle_calls = trace.records.back().oracle_calls;
  r.final_dist_sq = trace.records.back().dist_sq;
  r.max_sum_drift = drift;
  emit_csv(trace, dir / r.trace_file);
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
  const Analysis a = analyze(config);
  const DerivedParams derived = params_for(config, a.constants);

  RunManifest m;
  m.config = config;
  m.mixing_horizon = a.mixing_horizon;
  m.mixing_reached = a.mixing.reached;
  m.constants = a.constants;
  m.delta_analytic = a.noise.analytic_bound;
  m.delta_monte_carlo = a.noise.monte_carlo_max;
  m.params = derived.params;
  m.gamma_source = derived.binding;
  m.gossip_gamma = gossip_step(config, a.constants);
  m.sgd_gamma = sgd_step(config, a.constants);

  const std::filesystem::path dir(config.output_path);
  std::filesystem::create_directories(dir);

  std::vector<Job> jobs;
  for (Method method : config.methods) {
    for (std::uint64_t seed : config.seeds) jobs.push_back({method, seed});
  }
  m.runs.resize(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        m.runs[i] = execute(config, a.chain, m, jobs[i], dir);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  write_text(dir / kManifestName, manifest_to_text(m));
  std::ostringstream timing;
  for (std::size_t i = 0; i < m.runs.size(); ++i) {
    timing << "run." << i << ".wall_seconds=" << format_real(m.runs[i].wall_seconds) << '\n';
  }
  write_text(dir / kTimingName, timing.str());
  return m;
}

namespace {

constexpr std::string_view kManifestFormat = "magd-manifest-1";

class KeyValues {
 public:
  explicit KeyValues(std::string_view text) {
    int line_no = 0;
    while (!text.empty()) {
      const auto nl = text.find('\n');
      const std::string_view line = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      ++line_no;
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw std::runtime_error("manifest line " + std::to_string(line_no) + ": expected key=value");
      }
      values_.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("manifest: missing key " + key);
    return it->second;
  }

  template <typename T>
  T number(const std::string& key) const {
    const std::string& s = text(key);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::runtime_error("manifest: bad value for " + key + ": '" + s + "'");
    }
    return v;
  }

  const std::map<std::string, std::string>& all() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

GammaSource parse_gamma_source(std::string_view s) {
  for (GammaSource g : {GammaSource::kOverride, GammaSource::kSmoothness,
                        GammaSource::kMarkovNoise, GammaSource::kHorizon}) {
    if (to_string(g) == s) return g;
  }
  throw std::runtime_error("manifest: unknown gamma source '" + std::string(s) + "'");
}

}  // namespace

std::string manifest_to_text(const RunManifest& m) {
  std::ostringstream o;
  o << "format=" << kManifestFormat << '\n';
  for (const auto& [k, v] : config_entries(m.config)) o << "config." << k << '=' << v << '\n';
  o << "mixing.horizon=" << m.mixing_horizon << '\n';
  o << "mixing.reached=" << (m.mixing_reached ? 1 : 0) << '\n';
  o << "constants.mu=" << format_real(m.constants.mu) << '\n';
  o << "constants.L=" << format_real(m.constants.L_smooth) << '\n';
  o << "constants.delta=" << format_real(m.constants.delta) << '\n';
  o << "constants.delta_analytic=" << format_real(m.delta_analytic) << '\n';
  o << "constants.delta_monte_carlo=" << format_real(m.delta_monte_carlo) << '\n';
  o << "constants.sigma=" << format_real(m.constants.sigma) << '\n';
  o << "constants.tau=" << m.constants.tau << '\n';
  o << "params.gamma=" << format_real(m.params.gamma) << '\n';
  o << "params.gamma_source=" << to_string(m.gamma_source) << '\n';
  o << "params.beta=" << format_real(m.params.beta) << '\n';
  o << "params.eta=" << format_real(m.params.eta) << '\n';
  o << "params.theta=" << format_real(m.params.theta) << '\n';
  o << "params.M=" << m.params.M << '\n';
  o << "params.N=" << m.params.N << '\n';
  o << "params.C1=" << format_real(m.params.C1) << '\n';
  o << "baseline.gossip_gamma=" << format_real(m.gossip_gamma) << '\n';
  o << "baseline.sgd_gamma=" << format_real(m.sgd_gamma) << '\n';
  o << "runs=" << m.runs.size() << '\n';
  for (std::size_t i = 0; i < m.runs.size(); ++i) {
    const RunRecord& r = m.runs[i];
    const std::string p = "run." + std::to_string(i) + ".";
    o << p << "method=" << to_string(r.method) << '\n';
    o << p << "seed=" << r.seed << '\n';
    o << p << "trace=" << r.trace_file << '\n';
    o << p << "status=" << to_string(r.termination) << '\n';
    o << p << "records=" << r.records << '\n';
    o << p << "final_oracle_calls=" << r.final_oracle_calls << '\n';
    o << p << "final_dist_sq=" << format_real(r.final_dist_sq) << '\n';
    o << p << "max_sum_drift=" << format_real(r.max_sum_drift) << '\n';
  }
  return o.str();
}

RunManifest parse_manifest_text(std::string_view text) {
  const KeyValues kv(text);
  if (kv.text("format") != kManifestFormat) throw std::runtime_error("manifest: unknown format");
  RunManifest m;
  for (const auto& [k, v] : kv.all()) {
    if (k.rfind("config.", 0) == 0) apply_setting(m.config, {k.substr(7), v, "manifest"});
  }
  m.mixing_horizon = kv.number<std::int64_t>("mixing.horizon");
  m.mixing_reached = kv.number<int>("mixing.reached") != 0;
  m.constants.mu = kv.number<double>("constants.mu");
  m.constants.L_smooth = kv.number<double>("constants.L");
  m.constants.delta = kv.number<double>("constants.delta");
  m.delta_analytic = kv.number<double>("constants.delta_analytic");
  m.delta_monte_carlo = kv.number<double>("constants.delta_monte_carlo");
  m.constants.sigma = kv.number<double>("constants.sigma");
  m.constants.tau = kv.number<std::int64_t>("constants.tau");
  m.params.mu = m.constants.mu;
  m.params.gamma = kv.number<double>("params.gamma");
  m.gamma_source = parse_gamma_source(kv.text("params.gamma_source"));
  m.params.beta = kv.number<double>("params.beta");
  m.params.eta = kv.number<double>("params.eta");
  m.params.theta = kv.number<double>("params.theta");
  m.params.M = kv.number<std::uint64_t>("params.M");
  m.params.N = kv.number<std::int64_t>("params.N");
  m.params.C1 = kv.number<double>("params.C1");
  m.gossip_gamma = kv.number<double>("baseline.gossip_gamma");
  m.sgd_gamma = kv.number<double>("baseline.sgd_gamma");
  const auto n = kv.number<std::size_t>("runs");
  m.runs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    RunRecord& r = m.runs[i];
    const std::string p = "run." + std::to_string(i) + ".";
    r.method = parse_method(kv.text(p + "method"));
    r.seed = kv.number<std::uint64_t>(p + "seed");
    r.trace_file = kv.text(p + "trace");
    r.termination = parse_termination(kv.text(p + "status"));
    r.records = kv.number<std::size_t>(p + "records");
    r.final_oracle_calls = kv.number<std::uint64_t>(p + "final_oracle_calls");
    r.final_dist_sq = kv.number<double>(p + "final_dist_sq");
    r.max_sum_drift = kv.number<double>(p + "max_sum_drift");
  }
  return m;
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_manifest_text(buf.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::vector<std::string> check_manifest(const RunManifest& manifest,
                                        const std::filesystem::path& directory) {
  std::vector<std::string> problems;
  for (const RunRecord& r : manifest.runs) {
    const std::filesystem::path p = directory / r.trace_file;
    if (!std::filesystem::exists(p)) {
      problems.push_back("missing trace " + p.string());
      continue;
    }
    try {
      const std::vector<TraceRecord> rows = read_csv(p);
      if (rows.size() != r.records) problems.push_back(p.string() + ": record count differs");
      if (rows.empty() || rows.back().oracle_calls != r.final_oracle_calls) {
        problems.push_back(p.string() + ": final oracle calls differ");
      }
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
  }
  return problems;
}

}  // namespace magd
