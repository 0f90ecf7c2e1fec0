#include "magd/verify.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "magd/estimator.hpp"
#include "magd/harness.hpp"
#include "magd/trace.hpp"

namespace magd {

std::string_view to_string(LemmaCheckKind kind) {
  switch (kind) {
    case LemmaCheckKind::kMse: return "mse";
    case LemmaCheckKind::kIdentity: return "identity";
    case LemmaCheckKind::kVariance: return "variance";
  }
  return "mse";
}

LemmaCheckKind parse_lemma_check_kind(std::string_view text) {
  if (text == "mse") return LemmaCheckKind::kMse;
  if (text == "identity") return LemmaCheckKind::kIdentity;
  if (text == "variance") return LemmaCheckKind::kVariance;
  throw std::runtime_error("report: unknown check '" + std::string(text) + "'");
}

double LemmaCheck::ratio() const {
  if (empirical == 0.0) return std::numeric_limits<double>::infinity();
  return bound / empirical;
}

bool LemmaReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.passed(); });
}

bool LemmaReport::operator==(const LemmaReport& o) const {
  return constants.mu == o.constants.mu && constants.L_smooth == o.constants.L_smooth &&
         constants.delta == o.constants.delta && constants.sigma == o.constants.sigma &&
         constants.tau == o.constants.tau && trials == o.trials && checks == o.checks;
}

std::vector<Eigen::VectorXd> probe_points(int d, std::uint64_t analysis_seed) {
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < kProbeCount; ++i) {
    Rng rng(analysis_seed, StreamRole::kProbe, static_cast<std::uint64_t>(i));
    out.push_back(default_initial_point(d, rng));
  }
  return out;
}

LemmaReport verify_lemmas(const ChainConfig& chain, const ProblemConstants& constants,
                          int trials, std::uint64_t analysis_seed) {
  if (trials < 10000) throw InvalidArgument("verify: mc_trials must be >= 10^4");
  LemmaReport report;
  report.constants = constants;
  report.trials = trials;
  const auto probes = probe_points(chain.d, analysis_seed);
  for (int p = 0; p < kProbeCount; ++p) {
    const Eigen::VectorXd& x = probes[p];
    const Eigen::VectorXd x_star = Eigen::VectorXd::Constant(x.size(), x.mean());
    // The oracle and the mean operator round differently; allow for it so a
    // zero bound (one-state chain) is not failed by 1e-30 residue.
    const double slack = 1e-12 * (1.0 + MeanLaplacianOperator(chain)(x).norm());
    std::uint64_t stream = static_cast<std::uint64_t>(p) * 16;
    for (int n : {1, 4, 16, 64}) {
      Rng rng(analysis_seed, StreamRole::kMonteCarlo, stream++);
      const MseCheck c = verify_mse_bound(chain, x, x_star, constants, n, trials, rng);
      report.checks.push_back({LemmaCheckKind::kMse, p, static_cast<std::uint64_t>(n),
                               c.empirical_mse, c.bound + slack * slack});
    }
    {
      Rng rng(analysis_seed, StreamRole::kMonteCarlo, stream++);
      const IdentityCheck c = verify_estimator_identity(chain, x, kLemmaTruncation, trials, rng);
      report.checks.push_back({LemmaCheckKind::kIdentity, p, kLemmaTruncation, c.difference_norm,
                               3.0 * c.combined_standard_error + slack});
    }
    {
      Rng rng(analysis_seed, StreamRole::kMonteCarlo, stream++);
      const VarianceCheck c =
          verify_variance_bound(chain, x, x_star, constants, kLemmaTruncation, trials, rng);
      report.checks.push_back(
          {LemmaCheckKind::kVariance, p, kLemmaTruncation, c.empirical, c.bound + slack * slack});
    }
  }
  return report;
}

LemmaReport verify_lemmas(const ExperimentConfig& config) {
  config.validate();
  if (config.mc_trials < 10000) throw ConfigError("config", "verify needs mc_trials >= 10000");
  const Analysis a = analyze(config);
  return verify_lemmas(a.chain, a.constants, config.mc_trials, config.analysis_seed);
}

namespace {

constexpr std::string_view kReportHeader = "check,probe,parameter,empirical,bound,ratio,pass";

template <typename T>
T to_number(std::string_view s, int line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("report line " + std::to_string(line) + ": bad number '" +
                             std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(sep);
    out.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) return out;
    s.remove_prefix(pos + 1);
  }
}

}  // namespace

std::string report_to_text(const LemmaReport& r) {
  std::ostringstream o;
  o << "tau=" << r.constants.tau << '\n';
  o << "mu=" << format_real(r.constants.mu) << '\n';
  o << "L=" << format_real(r.constants.L_smooth) << '\n';
  o << "delta=" << format_real(r.constants.delta) << '\n';
  o << "sigma=" << format_real(r.constants.sigma) << '\n';
  o << "trials=" << r.trials << '\n';
  o << kReportHeader << '\n';
  for (const LemmaCheck& c : r.checks) {
    o << to_string(c.kind) << ',' << c.probe << ',' << c.parameter << ','
      << format_real(c.empirical) << ',' << format_real(c.bound) << ','
      << format_real(c.ratio()) << ',' << (c.passed() ? "pass" : "fail") << '\n';
  }
  return o.str();
}

LemmaReport parse_report_text(std::string_view text) {
  LemmaReport r;
  const std::vector<std::string_view> lines = split(text, '\n');
  bool in_table = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const int no = static_cast<int>(i) + 1;
    if (line.empty()) continue;
    if (!in_table) {
      if (line == kReportHeader) {
        in_table = true;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw std::runtime_error("report line " + std::to_string(no) + ": expected key=value");
      }
      const std::string_view key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key == "tau") r.constants.tau = to_number<std::int64_t>(value, no);
      else if (key == "mu") r.constants.mu = to_number<double>(value, no);
      else if (key == "L") r.constants.L_smooth = to_number<double>(value, no);
      else if (key == "delta") r.constants.delta = to_number<double>(value, no);
      else if (key == "sigma") r.constants.sigma = to_number<double>(value, no);
      else if (key == "trials") r.trials = to_number<int>(value, no);
      else throw std::runtime_error("report line " + std::to_string(no) + ": unknown key");
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 7) {
      throw std::runtime_error("report line " + std::to_string(no) + ": expected 7 fields");
    }
    LemmaCheck c;
    c.kind = parse_lemma_check_kind(f[0]);
    c.probe = to_number<int>(f[1], no);
    c.parameter = to_number<std::uint64_t>(f[2], no);
    c.empirical = to_number<double>(f[3], no);
    c.bound = to_number<double>(f[4], no);
    if ((f[6] == "pass") != c.passed()) {
      throw std::runtime_error("report line " + std::to_string(no) + ": pass flag inconsistent");
    }
    r.checks.push_back(c);
  }
  if (!in_table) throw std::runtime_error("report: missing check table");
  return r;
}

}  // namespace magd
