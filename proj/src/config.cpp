#include "magd/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "magd/trace.hpp"

namespace magd {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kMagd: return "magd";
    case Method::kGossip: return "gossip";
    case Method::kSgd: return "sgd";
  }
  return "magd";
}

Method parse_method(std::string_view text) {
  if (text == "magd") return Method::kMagd;
  if (text == "gossip") return Method::kGossip;
  if (text == "sgd") return Method::kSgd;
  throw InvalidArgument("unknown method '" + std::string(text) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(',');
    const std::string_view item = trim(s.substr(0, pos));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, const std::string& origin, std::string_view key) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(origin, "cannot parse '" + std::string(text) + "' as a value for " +
                                  std::string(key));
  }
  return value;
}

std::optional<double> parse_optional_real(std::string_view text, const std::string& origin,
                                          std::string_view key) {
  const std::string_view t = trim(text);
  if (t.empty() || t == "none" || t == "auto") return std::nullopt;
  return parse_number<double>(t, origin, key);
}

std::string optional_text(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string("none");
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (std::string_view item : split_list(text)) {
    seeds.push_back(parse_number<std::uint64_t>(item, "seeds", "seeds"));
  }
  return seeds;
}

void apply_setting(ExperimentConfig& c, const Setting& s) {
  const std::string& k = s.key;
  const std::string_view v = trim(s.value);
  try {
    if (k == "topology") {
      c.topology = parse_topology_kind(v);
    } else if (k == "d") {
      c.d = parse_number<int>(v, s.origin, k);
    } else if (k == "methods") {
      c.methods.clear();
      for (std::string_view m : split_list(v)) c.methods.push_back(parse_method(m));
    } else if (k == "seeds") {
      c.seeds.clear();
      for (std::string_view item : split_list(v)) {
        c.seeds.push_back(parse_number<std::uint64_t>(item, s.origin, k));
      }
    } else if (k == "max_iters") {
      c.max_iters = parse_number<std::int64_t>(v, s.origin, k);
    } else if (k == "gamma") {
      c.gamma_override = parse_optional_real(v, s.origin, k);
    } else if (k == "gamma_scale") {
      c.gamma_scale = parse_number<double>(v, s.origin, k);
    } else if (k == "output_path") {
      c.output_path = std::string(v);
    } else if (k == "mixing_horizon") {
      c.mixing_horizon = parse_number<std::int64_t>(v, s.origin, k);
    } else if (k == "mc_trials") {
      c.mc_trials = parse_number<int>(v, s.origin, k);
    } else if (k == "flip_probability") {
      c.flip_probability = parse_number<double>(v, s.origin, k);
    } else if (k == "mixing_replicas") {
      c.mixing_replicas = parse_number<int>(v, s.origin, k);
    } else if (k == "delta_samples") {
      c.delta_samples = parse_number<int>(v, s.origin, k);
    } else if (k == "analysis_seed") {
      c.analysis_seed = parse_number<std::uint64_t>(v, s.origin, k);
    } else if (k == "dist_sq_floor") {
      c.dist_sq_floor = parse_number<double>(v, s.origin, k);
    } else if (k == "gossip_gamma") {
      c.gossip_gamma = parse_optional_real(v, s.origin, k);
    } else if (k == "sgd_gamma") {
      c.sgd_gamma = parse_optional_real(v, s.origin, k);
    } else if (k == "threads") {
      c.threads = parse_number<int>(v, s.origin, k);
    } else {
      throw ConfigError(s.origin, "unknown key '" + k + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(s.origin, e.what());
  }
}

std::vector<Setting> parse_config_text(std::string_view text, std::string_view source) {
  std::vector<Setting> out;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const auto hash = line.find_first_of("#;");
    line = trim(line.substr(0, hash));
    if (line.empty() || line.front() == '[') continue;
    const std::string origin = std::string(source) + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(origin, "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin, "missing key before '='");
    out.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), origin});
  }
  return out;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("config", msg); };
  if (topology == TopologyKind::kCustom) fail("topology must be cycle or star");
  if (topology == TopologyKind::kCycle && d < 3) {
    fail("cycle topology requires d >= 3 (got d = " + std::to_string(d) + ")");
  }
  if (topology == TopologyKind::kStar && d < 2) {
    fail("star topology requires d >= 2 (got d = " + std::to_string(d) + ")");
  }
  if (seeds.empty()) fail("seeds must be non-empty");
  if (methods.empty()) fail("methods must be non-empty");
  if (max_iters < 1) fail("max_iters must be >= 1");
  if (gamma_override && !(*gamma_override > 0.0)) fail("gamma must be > 0");
  if (!(gamma_scale > 0.0)) fail("gamma_scale must be > 0");
  if (output_path.empty()) fail("output_path must be non-empty");
  if (mixing_horizon < 0) fail("mixing_horizon must be >= 0 (0 = auto)");
  if (mc_trials < 1) fail("mc_trials must be >= 1");
  if (!(flip_probability > 0.0 && flip_probability <= 1.0)) {
    fail("flip_probability must lie in (0, 1]");
  }
  if (mixing_replicas < 100) fail("mixing_replicas must be >= 100");
  if (delta_samples < 1) fail("delta_samples must be >= 1");
  if (gossip_gamma && !(*gossip_gamma > 0.0)) fail("gossip_gamma must be > 0");
  if (sgd_gamma && !(*sgd_gamma > 0.0)) fail("sgd_gamma must be > 0");
  if (threads < 0) fail("threads must be >= 0");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail("seeds must be distinct");
  }
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<Setting>& flags) {
  ExperimentConfig config;
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw ConfigError(file->string(), "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    for (const Setting& s : parse_config_text(buf.str(), file->string())) {
      apply_setting(config, s);
    }
  }
  for (const Setting& s : flags) apply_setting(config, s);
  config.validate();
  return config;
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
  std::string methods;
  for (Method m : c.methods) {
    if (!methods.empty()) methods += ',';
    methods += to_string(m);
  }
  std::string seeds;
  for (std::uint64_t s : c.seeds) {
    if (!seeds.empty()) seeds += ',';
    seeds += std::to_string(s);
  }
  return {
      {"topology", std::string(to_string(c.topology))},
      {"d", std::to_string(c.d)},
      {"methods", methods},
      {"seeds", seeds},
      {"max_iters", std::to_string(c.max_iters)},
      {"gamma", optional_text(c.gamma_override)},
      {"gamma_scale", format_real(c.gamma_scale)},
      {"output_path", c.output_path},
      {"mixing_horizon", std::to_string(c.mixing_horizon)},
      {"mc_trials", std::to_string(c.mc_trials)},
      {"flip_probability", format_real(c.flip_probability)},
      {"mixing_replicas", std::to_string(c.mixing_replicas)},
      {"delta_samples", std::to_string(c.delta_samples)},
      {"analysis_seed", std::to_string(c.analysis_seed)},
      {"dist_sq_floor", format_real(c.dist_sq_floor)},
      {"gossip_gamma", optional_text(c.gossip_gamma)},
      {"sgd_gamma", optional_text(c.sgd_gamma)},
      {"threads", std::to_string(c.threads)},
  };
}

}  // namespace magd
