#include "magd/trace.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "magd/errors.hpp"

namespace magd {

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kMaxIters: return "max_iters";
    case Termination::kReachedFloor: return "reached_floor";
    case Termination::kOracleBudget: return "oracle_budget";
    case Termination::kNonFinite: return "non_finite";
  }
  return "max_iters";
}

Termination parse_termination(std::string_view text) {
  for (Termination t : {Termination::kMaxIters, Termination::kReachedFloor,
                        Termination::kOracleBudget, Termination::kNonFinite}) {
    if (to_string(t) == text) return t;
  }
  throw InvalidArgument("unknown termination '" + std::string(text) + "'");
}

std::string format_real(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string trace_to_csv(const Trace& trace) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const TraceRecord& r : trace.records) {
    out += std::to_string(r.iter);
    out += ',';
    out += std::to_string(r.oracle_calls);
    out += ',';
    out += format_real(r.dist_sq);
    out += ',';
    out += format_real(r.f_gap);
    out += ',';
    out += format_real(r.lyapunov);
    out += ',';
    out += std::to_string(r.samples_used);
    out += '\n';
  }
  return out;
}

namespace {

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw InvalidArgument("trace csv line " + std::to_string(line) + ": bad field '" +
                          std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::vector<TraceRecord> parse_trace_csv(std::string_view text) {
  std::vector<TraceRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kCsvHeader) throw InvalidArgument("trace csv: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::string_view fields[6];
    std::size_t start = 0;
    for (int f = 0; f < 6; ++f) {
      const std::size_t comma = f < 5 ? line.find(',', start) : line.size();
      if (comma == std::string_view::npos) {
        throw InvalidArgument("trace csv line " + std::to_string(line_no) + ": too few fields");
      }
      fields[f] = line.substr(start, comma - start);
      start = comma + 1;
    }
    if (fields[5].find(',') != std::string_view::npos) {
      throw InvalidArgument("trace csv line " + std::to_string(line_no) + ": too many fields");
    }
    TraceRecord r;
    r.iter = parse_field<std::int64_t>(fields[0], line_no);
    r.oracle_calls = parse_field<std::uint64_t>(fields[1], line_no);
    r.dist_sq = parse_field<double>(fields[2], line_no);
    r.f_gap = parse_field<double>(fields[3], line_no);
    r.lyapunov = parse_field<double>(fields[4], line_no);
    r.samples_used = parse_field<std::uint64_t>(fields[5], line_no);
    out.push_back(r);
  }
  if (line_no == 0) throw InvalidArgument("trace csv: missing header");
  return out;
}

void emit_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const std::string text = trace_to_csv(trace);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<TraceRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace_csv(ss.str());
}

}  // namespace magd
