#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace magd {

struct TraceRecord {
  std::int64_t iter = 0;
  std::uint64_t oracle_calls = 0;
  double dist_sq = 0.0;
  double f_gap = 0.0;
  double lyapunov = 0.0;
  std::uint64_t samples_used = 0;

  bool operator==(const TraceRecord&) const = default;
};

enum class Termination { kMaxIters, kReachedFloor, kOracleBudget, kNonFinite };

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view text);

/// Per-iteration diagnostics of one run. Record 0 is the starting point.
struct Trace {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> records;
  Termination termination = Termination::kMaxIters;
};

inline constexpr std::string_view kCsvHeader =
    "iter,oracle_calls,dist_sq,f_gap,lyapunov,samples_used";

/// %.17g formatting; reads back to the identical double.
std::string format_real(double value);

std::string trace_to_csv(const Trace& trace);
/// Parses rows written by trace_to_csv; method/seed are not part of the CSV.
std::vector<TraceRecord> parse_trace_csv(std::string_view text);

/// Writes the CSV; I/O failures throw std::runtime_error naming the path.
void emit_csv(const Trace& trace, const std::filesystem::path& path);
std::vector<TraceRecord> read_csv(const std::filesystem::path& path);

}  // namespace magd
