#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "bsc/adaptive.hpp"
#include "bsc/bsc.hpp"

namespace bsc::io {

using ConfigValue = std::variant<std::string, double, long long, bool>;
using ConfigEcho = std::vector<std::pair<std::string, ConfigValue>>;

/// Shortest representation that parses back to the same double.
std::string format_number(double value);
std::string format_value(const ConfigValue& value);

/// RFC 4180 field: quoted when it contains a comma, quote, CR or LF.
std::string csv_field(std::string_view text);

enum class CsvSchema {
  /// One row per increment evaluation: k,t,u,du,dup,Hprime,status
  trials,
  /// One row per iteration with residual, kappa and inner iteration counts.
  iterations,
};

struct RunReport {
  std::string experiment;
  ConfigEcho config;
  SolveOutcome outcome;
  /// Additional summary fields (phase counts, solution labels, ...).
  ConfigEcho summary;
  std::optional<std::vector<adaptive::MeshHistoryEntry>> mesh_history;
};

/// Lines "# key=value", experiment first.
void write_config_echo(std::ostream& os, const RunReport& report);
void write_csv(std::ostream& os, const RunReport& report, CsvSchema schema);
/// {"config": ..., "trace": [...], "summary": {...}} plus "mesh_history" when present.
void write_json(std::ostream& os, const RunReport& report);
/// Fixed-width table with two significant digits, for reading by eye.
void write_pretty(std::ostream& os, const RunReport& report, CsvSchema schema);

/// "status=converged iterations=6 residual_v=..."
std::string summary_line(const RunReport& report);

}  // namespace bsc::io
