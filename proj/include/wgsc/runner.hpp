#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wgsc/registry.hpp"

namespace wgsc {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInfrastructure = 3;

struct SuiteEntry {
  std::string id;
  nlohmann::json params = nlohmann::json::object();
};

/// {"model": {...}, "weight": {...}, "surface": {...}, "fields": {"name": spec},
///  "suite": ["ibp", {"id": "gauss_green", "params": {...}}], "budget": N,
///  "seed": S, "method": "auto" | "mc" | "gh", "out": "dir",
///  "tolerance": {"floor": x, "<check id>": x}}
struct RunConfig {
  nlohmann::json model;
  nlohmann::json weight = {{"kind", "unit"}};
  nlohmann::json surface;  // null when absent
  nlohmann::json fields = nlohmann::json::object();
  std::vector<SuiteEntry> suite;
  std::size_t budget = 1'000'000;
  std::uint64_t seed = 1;
  std::string method = "auto";
  std::string out = "wgsc_out";
  nlohmann::json tolerance = nlohmann::json::object();

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Parses config text; syntax errors report line and column.
RunConfig parse_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

CheckContext make_context(const RunConfig& config);

struct CheckRun {
  SuiteEntry entry;
  CheckOutput output;
  bool pass() const;
};

struct SuiteResult {
  std::vector<CheckRun> checks;

  bool pass() const;
  std::vector<IdentityReport> reports() const;
  std::string ledger_csv() const;
  nlohmann::json detail(const RunConfig& config) const;
  std::string summary_table() const;
};

/// Runs every suite entry. Throws ConfigError for bad specs, unknown ids or
/// out-of-range parameters; other exceptions propagate.
SuiteResult run_suite(const RunConfig& config);

/// ledger.csv and report.json in `dir`.
void write_outputs(const RunConfig& config, const SuiteResult& result, const std::filesystem::path& dir);

/// run_suite + write_outputs + summary, mapped to the exit codes above.
int execute(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace wgsc
