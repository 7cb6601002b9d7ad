#include "wgsc/runner.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace wgsc {

using nlohmann::json;

namespace {

const char* const kKnownKeys[] = {"model", "weight", "surface", "fields", "suite",
                                  "budget", "seed", "method", "out", "tolerance"};

std::string location(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

SuiteEntry entry_from(const json& j, std::size_t i) {
  SuiteEntry e;
  if (j.is_string()) {
    e.id = j.get<std::string>();
  } else if (j.is_object()) {
    e.id = j.at("id").get<std::string>();
    if (j.contains("params")) e.params = j.at("params");
    if (!e.params.is_object()) throw ConfigError("suite[" + std::to_string(i) + "].params must be an object");
  } else {
    throw ConfigError("suite[" + std::to_string(i) + "] must be a check id or {\"id\": ..., \"params\": {...}}");
  }
  if (!find_check(e.id)) throw ConfigError("suite[" + std::to_string(i) + "]: unknown check '" + e.id + "'");
  return e;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys))
      throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    if (!j.contains("model")) throw ConfigError("config needs a 'model'");
    c.model = j.at("model");
    if (j.contains("weight")) c.weight = j.at("weight");
    if (j.contains("surface")) c.surface = j.at("surface");
    if (j.contains("fields")) c.fields = j.at("fields");
    if (!c.fields.is_object()) throw ConfigError("'fields' must be an object of named specs");
    if (j.contains("suite")) {
      const auto& s = j.at("suite");
      if (!s.is_array()) throw ConfigError("'suite' must be an array");
      for (std::size_t i = 0; i < s.size(); ++i) c.suite.push_back(entry_from(s[i], i));
    }
    if (j.contains("budget")) c.budget = j.at("budget").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("method")) c.method = j.at("method").get<std::string>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("tolerance")) c.tolerance = j.at("tolerance");
    if (!c.tolerance.is_object()) throw ConfigError("'tolerance' must be an object");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.method != "auto" && c.method != "mc" && c.method != "gh" && c.method != "gauss_hermite")
    throw ConfigError("method must be auto, mc or gh");
  return c;
}

json RunConfig::to_json() const {
  json s = json::array();
  for (const auto& e : suite) s.push_back({{"id", e.id}, {"params", e.params}});
  json j{{"model", model}, {"weight", weight}, {"fields", fields}, {"suite", s},       {"budget", budget},
         {"seed", seed},   {"method", method}, {"out", out},       {"tolerance", tolerance}};
  if (!surface.is_null()) j["surface"] = surface;
  return j;
}

RunConfig parse_config(std::string_view text, std::string_view source) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError(std::string(source) + ": JSON syntax error at " + location(text, at) + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

CheckContext make_context(const RunConfig& config) {
  try {
    GaussianModel model = GaussianModel::from_json(config.model);
    Weight weight = Weight::from_json(config.weight, model);
    std::optional<LevelSetSurface> surface;
    if (!config.surface.is_null()) surface = parse_surface(config.surface, model, config.fields);
    CheckContext c{std::move(model), std::move(weight), std::move(surface)};
    c.fields = config.fields;
    c.budget = config.budget;
    c.seed = config.seed;
    c.method = config.method;
    c.tolerance = config.tolerance;
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

bool CheckRun::pass() const {
  return !output.reports.empty() &&
         std::all_of(output.reports.begin(), output.reports.end(), [](const IdentityReport& r) { return r.pass; });
}

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRun& c) { return c.pass(); });
}

std::vector<IdentityReport> SuiteResult::reports() const {
  std::vector<IdentityReport> out;
  for (const auto& c : checks) out.insert(out.end(), c.output.reports.begin(), c.output.reports.end());
  return out;
}

std::string SuiteResult::ledger_csv() const { return ledger(reports()); }

json SuiteResult::detail(const RunConfig& config) const {
  json checks_json = json::array();
  for (const auto& c : checks) {
    json reps = json::array();
    for (const auto& r : c.output.reports) reps.push_back(r.to_json());
    const auto* info = find_check(c.entry.id);
    checks_json.push_back({{"id", c.entry.id},
                           {"title", info ? info->title : ""},
                           {"formula", info ? info->formula : ""},
                           {"params", c.entry.params},
                           {"pass", c.pass()},
                           {"reports", reps},
                           {"detail", c.output.detail}});
  }
  return {{"config", config.to_json()}, {"pass", pass()}, {"checks", checks_json}};
}

std::string SuiteResult::summary_table() const {
  std::ostringstream os;
  std::size_t width = 11;
  for (const auto& r : reports()) width = std::max(width, r.identity_id.size());
  os << std::left << std::setw(static_cast<int>(width)) << "identity_id" << "  " << std::right << std::setw(14) << "lhs"
     << std::setw(14) << "rhs" << std::setw(12) << "|delta|" << std::setw(12) << "tol" << "  result\n";
  for (const auto& r : reports()) {
    os << std::left << std::setw(static_cast<int>(width)) << r.identity_id << "  " << std::right << std::setprecision(7)
       << std::setw(14) << r.lhs.value << std::setw(14) << r.rhs.value << std::setprecision(3) << std::setw(12)
       << r.delta << std::setw(12) << r.tol << "  " << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  std::size_t failed = 0;
  for (const auto& r : reports()) failed += r.pass ? 0 : 1;
  os << reports().size() - failed << " passed, " << failed << " failed\n";
  return os.str();
}

SuiteResult run_suite(const RunConfig& config) {
  const CheckContext ctx = make_context(config);
  SuiteResult result;
  for (std::size_t i = 0; i < config.suite.size(); ++i) {
    const auto& e = config.suite[i];
    const CheckInfo* info = find_check(e.id);
    if (!info) throw ConfigError("unknown check '" + e.id + "'");
    const std::string where = "suite[" + std::to_string(i) + "] (" + e.id + "): ";
    CheckRun run{e, {}};
    try {
      run.output = info->run(ctx, e.params);
    } catch (const ConfigError& err) {
      throw ConfigError(where + err.what());
    } catch (const json::exception& err) {
      throw ConfigError(where + err.what());
    } catch (const std::invalid_argument& err) {
      throw ConfigError(where + err.what());
    } catch (const std::out_of_range& err) {
      throw ConfigError(where + err.what());
    }
    if (e.params.contains("label"))
      for (auto& r : run.output.reports) r.identity_id = e.params.at("label").get<std::string>() + "/" + r.identity_id;
    result.checks.push_back(std::move(run));
  }
  return result;
}

void write_outputs(const RunConfig& config, const SuiteResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "ledger.csv", std::ios::binary);
  csv << result.ledger_csv();
  std::ofstream js(dir / "report.json", std::ios::binary);
  js << result.detail(config).dump(2) << '\n';
  if (!csv || !js) throw std::runtime_error("failed writing reports to '" + dir.string() + "'");
}

int execute(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const SuiteResult result = run_suite(config);
    write_outputs(config, result, config.out);
    out << result.summary_table();
    return result.pass() ? kExitPass : kExitCheckFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfrastructure;
  }
}

}  // namespace wgsc
