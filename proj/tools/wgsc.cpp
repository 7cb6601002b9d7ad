// Command-line front end for the check registry.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "wgsc/runner.hpp"

namespace {

using nlohmann::json;
using namespace wgsc;

// A CLI value that is either inline JSON or a bare name/spec string.
json json_or_string(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

int list_checks() {
  for (const auto& c : check_registry()) std::cout << c.id << "  " << c.title << '\n';
  return kExitPass;
}

int describe(const std::string& id) {
  const CheckInfo* c = find_check(id);
  if (!c) {
    std::cerr << "unknown check '" << id << "'; see list-checks\n";
    return kExitConfigError;
  }
  std::cout << c->id << ": " << c->title << "\n  " << c->formula << "\n  params: " << c->params << '\n';
  return kExitPass;
}

// Appends rows to dir/ledger.csv, writing the header only for a new file.
void append_ledger(const std::filesystem::path& dir, const SuiteResult& result) {
  std::filesystem::create_directories(dir);
  const auto path = dir / "ledger.csv";
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (fresh) out << kLedgerHeader << '\n';
  for (const auto& r : result.reports()) out << ledger_row(r) << '\n';
  if (!out) throw std::runtime_error("cannot append to " + path.string());
}

int run_rows(const RunConfig& config, bool append) {
  try {
    const SuiteResult result = run_suite(config);
    if (append)
      append_ledger(config.out, result);
    else
      write_outputs(config, result, config.out);
    std::cout << result.summary_table();
    return result.pass() ? kExitPass : kExitCheckFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfrastructure;
  }
}

bool is_gauss_green_family(const std::string& id) {
  return id == "gauss_green" || id == "gauss_green_hyperplane" || id == "vector_gauss_green" || id == "trace_q";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of Gauss-Green identities for weighted Gaussian measures"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::optional<std::string> out_dir;
  unsigned workers = 0;

  auto* run = app.add_subcommand("run", "Run the suite of a JSON config");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--budget", budget, "Override the config budget");
  run->add_option("--out", out_dir, "Output directory for ledger.csv and report.json");
  run->add_option("--workers", workers, "Worker threads (0 = hardware concurrency)");

  app.add_subcommand("list-checks", "List registered check ids");

  std::string describe_id;
  auto* desc = app.add_subcommand("describe", "Print the identity a check verifies");
  desc->add_option("check-id", describe_id)->required();

  auto* check = app.add_subcommand("check", "Run one family of checks");
  check->require_subcommand(1);
  std::string weight_spec = "unit";
  std::string field_spec = "gradient:bump";
  std::string model_spec = R"({"spectrum": [1.0, 0.5, 0.25, 0.125]})";
  std::string method = "mc";
  std::size_t div_budget = 1'000'000;
  std::uint64_t div_seed = 1;
  auto* div = check->add_subcommand("divergence", "Adjointness and energy identities for one vector field");
  div->add_option("--weight", weight_spec, "Weight: kind name or JSON spec");
  div->add_option("--field", field_spec, "Vector field spec");
  div->add_option("--model", model_spec, "Model JSON");
  div->add_option("--budget", div_budget, "Monte Carlo budget");
  div->add_option("--seed", div_seed, "Seed");
  div->add_option("--method", method, "mc or gh");
  div->add_option("--out", out_dir, "Directory of the ledger to append to");
  auto* gg = check->add_subcommand("gauss-green", "Gauss-Green checks of a config, appended to its ledger");
  gg->add_option("--config", config_path, "Config file")->required();
  gg->add_option("--out", out_dir, "Directory of the ledger to append to");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfigError;
  }
  set_worker_count(workers);

  if (app.got_subcommand("list-checks")) return list_checks();
  if (app.got_subcommand("describe")) return describe(describe_id);

  try {
    if (app.got_subcommand("run")) {
      RunConfig cfg = load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (budget) cfg.budget = *budget;
      if (out_dir) cfg.out = *out_dir;
      return execute(cfg, std::cout, std::cerr);
    }
    if (div->parsed()) {
      json w = json_or_string(weight_spec);
      if (w.is_string()) w = json{{"kind", w}};
      json j{{"model", json::parse(model_spec)}, {"weight", w}, {"method", method},
             {"budget", div_budget},             {"seed", div_seed}, {"fields", {{"Phi", json_or_string(field_spec)}}}};
      j["suite"] = json::array({json{{"id", "adjoint"}, {"params", {{"Phi", "Phi"}}}}});
      RunConfig cfg = RunConfig::from_json(j);
      const Weight weight = Weight::from_json(cfg.weight, GaussianModel::from_json(cfg.model));
      if (weight.has_hessian()) cfg.suite.push_back({"energy", {{"Phi", "Phi"}}});
      cfg.out = out_dir.value_or("wgsc_out");
      return run_rows(cfg, true);
    }
    if (gg->parsed()) {
      RunConfig cfg = load_config(config_path);
      if (out_dir) cfg.out = *out_dir;
      std::vector<SuiteEntry> keep;
      for (const auto& e : cfg.suite)
        if (is_gauss_green_family(e.id)) keep.push_back(e);
      if (keep.empty()) keep.push_back({"gauss_green", json::object()});
      cfg.suite = std::move(keep);
      return run_rows(cfg, true);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfrastructure;
  }
  return kExitConfigError;
}
