// Acceptance matrix: each criterion runs suite configs from tests/configs and
// prints one PASS/FAIL line. Exits 1 if any criterion fails.

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "wgsc/runner.hpp"

namespace {

using namespace wgsc;

const std::filesystem::path kConfigDir = WGSC_TEST_CONFIG_DIR;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back(what);
    }
  }
};

RunConfig config(const std::string& name) { return load_config(kConfigDir / (name + ".json")); }

// Every report of every suite entry must pass; failing rows become notes.
void run_all(Outcome& o, const std::string& name, std::size_t min_rows = 1) {
  const SuiteResult r = run_suite(config(name));
  const auto reports = r.reports();
  o.require(reports.size() >= min_rows, name + ": expected at least " + std::to_string(min_rows) + " rows, got " +
                                            std::to_string(reports.size()));
  for (const auto& rep : reports) {
    std::string note = name + ": " + rep.identity_id + " lhs=" + format_double(rep.lhs.value) +
                       " rhs=" + format_double(rep.rhs.value) + " delta=" + format_double(rep.delta) +
                       " tol=" + format_double(rep.tol);
    for (const auto& w : rep.warnings) note += " [" + w + "]";
    o.require(rep.pass, note);
  }
}

Outcome c1() {
  Outcome o;
  run_all(o, "ibp", 8);
  return o;
}

Outcome c2() {
  Outcome o;
  run_all(o, "bilinear", 4);
  return o;
}

Outcome c3() {
  Outcome o;
  run_all(o, "energy_square_norm", 2);
  return o;
}

Outcome c4() {
  Outcome o;
  run_all(o, "condition41_square_norm", 8);
  run_all(o, "condition41_gaussian_type", 1);
  return o;
}

Outcome c5() {
  Outcome o;
  // 2 weights x 2 phi x 4 directions + the closed-form row.
  run_all(o, "gauss_green_hyperplane", 17);
  run_all(o, "gauss_green_hyperplane_tilted", 17);
  const auto rows = run_suite(config("gauss_green_hyperplane")).reports();
  const auto& closed = rows.back();
  o.require(closed.identity_id == "closed_form[k=1]", "closed-form row missing");
  o.require(std::abs(closed.rhs.value - 0.3989422804014327) < 1e-15, "closed form is not 1/sqrt(2 pi)");
  return o;
}

Outcome c6() {
  Outcome o;
  run_all(o, "gauss_green_sphere_unit", 3);
  run_all(o, "gauss_green_sphere_gaussian_type", 3);
  return o;
}

Outcome c7() {
  Outcome o;
  run_all(o, "trace_q_hyperplane", 4);
  run_all(o, "trace_q_sphere", 4);
  return o;
}

Outcome c8() {
  Outcome o;
  run_all(o, "surface_measure_hyperplane", 7);
  run_all(o, "surface_measure_sphere", 7);
  return o;
}

Outcome c9() {
  Outcome o;
  // Threshold for w^s with s = 2: lambda* = 1 / (2 s lambda_max).
  const RunConfig below = config("hypothesis1_below");
  const RunConfig above = config("hypothesis1_above");
  const GaussianModel m = GaussianModel::from_json(below.model);
  const double eta = exp_quadratic_threshold(m);
  const double s = Weight::from_json(below.weight, m).exponents().s;
  const double lambda_star = eta / s;
  o.require(below.weight.at("lambda").get<double>() < lambda_star, "below config is not below the threshold");
  o.require(above.weight.at("lambda").get<double>() > lambda_star, "above config is not above the threshold");
  run_all(o, "hypothesis1_below", 4);
  run_all(o, "hypothesis1_above", 1);
  run_all(o, "hypothesis2_hyperplane", 5);
  run_all(o, "hypothesis2_sphere", 5);
  run_all(o, "hypothesis2_path_sphere", 5);
  return o;
}

Outcome c10() {
  Outcome o;
  run_all(o, "gradient_calculus", 30);
  return o;
}

Outcome c11() {
  Outcome o;
  run_all(o, "fernique", 4);
  return o;
}

Outcome c12() {
  Outcome o;
  for (const std::string name : {"ibp", "gauss_green_sphere_unit", "hypothesis2_path_sphere", "fernique"}) {
    const RunConfig cfg = config(name);
    set_worker_count(1);
    const std::string a = run_suite(cfg).ledger_csv();
    const std::string b = run_suite(cfg).ledger_csv();
    set_worker_count(4);
    const std::string c = run_suite(cfg).ledger_csv();
    set_worker_count(0);
    o.require(!a.empty() && a == b, name + ": ledger differs between identical runs");
    o.require(a == c, name + ": ledger depends on the worker count");
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"weighted integration by parts, GH and MC", c1},
      {"bilinear identity, GH", c2},
      {"energy identity and adjointness, square_norm weight", c3},
      {"uniform Hessian bound falsifier and exact constant", c4},
      {"Gauss-Green on hyperplanes with closed form", c5},
      {"Gauss-Green on the sphere via shell estimator", c6},
      {"trace q-identities, hyperplane and sphere", c7},
      {"surface measure oracles and rho monotonicity", c8},
      {"weight and level-set hypothesis checkers", c9},
      {"gradient calculus: FD, chain and modulus rules", c10},
      {"Fernique estimator and coordinate moments", c11},
      {"bit-for-bit reproducible ledgers", c12},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::cout << "CRITERION " << i + 1 << ' ' << (o.pass ? "PASS" : "FAIL") << ": " << criteria[i].first << '\n';
    for (const auto& n : o.notes) std::cout << "    " << n << '\n';
    std::cout.flush();
    failed += o.pass ? 0 : 1;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
