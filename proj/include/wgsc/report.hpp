#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wgsc/integrate.hpp"

namespace wgsc {

inline constexpr double kDefaultFloor = 1e-9;
inline constexpr double kSigmaMultiple = 3.0;

/// One identity comparison: two estimates, their gap and the tolerance.
/// pass <=> delta <= tol (for comparisons built by compare()).
struct IdentityReport {
  std::string identity_id;
  IntegralEstimate lhs;
  IntegralEstimate rhs;
  double delta = 0.0;
  double tol = 0.0;
  bool pass = false;
  nlohmann::json detail = nlohmann::json::object();
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

using TraceReport = IdentityReport;

/// tol = max(3 sqrt(se_L^2 + se_R^2), floor); dropped points fail the report.
IdentityReport compare(std::string id, IntegralEstimate lhs, IntegralEstimate rhs, double floor = kDefaultFloor);

/// Report for a quantity checked against a fixed bound or target, where the
/// pass rule is decided by the caller.
IdentityReport verdict(std::string id, double measured, double target, double tol, bool pass);

/// Fixed ledger columns.
inline constexpr const char* kLedgerHeader = "identity_id,lhs,lhs_se,rhs,rhs_se,delta,tol,pass";

/// One CSV line, without trailing newline. Numbers use round-trip precision.
std::string ledger_row(const IdentityReport& r);
std::string ledger(const std::vector<IdentityReport>& reports);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace wgsc
