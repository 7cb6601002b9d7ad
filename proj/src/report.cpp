#include "wgsc/report.hpp"

#include <charconv>
#include <cmath>

namespace wgsc {

nlohmann::json IdentityReport::to_json() const {
  nlohmann::json j{{"identity_id", identity_id}, {"lhs", lhs.to_json()}, {"rhs", rhs.to_json()},
                   {"delta", delta},             {"tol", tol},           {"pass", pass},
                   {"detail", detail}};
  if (!warnings.empty()) j["warnings"] = warnings;
  return j;
}

IdentityReport compare(std::string id, IntegralEstimate lhs, IntegralEstimate rhs, double floor) {
  IdentityReport r;
  r.identity_id = std::move(id);
  r.delta = std::abs(lhs.value - rhs.value);
  r.tol = std::max(kSigmaMultiple * std::hypot(lhs.std_error, rhs.std_error), floor);
  r.pass = std::isfinite(r.delta) && r.delta <= r.tol && lhs.dropped == 0 && rhs.dropped == 0;
  if (lhs.dropped + rhs.dropped > 0) r.warnings.push_back("singular points were dropped");
  for (const auto& w : lhs.warnings) r.warnings.push_back("lhs: " + w);
  for (const auto& w : rhs.warnings) r.warnings.push_back("rhs: " + w);
  r.lhs = std::move(lhs);
  r.rhs = std::move(rhs);
  return r;
}

IdentityReport verdict(std::string id, double measured, double target, double tol, bool pass) {
  IdentityReport r;
  r.identity_id = std::move(id);
  r.lhs.value = measured;
  r.lhs.method = Method::Exact;
  r.rhs.value = target;
  r.rhs.method = Method::Exact;
  r.delta = std::abs(measured - target);
  r.tol = tol;
  r.pass = pass;
  return r;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string ledger_row(const IdentityReport& r) {
  std::string s = r.identity_id;
  for (double v : {r.lhs.value, r.lhs.std_error, r.rhs.value, r.rhs.std_error, r.delta, r.tol}) {
    s += ',';
    s += format_double(v);
  }
  s += r.pass ? ",true" : ",false";
  return s;
}

std::string ledger(const std::vector<IdentityReport>& reports) {
  std::string out = kLedgerHeader;
  out += '\n';
  for (const auto& r : reports) {
    out += ledger_row(r);
    out += '\n';
  }
  return out;
}

}  // namespace wgsc
