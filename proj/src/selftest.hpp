#pragma once

#include <string>
#include <vector>

namespace fiddle::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  double millis = 0.0;
  std::string detail;  // populated on failure
};

struct SelftestOptions {
  /// Test fixture: flips the sign of the AIPW estimate inside the
  /// doubly-robust check, which must then fail (mutation sanity).
  bool inject_aipw_sign_flip = false;
};

struct SelftestReport {
  std::vector<CheckResult> checks;
  bool all_passed = false;
};

/// Fast invariant suite: formula identities, RNG determinism, eigensolver
/// reconstruction, Gram-trick equivalence, finite-difference gradient checks
/// and the doubly-robust identity. Designed to finish well under two minutes.
SelftestReport run_selftest(const SelftestOptions& options = {});

std::string report_to_json(const SelftestReport& report);

}  // namespace fiddle::selftest
