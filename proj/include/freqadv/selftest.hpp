#pragma once

#include <iosfwd>
#include <string>

namespace freqadv {

struct SelftestOptions {
  // Test hook: name of a deliberate defect to inject so the harness can
  // verify that failures are detected and named. "" runs clean.
  std::string inject_fault;
};

// Fast invariant suite: DCT round trips and Parseval, mask cardinalities,
// projection laws, gradient checks, reduction identities, ball containment.
// Prints one line per check; returns 0 when all pass, 1 otherwise.
int run_selftest(const SelftestOptions& options, std::ostream& out);

}  // namespace freqadv
