#pragma once

#include <iosfwd>

namespace zoconex {

/// Quick invariant checks over the library: prox optimality, normal cones,
/// reference certificates, smoothed-gap bound, ledger counts, determinism.
/// Prints one PASS/FAIL line per check; returns true when all pass.
bool run_verify_suite(std::ostream& out);

}  // namespace zoconex
