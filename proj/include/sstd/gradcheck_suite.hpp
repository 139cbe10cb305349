#pragma once

#include <iosfwd>

namespace sstd {

/// Finite-difference verification of every dense op plus the composed
/// attention, inception and aggregation paths, at 64-bit precision across
/// `seeds` random draws. Prints one line per check with the worst relative
/// error; returns true iff everything stayed under its tolerance.
bool run_gradcheck_suite(int seeds, double eps, std::ostream& out);

} // namespace sstd
