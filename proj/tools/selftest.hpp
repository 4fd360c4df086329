#pragma once

#include <ostream>

namespace recipcal::cli {

/// Planted-solution, oracle and pilot-budget checks. Returns true when
/// every check passes; one line per check goes to `out`.
bool run_selftest(std::ostream& out);

}  // namespace recipcal::cli
