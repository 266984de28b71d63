#pragma once

#include <ostream>

namespace porgysim::app {

/// Entry point of the porgysim command. Exit codes: 0 success, 1 domain
/// error (printed as `error[code]: message`), 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace porgysim::app
