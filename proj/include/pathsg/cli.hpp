#pragma once

#include <iosfwd>

namespace pathsg {

// Exit codes: 0 all checks pass, 1 a check failed (or a computation error),
// 2 configuration or usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace pathsg
