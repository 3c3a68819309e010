#pragma once

#include <iosfwd>

namespace sonir {

/// Exit codes: 0 success, 1 validation failure, 2 I/O or usage error,
/// 3 internal error. Errors go to `err` prefixed with "error:".
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sonir
