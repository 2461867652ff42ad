#pragma once

#include <iosfwd>

namespace scbal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one sc-balance command line. Normal output goes to `out`, usage text
/// and error messages to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scbal::cli
