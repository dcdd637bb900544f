#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tasteprint {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one command line (args[0] is the program name). Exit status 0 on
/// success, 1 on validation errors, 2 on I/O, parse and usage errors.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv);

/// Maps a library exception onto the exit status above.
int exit_code_for(const std::exception& e);

std::string version_string();

}  // namespace tasteprint
