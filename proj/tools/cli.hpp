#pragma once

#include <map>
#include <string>

namespace mwx {

/// Parses argv and runs one subcommand. Returns the process exit code: 0 ok, 1 usage, 2 data,
/// 3 numerical failure.
int run_cli(int argc, const char* const* argv);

/// Flat key=value file; '#' starts a comment. Throws mw::InvalidConfig on malformed lines.
std::map<std::string, std::string> read_config_file(const std::string& path);

}  // namespace mwx
