#pragma once

#include "revision/io.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace revision {

/// Exit codes: 0 success, 1 domain error, 2 usage error. Output paths go to `out`, logs and
/// errors to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_command(int argc, const char* const* argv);

/// The JSON config file merged with its defaults: {"seed", "revision", "pmp", "train",
/// "scene", "user_condition"}. A missing path yields the defaults.
Json load_cli_config(const std::string& path);

}  // namespace revision
