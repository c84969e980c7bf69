#pragma once

namespace specbool {

// Full command-line dispatcher: parses argv, runs one subcommand, returns
// the process exit code (0 ok, 1 validation failure, 2 usage error).
int run_cli(int argc, char** argv);

} // namespace specbool
