#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bytestorm/config.hpp"
#include "bytestorm/error.hpp"

namespace bytestorm::cli {

/// Process exit status for each failure kind; 0 is success and 1 an
/// unexpected internal failure.
int exit_code(ErrorKind kind);

/// One-line JSON error record: {"error":<kind>,"exit":<code>,"message":<text>}.
std::string error_line(ErrorKind kind, std::string_view message);

const std::vector<std::string>& subcommands();

/// Runs one subcommand; progress goes to `log`. Throws Error on failure.
void execute(std::string_view name, const RunConfig& cfg, std::ostream& log);

/// execute() with errors mapped to exit codes and reported on `err`.
int run_subcommand(std::string_view name, const RunConfig& cfg, std::ostream& log,
                   std::ostream& err);

}  // namespace bytestorm::cli
