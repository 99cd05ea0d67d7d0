#pragma once

#include <ostream>
#include <span>
#include <string>

namespace kinverify::cli {

/// Runs one subcommand (`learn-filters`, `extract`, `eval`, `synth`,
/// `inspect`). Failures print a single "error: <category>: <message>" line
/// to `err` and return that category's exit code.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace kinverify::cli
