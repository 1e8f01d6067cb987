#pragma once

// The `zerolog` command line: parse, embed, synth, train, detect, eval,
// ablate, sweep. Each command reads one config file and writes everything
// under its output directory, plus a manifest of input digests.

#include <iosfwd>
#include <string>
#include <vector>

namespace zerolog::cli {

enum ExitCode : int { Ok = 0, InputError = 2, NumericFailure = 3 };

/// `args` excludes the program name. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zerolog::cli
