#pragma once

#include <string>
#include <vector>

namespace xmal::cli {

// Command-line entry point. Commands: synth, extract-psych, build-targets,
// train, embed, eval, analyze, report. Global flags: --config PATH,
// --seed INT, --out DIR. The environment variable XMAL_LOG picks the log
// verbosity (silent, error, warn, info, debug).
//
// Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical
// failure.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace xmal::cli
