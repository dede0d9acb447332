#pragma once

// Command-line surface: gen-data, synth-noise, train, denoise, eval, and
// gradcheck subcommands over the library.
//
// Exit codes:
//   0  success
//   2  usage errors: unknown flags, bad values, invalid configuration
//   3  missing input file or directory
//   4  incompatible inputs: config vs checkpoint, data vs frame count
//   5  gradient check failed a threshold
//   1  any other runtime failure

#include <string>
#include <vector>

namespace defkern {

// args excludes the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace defkern
