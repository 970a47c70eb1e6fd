#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace regdet::cli {

enum ExitCode : int { kOk = 0, kAcceptanceFail = 1, kInvalidInput = 2, kNumericalFailure = 3 };

// "start:stop:xRatio", ratio >= 1.2. Points start * ratio^j up to stop.
struct GridSpec {
  double start = 1.0;
  double stop = 1.0;
  double ratio = 2.0;
};

GridSpec parse_grid(const std::string& text);
std::vector<double> real_grid(const GridSpec& g);
// Rounded to integers, duplicates removed.
std::vector<std::int64_t> integer_grid(const GridSpec& g);

// Runs one subcommand. argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace regdet::cli
