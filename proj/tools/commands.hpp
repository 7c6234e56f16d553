#pragma once

// Command-line front end. Exit codes: 0 success, 2 configuration or parse
// error, 3 numerical-invariant violation.

#include <iosfwd>
#include <string>
#include <vector>

namespace clickstat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "param=start:stop:steps", inclusive on both ends.
struct GridSpec {
    std::string parameter;
    double start = 0.0;
    double stop = 0.0;
    unsigned steps = 0;

    std::vector<double> points() const;
};

GridSpec parse_grid(const std::string& text);

} // namespace clickstat::cli
