#pragma once

#include <string>

#include "brownlab/circle_measure.hpp"

namespace brownlab {

// "a+bi", "a-bi", "bi", "a", "i", "-i"; 'j' works like 'i'. Locale independent.
cplx parse_complex(const std::string& text);

// delta1, four_points, an inline JSON object or a path to a JSON file.
CircleMeasure resolve_measure(const std::string& spec);

// Runs one subcommand and prints a one-line JSON summary
// {cmd, elapsed_ms, outputs, status}. Exit codes: 0 ok, 2 invalid input,
// 3 numerical failure.
int dispatch(int argc, char** argv);

}  // namespace brownlab
