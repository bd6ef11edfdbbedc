#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "cpsr/config.hpp"

namespace cpsr::cli {

std::vector<std::string> command_names();

// Runs one command and writes its outputs under config.out_dir. Human-readable
// progress goes to `out`. Throws on any failure.
void run(const std::string& command, const RunConfig& config, std::ostream& out);

// Single-line "error: <kind>: <message>" for a failure raised by run or
// parse_config.
std::string error_line(const std::exception& e);

}  // namespace cpsr::cli
