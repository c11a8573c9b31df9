#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "edgeprov/bench/harness.hpp"

namespace edgeprov::bench {

/// Cells of a named grid: "table1" (A x d), "table8" (G x bandwidth x d) or
/// "table9" (N). Every cell starts from `base`. InvalidArgument otherwise.
std::vector<WorkloadConfig> preset_grid(const std::string& name, const WorkloadConfig& base);
std::vector<std::string> preset_names();

/// Runs every cell; a failing cell is recorded and the sweep goes on.
std::vector<CellResult> sweep(const std::vector<WorkloadConfig>& cells, std::size_t repeats,
                              const HarnessOptions& options = {},
                              const std::function<void(const CellResult&)>& on_cell = {});

std::string csv_header();
/// One line, no newline. Failed cells keep their parameters and leave the measurements empty.
std::string csv_row(const CellResult& cell);
void write_csv(std::ostream& out, const std::vector<CellResult>& cells);

/// Overhead grid, one row per (G, N) and one column per (bandwidth, d, A).
std::string summary_grid(const std::vector<CellResult>& cells);

}  // namespace edgeprov::bench
