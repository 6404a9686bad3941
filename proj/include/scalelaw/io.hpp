#pragma once

// CSV ingestion and emission for measurements, and atomic file output.
//
// Dense files:   m,n,error[,replicate]
// Pruning files: depth,width_scale,density,n,error[,replicate]
//
// Lines starting with '#' and blank lines are skipped. Rows are reported by
// their 1-based line number in the file, columns by 1-based position.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scalelaw/forms.hpp"

namespace scalelaw {

enum class CsvKind { kDense, kPrune };

// Kind of a CSV text judged from its header; ParseError for anything else.
CsvKind detect_csv_kind(std::string_view text);

std::vector<DenseMeasurement> parse_dense_csv(std::string_view text);
std::vector<DenseMeasurement> load_dense_csv(const std::filesystem::path& path);

struct LoadedPrune {
  std::vector<PruneMeasurement> records;  // eps_np attached per group
  std::vector<std::string> warnings;      // off-ladder densities, per group
};

// Attaches eps_np from the density-1 rows of each (depth, width_scale, n)
// group and checks densities against the 0.8^i ladder (1e-9 relative).
LoadedPrune parse_prune_csv(std::string_view text);
LoadedPrune load_prune_csv(const std::filesystem::path& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string dense_csv(const std::vector<DenseMeasurement>& records);
std::string prune_csv(const std::vector<PruneMeasurement>& records);

std::string read_text_file(const std::filesystem::path& path);

// Writes to a temporary file in the same directory, then renames it over
// `path`, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace scalelaw
