#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bellmanlab/grid.hpp"

namespace bellmanlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Shortest round-trip decimal form (std::to_chars); identical doubles
/// always print identically, so emitted files are byte-stable.
std::string fmt_double(double x);

std::uint64_t fnv1a64(const std::string& s);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// One CSV row; cells are already formatted.
using CsvRow = std::vector<std::string>;

void write_csv(const std::filesystem::path& path, const CsvRow& header,
               const std::vector<CsvRow>& rows);

/// JSON sidecar written next to every CSV: config hash, artifact version,
/// and free-form metadata. Keys are emitted sorted, so bytes are stable.
void write_sidecar(const std::filesystem::path& csv_path, std::uint64_t config_hash,
                   const nlohmann::json& extra = {});

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

/// Grid function serialization: CSV with one row per node in the
/// documented ordering (action index slowest, last continuous axis
/// fastest) holding coordinates plus the value, and a JSON sidecar with
/// the grid metadata.
void write_grid_function(const std::filesystem::path& csv_path, const GridFunction& f,
                         std::uint64_t config_hash);

GridFunction read_grid_function(const std::filesystem::path& csv_path);

} // namespace bellmanlab
