#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "plmf/dwt.hpp"
#include "plmf/field.hpp"
#include "plmf/leaders.hpp"

namespace plmf {

/// A 1D signal or a square 2D field as read from disk.
struct Dataset {
  int dimension = 1;
  std::size_t side = 0;  // 2D only
  std::vector<double> values;

  Field2d field() const;
};

/// CSV: one value per line (1D), or one comma-separated row per line (2D,
/// square). Blank lines and lines starting with '#' are skipped.
Dataset read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Dataset& data);

/// Raw little-endian float64 with a JSON sidecar `<stem>.json` holding
/// {"dims", "length" | "side", "dtype": "float64"}.
Dataset read_binary(const std::filesystem::path& path);
void write_binary(const std::filesystem::path& path, const Dataset& data);

/// Dispatches on the extension: .bin -> binary, anything else -> CSV.
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& data);

Dataset make_dataset(std::span<const double> signal);
Dataset make_dataset(const Field2d& field);

/// Pyramid directories: index.json plus one flat binary file per array.
void write_pyramid(const std::filesystem::path& dir, const CoefficientPyramid& pyramid);
CoefficientPyramid read_pyramid(const std::filesystem::path& dir);
void write_leaders(const std::filesystem::path& dir, const LeaderPyramid& leaders);
LeaderPyramid read_leaders(const std::filesystem::path& dir);

/// "inf" for infinity, shortest round-trip text otherwise.
std::string format_p(double p);
double parse_p(const std::string& text);

}  // namespace plmf
