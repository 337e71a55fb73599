#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pam/distribution.hpp"
#include "pam/eigen_solve.hpp"
#include "pam/evolution.hpp"
#include "pam/field.hpp"
#include "pam/grid.hpp"

namespace pam {

inline constexpr std::string_view kVersion = "0.1.0";

// Shortest decimal that parses back to the identical value. Locale-free, so
// the decimal point is always '.' and emitted tables are byte-stable.
std::string format_f64(double v);
std::string format_i64(long long v);
std::string format_u64(std::uint64_t v);

// Flat array files: little-endian 64-bit floats, row-major, no header. Every
// bit pattern round-trips, NaN included. Both throw std::runtime_error on
// open/short-read/short-write failures and on a byte count that is not a
// multiple of 8.
void write_f64(const std::filesystem::path& path, const double* data, std::size_t count);
std::vector<double> read_f64(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// ADL hooks so nlohmann::json converts these directly.
void to_json(nlohmann::json& j, const BoxSpec& box);
void from_json(const nlohmann::json& j, BoxSpec& box);
void to_json(nlohmann::json& j, const PotentialDistribution& dist);
void from_json(const nlohmann::json& j, PotentialDistribution& dist);

// Typed array exports: <stem>.f64 holds the values, <stem>.json the sidecar
// (box or grid geometry plus provenance). Importers validate the element
// count against the sidecar geometry.
void export_field(const PotentialField& field, const std::filesystem::path& stem);
PotentialField import_field(const std::filesystem::path& stem);
void export_grid(const GridFunction& g, const std::filesystem::path& stem);
GridFunction import_grid(const std::filesystem::path& stem);
void export_solution(const SolutionState& state, const std::filesystem::path& stem);
SolutionState import_solution(const std::filesystem::path& stem);
void export_eigenvector(const EigenResult& r, const BoxSpec& box,
                        const std::filesystem::path& stem);

// Comma-separated table: '"' quoting only where a field contains a comma,
// quote, or line break; embedded quotes doubled; LF endings written in binary
// mode so the bytes are platform-independent.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);
  void add_row(const std::vector<std::string>& fields);
  const std::string& text() const { return text_; }
  void save(const std::filesystem::path& path) const;

 private:
  void append(const std::vector<std::string>& fields);
  std::size_t ncols_;
  std::string text_;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Reproducibility record: version, the FNV-1a hash of the canonical config
// serialization, and the config itself. Callers append seeds and output
// listings before writing.
nlohmann::json make_manifest(const nlohmann::json& config);

}  // namespace pam
