#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qhhg::detail {

/// Writes through a temporary sibling and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string read_text(const std::filesystem::path& path);

/// Comma-separated table with a header line. "NA" cells read as empty.
struct CsvTable {
  std::filesystem::path source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<std::string> text(const std::string& name) const;
  std::vector<std::optional<double>> values(const std::string& name) const;
  /// Column with every cell required to be present.
  std::vector<double> numbers(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace qhhg::detail
