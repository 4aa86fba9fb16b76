#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsil::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; nullopt when absent.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Comma-separated, first row header, optional double quotes. Ragged rows and empty
/// cells raise IngestError.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::optional<double> parse_double(std::string_view cell);

/// Shortest round-trip decimal representation.
std::string format(double value);

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);

  Writer& field(std::string_view text);
  Writer& field(double value);
  Writer& field(long value);
  Writer& field(int value) { return field(static_cast<long>(value)); }
  void end_row();

 private:
  std::ofstream out_;
  bool first_ = true;
};

}  // namespace tsil::csv
