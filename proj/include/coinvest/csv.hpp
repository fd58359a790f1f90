#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace coinvest {

/// Comma-delimited reader (RFC 4180 quoting, embedded newlines allowed).
/// Lines starting with '#' before or between records are comments. The first
/// non-comment record is the header.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in);

  const std::vector<std::string>& header() const noexcept { return header_; }

  /// Column index for `name`, if present in the header.
  std::optional<std::size_t> column(std::string_view name) const;

  /// Reads the next data record. Returns false at end of input.
  bool next(std::vector<std::string>& fields);

  /// 1-based physical line on which the last record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  bool read_record(std::vector<std::string>& fields);

  std::istream& in_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

/// Writes one record, quoting fields that contain delimiters or quotes.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Strict full-string parse; nullopt for empty, partial or non-numeric text.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

/// Whole-file read; throws IoError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes (creating parent directories); throws IoError on failure.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string trim(std::string_view text);

/// Splits on `sep`, trimming each piece and dropping empty ones.
std::vector<std::string> split_list(std::string_view text, char sep = ',');

}  // namespace coinvest
