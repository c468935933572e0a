#ifndef CNSPK_SRC_CSV_HPP
#define CNSPK_SRC_CSV_HPP

// Minimal RFC 4180 reader shared by the manifest and dataset parsers.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cnspk::csv {

struct Record {
    std::size_t line = 0;  // 1-based physical line where the record starts
    std::vector<std::string> fields;
};

/// Splits bytes into records. Handles quoted fields, CRLF, a leading UTF-8
/// BOM and skips fully blank lines. Throws DataError on an unterminated quote
/// or embedded NUL.
std::vector<Record> read(std::string_view bytes);

std::string_view trim(std::string_view s) noexcept;
std::string lower(std::string_view s);

/// Strict locale-independent number parse of a whole (trimmed) cell.
/// Returns nullopt on anything that is not a finite decimal number.
std::optional<double> parse_number(std::string_view cell) noexcept;

/// `%.9g` rendering used by every export.
std::string format_number(double v);

/// Quotes a field if it contains a separator, quote or newline.
std::string escape(std::string_view field);

}  // namespace cnspk::csv

#endif  // CNSPK_SRC_CSV_HPP
