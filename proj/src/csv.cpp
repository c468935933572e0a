#include "csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "cnspk/error.hpp"

namespace cnspk::csv {

std::vector<Record> read(std::string_view bytes) {
    if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);

    std::vector<Record> records;
    Record current;
    std::string field;
    std::size_t line = 1;
    std::size_t record_line = 1;
    bool in_quotes = false;
    bool field_quoted = false;
    bool record_has_content = false;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        bool blank = !record_has_content;
        if (blank) {
            for (const auto& f : current.fields) {
                if (!trim(f).empty()) {
                    blank = false;
                    break;
                }
            }
        }
        if (!blank) {
            current.line = record_line;
            records.push_back(std::move(current));
        }
        current = Record{};
        record_has_content = false;
    };

    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const char ch = bytes[i];
        if (ch == '\0') {
            throw DataError("embedded NUL byte", line, current.fields.size() + 1);
        }
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (!trim(field).empty() || field_quoted) {
                    throw DataError("unexpected quote inside unquoted field", line,
                                    current.fields.size() + 1);
                }
                field.clear();
                in_quotes = true;
                field_quoted = true;
                record_has_content = true;
                break;
            case ',':
                end_field();
                record_has_content = true;
                break;
            case '\r':
                if (i + 1 < bytes.size() && bytes[i + 1] == '\n') break;
                [[fallthrough]];
            case '\n':
                end_record();
                ++line;
                record_line = line;
                break;
            default:
                if (field_quoted) {
                    if (std::isspace(static_cast<unsigned char>(ch))) break;
                    throw DataError("characters after closing quote", line,
                                    current.fields.size() + 1);
                }
                field.push_back(ch);
        }
    }
    if (in_quotes) {
        throw DataError("unterminated quoted field", record_line, current.fields.size() + 1);
    }
    if (!field.empty() || !current.fields.empty() || field_quoted) end_record();
    return records;
}

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<double> parse_number(std::string_view cell) noexcept {
    cell = trim(cell);
    if (cell.empty()) return std::nullopt;
    // from_chars rejects a leading '+', accept it for hand-written files.
    if (cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return std::nullopt;
    // Only plain decimal/scientific notation; from_chars would also accept
    // "inf", "nan" and hex floats in some modes.
    for (char c : cell) {
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == 'e' ||
              c == 'E' || c == '+')) {
            return std::nullopt;
        }
    }
    double value = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace cnspk::csv
