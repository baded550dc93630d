#pragma once

#include <string>
#include <vector>

namespace statfidelity {

// RFC-4180-style CSV: quoted fields, doubled-quote escapes, CRLF or LF
// line endings. The trailing empty line is dropped.
std::vector<std::vector<std::string>> parse_csv(const std::string& content);

// Quote a field only when it needs it.
std::string csv_field(const std::string& value);

std::string read_file(const std::string& path);             // throws on I/O error
void write_file(const std::string& path, const std::string& content);

// Offset of the first invalid UTF-8 byte, or npos when the text is valid.
std::size_t utf8_invalid_at(const std::string& text);

}  // namespace statfidelity
