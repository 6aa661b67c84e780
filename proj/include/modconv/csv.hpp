#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace modconv::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader: comma separator, double-quote quoting, "" escapes a quote,
/// quoted fields may span lines. CRLF and LF line endings are accepted. A
/// trailing empty line does not produce a row. Throws IoError on an
/// unterminated quoted field.
std::vector<Row> parse(std::string_view content);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape_field(std::string_view field);

void write_row(std::ostream& out, const Row& row);

}  // namespace modconv::csv
