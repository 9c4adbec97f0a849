#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace xrn::data {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends,
/// optional UTF-8 BOM. Blank lines are dropped. Throws FormatError on an
/// unterminated quote.
std::vector<CsvRow> parse_csv(std::string_view text);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

}  // namespace xrn::data
