#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stimap::csv {

/// RFC-4180-style serialization: fields holding commas, quotes, or newlines
/// are quoted, quotes doubled, rows end with LF.
std::string write(const std::vector<std::vector<std::string>>& rows);

/// Inverse of write(); accepts CRLF and LF row endings.
std::vector<std::vector<std::string>> read(std::string_view text);

}  // namespace stimap::csv
