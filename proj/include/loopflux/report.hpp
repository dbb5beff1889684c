#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace loopflux {

// Reports keep insertion order so identical runs serialize byte-for-byte.
using Json = nlohmann::ordered_json;

// Snap a value to 12 significant digits; idempotent, so stored numbers
// survive a print/parse round trip unchanged.
double report_num(double v);

// Common envelope: {"schema": 1, "kind": <kind>}.
Json report_root(const std::string& kind);

// Two-space indented dump with a trailing newline.
std::string render(const Json& j);

// 12-significant-digit text for CSV cells.
std::string csv_num(double v);

// Header row plus data rows, comma separated, one trailing newline.
std::string csv_render(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

// Write to a file, or to stdout when path is "-". Returns false on I/O
// failure.
bool write_text(const std::string& path, const std::string& text);

}  // namespace loopflux
