#pragma once

#include <string>
#include <vector>

namespace gnc::csv {

// RFC-4180-style numeric CSV with a header row; floats are printed with
// 9 significant digits. Rows must match the schema length. Written
// atomically (write-then-rename).
void emit(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& schema,
          const std::string& path);

std::string format_value(double v);

}  // namespace gnc::csv
