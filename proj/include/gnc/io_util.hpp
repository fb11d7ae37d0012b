#pragma once

#include <string>

namespace gnc::io {

// Write-then-rename so readers never observe a partial file.
void atomic_write_text(const std::string& path, const std::string& content);
void atomic_write_binary(const std::string& path, const std::string& content);

}  // namespace gnc::io
