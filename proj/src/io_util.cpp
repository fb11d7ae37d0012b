#include "gnc/io_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gnc/check.hpp"

namespace gnc::io {

namespace {
void write_impl(const std::string& path, const std::string& content, std::ios::openmode mode) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, mode);
        GNC_CHECK_FINITE(out.good(), "cannot open for writing: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        GNC_CHECK_FINITE(out.good(), "short write: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    GNC_CHECK_FINITE(!ec, "rename failed for: " + path);
}
}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
    write_impl(path, content, std::ios::out | std::ios::trunc);
}

void atomic_write_binary(const std::string& path, const std::string& content) {
    write_impl(path, content, std::ios::out | std::ios::trunc | std::ios::binary);
}

}  // namespace gnc::io
