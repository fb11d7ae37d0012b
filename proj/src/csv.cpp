#include "gnc/csv.hpp"

#include <cstdio>

#include "gnc/check.hpp"
#include "gnc/io_util.hpp"

namespace gnc::csv {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void emit(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& schema,
          const std::string& path) {
    GNC_REQUIRE(!schema.empty(), "CSV schema must not be empty");
    std::string out;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (i) out.push_back(',');
        out += schema[i];
    }
    out.push_back('\n');
    for (const auto& row : rows) {
        GNC_REQUIRE(row.size() == schema.size(), "CSV row does not match schema");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            out += format_value(row[i]);
        }
        out.push_back('\n');
    }
    io::atomic_write_text(path, out);
}

}  // namespace gnc::csv
