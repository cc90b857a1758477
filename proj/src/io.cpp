#include "tkmx/io.hpp"

#include "tkmx/error.hpp"

#include <fstream>
#include <sstream>

namespace tkmx {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("short write to " + path.string());
    }
}

} // namespace tkmx
