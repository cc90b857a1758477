#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tkmx {

// Throws DataError when the file cannot be read or written.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

} // namespace tkmx
