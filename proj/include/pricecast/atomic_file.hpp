#pragma once

#include <filesystem>
#include <string_view>

namespace pricecast {

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace pricecast
