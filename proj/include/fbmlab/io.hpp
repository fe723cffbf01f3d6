#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace fbmlab {

/// Shortest round-trip-safe decimal form used in every data file: 17
/// significant digits, '.' decimal separator, no locale influence.
std::string format_real(double value);

/// Writes `contents` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace fbmlab
