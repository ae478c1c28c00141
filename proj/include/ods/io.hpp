#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ods/raster.hpp"

namespace ods {

// PNG in any channel layout, returned as RGBA (opaque when the file has no alpha).
// Throws IoError (unreadable) / ParseError (not a PNG we can decode).
Raster<Rgba8> read_png(const std::filesystem::path& path);
std::vector<uint8_t> encode_png(const Raster<Rgba8>& img);
// Atomic: the file appears complete or not at all.
void write_png(const std::filesystem::path& path, const Raster<Rgba8>& img);

// Width and height from the PNG header without decoding the image.
std::pair<int, int> png_size(const std::filesystem::path& path);

// Single-channel PFM ("Pf"); the first channel of a colour PFM ("PF").
// Rows are stored bottom to top. Throws IoError / ParseError naming the file.
Raster<float> read_pfm(const std::filesystem::path& path);
// Little-endian single-channel PFM, written atomically.
void write_pfm(const std::filesystem::path& path, const Raster<float>& img);

// Writes bytes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace ods
