#pragma once

#include "drowsy/classify.hpp"

#include <filesystem>

namespace drowsy {

/// Binary (P5) 8-bit PGM. Throws std::runtime_error on anything else.
RoiImage read_pgm(const std::filesystem::path& path, RoiKind kind);

void write_pgm(const std::filesystem::path& path, const RoiImage& img);

} // namespace drowsy
