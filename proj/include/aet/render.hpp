#pragma once

#include <filesystem>

#include "aet/fem.hpp"

namespace aet {

/// Barycentric triangle-fill rasterizer with a fixed color scale. Pixels
/// outside the mesh are white. Rows are rasterized independently (one
/// triangle bin per row), so the parallel and serial lanes agree exactly.
void render_field_png(const ScalarField& field, const std::filesystem::path& path,
                      double vmin = 0.0, double vmax = 3.2, int width = 800, int height = 800,
                      Exec ex = Exec::par);

/// Minimal PNG encoder (8-bit RGB, zlib-compressed).
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const unsigned char* pixels);

}  // namespace aet
