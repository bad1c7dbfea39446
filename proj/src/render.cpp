#include "aet/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include <zlib.h>

#include "aet/errors.hpp"

namespace aet {

namespace {

// Viridis anchors (sampled every 1/15 of the range), linearly interpolated.
constexpr unsigned char kViridis[16][3] = {
    {68, 1, 84},   {72, 26, 108},  {71, 47, 125},  {65, 68, 135},
    {57, 86, 140}, {49, 104, 142}, {42, 120, 142}, {35, 136, 142},
    {31, 152, 139},{34, 168, 132}, {53, 183, 121}, {84, 197, 104},
    {122, 209, 81},{165, 219, 54}, {210, 226, 27}, {253, 231, 37},
};

void colormap(double t, unsigned char* rgb) {
    t = std::clamp(t, 0.0, 1.0);
    const double x = t * 15.0;
    const int i = std::min(14, static_cast<int>(x));
    const double f = x - i;
    for (int c = 0; c < 3; ++c) {
        rgb[c] = static_cast<unsigned char>(std::lround((1.0 - f) * kViridis[i][c] + f * kViridis[i + 1][c]));
    }
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

void put_chunk(std::vector<unsigned char>& out, const char type[4],
               const std::vector<unsigned char>& payload) {
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_from = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = crc32(0L, out.data() + crc_from, static_cast<uInt>(out.size() - crc_from));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const unsigned char* pixels) {
    // Filter byte 0 in front of every scanline.
    std::vector<unsigned char> raw(static_cast<std::size_t>(height) * (1 + 3 * static_cast<std::size_t>(width)));
    for (int y = 0; y < height; ++y) {
        unsigned char* row = raw.data() + static_cast<std::size_t>(y) * (1 + 3 * static_cast<std::size_t>(width));
        row[0] = 0;
        std::memcpy(row + 1, pixels + static_cast<std::size_t>(y) * 3 * static_cast<std::size_t>(width),
                    3 * static_cast<std::size_t>(width));
    }
    uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> comp(comp_size);
    if (compress2(comp.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
        throw IoError("png: deflate failed");
    }
    comp.resize(comp_size);

    std::vector<unsigned char> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    std::vector<unsigned char> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(width));
    put_u32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", comp);
    put_chunk(out, "IEND", {});

    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw IoError("png: cannot open " + path.string());
    const std::size_t written = std::fwrite(out.data(), 1, out.size(), f);
    std::fclose(f);
    if (written != out.size()) throw IoError("png: short write to " + path.string());
}

void render_field_png(const ScalarField& field, const std::filesystem::path& path, double vmin,
                      double vmax, int width, int height, Exec ex) {
    const FunctionSpace& space = *field.space;
    const Mesh& mesh = space.mesh();
    std::vector<unsigned char> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, 255);

    // Frame: [-1.02, 1.02]^2, y up.
    const double x0 = -1.02, x1 = 1.02, y0 = -1.02, y1 = 1.02;
    const double dx = (x1 - x0) / width;
    const double dy = (y1 - y0) / height;

    auto row_of = [&](double y) {
        return static_cast<int>((y1 - y) / dy);
    };

    // Bin triangles by pixel row so each row can be filled independently.
    std::vector<std::vector<int>> row_tris(static_cast<std::size_t>(height));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        double ymin = 1e300, ymax = -1e300;
        for (int v : mesh.triangles[t]) {
            ymin = std::min(ymin, mesh.vertices[static_cast<std::size_t>(v)][1]);
            ymax = std::max(ymax, mesh.vertices[static_cast<std::size_t>(v)][1]);
        }
        const int r_hi = std::clamp(row_of(ymin), 0, height - 1);
        const int r_lo = std::clamp(row_of(ymax), 0, height - 1);
        for (int r = r_lo; r <= r_hi; ++r) row_tris[static_cast<std::size_t>(r)].push_back(static_cast<int>(t));
    }

    const double scale = vmax > vmin ? 1.0 / (vmax - vmin) : 1.0;
    parallel_for(static_cast<std::size_t>(height), ex, [&](std::size_t row) {
        const double py = y1 - (static_cast<double>(row) + 0.5) * dy;
        unsigned char* out_row = pixels.data() + row * static_cast<std::size_t>(width) * 3;
        for (int tri : row_tris[row]) {
            double xmin = 1e300, xmax = -1e300;
            for (int v : mesh.triangles[static_cast<std::size_t>(tri)]) {
                xmin = std::min(xmin, mesh.vertices[static_cast<std::size_t>(v)][0]);
                xmax = std::max(xmax, mesh.vertices[static_cast<std::size_t>(v)][0]);
            }
            int c_lo = std::clamp(static_cast<int>((xmin - x0) / dx), 0, width - 1);
            int c_hi = std::clamp(static_cast<int>((xmax - x0) / dx), 0, width - 1);
            for (int col = c_lo; col <= c_hi; ++col) {
                const double px = x0 + (col + 0.5) * dx;
                const auto l = mesh.barycentric(tri, px, py);
                if (l[0] < -1e-12 || l[1] < -1e-12 || l[2] < -1e-12) continue;
                const double v = field.value_at(tri, l[1], l[2]);
                colormap((v - vmin) * scale, out_row + static_cast<std::size_t>(col) * 3);
            }
        }
    });

    write_png_rgb8(path, width, height, pixels.data());
}

}  // namespace aet
