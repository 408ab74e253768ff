#include "robustify/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "robustify/errors.hpp"

namespace robustify {

Tensor bilinear_resize(const Tensor& img, int out_h, int out_w) {
    if (img.n != 1) throw ModelError("bilinear_resize expects a single image");
    if (out_h <= 0 || out_w <= 0) throw ConfigError("bilinear_resize: non-positive size");
    Tensor out(1, out_h, out_w, img.c);
    const double sy = static_cast<double>(img.h) / out_h;
    const double sx = static_cast<double>(img.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(img.h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(img.w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.w - 1);
            const double wx = fx - x0;
            for (int ch = 0; ch < img.c; ++ch) {
                const double v00 = img.at(0, y0, x0, ch);
                const double v01 = img.at(0, y0, x1, ch);
                const double v10 = img.at(0, y1, x0, ch);
                const double v11 = img.at(0, y1, x1, ch);
                const double top = v00 + (v01 - v00) * wx;
                const double bot = v10 + (v11 - v10) * wx;
                out.at(0, y, x, ch) = static_cast<float>(top + (bot - top) * wy);
            }
        }
    }
    return out;
}

Tensor conv2d_replicate(const Tensor& in, const Kernel2D& kernel) {
    if (kernel.size % 2 == 0) throw ConfigError("conv2d_replicate: kernel size must be odd");
    if (kernel.size > in.h || kernel.size > in.w)
        throw ConfigError("conv2d_replicate: kernel larger than image");
    const int r = kernel.size / 2;
    Tensor out(in.n, in.h, in.w, in.c);
    for (int ni = 0; ni < in.n; ++ni) {
        for (int y = 0; y < in.h; ++y) {
            for (int x = 0; x < in.w; ++x) {
                for (int ch = 0; ch < in.c; ++ch) {
                    double acc = 0.0;
                    for (int ky = -r; ky <= r; ++ky) {
                        const int sy = std::min(std::max(y + ky, 0), in.h - 1);
                        for (int kx = -r; kx <= r; ++kx) {
                            const int sx = std::min(std::max(x + kx, 0), in.w - 1);
                            acc += kernel.at(ky + r, kx + r) * in.at(ni, sy, sx, ch);
                        }
                    }
                    out.at(ni, y, x, ch) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

std::uint8_t quantize_pixel(float p) {
    const float scaled = std::round(p * 255.0f);
    if (scaled <= 0.0f) return 0;
    if (scaled >= 255.0f) return 255;
    return static_cast<std::uint8_t>(scaled);
}

std::vector<std::uint8_t> quantize_image(const Tensor& img) {
    std::vector<std::uint8_t> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = quantize_pixel(img.data[i]);
    return out;
}

void write_ppm(const std::string& path, int h, int w, const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != static_cast<std::size_t>(h) * w * 3)
        throw FormatError("write_ppm: buffer size does not match " + std::to_string(h) + "x" +
                          std::to_string(w));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("write_ppm: cannot open " + path);
    f << "P6\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!f) throw FormatError("write_ppm: write failed for " + path);
}

namespace {
int read_ppm_token(std::istream& in) {
    // Skips whitespace and '#' comments between header fields.
    while (true) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    return value;
}
} // namespace

void read_ppm(const std::string& path, int& h, int& w, std::vector<std::uint8_t>& rgb) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("read_ppm: cannot open " + path);
    char magic[2] = {0, 0};
    f.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '6') throw FormatError("read_ppm: not a P6 file: " + path);
    w = read_ppm_token(f);
    h = read_ppm_token(f);
    const int maxval = read_ppm_token(f);
    if (w <= 0 || h <= 0 || maxval != 255)
        throw FormatError("read_ppm: unsupported header in " + path);
    f.get(); // single whitespace after maxval
    rgb.resize(static_cast<std::size_t>(h) * w * 3);
    f.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (f.gcount() != static_cast<std::streamsize>(rgb.size()))
        throw FormatError("read_ppm: truncated pixel data in " + path);
}

namespace {
constexpr char kTensorMagic[8] = {'R', 'B', 'T', 'E', 'N', '1', '\0', '\0'};
}

void write_tensor_file(const std::string& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("write_tensor_file: cannot open " + path);
    f.write(kTensorMagic, sizeof(kTensorMagic));
    const std::uint32_t dims[4] = {static_cast<std::uint32_t>(t.n), static_cast<std::uint32_t>(t.h),
                                   static_cast<std::uint32_t>(t.w), static_cast<std::uint32_t>(t.c)};
    f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!f) throw FormatError("write_tensor_file: write failed for " + path);
}

Tensor read_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("read_tensor_file: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (f.gcount() != sizeof(magic) || std::memcmp(magic, kTensorMagic, sizeof(magic)) != 0)
        throw FormatError("read_tensor_file: bad magic in " + path);
    std::uint32_t dims[4];
    f.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (f.gcount() != sizeof(dims)) throw FormatError("read_tensor_file: truncated header");
    Tensor t(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]),
             static_cast<int>(dims[3]));
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (f.gcount() != static_cast<std::streamsize>(t.data.size() * sizeof(float)))
        throw FormatError("read_tensor_file: truncated payload in " + path);
    return t;
}

} // namespace robustify
