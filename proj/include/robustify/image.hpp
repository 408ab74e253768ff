#ifndef ROBUSTIFY_IMAGE_HPP
#define ROBUSTIFY_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "robustify/tensor.hpp"

namespace robustify {

// 2-D convolution kernel kept in double so normalization error stays at
// machine epsilon; applied per channel with replicate edge padding.
struct Kernel2D {
    int size = 1;
    std::vector<double> w; // size*size, row-major, centered

    double at(int i, int j) const { return w[static_cast<std::size_t>(i) * size + j]; }
};

// Bilinear resize of a single image (n must be 1), half-pixel centers,
// edge clamped. Output values stay inside the input's convex hull.
Tensor bilinear_resize(const Tensor& img, int out_h, int out_w);

// Per-channel 2-D convolution with replicate padding, same output size.
// Works on one sample or a whole batch.
Tensor conv2d_replicate(const Tensor& in, const Kernel2D& kernel);

// Quantization to/from the 8-bit dataset format: round(p*255), clamped.
std::uint8_t quantize_pixel(float p);
std::vector<std::uint8_t> quantize_image(const Tensor& img);

// Binary PPM (P6, maxval 255) for golden images and mosaics.
void write_ppm(const std::string& path, int h, int w, const std::vector<std::uint8_t>& rgb);
void read_ppm(const std::string& path, int& h, int& w, std::vector<std::uint8_t>& rgb);

// Raw little-endian float32 tensor container for perturbation dumps and
// float-exact golden files.
void write_tensor_file(const std::string& path, const Tensor& t);
Tensor read_tensor_file(const std::string& path);

} // namespace robustify

#endif
