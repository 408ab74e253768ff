#include "robustify/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <json.hpp>

#include "robustify/errors.hpp"
#include "robustify/image.hpp"

namespace robustify {

using nlohmann::json;

namespace {
constexpr const char* kKindNames[kCorruptionKindCount] = {
    "gaussian_noise", "shot_noise", "impulse_noise",     "defocus_blur",
    "motion_blur",    "zoom_blur",  "snow",              "frost",
    "fog",            "rain",       "brightness",        "contrast",
    "elastic_transform", "jpeg_compression"};
}

const char* to_string(CorruptionKind kind) { return kKindNames[static_cast<int>(kind)]; }

CorruptionKind corruption_kind_from_string(const std::string& s) {
    for (int i = 0; i < kCorruptionKindCount; ++i)
        if (s == kKindNames[i]) return static_cast<CorruptionKind>(i);
    throw ConfigError("unknown corruption kind '" + s + "'");
}

void CorruptionSpec::validate() const {
    const int k = static_cast<int>(kind);
    if (k < 0 || k >= kCorruptionKindCount)
        throw ConfigError("corruption: kind out of registry range");
    if (severity < 1 || severity > 5)
        throw ConfigError("corruption: severity must be in [1,5], got " +
                          std::to_string(severity));
}

const SeverityTables& default_severity_tables() {
    static const SeverityTables tables;
    return tables;
}

std::string severity_tables_json(const SeverityTables& t) {
    return json{{"gaussian_sigma", t.gaussian_sigma},
                {"shot_photon_scale", t.shot_photon_scale},
                {"impulse_fraction", t.impulse_fraction},
                {"defocus_radius", t.defocus_radius},
                {"motion_length", t.motion_length},
                {"zoom_max_scale", t.zoom_max_scale},
                {"brightness_offset", t.brightness_offset},
                {"contrast_factor", t.contrast_factor},
                {"elastic_magnitude", t.elastic_magnitude},
                {"jpeg_quality", t.jpeg_quality},
                {"fog_opacity", t.fog_opacity},
                {"rain_streaks", t.rain_streaks},
                {"snow_flakes", t.snow_flakes},
                {"frost_coverage", t.frost_coverage}}
        .dump();
}

SeverityTables severity_tables_from_json(const std::string& text) {
    const json j = json::parse(text);
    SeverityTables t;
    auto read = [&j](const char* key, auto& arr) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (v.size() != arr.size())
            throw ConfigError(std::string("corruption_tables.") + key + " must have 5 entries");
        for (std::size_t i = 0; i < arr.size(); ++i)
            arr[i] = v[i].get<typename std::remove_reference_t<decltype(arr)>::value_type>();
    };
    read("gaussian_sigma", t.gaussian_sigma);
    read("shot_photon_scale", t.shot_photon_scale);
    read("impulse_fraction", t.impulse_fraction);
    read("defocus_radius", t.defocus_radius);
    read("motion_length", t.motion_length);
    read("zoom_max_scale", t.zoom_max_scale);
    read("brightness_offset", t.brightness_offset);
    read("contrast_factor", t.contrast_factor);
    read("elastic_magnitude", t.elastic_magnitude);
    read("jpeg_quality", t.jpeg_quality);
    read("fog_opacity", t.fog_opacity);
    read("rain_streaks", t.rain_streaks);
    read("snow_flakes", t.snow_flakes);
    read("frost_coverage", t.frost_coverage);
    return t;
}

const std::array<CorruptionKind, kCorruptionKindCount>& corruption_registry() {
    static const std::array<CorruptionKind, kCorruptionKindCount> order = {
        CorruptionKind::kRain,         CorruptionKind::kSnow,
        CorruptionKind::kFrost,        CorruptionKind::kGaussianNoise,
        CorruptionKind::kElasticTransform,
        CorruptionKind::kShotNoise,    CorruptionKind::kImpulseNoise,
        CorruptionKind::kDefocusBlur,  CorruptionKind::kMotionBlur,
        CorruptionKind::kZoomBlur,     CorruptionKind::kFog,
        CorruptionKind::kBrightness,   CorruptionKind::kContrast,
        CorruptionKind::kJpegCompression};
    return order;
}

CorruptionSpec pick_random_corruption(Rng& rng) {
    CorruptionSpec spec;
    spec.kind = corruption_registry()[rng.uniform_int(kCorruptionKindCount)];
    spec.severity = 1 + static_cast<int>(rng.uniform_int(5));
    spec.seed = rng.next_u64();
    return spec;
}

// ---------------------------------------------------------------------------
// helpers

namespace {

inline float clip01(float v) { return std::min(std::max(v, 0.0f), 1.0f); }

void clip01_inplace(Tensor& t) {
    for (float& v : t.data) v = clip01(v);
}

// Seeded value-noise cloud in [0,1] via diamond-square on a (2^k+1) grid.
std::vector<double> plasma_field(int h, int w, std::uint64_t seed) {
    int grid = 1;
    while (grid < std::max(h, w)) grid *= 2;
    const int g = grid + 1;
    std::vector<double> f(static_cast<std::size_t>(g) * g, 0.0);
    Rng rng(seed);
    auto at = [&f, g](int y, int x) -> double& {
        return f[static_cast<std::size_t>(y) * g + x];
    };
    at(0, 0) = rng.uniform();
    at(0, grid) = rng.uniform();
    at(grid, 0) = rng.uniform();
    at(grid, grid) = rng.uniform();
    double rough = 0.5;
    for (int step = grid; step > 1; step /= 2, rough *= 0.5) {
        const int half = step / 2;
        // diamond
        for (int y = half; y < g; y += step)
            for (int x = half; x < g; x += step)
                at(y, x) = 0.25 * (at(y - half, x - half) + at(y - half, x + half) +
                                   at(y + half, x - half) + at(y + half, x + half)) +
                           rng.uniform_in(-rough, rough);
        // square
        for (int y = 0; y < g; y += half) {
            for (int x = (y / half) % 2 == 0 ? half : 0; x < g; x += step) {
                double sum = 0.0;
                int cnt = 0;
                if (y - half >= 0) { sum += at(y - half, x); ++cnt; }
                if (y + half < g) { sum += at(y + half, x); ++cnt; }
                if (x - half >= 0) { sum += at(y, x - half); ++cnt; }
                if (x + half < g) { sum += at(y, x + half); ++cnt; }
                at(y, x) = sum / cnt + rng.uniform_in(-rough, rough);
            }
        }
    }
    double lo = f[0], hi = f[0];
    for (double v : f) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    std::vector<double> out(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out[static_cast<std::size_t>(y) * w + x] =
                span > 0.0 ? (at(y, x) - lo) / span : 0.5;
    return out;
}

// Accumulates a bilinearly-splatted point into a mask.
void splat(std::vector<double>& mask, int h, int w, double y, double x, double weight) {
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0, fx = x - x0;
    const double wgt[2][2] = {{(1 - fy) * (1 - fx), (1 - fy) * fx},
                              {fy * (1 - fx), fy * fx}};
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            const int yy = y0 + dy, xx = x0 + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            mask[static_cast<std::size_t>(yy) * w + xx] += weight * wgt[dy][dx];
        }
    }
}

// Blends image toward a color through a per-pixel mask in [0,1].
void blend_mask(Tensor& img, const std::vector<double>& mask, const float color[3]) {
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            const double m = std::min(1.0, mask[static_cast<std::size_t>(y) * img.w + x]);
            if (m <= 0.0) continue;
            for (int ch = 0; ch < img.c; ++ch) {
                const float cc = color[std::min(ch, 2)];
                float& v = img.at(0, y, x, ch);
                v = static_cast<float>(v * (1.0 - m) + cc * m);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// the 14 kinds

Tensor gaussian_noise_c(const Tensor& img, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    Tensor out = img;
    for (float& v : out.data) v = clip01(v + static_cast<float>(sigma * rng.normal()));
    return out;
}

Tensor shot_noise_c(const Tensor& img, double photon_scale, std::uint64_t seed) {
    Rng rng(seed);
    Tensor out = img;
    for (float& v : out.data)
        v = clip01(static_cast<float>(rng.poisson(static_cast<double>(v) * photon_scale) /
                                      photon_scale));
    return out;
}

Tensor impulse_noise_c(const Tensor& img, double fraction, std::uint64_t seed) {
    Rng rng(seed);
    Tensor out = img;
    for (float& v : out.data)
        if (rng.uniform() < fraction) v = (rng.next_u64() & 1) ? 1.0f : 0.0f;
    return out;
}

Tensor defocus_blur_c(const Tensor& img, int radius) {
    Kernel2D k;
    k.size = 2 * radius + 1;
    k.w.assign(static_cast<std::size_t>(k.size) * k.size, 0.0);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        for (int j = -radius; j <= radius; ++j) {
            if (i * i + j * j <= radius * radius + 1) {
                k.w[static_cast<std::size_t>(i + radius) * k.size + (j + radius)] = 1.0;
                sum += 1.0;
            }
        }
    }
    for (double& v : k.w) v /= sum;
    Tensor out = conv2d_replicate(img, k);
    clip01_inplace(out);
    return out;
}

Tensor motion_blur_c(const Tensor& img, int length, std::uint64_t seed) {
    Rng rng(seed);
    const double angle = rng.uniform_in(0.0, 3.14159265358979323846);
    Kernel2D k;
    k.size = length;
    k.w.assign(static_cast<std::size_t>(length) * length, 0.0);
    const double cy = (length - 1) / 2.0, cx = (length - 1) / 2.0;
    std::vector<double> line(k.w.size(), 0.0);
    for (int t = 0; t < length; ++t) {
        const double off = t - (length - 1) / 2.0;
        splat(line, length, length, cy + off * std::sin(angle), cx + off * std::cos(angle), 1.0);
    }
    double sum = 0.0;
    for (double v : line) sum += v;
    for (std::size_t i = 0; i < line.size(); ++i) k.w[i] = line[i] / sum;
    Tensor out = conv2d_replicate(img, k);
    clip01_inplace(out);
    return out;
}

Tensor center_zoom(const Tensor& img, double scale) {
    const int zh = std::max(img.h, static_cast<int>(std::lround(img.h * scale)));
    const int zw = std::max(img.w, static_cast<int>(std::lround(img.w * scale)));
    const Tensor big = bilinear_resize(img, zh, zw);
    Tensor out(1, img.h, img.w, img.c);
    const int oy = (zh - img.h) / 2, ox = (zw - img.w) / 2;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch)
                out.at(0, y, x, ch) = big.at(0, y + oy, x + ox, ch);
    return out;
}

Tensor zoom_blur_c(const Tensor& img, double max_scale) {
    constexpr int kSteps = 5;
    std::vector<double> acc(img.size(), 0.0);
    for (int s = 0; s < kSteps; ++s) {
        const double scale = 1.0 + (max_scale - 1.0) * s / (kSteps - 1);
        const Tensor z = center_zoom(img, scale);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += z.data[i];
    }
    Tensor out(1, img.h, img.w, img.c);
    for (std::size_t i = 0; i < acc.size(); ++i)
        out.data[i] = clip01(static_cast<float>(acc[i] / kSteps));
    return out;
}

Tensor snow_c(const Tensor& img, int flakes, int severity, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> mask(static_cast<std::size_t>(img.h) * img.w, 0.0);
    for (int i = 0; i < flakes; ++i) {
        const double fy = rng.uniform_in(0.0, img.h - 1.0);
        const double fx = rng.uniform_in(0.0, img.w - 1.0);
        const double radius = rng.uniform_in(0.7, 1.6);
        const int r = static_cast<int>(std::ceil(radius * 2.0));
        for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx) {
                const int y = static_cast<int>(std::lround(fy)) + dy;
                const int x = static_cast<int>(std::lround(fx)) + dx;
                if (y < 0 || y >= img.h || x < 0 || x >= img.w) continue;
                const double d2 = (y - fy) * (y - fy) + (x - fx) * (x - fx);
                mask[static_cast<std::size_t>(y) * img.w + x] +=
                    0.9 * std::exp(-d2 / (2.0 * radius * radius * 0.35));
            }
        }
    }
    Tensor out = img;
    const float white[3] = {0.95f, 0.95f, 0.97f};
    blend_mask(out, mask, white);
    // light veil thickening with severity
    const float veil = 0.03f * severity;
    for (float& v : out.data) v = clip01(v * (1.0f - veil) + veil * 0.85f);
    return out;
}

Tensor frost_c(const Tensor& img, double coverage, std::uint64_t seed) {
    const std::vector<double> p = plasma_field(img.h, img.w, seed);
    Tensor out = img;
    const double threshold = 1.0 - coverage;
    std::vector<double> mask(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= threshold) continue;
        const double t = (p[i] - threshold) / std::max(1e-9, 1.0 - threshold);
        mask[i] = 0.75 * t * t * (3.0 - 2.0 * t); // smoothstep edge
    }
    const float crystal[3] = {0.82f, 0.88f, 0.97f};
    blend_mask(out, mask, crystal);
    clip01_inplace(out);
    return out;
}

Tensor fog_c(const Tensor& img, double opacity, std::uint64_t seed) {
    const std::vector<double> p = plasma_field(img.h, img.w, seed);
    Tensor out = img;
    constexpr double kFogShade = 0.9;
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            const double t = opacity * p[static_cast<std::size_t>(y) * img.w + x];
            for (int ch = 0; ch < img.c; ++ch) {
                float& v = out.at(0, y, x, ch);
                v = clip01(static_cast<float>(v * (1.0 - t) + kFogShade * t));
            }
        }
    }
    return out;
}

Tensor rain_c(const Tensor& img, int streaks, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> mask(static_cast<std::size_t>(img.h) * img.w, 0.0);
    for (int i = 0; i < streaks; ++i) {
        const double y0 = rng.uniform_in(-2.0, img.h - 1.0);
        const double x0 = rng.uniform_in(0.0, img.w - 1.0);
        // mostly vertical streaks
        const double angle = rng.uniform_in(1.2217, 1.9199); // 70..110 degrees
        const double len = img.h * rng.uniform_in(0.25, 0.45);
        const double alpha = rng.uniform_in(0.25, 0.45);
        const int steps = static_cast<int>(std::ceil(len * 2.0));
        for (int s = 0; s <= steps; ++s) {
            const double t = len * s / steps;
            splat(mask, img.h, img.w, y0 + t * std::sin(angle), x0 + t * std::cos(angle),
                  alpha / 2.0);
        }
    }
    Tensor out = img;
    const float drop[3] = {0.78f, 0.82f, 0.92f};
    blend_mask(out, mask, drop);
    clip01_inplace(out);
    return out;
}

Tensor brightness_c(const Tensor& img, double offset) {
    Tensor out = img;
    for (float& v : out.data) v = clip01(v + static_cast<float>(offset));
    return out;
}

Tensor contrast_c(const Tensor& img, double factor) {
    double mean = 0.0;
    for (float v : img.data) mean += v;
    mean /= static_cast<double>(img.size());
    Tensor out = img;
    // v + (c-1)(v - mean): exact identity at c == 1.
    const float cm1 = static_cast<float>(factor - 1.0);
    const float m = static_cast<float>(mean);
    for (float& v : out.data) v = clip01(v + cm1 * (v - m));
    return out;
}

Tensor elastic_transform_c(const Tensor& img, double magnitude, std::uint64_t seed) {
    Rng rng(seed);
    const int h = img.h, w = img.w;
    Tensor dy(1, h, w, 1), dx(1, h, w, 1);
    for (float& v : dy.data) v = static_cast<float>(rng.uniform_in(-1.0, 1.0));
    for (float& v : dx.data) v = static_cast<float>(rng.uniform_in(-1.0, 1.0));
    constexpr double kFieldSigma = 4.0;
    const int ksize = std::min({2 * static_cast<int>(std::ceil(2.0 * kFieldSigma)) + 1, h | 1, w | 1});
    Kernel2D k;
    k.size = ksize;
    k.w.resize(static_cast<std::size_t>(ksize) * ksize);
    const int r = ksize / 2;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j) {
            const double v = std::exp(-(i * i + j * j) / (2.0 * kFieldSigma * kFieldSigma));
            k.w[static_cast<std::size_t>(i + r) * ksize + (j + r)] = v;
            sum += v;
        }
    for (double& v : k.w) v /= sum;
    Tensor sdy = conv2d_replicate(dy, k);
    Tensor sdx = conv2d_replicate(dx, k);
    auto normalize = [magnitude](Tensor& f) {
        float peak = 0.0f;
        for (float v : f.data) peak = std::max(peak, std::fabs(v));
        const float scale = peak > 0.0f ? static_cast<float>(magnitude) / peak : 0.0f;
        for (float& v : f.data) v *= scale;
    };
    normalize(sdy);
    normalize(sdx);
    Tensor out(1, h, w, img.c);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sy = y + sdy.at(0, y, x, 0);
            double sx = x + sdx.at(0, y, x, 0);
            sy = std::min(std::max(sy, 0.0), static_cast<double>(h - 1));
            sx = std::min(std::max(sx, 0.0), static_cast<double>(w - 1));
            const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
            const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
            const double fy = sy - y0, fx = sx - x0;
            for (int ch = 0; ch < img.c; ++ch) {
                const double top =
                    img.at(0, y0, x0, ch) + (img.at(0, y0, x1, ch) - img.at(0, y0, x0, ch)) * fx;
                const double bot =
                    img.at(0, y1, x0, ch) + (img.at(0, y1, x1, ch) - img.at(0, y1, x0, ch)) * fx;
                out.at(0, y, x, ch) = clip01(static_cast<float>(top + (bot - top) * fy));
            }
        }
    }
    return out;
}

// Baseline JPEG luminance/chrominance quantization tables (Annex K).
constexpr int kJpegLuma[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,
                               55, 14, 13, 16, 24,  40,  57,  69,  56, 14, 17, 22, 29,  51,  87,
                               80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55,  64,  81,
                               104, 113, 92, 49, 64, 78,  87,  103, 121, 120, 101, 72, 92, 95, 98,
                               112, 100, 103, 99};
constexpr int kJpegChroma[64] = {17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
                                 24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
                                 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
                                 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

void scaled_quant_table(const int* base, int quality, double* out) {
    const double s = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    for (int i = 0; i < 64; ++i)
        out[i] = std::max(1.0, std::floor((base[i] * s + 50.0) / 100.0));
}

void dct8_2d(const double in[64], double out[64]) {
    constexpr double kPi = 3.14159265358979323846;
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    acc += in[y * 8 + x] * std::cos((2 * y + 1) * u * kPi / 16.0) *
                           std::cos((2 * x + 1) * v * kPi / 16.0);
            const double cu = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
            const double cv = v == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
            out[u * 8 + v] = 0.25 * cu * cv * acc;
        }
    }
}

void idct8_2d(const double in[64], double out[64]) {
    constexpr double kPi = 3.14159265358979323846;
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u) {
                for (int v = 0; v < 8; ++v) {
                    const double cu = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
                    const double cv = v == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
                    acc += cu * cv * in[u * 8 + v] * std::cos((2 * y + 1) * u * kPi / 16.0) *
                           std::cos((2 * x + 1) * v * kPi / 16.0);
                }
            }
            out[y * 8 + x] = 0.25 * acc;
        }
    }
}

// DCT-quantization round trip per 8x8 block; the entropy coding stage of a
// real JPEG is lossless, so this reproduces the codec's distortion.
void jpeg_channel(std::vector<double>& chan, int h, int w, const double* quant) {
    const int bh = (h + 7) / 8, bw = (w + 7) / 8;
    double block[64], freq[64];
    for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const int sy = std::min(by * 8 + y, h - 1);
                    const int sx = std::min(bx * 8 + x, w - 1);
                    block[y * 8 + x] = chan[static_cast<std::size_t>(sy) * w + sx] - 128.0;
                }
            dct8_2d(block, freq);
            for (int i = 0; i < 64; ++i) freq[i] = std::round(freq[i] / quant[i]) * quant[i];
            idct8_2d(freq, block);
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const int sy = by * 8 + y, sx = bx * 8 + x;
                    if (sy < h && sx < w)
                        chan[static_cast<std::size_t>(sy) * w + sx] = block[y * 8 + x] + 128.0;
                }
        }
    }
}

Tensor jpeg_compression_c(const Tensor& img, int quality) {
    if (quality < 1 || quality > 100) throw ConfigError("jpeg quality must be in [1,100]");
    const int h = img.h, w = img.w;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<double> ych(plane), cb(plane), cr(plane);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double r = img.at(0, y, x, 0) * 255.0;
            const double g = img.at(0, y, x, img.c > 1 ? 1 : 0) * 255.0;
            const double b = img.at(0, y, x, img.c > 2 ? 2 : 0) * 255.0;
            ych[i] = 0.299 * r + 0.587 * g + 0.114 * b;
            cb[i] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
            cr[i] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
        }
    }
    double qluma[64], qchroma[64];
    scaled_quant_table(kJpegLuma, quality, qluma);
    scaled_quant_table(kJpegChroma, quality, qchroma);
    jpeg_channel(ych, h, w, qluma);
    jpeg_channel(cb, h, w, qchroma);
    jpeg_channel(cr, h, w, qchroma);
    Tensor out(1, h, w, img.c);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double yv = ych[i], cbv = cb[i] - 128.0, crv = cr[i] - 128.0;
            const double rgb[3] = {yv + 1.402 * crv, yv - 0.344136 * cbv - 0.714136 * crv,
                                   yv + 1.772 * cbv};
            for (int ch = 0; ch < img.c; ++ch)
                out.at(0, y, x, ch) = clip01(static_cast<float>(rgb[std::min(ch, 2)] / 255.0));
        }
    }
    return out;
}

} // namespace

Tensor apply_corruption(const Tensor& image, const CorruptionSpec& spec,
                        const SeverityTables& t) {
    spec.validate();
    if (image.n != 1) throw ModelError("apply_corruption expects a single image");
    const int s = spec.severity - 1;
    switch (spec.kind) {
        case CorruptionKind::kGaussianNoise:
            return gaussian_noise_c(image, t.gaussian_sigma[s], spec.seed);
        case CorruptionKind::kShotNoise:
            return shot_noise_c(image, t.shot_photon_scale[s], spec.seed);
        case CorruptionKind::kImpulseNoise:
            return impulse_noise_c(image, t.impulse_fraction[s], spec.seed);
        case CorruptionKind::kDefocusBlur:
            return defocus_blur_c(image, t.defocus_radius[s]);
        case CorruptionKind::kMotionBlur:
            return motion_blur_c(image, t.motion_length[s], spec.seed);
        case CorruptionKind::kZoomBlur:
            return zoom_blur_c(image, t.zoom_max_scale[s]);
        case CorruptionKind::kSnow:
            return snow_c(image, t.snow_flakes[s], spec.severity, spec.seed);
        case CorruptionKind::kFrost:
            return frost_c(image, t.frost_coverage[s], spec.seed);
        case CorruptionKind::kFog:
            return fog_c(image, t.fog_opacity[s], spec.seed);
        case CorruptionKind::kRain:
            return rain_c(image, t.rain_streaks[s], spec.seed);
        case CorruptionKind::kBrightness:
            return brightness_c(image, t.brightness_offset[s]);
        case CorruptionKind::kContrast:
            return contrast_c(image, t.contrast_factor[s]);
        case CorruptionKind::kElasticTransform:
            return elastic_transform_c(image, t.elastic_magnitude[s], spec.seed);
        case CorruptionKind::kJpegCompression:
            return jpeg_compression_c(image, t.jpeg_quality[s]);
    }
    throw ConfigError("apply_corruption: kind not in registry");
}

} // namespace robustify
