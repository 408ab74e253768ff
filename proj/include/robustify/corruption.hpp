#ifndef ROBUSTIFY_CORRUPTION_HPP
#define ROBUSTIFY_CORRUPTION_HPP

#include <array>
#include <cstdint>
#include <string>

#include "robustify/rng.hpp"
#include "robustify/tensor.hpp"

namespace robustify {

// The 14 supported corruption kinds (noise / blur / weather / digital).
enum class CorruptionKind {
    kGaussianNoise,
    kShotNoise,
    kImpulseNoise,
    kDefocusBlur,
    kMotionBlur,
    kZoomBlur,
    kSnow,
    kFrost,
    kFog,
    kRain,
    kBrightness,
    kContrast,
    kElasticTransform,
    kJpegCompression,
};

constexpr int kCorruptionKindCount = 14;

const char* to_string(CorruptionKind kind);
CorruptionKind corruption_kind_from_string(const std::string& s);

// One corruption instance: kind, severity in [1,5], seed for any random
// content. Identical specs yield bit-identical outputs.
struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::kGaussianNoise;
    int severity = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-severity parameter tables, sized for 32x32 images. Index 0 holds
// severity 1.
struct SeverityTables {
    std::array<double, 5> gaussian_sigma{0.04, 0.08, 0.12, 0.15, 0.18};
    std::array<double, 5> shot_photon_scale{60, 25, 12, 5, 3};
    std::array<double, 5> impulse_fraction{0.01, 0.03, 0.06, 0.10, 0.17};
    std::array<int, 5> defocus_radius{1, 2, 3, 4, 6};
    std::array<int, 5> motion_length{3, 5, 7, 9, 11};
    std::array<double, 5> zoom_max_scale{1.06, 1.11, 1.16, 1.21, 1.26};
    std::array<double, 5> brightness_offset{0.05, 0.10, 0.15, 0.20, 0.30};
    std::array<double, 5> contrast_factor{0.75, 0.6, 0.45, 0.3, 0.2};
    std::array<double, 5> elastic_magnitude{2, 3, 4, 6, 8};
    std::array<int, 5> jpeg_quality{80, 65, 50, 35, 20};
    std::array<double, 5> fog_opacity{0.15, 0.25, 0.35, 0.45, 0.55};
    std::array<int, 5> rain_streaks{8, 14, 20, 28, 40};
    std::array<int, 5> snow_flakes{12, 20, 30, 42, 58};
    std::array<double, 5> frost_coverage{0.12, 0.20, 0.28, 0.36, 0.45};
};

const SeverityTables& default_severity_tables();

// JSON view of the tables for the config file and `print-config`.
std::string severity_tables_json(const SeverityTables& tables);
SeverityTables severity_tables_from_json(const std::string& json_text);

// Stable selection order used by pick_random_corruption: the five
// headline kinds (rain, snow, frost, gaussian noise, elastic transform)
// first, then the remaining nine in taxonomy order.
const std::array<CorruptionKind, kCorruptionKindCount>& corruption_registry();

// Applies one corruption to a single image (n == 1). Output has the same
// shape, values in [0,1], and is a pure function of (image, spec, tables).
Tensor apply_corruption(const Tensor& image, const CorruptionSpec& spec,
                        const SeverityTables& tables = default_severity_tables());

// Uniform kind over the registry, uniform severity in [1,5], fresh seed.
CorruptionSpec pick_random_corruption(Rng& rng);

} // namespace robustify

#endif
