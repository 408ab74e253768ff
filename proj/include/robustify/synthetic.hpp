#ifndef ROBUSTIFY_SYNTHETIC_HPP
#define ROBUSTIFY_SYNTHETIC_HPP

#include <cstdint>

#include "robustify/dataset.hpp"

namespace robustify {

// Procedurally generated 10-class shape/texture dataset in the CIFAR
// image format, for desk-scale experiments where the real corpus is not
// available. Classes are defined by geometry (stripe orientations,
// checkerboards, disks, rings, boxes, crosses, triangles, bullseyes) with
// randomized colors, positions and mild pixel noise, so classification
// requires edge and texture features rather than mean color.
constexpr int kSyntheticClassCount = 10;

LabeledDataset make_synthetic_dataset(int n, std::uint64_t seed, int h = 32, int w = 32);

} // namespace robustify

#endif
