#ifndef ROBUSTIFY_DATASET_HPP
#define ROBUSTIFY_DATASET_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "robustify/corruption.hpp"
#include "robustify/model.hpp"
#include "robustify/rng.hpp"
#include "robustify/tensor.hpp"

namespace robustify {

enum class Provenance { kClean, kAdversarial, kCorrupted };

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// Enhancement details carried per sample into the sidecar manifest.
struct SampleInfo {
    // corrupted samples
    std::optional<CorruptionSpec> corruption;
    // adversarial samples
    double eps_linf = 0.0, eps_l2 = 0.0;
    double achieved_linf = 0.0, achieved_l2 = 0.0;
    std::uint64_t attack_seed_linf = 0, attack_seed_l2 = 0;
};

// Ordered list of labeled images with provenance tracking. source_index
// is the sample's position in the originally loaded dataset and survives
// capping, splitting and enhancement.
struct LabeledDataset {
    Tensor images; // N x H x W x C
    std::vector<int> labels;
    std::vector<Provenance> provenance;
    std::vector<std::int64_t> source_index;
    std::vector<SampleInfo> info; // empty or one entry per sample

    int size() const { return images.n; }
    void validate() const;

    ImageBatch batch() const { return ImageBatch{images, labels}; }
    LabeledDataset subset(const std::vector<int>& indices) const;
};

// CIFAR-10 binary record layout: 1 label byte, then 3072 pixel bytes in
// channel-major order (1024 R, 1024 G, 1024 B; row-major within each
// channel). Pixels map to [0,1] by /255.
constexpr int kCifarRecordBytes = 3073;

LabeledDataset load_cifar10_binary(const std::vector<std::string>& paths);

// Saves in the same record layout (pixels quantized by round(p*255)) plus
// a JSON-lines manifest at <path>.manifest.jsonl with one record per
// sample: index, source_index, label, provenance, and the corruption spec
// or attack budget where applicable.
void save_dataset(const LabeledDataset& dataset, const std::string& path);

// Loads a saved dataset; restores provenance and sample info from the
// manifest when present, otherwise marks everything clean.
LabeledDataset load_dataset(const std::string& path);

// Uniform random subset of size n without replacement; original order
// (by source_index) is preserved.
LabeledDataset cap_dataset(const LabeledDataset& dataset, int n, Rng& rng);

// Non-negative split weights, not all zero.
struct SplitRatio {
    double alpha1 = 0.0, alpha2 = 1.0, alpha3 = 4.0;

    void validate() const;
    static SplitRatio parse(const std::string& text); // "a1:a2:a3"
    std::string str() const;
};

// Largest-remainder apportionment of n into three parts; remainder ties
// break toward the lower part index.
std::array<int, 3> split_sizes(int n, const SplitRatio& ratio);

// Random disjoint partition covering the dataset, sizes per split_sizes.
std::tuple<LabeledDataset, LabeledDataset, LabeledDataset> split_dataset(
    const LabeledDataset& dataset, const SplitRatio& ratio, Rng& rng);

} // namespace robustify

#endif
