#include "robustify/enhance.hpp"

#include <algorithm>

#include "robustify/errors.hpp"
#include "robustify/parallel.hpp"

namespace robustify {

void EnhancementConfig::validate() const {
    ratio.validate();
    budget_linf.validate();
    budget_l2.validate();
    attack.validate();
    if (budget_linf.norm != NormKind::kLinf || budget_l2.norm != NormKind::kL2)
        throw ConfigError("enhancement budgets must be (linf, l2) in that order");
    if (ratio.alpha2 > 0.0 && ensemble.empty())
        throw ConfigError("enhancement with an adversarial partition requires ensemble models");
}

namespace {

std::vector<std::uint64_t> attack_seeds(const LabeledDataset& part, std::uint64_t master,
                                        SeedStream stream) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(part.size()));
    for (int i = 0; i < part.size(); ++i)
        seeds[static_cast<std::size_t>(i)] =
            derive_seed(master, stream,
                        static_cast<std::uint64_t>(part.source_index[static_cast<std::size_t>(i)]));
    return seeds;
}

} // namespace

LabeledDataset enhance(const LabeledDataset& dataset, const EnhancementConfig& config,
                       EnhancementStats* stats) {
    config.validate();
    dataset.validate();

    Rng split_rng(derive_seed(config.master_seed, SeedStream::kSplit));
    auto [d1, d2, d3] = split_dataset(dataset, config.ratio, split_rng);
    if (stats) *stats = EnhancementStats{d1.size(), d2.size(), d3.size()};

    // Output mirrors the input ordering; enhanced samples are written back
    // by source position so worker scheduling cannot reorder anything.
    LabeledDataset out = dataset;
    out.info.assign(static_cast<std::size_t>(out.size()), SampleInfo{});
    std::vector<int> position(static_cast<std::size_t>(dataset.size()));
    {
        // source_index values are unique but not necessarily dense; map
        // them back to positions in this dataset.
        std::vector<std::pair<std::int64_t, int>> order;
        order.reserve(position.size());
        for (int i = 0; i < dataset.size(); ++i)
            order.emplace_back(dataset.source_index[static_cast<std::size_t>(i)], i);
        std::sort(order.begin(), order.end());
        for (std::size_t i = 0; i < order.size(); ++i) position[i] = order[i].second;
    }
    auto position_of = [&](std::int64_t src) {
        // binary search over the sorted source indices
        std::size_t lo = 0, hi = position.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (dataset.source_index[static_cast<std::size_t>(position[mid])] < src)
                lo = mid + 1;
            else
                hi = mid;
        }
        return position[lo];
    };

    for (int i = 0; i < out.size(); ++i) out.provenance[static_cast<std::size_t>(i)] = Provenance::kClean;

    // D2: dual-norm transferable attack, labels preserved.
    if (d2.size() > 0) {
        const EnsembleClassifier ensemble(config.ensemble);
        const ImageBatch batch = d2.batch();
        const std::vector<std::uint64_t> seeds_l2 =
            attack_seeds(d2, config.master_seed, SeedStream::kAttackL2);
        const std::vector<std::uint64_t> seeds_linf =
            attack_seeds(d2, config.master_seed, SeedStream::kAttackLinf);
        Tensor delta_l2, delta_linf;
        try {
            delta_l2 = run_attack_seeded(batch, ensemble, config.budget_l2, config.attack,
                                         seeds_l2, config.exec);
            delta_linf = run_attack_seeded(batch, ensemble, config.budget_linf, config.attack,
                                           seeds_linf, config.exec);
        } catch (const std::exception& e) {
            throw ModelError("enhance: attack failed on adversarial partition (first "
                             "source_index " +
                             std::to_string(d2.source_index.front()) + "): " + e.what());
        }
        const ImageBatch adv = combine_dual_norm(batch, delta_l2, delta_linf);
        for (int i = 0; i < d2.size(); ++i) {
            const int pos = position_of(d2.source_index[static_cast<std::size_t>(i)]);
            out.images.set_sample(pos, adv.pixels.slice(i));
            out.provenance[static_cast<std::size_t>(pos)] = Provenance::kAdversarial;
            SampleInfo& si = out.info[static_cast<std::size_t>(pos)];
            si.eps_linf = config.budget_linf.epsilon;
            si.eps_l2 = config.budget_l2.epsilon;
            si.achieved_linf = max_sample_norm(delta_linf.slice(i), NormKind::kLinf);
            si.achieved_l2 = max_sample_norm(delta_l2.slice(i), NormKind::kL2);
            si.attack_seed_linf = seeds_linf[static_cast<std::size_t>(i)];
            si.attack_seed_l2 = seeds_l2[static_cast<std::size_t>(i)];
        }
    }

    // D3: one randomly chosen corruption per sample.
    if (d3.size() > 0) {
        std::vector<CorruptionSpec> specs(static_cast<std::size_t>(d3.size()));
        std::vector<Tensor> corrupted(static_cast<std::size_t>(d3.size()));
        parallel_for(d3.size(), config.exec, [&](std::int64_t i) {
            Rng rng(derive_seed(config.master_seed, SeedStream::kCorruptionPick,
                                static_cast<std::uint64_t>(
                                    d3.source_index[static_cast<std::size_t>(i)])));
            const CorruptionSpec spec = pick_random_corruption(rng);
            specs[static_cast<std::size_t>(i)] = spec;
            corrupted[static_cast<std::size_t>(i)] =
                apply_corruption(d3.images.slice(static_cast<int>(i)), spec);
        });
        for (int i = 0; i < d3.size(); ++i) {
            const int pos = position_of(d3.source_index[static_cast<std::size_t>(i)]);
            out.images.set_sample(pos, corrupted[static_cast<std::size_t>(i)]);
            out.provenance[static_cast<std::size_t>(pos)] = Provenance::kCorrupted;
            out.info[static_cast<std::size_t>(pos)].corruption = specs[static_cast<std::size_t>(i)];
        }
    }

    return out;
}

} // namespace robustify
