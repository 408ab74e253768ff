#ifndef ROBUSTIFY_ENHANCE_HPP
#define ROBUSTIFY_ENHANCE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "robustify/attack.hpp"
#include "robustify/dataset.hpp"

namespace robustify {

// Settings for the dataset enhancement map: split ratio, the dual-norm
// attack budgets, transfer knobs, the attacker ensemble and the master
// seed every sub-stream derives from.
struct EnhancementConfig {
    SplitRatio ratio{0.0, 1.0, 4.0};
    PerturbationBudget budget_linf{NormKind::kLinf, 8.0 / 255.0, 2.0 / 255.0, 20};
    PerturbationBudget budget_l2{NormKind::kL2, 1.0, 0.025, 20};
    AttackConfig attack;
    std::vector<std::shared_ptr<const GradientClassifier>> ensemble;
    std::uint64_t master_seed = 1;
    std::optional<int> cap; // applied by the pipeline driver, not enhance()
    Exec exec = Exec::kParallel;

    void validate() const;
};

// Partition sizes reported by the pipeline.
struct EnhancementStats {
    int clean = 0, adversarial = 0, corrupted = 0;
};

// The enhancement map: random split by ratio, D1 kept clean, every D2
// sample replaced by its dual-norm adversarial counterpart, every D3
// sample replaced by a randomly corrupted copy. Labels and sample count
// are preserved exactly; output order follows the input.
LabeledDataset enhance(const LabeledDataset& dataset, const EnhancementConfig& config,
                       EnhancementStats* stats = nullptr);

} // namespace robustify

#endif
