#ifndef ROBUSTIFY_TRAIN_HPP
#define ROBUSTIFY_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "robustify/dataset.hpp"
#include "robustify/model.hpp"

namespace robustify {

// SGD-with-momentum recipe: step decay at the given epoch milestones.
// Fully deterministic given (weight_seed used at model construction,
// data_order_seed); the per-sample gradients are reduced in sample order
// regardless of how many workers computed them.
struct TrainConfig {
    int epochs = 5;
    int batch_size = 64;
    double base_lr = 0.05;
    double momentum = 0.9;
    std::vector<int> lr_milestones{4};
    double lr_gamma = 0.2;
    std::uint64_t weight_seed = 7;
    std::uint64_t data_order_seed = 11;
    LossKind loss = LossKind::kCrossEntropy;
    Exec exec = Exec::kParallel;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double learning_rate = 0.0;
};

// Empirical risk minimization over the dataset; mutates the model in
// place and returns per-epoch mean losses. Throws TrainingError with
// epoch/step context if the loss turns non-finite.
std::vector<EpochStats> erm_train(TrainableClassifier& model, const LabeledDataset& data,
                                  const TrainConfig& config);

} // namespace robustify

#endif
