#include "robustify/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robustify/errors.hpp"
#include "robustify/parallel.hpp"

namespace robustify {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (base_lr <= 0.0) throw ConfigError("train: base_lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train: momentum must be in [0,1)");
    if (lr_gamma <= 0.0) throw ConfigError("train: lr_gamma must be > 0");
}

std::vector<EpochStats> erm_train(TrainableClassifier& model, const LabeledDataset& data,
                                  const TrainConfig& config) {
    config.validate();
    data.validate();
    if (data.size() == 0) throw ConfigError("erm_train: dataset is empty");

    const std::size_t pcount = model.param_count();
    std::vector<float> params;
    model.export_params(params);
    std::vector<float> velocity(pcount, 0.0f);
    std::vector<float> grad_mean(pcount, 0.0f);
    // One gradient buffer per sample of the batch; reduced serially in
    // sample order so the result is independent of worker scheduling.
    std::vector<float> sample_grads;
    std::vector<double> sample_losses(static_cast<std::size_t>(config.batch_size), 0.0);

    std::vector<int> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochStats> stats;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.data_order_seed, SeedStream::kTrainOrder,
                                    static_cast<std::uint64_t>(epoch)));
        for (int i = data.size() - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(
                          shuffle_rng.uniform_int(static_cast<std::uint64_t>(i + 1)))]);

        double lr = config.base_lr;
        for (int m : config.lr_milestones)
            if (epoch >= m) lr *= config.lr_gamma;

        double epoch_loss = 0.0;
        int steps = 0;
        for (int start = 0; start < data.size(); start += config.batch_size, ++steps) {
            const int bn = std::min(config.batch_size, data.size() - start);
            sample_grads.assign(static_cast<std::size_t>(bn) * pcount, 0.0f);
            parallel_for(bn, config.exec, [&](std::int64_t bi) {
                const int sample = order[static_cast<std::size_t>(start + bi)];
                const Tensor img = data.images.slice(sample);
                sample_losses[static_cast<std::size_t>(bi)] = model.accumulate_param_gradient(
                    img, data.labels[static_cast<std::size_t>(sample)], config.loss,
                    sample_grads.data() + static_cast<std::size_t>(bi) * pcount);
            });
            std::fill(grad_mean.begin(), grad_mean.end(), 0.0f);
            for (int bi = 0; bi < bn; ++bi) {
                const float* g = sample_grads.data() + static_cast<std::size_t>(bi) * pcount;
                for (std::size_t p = 0; p < pcount; ++p) grad_mean[p] += g[p];
            }
            const float inv = 1.0f / static_cast<float>(bn);
            double batch_loss = 0.0;
            for (int bi = 0; bi < bn; ++bi) batch_loss += sample_losses[static_cast<std::size_t>(bi)];
            batch_loss /= bn;
            if (!std::isfinite(batch_loss))
                throw TrainingError("training diverged: non-finite loss at epoch " +
                                    std::to_string(epoch + 1) + ", step " +
                                    std::to_string(steps + 1));
            epoch_loss += batch_loss * bn;

            const float flr = static_cast<float>(lr);
            const float fm = static_cast<float>(config.momentum);
            for (std::size_t p = 0; p < pcount; ++p) {
                velocity[p] = fm * velocity[p] + grad_mean[p] * inv;
                params[p] -= flr * velocity[p];
            }
            model.import_params(params);
        }
        stats.push_back(EpochStats{epoch + 1, epoch_loss / data.size(), lr});
    }
    return stats;
}

} // namespace robustify
