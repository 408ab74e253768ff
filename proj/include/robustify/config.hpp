#ifndef ROBUSTIFY_CONFIG_HPP
#define ROBUSTIFY_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robustify/attack.hpp"
#include "robustify/corruption.hpp"
#include "robustify/dataset.hpp"
#include "robustify/train.hpp"

namespace robustify {

// Declarative mirror of the whole pipeline configuration. Precedence:
// command-line flag beats config file beats preset default.
//
// Presets pin two fidelities of the same recipe:
//   paper: 300 attack iterations, cap 50000, five ensemble slots.
//   desk:  20 attack iterations, no cap, two small CNNs; runs on a CPU
//          in minutes.
struct PipelineConfig {
    std::string preset = "desk";
    std::uint64_t master_seed = 1;
    std::optional<int> cap;
    SplitRatio ratio{0.0, 1.0, 4.0};
    PerturbationBudget budget_linf{NormKind::kLinf, 8.0 / 255.0, 2.0 / 255.0, 20};
    PerturbationBudget budget_l2{NormKind::kL2, 1.0, 0.025, 20};
    AttackConfig attack;
    std::vector<std::string> ensemble_paths;
    TrainConfig train;
    int suite_size = 1000;
    int workers = 0;
    SeverityTables corruption_tables;

    void validate() const;
    std::string to_json(bool pretty = true) const;
};

PipelineConfig default_config(const std::string& preset);
PipelineConfig config_from_json(const std::string& json_text, const PipelineConfig& base);
PipelineConfig load_config_file(const std::string& path, const PipelineConfig& base);

} // namespace robustify

#endif
