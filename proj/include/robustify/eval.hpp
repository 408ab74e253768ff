#ifndef ROBUSTIFY_EVAL_HPP
#define ROBUSTIFY_EVAL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robustify/attack.hpp"
#include "robustify/dataset.hpp"
#include "robustify/model.hpp"

namespace robustify {

// The three index-aligned evaluation subsets: clean originals, dual-norm
// adversarial copies, randomly corrupted copies.
struct EvaluationSuite {
    LabeledDataset ori, adv, cor;

    void validate() const;
};

// Fraction of samples whose argmax prediction equals the label; argmax
// ties break toward the lowest class index.
double accuracy(const GradientClassifier& model, const LabeledDataset& data,
                Exec exec = Exec::kParallel);

// Unweighted mean of the per-subset accuracies (not a pooled-sample mean).
double robustness_score(const GradientClassifier& model, const EvaluationSuite& suite,
                        Exec exec = Exec::kParallel);

// Settings for building a desk-scale evaluation suite from held-out
// clean data.
struct SuiteConfig {
    PerturbationBudget budget_linf{NormKind::kLinf, 8.0 / 255.0, 2.0 / 255.0, 20};
    PerturbationBudget budget_l2{NormKind::kL2, 1.0, 0.025, 20};
    AttackConfig attack;
    std::uint64_t seed = 1;
    Exec exec = Exec::kParallel;
};

EvaluationSuite build_evaluation_suite(const LabeledDataset& clean_test,
                                       const GradientClassifier& attacker_ensemble,
                                       const SuiteConfig& config);

// One row of the robustness report; accuracies in percent. r, when
// given, is validated against the recomputed mean.
struct ReportRow {
    std::string name;
    double acc_ori = 0.0, acc_adv = 0.0, acc_cor = 0.0;
    std::optional<double> r;
};

struct RenderedReport {
    std::string text; // aligned human-readable table
    std::string csv;  // name,acc_ori,acc_adv,acc_cor,r
    std::vector<double> r_values;
};

// Renders the table with two-decimal percentages. R is always recomputed
// from the ACC columns; a provided R farther than 0.005 from the mean is
// rejected with a FormatError.
RenderedReport render_report(const std::vector<ReportRow>& rows);

// Parses rows from CSV text (header optional): name,acc_ori,acc_adv,acc_cor[,r]
std::vector<ReportRow> parse_report_rows(const std::string& csv_text);

} // namespace robustify

#endif
