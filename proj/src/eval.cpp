#include "robustify/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "robustify/errors.hpp"
#include "robustify/parallel.hpp"

namespace robustify {

void EvaluationSuite::validate() const {
    if (ori.size() == 0 || adv.size() == 0 || cor.size() == 0)
        throw ConfigError("evaluation suite subsets must be non-empty");
    ori.validate();
    adv.validate();
    cor.validate();
}

double accuracy(const GradientClassifier& model, const LabeledDataset& data, Exec exec) {
    if (data.size() == 0) throw ConfigError("accuracy: dataset is empty");
    const Tensor logits = model.forward_logits_raw(data.images, exec);
    const int k = model.num_classes();
    std::int64_t correct = 0;
    for (int i = 0; i < data.size(); ++i) {
        const float* z = logits.sample(i);
        int best = 0;
        for (int j = 1; j < k; ++j)
            if (z[j] > z[best]) best = j; // ties keep the lowest index
        if (best == data.labels[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / data.size();
}

double robustness_score(const GradientClassifier& model, const EvaluationSuite& suite,
                        Exec exec) {
    suite.validate();
    const double a_ori = accuracy(model, suite.ori, exec);
    const double a_adv = accuracy(model, suite.adv, exec);
    const double a_cor = accuracy(model, suite.cor, exec);
    return (a_ori + a_adv + a_cor) / 3.0;
}

EvaluationSuite build_evaluation_suite(const LabeledDataset& clean_test,
                                       const GradientClassifier& attacker_ensemble,
                                       const SuiteConfig& config) {
    if (clean_test.size() == 0) throw ConfigError("build_evaluation_suite: empty clean set");
    clean_test.validate();

    EvaluationSuite suite;
    suite.ori = clean_test;

    const ImageBatch batch = clean_test.batch();
    std::vector<std::uint64_t> seeds_l2(static_cast<std::size_t>(clean_test.size()));
    std::vector<std::uint64_t> seeds_linf(static_cast<std::size_t>(clean_test.size()));
    for (int i = 0; i < clean_test.size(); ++i) {
        const auto src = static_cast<std::uint64_t>(
            clean_test.source_index[static_cast<std::size_t>(i)]);
        seeds_l2[static_cast<std::size_t>(i)] =
            derive_seed(config.seed, SeedStream::kSuiteAttackL2, src);
        seeds_linf[static_cast<std::size_t>(i)] =
            derive_seed(config.seed, SeedStream::kSuiteAttackLinf, src);
    }
    const Tensor delta_l2 = run_attack_seeded(batch, attacker_ensemble, config.budget_l2,
                                              config.attack, seeds_l2, config.exec);
    const Tensor delta_linf = run_attack_seeded(batch, attacker_ensemble, config.budget_linf,
                                                config.attack, seeds_linf, config.exec);
    const ImageBatch adv = combine_dual_norm(batch, delta_l2, delta_linf);
    suite.adv = clean_test;
    suite.adv.images = adv.pixels;
    suite.adv.provenance.assign(static_cast<std::size_t>(clean_test.size()),
                                Provenance::kAdversarial);

    suite.cor = clean_test;
    parallel_for(clean_test.size(), config.exec, [&](std::int64_t i) {
        Rng rng(derive_seed(config.seed, SeedStream::kSuiteCorruption,
                            static_cast<std::uint64_t>(
                                clean_test.source_index[static_cast<std::size_t>(i)])));
        const CorruptionSpec spec = pick_random_corruption(rng);
        suite.cor.images.set_sample(static_cast<int>(i),
                                    apply_corruption(clean_test.images.slice(static_cast<int>(i)),
                                                     spec));
    });
    suite.cor.provenance.assign(static_cast<std::size_t>(clean_test.size()),
                                Provenance::kCorrupted);
    return suite;
}

// ---------------------------------------------------------------------------
// reporting

namespace {
std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}
} // namespace

RenderedReport render_report(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw ConfigError("render_report: no rows");
    RenderedReport out;
    std::size_t name_width = 5;
    for (const auto& row : rows) name_width = std::max(name_width, row.name.size());

    std::ostringstream text, csv;
    text << std::string(name_width, ' ') << "  ACC(ori)  ACC(adv)  ACC(cor)       R\n";
    csv << "name,acc_ori,acc_adv,acc_cor,r\n";
    for (const auto& row : rows) {
        const double r = (row.acc_ori + row.acc_adv + row.acc_cor) / 3.0;
        if (row.r && std::fabs(*row.r - r) > 0.005 + 1e-9)
            throw FormatError("report row '" + row.name + "' is inconsistent: stated R=" +
                              format_pct(*row.r) + " but mean of ACC columns is " +
                              format_pct(r));
        out.r_values.push_back(r);
        text << row.name << std::string(name_width - row.name.size(), ' ');
        for (double v : {row.acc_ori, row.acc_adv, row.acc_cor, r}) {
            const std::string s = format_pct(v);
            text << std::string(10 - s.size(), ' ') << s;
        }
        text << "\n";
        csv << row.name << ',' << format_pct(row.acc_ori) << ',' << format_pct(row.acc_adv)
            << ',' << format_pct(row.acc_cor) << ',' << format_pct(r) << "\n";
    }
    out.text = text.str();
    out.csv = csv.str();
    return out;
}

std::vector<ReportRow> parse_report_rows(const std::string& csv_text) {
    std::vector<ReportRow> rows;
    std::istringstream in(csv_text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (!rows.empty() || fields.empty() || fields[0] != "name") {
            if (fields.size() < 4)
                throw FormatError("report row needs at least 4 fields: '" + line + "'");
            ReportRow row;
            row.name = fields[0];
            try {
                row.acc_ori = std::stod(fields[1]);
                row.acc_adv = std::stod(fields[2]);
                row.acc_cor = std::stod(fields[3]);
                if (fields.size() > 4 && !fields[4].empty()) row.r = std::stod(fields[4]);
            } catch (const std::exception&) {
                throw FormatError("report row has non-numeric fields: '" + line + "'");
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace robustify
