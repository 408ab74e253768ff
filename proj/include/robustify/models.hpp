#ifndef ROBUSTIFY_MODELS_HPP
#define ROBUSTIFY_MODELS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "robustify/model.hpp"
#include "robustify/nn.hpp"

namespace robustify {

// Emits the same fixed logit row for every input. Differentiable with an
// all-zero input gradient; a first-class test fixture.
class ConstantModel final : public GradientClassifier {
public:
    ConstantModel(std::vector<float> logits_row, std::string name = "constant");

    int num_classes() const override { return static_cast<int>(row_.size()); }
    const std::string& name() const override { return name_; }
    Tensor forward_logits_raw(const Tensor& pixels, Exec exec) const override;
    Tensor backward_input(const Tensor& pixels, const Tensor& logit_grad,
                          Exec exec) const override;
    std::string arch_id() const override { return "constant"; }
    std::string hyper_json() const override;
    std::vector<float> flat_params() const override { return row_; }

private:
    std::vector<float> row_;
    std::string name_;
};

// Softmax regression on flattened pixels: z = W x + b. Used by the toy
// oracles and as the smallest trainable classifier.
class LinearSoftmaxModel final : public TrainableClassifier {
public:
    LinearSoftmaxModel(int h, int w, int c, int k, std::string name = "linear");

    // Weight layout: W[class][pixel], then bias[class].
    float& weight(int cls, std::size_t pixel) { return w_[static_cast<std::size_t>(cls) * d_ + pixel]; }
    float& bias(int cls) { return b_[static_cast<std::size_t>(cls)]; }

    int num_classes() const override { return k_; }
    const std::string& name() const override { return name_; }
    Tensor forward_logits_raw(const Tensor& pixels, Exec exec) const override;
    Tensor backward_input(const Tensor& pixels, const Tensor& logit_grad,
                          Exec exec) const override;
    std::function<double(const double*)> make_double_loss_eval(int h, int w, int c, LossKind loss,
                                                               int label) const override;
    void validate_input(const Tensor& pixels) const override;

    std::size_t param_count() const override { return w_.size() + b_.size(); }
    void export_params(std::vector<float>& out) const override;
    void import_params(const std::vector<float>& in) override;
    double accumulate_param_gradient(const Tensor& image, int label, LossKind loss,
                                     float* grad) const override;

    std::string arch_id() const override { return "linear"; }
    std::string hyper_json() const override;
    std::vector<float> flat_params() const override;

private:
    int h_, w_, c_, k_;
    std::size_t d_;
    std::vector<float> w_, b_;
    std::string name_;
};

// The reference CNN (see nn::SmallCnnNet for the architecture).
class SmallCnnModel final : public TrainableClassifier {
public:
    SmallCnnModel(int h, int w, int c, int k, std::uint64_t weight_seed,
                  std::string name = "small_cnn");
    SmallCnnModel(nn::SmallCnnNet<float> net, std::string name);

    int num_classes() const override { return net_.k; }
    const std::string& name() const override { return name_; }
    Tensor forward_logits_raw(const Tensor& pixels, Exec exec) const override;
    Tensor backward_input(const Tensor& pixels, const Tensor& logit_grad,
                          Exec exec) const override;
    Tensor input_gradient_raw(const Tensor& pixels, const std::vector<int>& labels, LossKind loss,
                              Exec exec) const override;
    std::function<double(const double*)> make_double_loss_eval(int h, int w, int c, LossKind loss,
                                                               int label) const override;
    void validate_input(const Tensor& pixels) const override;

    std::size_t param_count() const override { return net_.param_count(); }
    void export_params(std::vector<float>& out) const override;
    void import_params(const std::vector<float>& in) override;
    double accumulate_param_gradient(const Tensor& image, int label, LossKind loss,
                                     float* grad) const override;

    std::string arch_id() const override { return "small_cnn"; }
    std::string hyper_json() const override;
    std::vector<float> flat_params() const override { return net_.params; }

    const nn::SmallCnnNet<float>& net() const { return net_; }
    // Double-precision mirror with upcast weights, for oracle comparisons.
    nn::SmallCnnNet<double> double_net() const;

private:
    nn::SmallCnnNet<float> net_;
    std::string name_;
};

// Checkpoint container: self-describing header plus the flat float32
// parameter array; round-trips bitwise.
void save_model(const GradientClassifier& model, const std::string& path);
std::unique_ptr<GradientClassifier> load_model(const std::string& path);
std::unique_ptr<TrainableClassifier> load_trainable_model(const std::string& path);

} // namespace robustify

#endif
