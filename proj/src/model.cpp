#include "robustify/model.hpp"

#include <algorithm>
#include <cmath>

#include "robustify/errors.hpp"

namespace robustify {

void ImageBatch::validate(int k) const {
    if (pixels.h <= 0 || pixels.w <= 0 || pixels.c <= 0)
        throw ModelError("ImageBatch: non-positive dimensions " + pixels.shape_str());
    if (labels.size() != static_cast<std::size_t>(pixels.n))
        throw ModelError("ImageBatch: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(pixels.n) + " images");
    for (float v : pixels.data)
        if (!(v >= 0.0f && v <= 1.0f))
            throw ModelError("ImageBatch: pixel value " + std::to_string(v) + " outside [0,1]");
    for (int label : labels) {
        if (label < 0 || (k >= 0 && label >= k))
            throw ModelError("ImageBatch: label " + std::to_string(label) + " outside [0," +
                             std::to_string(k) + ")");
    }
}

std::vector<double> per_sample_loss(const Tensor& logits, const std::vector<int>& labels,
                                    LossKind loss) {
    const int n = logits.n;
    const int k = logits.c;
    if (labels.size() != static_cast<std::size_t>(n))
        throw ModelError("per_sample_loss: label count mismatch");
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const float* z = logits.sample(i);
        const int t = labels[i];
        if (t < 0 || t >= k) throw ModelError("per_sample_loss: label out of range");
        if (loss == LossKind::kLogit) {
            out[i] = -static_cast<double>(z[t]);
        } else {
            double zmax = z[0];
            for (int j = 1; j < k; ++j) zmax = std::max(zmax, static_cast<double>(z[j]));
            double sum = 0.0;
            for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(z[j]) - zmax);
            out[i] = zmax + std::log(sum) - static_cast<double>(z[t]);
        }
    }
    return out;
}

Tensor loss_logit_gradient(const Tensor& logits, const std::vector<int>& labels, LossKind loss) {
    const int n = logits.n;
    const int k = logits.c;
    if (labels.size() != static_cast<std::size_t>(n))
        throw ModelError("loss_logit_gradient: label count mismatch");
    Tensor grad(n, 1, 1, k);
    for (int i = 0; i < n; ++i) {
        const int t = labels[i];
        if (t < 0 || t >= k) throw ModelError("loss_logit_gradient: label out of range");
        float* g = grad.sample(i);
        if (loss == LossKind::kLogit) {
            g[t] = -1.0f;
        } else {
            const float* z = logits.sample(i);
            double zmax = z[0];
            for (int j = 1; j < k; ++j) zmax = std::max(zmax, static_cast<double>(z[j]));
            double sum = 0.0;
            for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(z[j]) - zmax);
            for (int j = 0; j < k; ++j)
                g[j] = static_cast<float>(std::exp(static_cast<double>(z[j]) - zmax) / sum);
            g[t] -= 1.0f;
        }
    }
    return grad;
}

Tensor GradientClassifier::backward_input(const Tensor&, const Tensor&, Exec) const {
    throw UnsupportedOperationError("model '" + name() + "' does not provide input gradients");
}

Tensor GradientClassifier::input_gradient_raw(const Tensor& pixels, const std::vector<int>& labels,
                                              LossKind loss, Exec exec) const {
    const Tensor logits = forward_logits_raw(pixels, exec);
    const Tensor grad = loss_logit_gradient(logits, labels, loss);
    return backward_input(pixels, grad, exec);
}

std::function<double(const double*)> GradientClassifier::make_double_loss_eval(
    int h, int w, int c, LossKind loss, int label) const {
    return [this, h, w, c, loss, label](const double* pixels) {
        Tensor img(1, h, w, c);
        for (std::size_t i = 0; i < img.size(); ++i)
            img.data[i] = static_cast<float>(pixels[i]);
        const Tensor logits = forward_logits_raw(img, Exec::kSerial);
        return per_sample_loss(logits, {label}, loss)[0];
    };
}

void GradientClassifier::validate_input(const Tensor&) const {}

EnsembleClassifier::EnsembleClassifier(
    std::vector<std::shared_ptr<const GradientClassifier>> members)
    : members_(std::move(members)) {
    if (members_.empty()) throw ConfigError("ensemble requires at least one member");
    k_ = members_[0]->num_classes();
    name_ = "ensemble(";
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (!members_[i]) throw ConfigError("ensemble member is null");
        if (members_[i]->num_classes() != k_)
            throw ConfigError("ensemble members disagree on class count: " +
                              std::to_string(members_[i]->num_classes()) + " vs " +
                              std::to_string(k_));
        name_ += (i ? "," : "") + members_[i]->name();
    }
    name_ += ")";
}

Tensor EnsembleClassifier::forward_logits_raw(const Tensor& pixels, Exec exec) const {
    Tensor sum = members_[0]->forward_logits_raw(pixels, exec);
    for (std::size_t m = 1; m < members_.size(); ++m) {
        const Tensor z = members_[m]->forward_logits_raw(pixels, exec);
        require_same_shape(sum, z, "ensemble_logits");
        for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] += z.data[i];
    }
    const float inv = 1.0f / static_cast<float>(members_.size());
    for (float& v : sum.data) v *= inv;
    return sum;
}

Tensor EnsembleClassifier::backward_input(const Tensor& pixels, const Tensor& logit_grad,
                                          Exec exec) const {
    // d(mean of member logits)/dx: scale the seed gradient by 1/|F| and
    // sum the member backprops in member order.
    Tensor scaled = logit_grad;
    const float inv = 1.0f / static_cast<float>(members_.size());
    for (float& v : scaled.data) v *= inv;
    Tensor total = members_[0]->backward_input(pixels, scaled, exec);
    for (std::size_t m = 1; m < members_.size(); ++m) {
        const Tensor g = members_[m]->backward_input(pixels, scaled, exec);
        require_same_shape(total, g, "ensemble backward_input");
        for (std::size_t i = 0; i < total.size(); ++i) total.data[i] += g.data[i];
    }
    return total;
}

Tensor EnsembleClassifier::input_gradient_raw(const Tensor& pixels,
                                              const std::vector<int>& labels, LossKind loss,
                                              Exec exec) const {
    if (loss == LossKind::kLogit) {
        // -Z_ensemble^t is linear in the member logits, so the gradient is
        // the mean of the members' fused logit-loss gradients.
        Tensor total = members_[0]->input_gradient_raw(pixels, labels, loss, exec);
        for (std::size_t m = 1; m < members_.size(); ++m) {
            const Tensor g = members_[m]->input_gradient_raw(pixels, labels, loss, exec);
            require_same_shape(total, g, "ensemble input_gradient");
            for (std::size_t i = 0; i < total.size(); ++i) total.data[i] += g.data[i];
        }
        const float inv = 1.0f / static_cast<float>(members_.size());
        for (float& v : total.data) v *= inv;
        return total;
    }
    // Cross-entropy couples the members through the fused softmax; seed the
    // member backprops with the gradient taken at the ensemble logits.
    const Tensor logits = forward_logits_raw(pixels, exec);
    const Tensor grad = loss_logit_gradient(logits, labels, loss);
    return backward_input(pixels, grad, exec);
}

std::function<double(const double*)> EnsembleClassifier::make_double_loss_eval(
    int h, int w, int c, LossKind loss, int label) const {
    std::vector<std::function<std::vector<double>(const double*)>> member_logits;
    member_logits.reserve(members_.size());
    for (const auto& m : members_) {
        // Reuse each member's double evaluator per class via logit loss:
        // J_logit with label j equals -z[j], which recovers the full row.
        std::vector<std::function<double(const double*)>> per_class;
        per_class.reserve(static_cast<std::size_t>(k_));
        for (int j = 0; j < k_; ++j)
            per_class.push_back(m->make_double_loss_eval(h, w, c, LossKind::kLogit, j));
        member_logits.push_back(
            [per_class = std::move(per_class), k = k_](const double* x) {
                std::vector<double> z(static_cast<std::size_t>(k));
                for (int j = 0; j < k; ++j) z[static_cast<std::size_t>(j)] = -per_class[j](x);
                return z;
            });
    }
    const int k = k_;
    return [member_logits = std::move(member_logits), k, loss, label](const double* x) {
        std::vector<double> z(static_cast<std::size_t>(k), 0.0);
        for (const auto& f : member_logits) {
            const std::vector<double> zm = f(x);
            for (int j = 0; j < k; ++j) z[static_cast<std::size_t>(j)] += zm[j];
        }
        for (double& v : z) v /= static_cast<double>(member_logits.size());
        if (loss == LossKind::kLogit) return -z[static_cast<std::size_t>(label)];
        double zmax = z[0];
        for (double v : z) zmax = std::max(zmax, v);
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - zmax);
        return zmax + std::log(sum) - z[static_cast<std::size_t>(label)];
    };
}

void EnsembleClassifier::validate_input(const Tensor& pixels) const {
    for (const auto& m : members_) m->validate_input(pixels);
}

std::string EnsembleClassifier::hyper_json() const {
    return "{\"members\":" + std::to_string(members_.size()) + "}";
}

Tensor forward_logits(const GradientClassifier& model, const ImageBatch& batch, Exec exec) {
    batch.validate(model.num_classes());
    model.validate_input(batch.pixels);
    return model.forward_logits_raw(batch.pixels, exec);
}

Tensor ensemble_logits(const EnsembleClassifier& ensemble, const ImageBatch& batch, Exec exec) {
    return forward_logits(ensemble, batch, exec);
}

Tensor input_gradient(const GradientClassifier& model, const ImageBatch& batch, LossKind loss,
                      Exec exec) {
    batch.validate(model.num_classes());
    model.validate_input(batch.pixels);
    return model.input_gradient_raw(batch.pixels, batch.labels, loss, exec);
}

std::vector<double> finite_difference_gradient(const GradientClassifier& model,
                                               const Tensor& image, LossKind loss, int label,
                                               const std::vector<std::size_t>& pixel_indices,
                                               double step) {
    if (image.n != 1) throw ModelError("finite_difference_gradient expects one image");
    if (step <= 0.0) throw ConfigError("finite_difference_gradient: step must be positive");
    const auto eval = model.make_double_loss_eval(image.h, image.w, image.c, loss, label);
    std::vector<double> x(image.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(image.data[i]);
    std::vector<double> out;
    out.reserve(pixel_indices.size());
    for (std::size_t idx : pixel_indices) {
        if (idx >= x.size())
            throw ModelError("finite_difference_gradient: pixel index out of range");
        const double saved = x[idx];
        x[idx] = saved + step;
        const double plus = eval(x.data());
        x[idx] = saved - step;
        const double minus = eval(x.data());
        x[idx] = saved;
        out.push_back((plus - minus) / (2.0 * step));
    }
    return out;
}

} // namespace robustify
