#include "robustify/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "robustify/errors.hpp"
#include "robustify/parallel.hpp"

namespace robustify {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ConstantModel

ConstantModel::ConstantModel(std::vector<float> logits_row, std::string name)
    : row_(std::move(logits_row)), name_(std::move(name)) {
    if (row_.empty()) throw ConfigError("ConstantModel requires a non-empty logit row");
}

Tensor ConstantModel::forward_logits_raw(const Tensor& pixels, Exec) const {
    Tensor out(pixels.n, 1, 1, num_classes());
    for (int i = 0; i < pixels.n; ++i)
        std::copy(row_.begin(), row_.end(), out.sample(i));
    return out;
}

Tensor ConstantModel::backward_input(const Tensor& pixels, const Tensor& logit_grad, Exec) const {
    if (logit_grad.n != pixels.n || logit_grad.c != num_classes())
        throw ModelError("ConstantModel::backward_input: logit grad shape mismatch");
    return Tensor(pixels.n, pixels.h, pixels.w, pixels.c, 0.0f);
}

std::string ConstantModel::hyper_json() const {
    return json{{"k", num_classes()}}.dump();
}

// ---------------------------------------------------------------------------
// LinearSoftmaxModel

LinearSoftmaxModel::LinearSoftmaxModel(int h, int w, int c, int k, std::string name)
    : h_(h), w_(w), c_(c), k_(k), d_(static_cast<std::size_t>(h) * w * c),
      w_(static_cast<std::size_t>(k) * d_, 0.0f), b_(static_cast<std::size_t>(k), 0.0f),
      name_(std::move(name)) {
    if (h <= 0 || w <= 0 || c <= 0 || k <= 0)
        throw ConfigError("LinearSoftmaxModel: non-positive dimensions");
}

void LinearSoftmaxModel::validate_input(const Tensor& pixels) const {
    if (pixels.h != h_ || pixels.w != w_ || pixels.c != c_)
        throw ModelError("model '" + name_ + "' expects " + std::to_string(h_) + "x" +
                         std::to_string(w_) + "x" + std::to_string(c_) + ", got " +
                         pixels.shape_str());
}

Tensor LinearSoftmaxModel::forward_logits_raw(const Tensor& pixels, Exec) const {
    validate_input(pixels);
    Tensor out(pixels.n, 1, 1, k_);
    for (int i = 0; i < pixels.n; ++i) {
        const float* x = pixels.sample(i);
        float* z = out.sample(i);
        for (int o = 0; o < k_; ++o) {
            const float* wr = w_.data() + static_cast<std::size_t>(o) * d_;
            float acc = b_[static_cast<std::size_t>(o)];
            for (std::size_t j = 0; j < d_; ++j) acc += wr[j] * x[j];
            z[o] = acc;
        }
    }
    return out;
}

Tensor LinearSoftmaxModel::backward_input(const Tensor& pixels, const Tensor& logit_grad,
                                          Exec) const {
    validate_input(pixels);
    if (logit_grad.n != pixels.n || logit_grad.c != k_)
        throw ModelError("LinearSoftmaxModel::backward_input: logit grad shape mismatch");
    Tensor din(pixels.n, pixels.h, pixels.w, pixels.c, 0.0f);
    for (int i = 0; i < pixels.n; ++i) {
        const float* g = logit_grad.sample(i);
        float* d = din.sample(i);
        for (int o = 0; o < k_; ++o) {
            const float go = g[o];
            if (go == 0.0f) continue;
            const float* wr = w_.data() + static_cast<std::size_t>(o) * d_;
            for (std::size_t j = 0; j < d_; ++j) d[j] += go * wr[j];
        }
    }
    return din;
}

std::function<double(const double*)> LinearSoftmaxModel::make_double_loss_eval(
    int h, int w, int c, LossKind loss, int label) const {
    if (h != h_ || w != w_ || c != c_)
        throw ModelError("make_double_loss_eval: input shape mismatch");
    return [this, loss, label](const double* x) {
        std::vector<double> z(static_cast<std::size_t>(k_));
        for (int o = 0; o < k_; ++o) {
            const float* wr = w_.data() + static_cast<std::size_t>(o) * d_;
            double acc = static_cast<double>(b_[static_cast<std::size_t>(o)]);
            for (std::size_t j = 0; j < d_; ++j) acc += static_cast<double>(wr[j]) * x[j];
            z[static_cast<std::size_t>(o)] = acc;
        }
        if (loss == LossKind::kLogit) return -z[static_cast<std::size_t>(label)];
        double zmax = z[0];
        for (double v : z) zmax = std::max(zmax, v);
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - zmax);
        return zmax + std::log(sum) - z[static_cast<std::size_t>(label)];
    };
}

void LinearSoftmaxModel::export_params(std::vector<float>& out) const {
    out.resize(param_count());
    std::copy(w_.begin(), w_.end(), out.begin());
    std::copy(b_.begin(), b_.end(), out.begin() + static_cast<std::ptrdiff_t>(w_.size()));
}

void LinearSoftmaxModel::import_params(const std::vector<float>& in) {
    if (in.size() != param_count())
        throw ModelError("LinearSoftmaxModel::import_params: size mismatch");
    std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(w_.size()), w_.begin());
    std::copy(in.begin() + static_cast<std::ptrdiff_t>(w_.size()), in.end(), b_.begin());
}

double LinearSoftmaxModel::accumulate_param_gradient(const Tensor& image, int label,
                                                     LossKind loss, float* grad) const {
    const Tensor logits = forward_logits_raw(image, Exec::kSerial);
    const Tensor lgrad = loss_logit_gradient(logits, {label}, loss);
    const float* x = image.sample(0);
    const float* g = lgrad.sample(0);
    for (int o = 0; o < k_; ++o) {
        const float go = g[o];
        float* dw = grad + static_cast<std::size_t>(o) * d_;
        for (std::size_t j = 0; j < d_; ++j) dw[j] += go * x[j];
        grad[w_.size() + static_cast<std::size_t>(o)] += go;
    }
    return per_sample_loss(logits, {label}, loss)[0];
}

std::string LinearSoftmaxModel::hyper_json() const {
    return json{{"h", h_}, {"w", w_}, {"c", c_}, {"k", k_}}.dump();
}

std::vector<float> LinearSoftmaxModel::flat_params() const {
    std::vector<float> out;
    export_params(out);
    return out;
}

// ---------------------------------------------------------------------------
// SmallCnnModel

namespace {
// One reusable workspace per thread; resized on architecture change.
nn::SmallCnnNet<float>::Workspace& thread_workspace(const nn::SmallCnnNet<float>& net) {
    thread_local nn::SmallCnnNet<float>::Workspace ws;
    thread_local std::size_t sized_for = 0;
    const std::size_t key = net.param_count() ^ (static_cast<std::size_t>(net.in_h) << 40) ^
                            (static_cast<std::size_t>(net.in_w) << 24);
    if (sized_for != key) {
        ws.resize(net);
        sized_for = key;
    }
    return ws;
}
} // namespace

SmallCnnModel::SmallCnnModel(int h, int w, int c, int k, std::uint64_t weight_seed,
                             std::string name)
    : net_(h, w, c, k), name_(std::move(name)) {
    Rng rng(weight_seed);
    net_.init_weights(rng);
}

SmallCnnModel::SmallCnnModel(nn::SmallCnnNet<float> net, std::string name)
    : net_(std::move(net)), name_(std::move(name)) {}

void SmallCnnModel::validate_input(const Tensor& pixels) const {
    if (pixels.h != net_.in_h || pixels.w != net_.in_w || pixels.c != net_.in_c)
        throw ModelError("model '" + name_ + "' expects " + std::to_string(net_.in_h) + "x" +
                         std::to_string(net_.in_w) + "x" + std::to_string(net_.in_c) +
                         ", got " + pixels.shape_str());
}

Tensor SmallCnnModel::forward_logits_raw(const Tensor& pixels, Exec exec) const {
    validate_input(pixels);
    Tensor out(pixels.n, 1, 1, net_.k);
    parallel_for(pixels.n, exec, [&](std::int64_t i) {
        auto& ws = thread_workspace(net_);
        net_.forward(pixels.sample(static_cast<int>(i)), ws);
        std::copy(ws.logits.begin(), ws.logits.end(), out.sample(static_cast<int>(i)));
    });
    return out;
}

Tensor SmallCnnModel::backward_input(const Tensor& pixels, const Tensor& logit_grad,
                                     Exec exec) const {
    validate_input(pixels);
    if (logit_grad.n != pixels.n || logit_grad.c != net_.k)
        throw ModelError("SmallCnnModel::backward_input: logit grad shape mismatch");
    Tensor din(pixels.n, pixels.h, pixels.w, pixels.c);
    parallel_for(pixels.n, exec, [&](std::int64_t i) {
        auto& ws = thread_workspace(net_);
        const float* img = pixels.sample(static_cast<int>(i));
        net_.forward(img, ws);
        net_.backward(img, ws, logit_grad.sample(static_cast<int>(i)), nullptr,
                      din.sample(static_cast<int>(i)));
    });
    return din;
}

Tensor SmallCnnModel::input_gradient_raw(const Tensor& pixels, const std::vector<int>& labels,
                                         LossKind loss, Exec exec) const {
    validate_input(pixels);
    if (labels.size() != static_cast<std::size_t>(pixels.n))
        throw ModelError("input_gradient: label count mismatch");
    Tensor din(pixels.n, pixels.h, pixels.w, pixels.c);
    // Fused forward + loss gradient + backward per sample.
    parallel_for(pixels.n, exec, [&](std::int64_t i) {
        auto& ws = thread_workspace(net_);
        const float* img = pixels.sample(static_cast<int>(i));
        net_.forward(img, ws);
        Tensor logits(1, 1, 1, net_.k);
        std::copy(ws.logits.begin(), ws.logits.end(), logits.data.begin());
        const Tensor lgrad = loss_logit_gradient(logits, {labels[static_cast<std::size_t>(i)]},
                                                 loss);
        net_.backward(img, ws, lgrad.sample(0), nullptr, din.sample(static_cast<int>(i)));
    });
    return din;
}

std::function<double(const double*)> SmallCnnModel::make_double_loss_eval(int h, int w, int c,
                                                                          LossKind loss,
                                                                          int label) const {
    if (h != net_.in_h || w != net_.in_w || c != net_.in_c)
        throw ModelError("make_double_loss_eval: input shape mismatch");
    auto net = std::make_shared<nn::SmallCnnNet<double>>(double_net());
    auto ws = std::make_shared<nn::SmallCnnNet<double>::Workspace>();
    ws->resize(*net);
    const int k = net_.k;
    return [net, ws, loss, label, k](const double* x) {
        net->forward(x, *ws);
        const std::vector<double>& z = ws->logits;
        if (loss == LossKind::kLogit) return -z[static_cast<std::size_t>(label)];
        double zmax = z[0];
        for (int j = 1; j < k; ++j) zmax = std::max(zmax, z[static_cast<std::size_t>(j)]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(z[static_cast<std::size_t>(j)] - zmax);
        return zmax + std::log(sum) - z[static_cast<std::size_t>(label)];
    };
}

void SmallCnnModel::export_params(std::vector<float>& out) const { out = net_.params; }

void SmallCnnModel::import_params(const std::vector<float>& in) {
    if (in.size() != net_.param_count())
        throw ModelError("SmallCnnModel::import_params: size mismatch");
    net_.params = in;
}

double SmallCnnModel::accumulate_param_gradient(const Tensor& image, int label, LossKind loss,
                                                float* grad) const {
    validate_input(image);
    auto& ws = thread_workspace(net_);
    const float* img = image.sample(0);
    net_.forward(img, ws);
    Tensor logits(1, 1, 1, net_.k);
    std::copy(ws.logits.begin(), ws.logits.end(), logits.data.begin());
    const Tensor lgrad = loss_logit_gradient(logits, {label}, loss);
    net_.backward(img, ws, lgrad.sample(0), grad, nullptr);
    return per_sample_loss(logits, {label}, loss)[0];
}

std::string SmallCnnModel::hyper_json() const {
    return json{{"h", net_.in_h}, {"w", net_.in_w}, {"c", net_.in_c}, {"k", net_.k},
                {"c1", net_.c1},  {"c2", net_.c2},  {"hidden", net_.hidden}}
        .dump();
}

nn::SmallCnnNet<double> SmallCnnModel::double_net() const {
    nn::SmallCnnNet<double> dn(net_.in_h, net_.in_w, net_.in_c, net_.k, net_.c1, net_.c2,
                               net_.hidden);
    for (std::size_t i = 0; i < net_.params.size(); ++i)
        dn.params[i] = static_cast<double>(net_.params[i]);
    return dn;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr char kCkptMagic[8] = {'R', 'B', 'C', 'K', 'P', 'T', '1', '\n'};
}

void save_model(const GradientClassifier& model, const std::string& path) {
    const std::vector<float> params = model.flat_params();
    json header{{"format_version", 1},
                {"arch", model.arch_id()},
                {"name", model.name()},
                {"k", model.num_classes()},
                {"hyper", json::parse(model.hyper_json())},
                {"param_count", params.size()}};
    const std::string head = header.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("save_model: cannot open " + path);
    f.write(kCkptMagic, sizeof(kCkptMagic));
    const std::uint32_t len = static_cast<std::uint32_t>(head.size());
    f.write(reinterpret_cast<const char*>(&len), sizeof(len));
    f.write(head.data(), static_cast<std::streamsize>(head.size()));
    f.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(float)));
    if (!f) throw FormatError("save_model: write failed for " + path);
}

namespace {

struct CheckpointData {
    json header;
    std::vector<float> params;
};

CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("load_model: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (f.gcount() != sizeof(magic) || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw FormatError("load_model: not a checkpoint file: " + path);
    std::uint32_t len = 0;
    f.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (f.gcount() != sizeof(len)) throw FormatError("load_model: truncated header length");
    std::string head(len, '\0');
    f.read(head.data(), len);
    if (f.gcount() != static_cast<std::streamsize>(len))
        throw FormatError("load_model: truncated header");
    CheckpointData data;
    data.header = json::parse(head, nullptr, false);
    if (data.header.is_discarded()) throw FormatError("load_model: malformed header JSON");
    const std::size_t n = data.header.at("param_count").get<std::size_t>();
    data.params.resize(n);
    f.read(reinterpret_cast<char*>(data.params.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
    if (f.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
        throw FormatError("load_model: truncated parameter block in " + path);
    return data;
}

std::unique_ptr<GradientClassifier> instantiate(const CheckpointData& data) {
    const std::string arch = data.header.at("arch").get<std::string>();
    const std::string name = data.header.at("name").get<std::string>();
    const json& hyper = data.header.at("hyper");
    if (arch == "constant") {
        return std::make_unique<ConstantModel>(data.params, name);
    }
    if (arch == "linear") {
        auto m = std::make_unique<LinearSoftmaxModel>(hyper.at("h").get<int>(),
                                                      hyper.at("w").get<int>(),
                                                      hyper.at("c").get<int>(),
                                                      hyper.at("k").get<int>(), name);
        m->import_params(data.params);
        return m;
    }
    if (arch == "small_cnn") {
        nn::SmallCnnNet<float> net(hyper.at("h").get<int>(), hyper.at("w").get<int>(),
                                   hyper.at("c").get<int>(), hyper.at("k").get<int>(),
                                   hyper.at("c1").get<int>(), hyper.at("c2").get<int>(),
                                   hyper.at("hidden").get<int>());
        if (data.params.size() != net.param_count())
            throw FormatError("load_model: parameter count disagrees with architecture");
        net.params = data.params;
        return std::make_unique<SmallCnnModel>(std::move(net), name);
    }
    throw FormatError("load_model: unknown architecture '" + arch + "'");
}

} // namespace

std::unique_ptr<GradientClassifier> load_model(const std::string& path) {
    return instantiate(read_checkpoint(path));
}

std::unique_ptr<TrainableClassifier> load_trainable_model(const std::string& path) {
    auto model = load_model(path);
    auto* trainable = dynamic_cast<TrainableClassifier*>(model.get());
    if (!trainable)
        throw FormatError("load_trainable_model: '" + path + "' is not a trainable model");
    model.release();
    return std::unique_ptr<TrainableClassifier>(trainable);
}

} // namespace robustify
