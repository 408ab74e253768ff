#include "robustify/attack.hpp"

#include <algorithm>
#include <cmath>

#include "robustify/errors.hpp"
#include "robustify/parallel.hpp"

namespace robustify {

const char* to_string(NormKind norm) { return norm == NormKind::kLinf ? "linf" : "l2"; }

NormKind norm_from_string(const std::string& s) {
    if (s == "linf") return NormKind::kLinf;
    if (s == "l2") return NormKind::kL2;
    throw ConfigError("unknown norm '" + s + "' (expected linf or l2)");
}

void PerturbationBudget::validate() const {
    if (epsilon < 0.0) throw ConfigError("budget: epsilon must be >= 0");
    if (step_alpha <= 0.0) throw ConfigError("budget: step_alpha must be > 0");
    if (iterations < 0) throw ConfigError("budget: iterations must be >= 0");
}

void AttackConfig::validate() const {
    if (momentum_mu < 0.0) throw ConfigError("attack: momentum_mu must be >= 0");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw ConfigError("attack: kernel_size must be odd and >= 1");
    if (kernel_sigma <= 0.0) throw ConfigError("attack: kernel_sigma must be > 0");
    if (diversify_prob < 0.0 || diversify_prob > 1.0)
        throw ConfigError("attack: diversify_prob must be in [0,1]");
    if (resize_low_fraction <= 0.0 || resize_low_fraction > 1.0)
        throw ConfigError("attack: resize_low_fraction must be in (0,1]");
}

// ---------------------------------------------------------------------------
// projections

void project_linf(Tensor& delta, double epsilon) {
    if (epsilon < 0.0) throw ConfigError("project_linf: epsilon must be >= 0");
    const float e = static_cast<float>(epsilon);
    for (float& v : delta.data) v = std::min(std::max(v, -e), e);
}

namespace {

double sample_l2_norm(const float* d, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += static_cast<double>(d[i]) * static_cast<double>(d[i]);
    return std::sqrt(acc);
}

void project_l2_sample(float* d, std::size_t n, double epsilon) {
    double norm = sample_l2_norm(d, n);
    if (norm <= epsilon) return;
    double scale = epsilon / norm;
    for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<float>(d[i] * scale);
    // Float rounding can leave the norm a few ulps above epsilon; one
    // slightly contracted rescale settles it so re-projection is exact.
    norm = sample_l2_norm(d, n);
    if (norm > epsilon) {
        scale = (epsilon / norm) * (1.0 - 1e-7);
        for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<float>(d[i] * scale);
    }
}

} // namespace

void project_l2(Tensor& delta, double epsilon) {
    if (epsilon < 0.0) throw ConfigError("project_l2: epsilon must be >= 0");
    const std::size_t per = delta.sample_size();
    for (int i = 0; i < delta.n; ++i) project_l2_sample(delta.sample(i), per, epsilon);
}

void project(Tensor& delta, NormKind norm, double epsilon) {
    if (norm == NormKind::kLinf)
        project_linf(delta, epsilon);
    else
        project_l2(delta, epsilon);
}

double max_sample_norm(const Tensor& delta, NormKind norm) {
    double worst = 0.0;
    const std::size_t per = delta.sample_size();
    for (int i = 0; i < delta.n; ++i) {
        const float* d = delta.sample(i);
        double v = 0.0;
        if (norm == NormKind::kLinf) {
            for (std::size_t j = 0; j < per; ++j)
                v = std::max(v, static_cast<double>(std::fabs(d[j])));
        } else {
            v = sample_l2_norm(d, per);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// step pieces

Tensor step_direction(const Tensor& gradient, NormKind norm) {
    Tensor dir(gradient.n, gradient.h, gradient.w, gradient.c);
    const std::size_t per = gradient.sample_size();
    if (norm == NormKind::kLinf) {
        for (std::size_t i = 0; i < gradient.size(); ++i) {
            const float g = gradient.data[i];
            dir.data[i] = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
        }
    } else {
        for (int s = 0; s < gradient.n; ++s) {
            const float* g = gradient.sample(s);
            float* d = dir.sample(s);
            const double norm2 = sample_l2_norm(g, per);
            if (norm2 == 0.0) continue; // zero gradient -> zero direction
            const double inv = 1.0 / norm2;
            for (std::size_t j = 0; j < per; ++j) d[j] = static_cast<float>(g[j] * inv);
        }
    }
    return dir;
}

Kernel2D gaussian_kernel(int size, double sigma) {
    if (size < 1 || size % 2 == 0)
        throw ConfigError("gaussian_kernel: size must be odd and >= 1");
    if (sigma <= 0.0) throw ConfigError("gaussian_kernel: sigma must be > 0");
    Kernel2D k;
    k.size = size;
    k.w.resize(static_cast<std::size_t>(size) * size);
    const int r = size / 2;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        for (int j = -r; j <= r; ++j) {
            const double v = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            k.w[static_cast<std::size_t>(i + r) * size + (j + r)] = v;
            sum += v;
        }
    }
    for (double& v : k.w) v /= sum;
    return k;
}

Tensor smooth_gradient(const Tensor& gradient, const Kernel2D& kernel) {
    return conv2d_replicate(gradient, kernel);
}

Tensor diversify_pixels(const Tensor& pixels, double prob, double resize_low_fraction, Rng& rng) {
    if (prob < 0.0 || prob > 1.0) throw ConfigError("diversify: prob must be in [0,1]");
    if (resize_low_fraction <= 0.0 || resize_low_fraction > 1.0)
        throw ConfigError("diversify: resize_low_fraction must be in (0,1]");
    const int h = pixels.h, w = pixels.w;
    Tensor out = pixels;
    for (int i = 0; i < pixels.n; ++i) {
        const double u = rng.uniform();
        if (!(u < prob)) continue;
        const int min_side = std::min(h, static_cast<int>(std::ceil(resize_low_fraction * h)));
        const int side_h = static_cast<int>(rng.uniform_int_in(min_side, h));
        const int side_w =
            h == w ? side_h
                   : std::max(1, static_cast<int>(std::lround(
                                     static_cast<double>(side_h) * w / h)));
        const int off_y = static_cast<int>(rng.uniform_int_in(0, h - side_h));
        const int off_x = static_cast<int>(rng.uniform_int_in(0, w - side_w));
        if (side_h == h && side_w == w) continue; // identity transform
        const Tensor resized = bilinear_resize(pixels.slice(i), side_h, side_w);
        float* dst = out.sample(i);
        std::fill(dst, dst + out.sample_size(), 0.0f); // zero pad
        for (int y = 0; y < side_h; ++y)
            for (int x = 0; x < side_w; ++x)
                for (int ch = 0; ch < pixels.c; ++ch)
                    out.at(i, y + off_y, x + off_x, ch) = resized.at(0, y, x, ch);
    }
    return out;
}

ImageBatch diversify_input(const ImageBatch& batch, double prob, double resize_low_fraction,
                           Rng& rng) {
    return ImageBatch{diversify_pixels(batch.pixels, prob, resize_low_fraction, rng),
                      batch.labels};
}

std::vector<double> logit_loss(const Tensor& logits, const std::vector<int>& labels) {
    return per_sample_loss(logits, labels, LossKind::kLogit);
}

Tensor momentum_update(const Tensor& g_prev, const Tensor& gradient, double mu) {
    require_same_shape(g_prev, gradient, "momentum_update");
    if (mu < 0.0) throw ConfigError("momentum_update: mu must be >= 0");
    Tensor out(g_prev.n, g_prev.h, g_prev.w, g_prev.c);
    const std::size_t per = g_prev.sample_size();
    for (int s = 0; s < g_prev.n; ++s) {
        const float* gp = g_prev.sample(s);
        const float* gr = gradient.sample(s);
        float* o = out.sample(s);
        double l1 = 0.0;
        for (std::size_t j = 0; j < per; ++j) l1 += std::fabs(static_cast<double>(gr[j]));
        const double inv = l1 > 0.0 ? 1.0 / l1 : 0.0;
        for (std::size_t j = 0; j < per; ++j)
            o[j] = static_cast<float>(mu * gp[j] + gr[j] * inv);
    }
    return out;
}

// ---------------------------------------------------------------------------
// composed iteration

void attack_iteration(const Tensor& x, Tensor& delta, Tensor& g, const std::vector<int>& labels,
                      const GradientClassifier& model, const PerturbationBudget& budget,
                      const AttackConfig& config, Rng& rng, Exec exec) {
    budget.validate();
    config.validate();
    require_same_shape(x, delta, "attack_iteration");
    require_same_shape(x, g, "attack_iteration momentum");

    // delta_i <- T(x + delta_i, p) - x; the gradient is then taken at the
    // substituted point, i.e. through the transform.
    Tensor probe = x;
    for (std::size_t i = 0; i < probe.size(); ++i) probe.data[i] += delta.data[i];
    if (config.diversify_prob > 0.0) {
        probe = diversify_pixels(probe, config.diversify_prob, config.resize_low_fraction, rng);
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta.data[i] = probe.data[i] - x.data[i];
    }

    const Tensor grad = model.input_gradient_raw(probe, labels, config.loss, exec);
    g = momentum_update(g, grad, config.momentum_mu);
    const Kernel2D kernel = gaussian_kernel(config.kernel_size, config.kernel_sigma);
    const Tensor smoothed = smooth_gradient(g, kernel);
    const Tensor dir = step_direction(smoothed, budget.norm);
    const float alpha = static_cast<float>(budget.step_alpha);
    for (std::size_t i = 0; i < delta.size(); ++i) delta.data[i] += alpha * dir.data[i];
    project(delta, budget.norm, budget.epsilon);
}

namespace {

// delta_0 uniform inside the eps ball.
void random_init_in_ball(float* d, std::size_t n, NormKind norm, double eps, Rng& rng) {
    if (norm == NormKind::kLinf) {
        for (std::size_t i = 0; i < n; ++i)
            d[i] = static_cast<float>(rng.uniform_in(-eps, eps));
        return;
    }
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = rng.normal();
        d[i] = static_cast<float>(v);
        norm2 += v * v;
    }
    norm2 = std::sqrt(norm2);
    const double radius = eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    const double scale = norm2 > 0.0 ? radius / norm2 : 0.0;
    for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<float>(d[i] * scale);
}

Tensor run_attack_impl(const ImageBatch& batch, const GradientClassifier& model,
                       const PerturbationBudget& budget, const AttackConfig& config,
                       const std::vector<std::uint64_t>* seeds, Exec exec) {
    budget.validate();
    config.validate();
    batch.validate(model.num_classes());
    model.validate_input(batch.pixels);
    if (seeds && seeds->size() != static_cast<std::size_t>(batch.size()))
        throw ConfigError("run_attack: seed count does not match batch size");

    const Tensor& x = batch.pixels;
    Tensor delta(x.n, x.h, x.w, x.c);
    // Each sample runs its full attack on an independent stream, so the
    // result is identical no matter how samples are distributed over
    // workers.
    parallel_for(x.n, exec, [&](std::int64_t i) {
        const std::uint64_t seed = seeds ? (*seeds)[static_cast<std::size_t>(i)]
                                         : per_sample_seed(config.seed, static_cast<std::uint64_t>(i));
        Rng rng(seed);
        Tensor xi = x.slice(static_cast<int>(i));
        Tensor di(1, x.h, x.w, x.c);
        random_init_in_ball(di.data.data(), di.size(), budget.norm, budget.epsilon, rng);
        project(di, budget.norm, budget.epsilon);
        Tensor gi(1, x.h, x.w, x.c, 0.0f);
        const std::vector<int> label{batch.labels[static_cast<std::size_t>(i)]};
        for (int it = 0; it < budget.iterations; ++it)
            attack_iteration(xi, di, gi, label, model, budget, config, rng, Exec::kSerial);
        delta.set_sample(static_cast<int>(i), di);
    });
    return delta;
}

} // namespace

Tensor run_attack(const ImageBatch& batch, const GradientClassifier& model,
                  const PerturbationBudget& budget, const AttackConfig& config, Exec exec) {
    return run_attack_impl(batch, model, budget, config, nullptr, exec);
}

Tensor run_attack_seeded(const ImageBatch& batch, const GradientClassifier& model,
                         const PerturbationBudget& budget, const AttackConfig& config,
                         const std::vector<std::uint64_t>& sample_seeds, Exec exec) {
    return run_attack_impl(batch, model, budget, config, &sample_seeds, exec);
}

ImageBatch combine_dual_norm(const ImageBatch& batch, const Tensor& delta_l2,
                             const Tensor& delta_linf) {
    require_same_shape(batch.pixels, delta_l2, "combine_dual_norm l2");
    require_same_shape(batch.pixels, delta_linf, "combine_dual_norm linf");
    ImageBatch out{Tensor(batch.pixels.n, batch.pixels.h, batch.pixels.w, batch.pixels.c),
                   batch.labels};
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const float v = batch.pixels.data[i] + delta_l2.data[i] + delta_linf.data[i];
        out.pixels.data[i] = std::min(std::max(v, 0.0f), 1.0f);
    }
    return out;
}

} // namespace robustify
