#ifndef ROBUSTIFY_TENSOR_HPP
#define ROBUSTIFY_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "robustify/errors.hpp"

namespace robustify {

// Dense NHWC float tensor; the universal currency of the pipeline.
// Images live in [0,1], gradients and perturbations are unconstrained.
struct Tensor {
    int n = 0, h = 0, w = 0, c = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int h_, int w_, int c_, float fill = 0.0f)
        : n(n_), h(h_), w(w_), c(c_),
          data(static_cast<std::size_t>(n_) * h_ * w_ * c_, fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t sample_size() const { return static_cast<std::size_t>(h) * w * c; }

    float& at(int ni, int hi, int wi, int ci) {
        return data[((static_cast<std::size_t>(ni) * h + hi) * w + wi) * c + ci];
    }
    float at(int ni, int hi, int wi, int ci) const {
        return data[((static_cast<std::size_t>(ni) * h + hi) * w + wi) * c + ci];
    }

    float* sample(int ni) { return data.data() + static_cast<std::size_t>(ni) * sample_size(); }
    const float* sample(int ni) const {
        return data.data() + static_cast<std::size_t>(ni) * sample_size();
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && h == o.h && w == o.w && c == o.c;
    }

    // Copy of sample ni as a 1-image tensor.
    Tensor slice(int ni) const {
        Tensor out(1, h, w, c);
        const float* src = sample(ni);
        std::copy(src, src + sample_size(), out.data.begin());
        return out;
    }

    void set_sample(int ni, const Tensor& img) {
        if (img.n != 1 || img.h != h || img.w != w || img.c != c)
            throw ModelError("set_sample: shape mismatch");
        std::copy(img.data.begin(), img.data.end(), sample(ni));
    }

    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(h) + "x" + std::to_string(w) +
               "x" + std::to_string(c);
    }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ModelError(std::string(what) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
}

} // namespace robustify

#endif
