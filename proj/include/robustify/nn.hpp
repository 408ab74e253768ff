#ifndef ROBUSTIFY_NN_HPP
#define ROBUSTIFY_NN_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "robustify/errors.hpp"
#include "robustify/rng.hpp"

namespace robustify::nn {

// Layer kernels for the reference convnet, templated on the scalar type:
// float is the production path, double backs the finite-difference oracle
// comparisons. All loops accumulate in a fixed order, so results are
// reproducible bit-for-bit for a given scalar type.

constexpr int kMaxChannels = 64;

// 3x3 same convolution, zero padding, NHWC. Weight layout [ky][kx][ci][co].
template <typename T>
void conv3x3_forward(const T* in, int h, int w, int cin, const T* wgt, const T* bias, int cout,
                     T* out) {
    T acc[kMaxChannels];
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int co = 0; co < cout; ++co) acc[co] = bias[co];
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = y + ky - 1;
                if (sy < 0 || sy >= h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = x + kx - 1;
                    if (sx < 0 || sx >= w) continue;
                    const T* ip = in + (static_cast<std::size_t>(sy) * w + sx) * cin;
                    const T* wp = wgt + static_cast<std::size_t>((ky * 3 + kx) * cin) * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const T s = ip[ci];
                        const T* wr = wp + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) acc[co] += s * wr[co];
                    }
                }
            }
            T* op = out + (static_cast<std::size_t>(y) * w + x) * cout;
            for (int co = 0; co < cout; ++co) op[co] = acc[co];
        }
    }
}

// dL/dinput of the same convolution. din must be zero-initialized.
template <typename T>
void conv3x3_backward_input(const T* wgt, int cin, int cout, const T* dout, int h, int w, T* din) {
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const T* gp = dout + (static_cast<std::size_t>(y) * w + x) * cout;
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = y + ky - 1;
                if (sy < 0 || sy >= h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = x + kx - 1;
                    if (sx < 0 || sx >= w) continue;
                    T* dp = din + (static_cast<std::size_t>(sy) * w + sx) * cin;
                    const T* wp = wgt + static_cast<std::size_t>((ky * 3 + kx) * cin) * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const T* wr = wp + static_cast<std::size_t>(ci) * cout;
                        T a = T(0);
                        for (int co = 0; co < cout; ++co) a += wr[co] * gp[co];
                        dp[ci] += a;
                    }
                }
            }
        }
    }
}

// dL/dweights and dL/dbias, accumulated (+=) into dw/db.
template <typename T>
void conv3x3_backward_params(const T* in, int h, int w, int cin, int cout, const T* dout, T* dw,
                             T* db) {
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const T* gp = dout + (static_cast<std::size_t>(y) * w + x) * cout;
            for (int co = 0; co < cout; ++co) db[co] += gp[co];
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = y + ky - 1;
                if (sy < 0 || sy >= h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = x + kx - 1;
                    if (sx < 0 || sx >= w) continue;
                    const T* ip = in + (static_cast<std::size_t>(sy) * w + sx) * cin;
                    T* dwp = dw + static_cast<std::size_t>((ky * 3 + kx) * cin) * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const T s = ip[ci];
                        T* dwr = dwp + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) dwr[co] += s * gp[co];
                    }
                }
            }
        }
    }
}

template <typename T>
void relu_inplace(T* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > T(0) ? v[i] : T(0);
}

// Masks dv by the post-activation values (post > 0 iff pre > 0).
template <typename T>
void relu_backward_inplace(const T* post, T* dv, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!(post[i] > T(0))) dv[i] = T(0);
}

// 2x2 max pool, stride 2. idx records the winning offset (dy*2+dx); ties
// go to the first maximum in scan order.
template <typename T>
void maxpool2_forward(const T* in, int h, int w, int c, T* out, std::uint8_t* idx) {
    const int oh = h / 2, ow = w / 2;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            for (int ch = 0; ch < c; ++ch) {
                T best = in[(static_cast<std::size_t>(2 * y) * w + 2 * x) * c + ch];
                std::uint8_t bi = 0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const T v =
                            in[(static_cast<std::size_t>(2 * y + dy) * w + 2 * x + dx) * c + ch];
                        if (v > best) {
                            best = v;
                            bi = static_cast<std::uint8_t>(dy * 2 + dx);
                        }
                    }
                }
                const std::size_t o = (static_cast<std::size_t>(y) * ow + x) * c + ch;
                out[o] = best;
                idx[o] = bi;
            }
        }
    }
}

// Scatters dout back through the recorded argmax. din must be zeroed.
template <typename T>
void maxpool2_backward(const T* dout, const std::uint8_t* idx, int h, int w, int c, T* din) {
    const int oh = h / 2, ow = w / 2;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            for (int ch = 0; ch < c; ++ch) {
                const std::size_t o = (static_cast<std::size_t>(y) * ow + x) * c + ch;
                const int dy = idx[o] / 2, dx = idx[o] % 2;
                din[(static_cast<std::size_t>(2 * y + dy) * w + 2 * x + dx) * c + ch] += dout[o];
            }
        }
    }
}

// Fully connected layer, weight layout [i][o].
template <typename T>
void dense_forward(const T* in, int in_n, const T* wgt, const T* bias, int out_n, T* out) {
    for (int o = 0; o < out_n; ++o) out[o] = bias[o];
    for (int i = 0; i < in_n; ++i) {
        const T s = in[i];
        if (s == T(0)) continue; // ReLU activations are sparse
        const T* wr = wgt + static_cast<std::size_t>(i) * out_n;
        for (int o = 0; o < out_n; ++o) out[o] += s * wr[o];
    }
}

template <typename T>
void dense_backward_input(const T* wgt, int in_n, int out_n, const T* dout, T* din) {
    for (int i = 0; i < in_n; ++i) {
        const T* wr = wgt + static_cast<std::size_t>(i) * out_n;
        T a = T(0);
        for (int o = 0; o < out_n; ++o) a += wr[o] * dout[o];
        din[i] = a;
    }
}

template <typename T>
void dense_backward_params(const T* in, int in_n, int out_n, const T* dout, T* dw, T* db) {
    for (int o = 0; o < out_n; ++o) db[o] += dout[o];
    for (int i = 0; i < in_n; ++i) {
        const T s = in[i];
        if (s == T(0)) continue;
        T* dwr = dw + static_cast<std::size_t>(i) * out_n;
        for (int o = 0; o < out_n; ++o) dwr[o] += s * dout[o];
    }
}

// The reference convnet: two conv/pool blocks (16 and 32 channels), one
// hidden dense layer of 64, k-way output. Parameters live in one flat
// array so checkpoints and SGD can treat the model as a vector.
template <typename T>
struct SmallCnnNet {
    int in_h = 0, in_w = 0, in_c = 0, k = 0;
    int c1 = 16, c2 = 32, hidden = 64;
    std::vector<T> params;

    SmallCnnNet() = default;
    SmallCnnNet(int h, int w, int c, int classes, int conv1_c = 16, int conv2_c = 32,
                int hidden_n = 64)
        : in_h(h), in_w(w), in_c(c), k(classes), c1(conv1_c), c2(conv2_c), hidden(hidden_n) {
        if (h % 4 != 0 || w % 4 != 0)
            throw ConfigError("SmallCnnNet: input sides must be divisible by 4");
        if (c1 > kMaxChannels || c2 > kMaxChannels || k > kMaxChannels)
            throw ConfigError("SmallCnnNet: channel count exceeds kernel limit");
        params.assign(param_count(), T(0));
    }

    int flat_n() const { return (in_h / 4) * (in_w / 4) * c2; }

    std::size_t conv1_w_n() const { return static_cast<std::size_t>(9) * in_c * c1; }
    std::size_t conv2_w_n() const { return static_cast<std::size_t>(9) * c1 * c2; }
    std::size_t fc1_w_n() const { return static_cast<std::size_t>(flat_n()) * hidden; }
    std::size_t fc2_w_n() const { return static_cast<std::size_t>(hidden) * k; }

    std::size_t off_conv1_w() const { return 0; }
    std::size_t off_conv1_b() const { return conv1_w_n(); }
    std::size_t off_conv2_w() const { return off_conv1_b() + c1; }
    std::size_t off_conv2_b() const { return off_conv2_w() + conv2_w_n(); }
    std::size_t off_fc1_w() const { return off_conv2_b() + c2; }
    std::size_t off_fc1_b() const { return off_fc1_w() + fc1_w_n(); }
    std::size_t off_fc2_w() const { return off_fc1_b() + hidden; }
    std::size_t off_fc2_b() const { return off_fc2_w() + fc2_w_n(); }
    std::size_t param_count() const { return off_fc2_b() + k; }

    // He-uniform weights, zero biases; fully determined by the rng state.
    void init_weights(Rng& rng) {
        auto fill = [&rng, this](std::size_t off, std::size_t n, int fan_in) {
            const double limit = std::sqrt(6.0 / fan_in);
            for (std::size_t i = 0; i < n; ++i)
                params[off + i] = static_cast<T>(rng.uniform_in(-limit, limit));
        };
        fill(off_conv1_w(), conv1_w_n(), 9 * in_c);
        fill(off_conv2_w(), conv2_w_n(), 9 * c1);
        fill(off_fc1_w(), fc1_w_n(), flat_n());
        fill(off_fc2_w(), fc2_w_n(), hidden);
    }

    struct Workspace {
        std::vector<T> z1, p1, z2, p2, a3, logits;
        std::vector<std::uint8_t> idx1, idx2;
        std::vector<T> d1, dp1, d2, dp2, da3, dflat;

        void resize(const SmallCnnNet& net) {
            const std::size_t n1 = static_cast<std::size_t>(net.in_h) * net.in_w * net.c1;
            const std::size_t np1 = n1 / 4;
            const std::size_t n2 = static_cast<std::size_t>(net.in_h / 2) * (net.in_w / 2) * net.c2;
            const std::size_t np2 = n2 / 4;
            z1.resize(n1);
            p1.resize(np1);
            idx1.resize(np1);
            z2.resize(n2);
            p2.resize(np2);
            idx2.resize(np2);
            a3.resize(static_cast<std::size_t>(net.hidden));
            logits.resize(static_cast<std::size_t>(net.k));
            d1.resize(n1);
            dp1.resize(np1);
            d2.resize(n2);
            dp2.resize(np2);
            da3.resize(static_cast<std::size_t>(net.hidden));
            dflat.resize(np2);
        }
    };

    // Forward pass for one image; activations stay in ws for backprop.
    void forward(const T* image, Workspace& ws) const {
        const T* p = params.data();
        conv3x3_forward(image, in_h, in_w, in_c, p + off_conv1_w(), p + off_conv1_b(), c1,
                        ws.z1.data());
        relu_inplace(ws.z1.data(), ws.z1.size());
        maxpool2_forward(ws.z1.data(), in_h, in_w, c1, ws.p1.data(), ws.idx1.data());
        conv3x3_forward(ws.p1.data(), in_h / 2, in_w / 2, c1, p + off_conv2_w(),
                        p + off_conv2_b(), c2, ws.z2.data());
        relu_inplace(ws.z2.data(), ws.z2.size());
        maxpool2_forward(ws.z2.data(), in_h / 2, in_w / 2, c2, ws.p2.data(), ws.idx2.data());
        dense_forward(ws.p2.data(), flat_n(), p + off_fc1_w(), p + off_fc1_b(), hidden,
                      ws.a3.data());
        relu_inplace(ws.a3.data(), ws.a3.size());
        dense_forward(ws.a3.data(), hidden, p + off_fc2_w(), p + off_fc2_b(), k,
                      ws.logits.data());
    }

    // Backprop dL/dlogits to the input pixels; requires a preceding
    // forward() on the same workspace. flat_grad, when non-null, receives
    // accumulated (+=) parameter gradients in flat layout. dinput, when
    // non-null, receives dL/dimage (overwritten).
    void backward(const T* image, Workspace& ws, const T* dlogits, T* flat_grad,
                  T* dinput) const {
        const T* p = params.data();
        // fc2
        if (flat_grad)
            dense_backward_params(ws.a3.data(), hidden, k, dlogits, flat_grad + off_fc2_w(),
                                  flat_grad + off_fc2_b());
        dense_backward_input(p + off_fc2_w(), hidden, k, dlogits, ws.da3.data());
        relu_backward_inplace(ws.a3.data(), ws.da3.data(), ws.da3.size());
        // fc1
        if (flat_grad)
            dense_backward_params(ws.p2.data(), flat_n(), hidden, ws.da3.data(),
                                  flat_grad + off_fc1_w(), flat_grad + off_fc1_b());
        dense_backward_input(p + off_fc1_w(), flat_n(), hidden, ws.da3.data(), ws.dflat.data());
        // pool2 -> conv2
        std::fill(ws.d2.begin(), ws.d2.end(), T(0));
        maxpool2_backward(ws.dflat.data(), ws.idx2.data(), in_h / 2, in_w / 2, c2, ws.d2.data());
        relu_backward_inplace(ws.z2.data(), ws.d2.data(), ws.d2.size());
        if (flat_grad)
            conv3x3_backward_params(ws.p1.data(), in_h / 2, in_w / 2, c1, c2, ws.d2.data(),
                                    flat_grad + off_conv2_w(), flat_grad + off_conv2_b());
        std::fill(ws.dp1.begin(), ws.dp1.end(), T(0));
        conv3x3_backward_input(p + off_conv2_w(), c1, c2, ws.d2.data(), in_h / 2, in_w / 2,
                               ws.dp1.data());
        // pool1 -> conv1
        std::fill(ws.d1.begin(), ws.d1.end(), T(0));
        maxpool2_backward(ws.dp1.data(), ws.idx1.data(), in_h, in_w, c1, ws.d1.data());
        relu_backward_inplace(ws.z1.data(), ws.d1.data(), ws.d1.size());
        if (flat_grad)
            conv3x3_backward_params(image, in_h, in_w, in_c, c1, ws.d1.data(),
                                    flat_grad + off_conv1_w(), flat_grad + off_conv1_b());
        if (dinput) {
            std::memset(dinput, 0, static_cast<std::size_t>(in_h) * in_w * in_c * sizeof(T));
            conv3x3_backward_input(p + off_conv1_w(), in_c, c1, ws.d1.data(), in_h, in_w,
                                   dinput);
        }
    }
};

} // namespace robustify::nn

#endif
