#include "robustify/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robustify/errors.hpp"

namespace robustify {

namespace {

struct Palette {
    float bg[3];
    float fg[3];
};

Palette draw_palette(Rng& rng) {
    Palette p;
    for (float& v : p.bg) v = static_cast<float>(rng.uniform_in(0.05, 0.95));
    // keep the shapes visible: resample until the colors are far apart
    for (int tries = 0; tries < 64; ++tries) {
        double dist = 0.0;
        for (int i = 0; i < 3; ++i) {
            p.fg[i] = static_cast<float>(rng.uniform_in(0.05, 0.95));
            dist += std::fabs(p.fg[i] - p.bg[i]);
        }
        if (dist >= 0.9) break;
    }
    return p;
}

// Returns the foreground weight in [0,1] for pixel (y,x) of one class.
double shape_mask(int cls, int y, int x, int h, int w, int cy, int cx, const double* par) {
    switch (cls) {
        case 0: { // horizontal stripes
            const int period = static_cast<int>(par[0]);
            return ((y + static_cast<int>(par[1])) % period) * 2 < period ? 1.0 : 0.0;
        }
        case 1: { // vertical stripes
            const int period = static_cast<int>(par[0]);
            return ((x + static_cast<int>(par[1])) % period) * 2 < period ? 1.0 : 0.0;
        }
        case 2: { // diagonal stripes
            const int period = static_cast<int>(par[0]);
            return ((x + y + static_cast<int>(par[1])) % period) * 2 < period ? 1.0 : 0.0;
        }
        case 3: { // checkerboard
            const int cell = static_cast<int>(par[0]);
            return ((y / cell) + (x / cell)) % 2 == 0 ? 1.0 : 0.0;
        }
        case 4: { // disk
            const double r = par[0];
            const double d = std::hypot(y - static_cast<double>(cy), x - static_cast<double>(cx));
            return d <= r ? 1.0 : 0.0;
        }
        case 5: { // ring
            const double r = par[0], th = par[1];
            const double d = std::hypot(y - static_cast<double>(cy), x - static_cast<double>(cx));
            return std::fabs(d - r) <= th ? 1.0 : 0.0;
        }
        case 6: { // filled rectangle
            return (std::abs(x - cx) <= par[0] && std::abs(y - cy) <= par[1]) ? 1.0 : 0.0;
        }
        case 7: { // cross
            const double arm = par[0], len = par[1];
            const bool vert = std::abs(x - cx) <= arm && std::abs(y - cy) <= len;
            const bool horiz = std::abs(y - cy) <= arm && std::abs(x - cx) <= len;
            return (vert || horiz) ? 1.0 : 0.0;
        }
        case 8: { // triangle (apex up or down by par[2])
            const double size = par[0];
            const double dir = par[2] < 0.5 ? 1.0 : -1.0;
            const double rel = dir * (y - cy);
            if (rel < -size / 2 || rel > size / 2) return 0.0;
            const double halfwidth = (rel + size / 2) * 0.7;
            return std::abs(x - cx) <= halfwidth ? 1.0 : 0.0;
        }
        default: { // 9: bullseye
            const double period = par[0];
            const double d = std::hypot(y - static_cast<double>(cy), x - static_cast<double>(cx));
            return 0.5 + 0.5 * std::cos(d * 2.0 * 3.14159265358979323846 / period);
        }
    }
    (void)h;
    (void)w;
}

} // namespace

LabeledDataset make_synthetic_dataset(int n, std::uint64_t seed, int h, int w) {
    if (n <= 0) throw ConfigError("make_synthetic_dataset: n must be positive");
    LabeledDataset ds;
    ds.images = Tensor(n, h, w, 3);
    ds.labels.resize(static_cast<std::size_t>(n));
    ds.provenance.assign(static_cast<std::size_t>(n), Provenance::kClean);
    ds.source_index.resize(static_cast<std::size_t>(n));
    std::iota(ds.source_index.begin(), ds.source_index.end(), 0);

    for (int i = 0; i < n; ++i) {
        const int cls = i % kSyntheticClassCount;
        ds.labels[static_cast<std::size_t>(i)] = cls;
        Rng rng(derive_seed(seed, SeedStream::kSynthetic, static_cast<std::uint64_t>(i)));
        const Palette pal = draw_palette(rng);
        const int cy = h / 2 + static_cast<int>(rng.uniform_int_in(-4, 4));
        const int cx = w / 2 + static_cast<int>(rng.uniform_int_in(-4, 4));
        double par[3] = {0, 0, 0};
        switch (cls) {
            case 0:
            case 1:
            case 2:
                par[0] = static_cast<double>(rng.uniform_int_in(4, 8));
                par[1] = static_cast<double>(rng.uniform_int_in(0, 7));
                break;
            case 3:
                par[0] = static_cast<double>(rng.uniform_int_in(3, 6));
                break;
            case 4:
                par[0] = rng.uniform_in(6.0, 11.0);
                break;
            case 5:
                par[0] = rng.uniform_in(7.0, 12.0);
                par[1] = rng.uniform_in(1.5, 3.0);
                break;
            case 6:
                par[0] = rng.uniform_in(5.0, 10.0);
                par[1] = rng.uniform_in(5.0, 10.0);
                break;
            case 7:
                par[0] = rng.uniform_in(1.5, 3.5);
                par[1] = rng.uniform_in(8.0, 13.0);
                break;
            case 8:
                par[0] = rng.uniform_in(14.0, 22.0);
                par[2] = rng.uniform();
                break;
            default:
                par[0] = rng.uniform_in(5.0, 8.0);
                break;
        }
        float* px = ds.images.sample(i);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double m = shape_mask(cls, y, x, h, w, cy, cx, par);
                for (int ch = 0; ch < 3; ++ch) {
                    const double base = pal.bg[ch] + m * (pal.fg[ch] - pal.bg[ch]);
                    const double noisy = base + 0.03 * rng.normal();
                    px[(static_cast<std::size_t>(y) * w + x) * 3 + ch] =
                        static_cast<float>(std::min(std::max(noisy, 0.0), 1.0));
                }
            }
        }
    }
    return ds;
}

} // namespace robustify
