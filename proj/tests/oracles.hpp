#pragma once

// Brute-force reference implementations, written independently of the engine
// and kept deliberately naive. Tests compare engine outputs against these.

#include "missgan/tensor.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

template <typename T>
missgan::TensorT<T> conv2d(const missgan::TensorT<T>& x, const missgan::TensorT<T>& w,
                           const std::vector<T>& bias, int stride, int pad) {
    int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    int co = w.dim(0), k = w.dim(2);
    int ho = (h + 2 * pad - k) / stride + 1;
    int wo = (wd + 2 * pad - k) / stride + 1;
    missgan::TensorT<T> out({n, co, ho, wo});
    for (int s = 0; s < n; ++s)
        for (int oc = 0; oc < co; ++oc)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    double acc = bias.empty() ? 0.0 : static_cast<double>(bias[oc]);
                    for (int ic = 0; ic < ci; ++ic)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                int iy = oy * stride - pad + ky;
                                int ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                                acc += static_cast<double>(x.at4(s, ic, iy, ix)) *
                                       static_cast<double>(w.at4(oc, ic, ky, kx));
                            }
                    out.at4(s, oc, oy, ox) = static_cast<T>(acc);
                }
    return out;
}

template <typename T>
missgan::TensorT<T> linear(const missgan::TensorT<T>& x, const missgan::TensorT<T>& w,
                           const std::vector<T>& bias) {
    int n = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
    missgan::TensorT<T> out({n, out_dim});
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < out_dim; ++c) {
            double acc = bias.empty() ? 0.0 : static_cast<double>(bias[c]);
            for (int j = 0; j < in; ++j)
                acc += static_cast<double>(x[r * in + j]) * static_cast<double>(w[c * in + j]);
            out[r * out_dim + c] = static_cast<T>(acc);
        }
    return out;
}

template <typename T>
missgan::TensorT<T> instance_norm(const missgan::TensorT<T>& x, double eps) {
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    missgan::TensorT<T> out(x.shape());
    for (int s = 0; s < n; ++s)
        for (int ch = 0; ch < c; ++ch) {
            double mu = 0;
            for (int y = 0; y < h; ++y)
                for (int z = 0; z < w; ++z) mu += x.at4(s, ch, y, z);
            mu /= h * w;
            double var = 0;
            for (int y = 0; y < h; ++y)
                for (int z = 0; z < w; ++z) {
                    double d = x.at4(s, ch, y, z) - mu;
                    var += d * d;
                }
            var /= h * w;
            double inv = 1.0 / std::sqrt(var + eps);
            for (int y = 0; y < h; ++y)
                for (int z = 0; z < w; ++z)
                    out.at4(s, ch, y, z) = static_cast<T>((x.at4(s, ch, y, z) - mu) * inv);
        }
    return out;
}

template <typename T>
missgan::TensorT<T> upsample_nearest(const missgan::TensorT<T>& x, int f) {
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    missgan::TensorT<T> out({n, c, h * f, w * f});
    for (int s = 0; s < n; ++s)
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h * f; ++y)
                for (int z = 0; z < w * f; ++z)
                    out.at4(s, ch, y, z) = x.at4(s, ch, y / f, z / f);
    return out;
}

template <typename T>
missgan::TensorT<T> maxpool_3x3_s2(const missgan::TensorT<T>& x) {
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    int oh = (h - 1) / 2 + 1, ow = (w - 1) / 2 + 1;
    missgan::TensorT<T> out({n, c, oh, ow});
    for (int s = 0; s < n; ++s)
        for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    T best = -std::numeric_limits<T>::infinity();
                    for (int ky = -1; ky <= 1; ++ky)
                        for (int kx = -1; kx <= 1; ++kx) {
                            int iy = oy * 2 + ky, ix = ox * 2 + kx;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            best = std::max(best, x.at4(s, ch, iy, ix));
                        }
                    out.at4(s, ch, oy, ox) = best;
                }
    return out;
}

template <typename T>
missgan::TensorT<T> avgpool_2x2(const missgan::TensorT<T>& x) {
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    missgan::TensorT<T> out({n, c, h / 2, w / 2});
    for (int s = 0; s < n; ++s)
        for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < h / 2; ++oy)
                for (int ox = 0; ox < w / 2; ++ox)
                    out.at4(s, ch, oy, ox) =
                        static_cast<T>((x.at4(s, ch, 2 * oy, 2 * ox) +
                                        x.at4(s, ch, 2 * oy, 2 * ox + 1) +
                                        x.at4(s, ch, 2 * oy + 1, 2 * ox) +
                                        x.at4(s, ch, 2 * oy + 1, 2 * ox + 1)) /
                                       4.0);
    return out;
}

} // namespace oracle
