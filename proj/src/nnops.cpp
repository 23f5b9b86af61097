#include "missgan/nnops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace missgan {
namespace nn {

namespace {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using CMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void check(bool cond, const char* msg) {
    if (!cond) fail(ErrorCategory::Internal, msg);
}

// Unpack one sample into (Ci*k*k) x (Ho*Wo) patch columns.
template <typename T>
void im2col(const T* x, int ci, int h, int w, int k, int stride, int pad, int ho, int wo,
            T* cols) {
    for (int c = 0; c < ci; ++c) {
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                T* row = cols + static_cast<int64_t>((c * k + i) * k + j) * ho * wo;
                for (int oy = 0; oy < ho; ++oy) {
                    int iy = oy * stride - pad + i;
                    if (iy < 0 || iy >= h) {
                        std::fill(row + oy * wo, row + (oy + 1) * wo, T(0));
                        continue;
                    }
                    const T* src = x + static_cast<int64_t>(c * h + iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        int ix = ox * stride - pad + j;
                        row[oy * wo + ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* cols, int ci, int h, int w, int k, int stride, int pad, int ho,
                int wo, T* dx) {
    for (int c = 0; c < ci; ++c) {
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                const T* row = cols + static_cast<int64_t>((c * k + i) * k + j) * ho * wo;
                for (int oy = 0; oy < ho; ++oy) {
                    int iy = oy * stride - pad + i;
                    if (iy < 0 || iy >= h) continue;
                    T* dst = dx + static_cast<int64_t>(c * h + iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        int ix = ox * stride - pad + j;
                        if (ix >= 0 && ix < w) dst[ix] += row[oy * wo + ox];
                    }
                }
            }
        }
    }
}

} // namespace

template <typename T>
VarT<T> conv2d(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b, int stride, int pad) {
    const auto& xs = x.value().shape();
    const auto& ws = w.value().shape();
    check(xs.size() == 4 && ws.size() == 4, "conv2d: expects 4-D input and weight");
    check(ws[2] == ws[3], "conv2d: kernel must be square");
    check(xs[1] == ws[1], "conv2d: channel mismatch");
    const int n = xs[0], ci = xs[1], h = xs[2], wd = xs[3];
    const int co = ws[0], k = ws[2];
    const int ho = conv_out_dim(h, k, stride, pad);
    const int wo = conv_out_dim(wd, k, stride, pad);
    check(ho > 0 && wo > 0, "conv2d: output would be empty");
    const bool has_bias = b.defined();
    if (has_bias)
        check(b.value().numel() == co, "conv2d: bias size mismatch");

    const int ckk = ci * k * k;
    const int64_t plane = static_cast<int64_t>(ho) * wo;
    TensorT<T> out({n, co, ho, wo});
    std::vector<T> cols(static_cast<size_t>(ckk) * plane);
    CMatMap<T> wm(w.value().data(), co, ckk);
    for (int s = 0; s < n; ++s) {
        im2col(x.value().data() + static_cast<int64_t>(s) * ci * h * wd, ci, h, wd, k,
               stride, pad, ho, wo, cols.data());
        CMatMap<T> cm(cols.data(), ckk, plane);
        MatMap<T> om(out.data() + static_cast<int64_t>(s) * co * plane, co, plane);
        om.noalias() = wm * cm;
        if (has_bias) {
            const T* bp = b.value().data();
            for (int c = 0; c < co; ++c) om.row(c).array() += bp[c];
        }
    }

    std::vector<VarT<T>> parents = {x, w};
    if (has_bias) parents.push_back(b);
    return make_op<T>(std::move(out), parents,
                      [x, w, b, stride, pad, n, ci, h, wd, co, k, ho, wo, ckk,
                       plane, has_bias](NodeT<T>& self) {
        const bool need_x = x.requires_grad();
        const bool need_w = w.requires_grad();
        const bool need_b = has_bias && b.requires_grad();
        TensorT<T> dx, dw;
        if (need_x) dx = TensorT<T>::zeros(x.value().shape());
        if (need_w) dw = TensorT<T>::zeros(w.value().shape());
        TensorT<T> db;
        if (need_b) db = TensorT<T>::zeros(b.value().shape());
        std::vector<T> cols(static_cast<size_t>(ckk) * plane);
        std::vector<T> dcol(static_cast<size_t>(ckk) * plane);
        CMatMap<T> wm(w.value().data(), co, ckk);
        for (int s = 0; s < n; ++s) {
            CMatMap<T> gm(self.grad.data() + static_cast<int64_t>(s) * co * plane, co, plane);
            if (need_w) {
                im2col(x.value().data() + static_cast<int64_t>(s) * ci * h * wd, ci, h, wd,
                       k, stride, pad, ho, wo, cols.data());
                CMatMap<T> cm(cols.data(), ckk, plane);
                MatMap<T> dwm(dw.data(), co, ckk);
                dwm.noalias() += gm * cm.transpose();
            }
            if (need_b) {
                // plain loop: Eigen's redux splits by pointer alignment,
                // which would make the sum order depend on heap layout
                T* dbp = db.data();
                const T* gp = self.grad.data() + static_cast<int64_t>(s) * co * plane;
                for (int c = 0; c < co; ++c) {
                    T acc = T(0);
                    const T* row = gp + static_cast<int64_t>(c) * plane;
                    for (int64_t i = 0; i < plane; ++i) acc += row[i];
                    dbp[c] += acc;
                }
            }
            if (need_x) {
                MatMap<T> dcm(dcol.data(), ckk, plane);
                dcm.noalias() = wm.transpose() * gm;
                col2im_add(dcol.data(), ci, h, wd, k, stride, pad, ho, wo,
                           dx.data() + static_cast<int64_t>(s) * ci * h * wd);
            }
        }
        if (need_x) x.node()->accum_grad(dx);
        if (need_w) w.node()->accum_grad(dw);
        if (need_b) b.node()->accum_grad(db);
    });
}

template <typename T>
VarT<T> linear(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b) {
    const auto& xs = x.value().shape();
    const auto& ws = w.value().shape();
    check(xs.size() == 2 && ws.size() == 2, "linear: expects 2-D input and weight");
    check(xs[1] == ws[1], "linear: dimension mismatch");
    const int n = xs[0], in = xs[1], out_dim = ws[0];
    const bool has_bias = b.defined();
    if (has_bias) check(b.value().numel() == out_dim, "linear: bias size mismatch");

    TensorT<T> out({n, out_dim});
    CMatMap<T> xm(x.value().data(), n, in);
    CMatMap<T> wm(w.value().data(), out_dim, in);
    MatMap<T> om(out.data(), n, out_dim);
    om.noalias() = xm * wm.transpose();
    if (has_bias) {
        const T* bp = b.value().data();
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < out_dim; ++c) om(r, c) += bp[c];
    }

    std::vector<VarT<T>> parents = {x, w};
    if (has_bias) parents.push_back(b);
    return make_op<T>(std::move(out), parents,
                      [x, w, b, n, in, out_dim, has_bias](NodeT<T>& self) {
        CMatMap<T> gm(self.grad.data(), n, out_dim);
        if (x.requires_grad()) {
            TensorT<T> dx({n, in});
            MatMap<T> dxm(dx.data(), n, in);
            CMatMap<T> wm(w.value().data(), out_dim, in);
            dxm.noalias() = gm * wm;
            x.node()->accum_grad(dx);
        }
        if (w.requires_grad()) {
            TensorT<T> dw({out_dim, in});
            MatMap<T> dwm(dw.data(), out_dim, in);
            CMatMap<T> xm(x.value().data(), n, in);
            dwm.noalias() = gm.transpose() * xm;
            w.node()->accum_grad(dw);
        }
        if (has_bias && b.requires_grad()) {
            TensorT<T> db(b.value().shape());
            T* dbp = db.data();
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < out_dim; ++c) dbp[c] += gm(r, c);
            b.node()->accum_grad(db);
        }
    });
}

template <typename T>
VarT<T> instance_norm(const VarT<T>& x, T eps) {
    const auto& xs = x.value().shape();
    check(xs.size() == 4, "instance_norm: expects 4-D input");
    check(eps > T(0), "instance_norm: eps must be positive");
    const int n = xs[0], c = xs[1];
    const int64_t m = static_cast<int64_t>(xs[2]) * xs[3];
    check(m >= 1, "instance_norm: empty spatial extent");

    TensorT<T> out(xs);
    TensorT<T> inv_std({n, c});
    const T* xp = x.value().data();
    T* op = out.data();
    for (int i = 0; i < n * c; ++i) {
        const T* src = xp + static_cast<int64_t>(i) * m;
        T* dst = op + static_cast<int64_t>(i) * m;
        T mu = 0;
        for (int64_t j = 0; j < m; ++j) mu += src[j];
        mu /= static_cast<T>(m);
        T var = 0;
        for (int64_t j = 0; j < m; ++j) {
            T d = src[j] - mu;
            var += d * d;
        }
        var /= static_cast<T>(m);
        T inv = T(1) / std::sqrt(var + eps);
        inv_std[i] = inv;
        for (int64_t j = 0; j < m; ++j) dst[j] = (src[j] - mu) * inv;
    }

    return make_op<T>(std::move(out), {x}, [x, inv_std, n, c, m](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        // dx = inv * (g - mean(g) - y * mean(g*y)) per (n, c)
        TensorT<T> dx(x.value().shape());
        const T* g = self.grad.data();
        const T* y = self.value.data();
        T* dst = dx.data();
        for (int i = 0; i < n * c; ++i) {
            const T* gi = g + static_cast<int64_t>(i) * m;
            const T* yi = y + static_cast<int64_t>(i) * m;
            T* di = dst + static_cast<int64_t>(i) * m;
            T gmean = 0, gymean = 0;
            for (int64_t j = 0; j < m; ++j) {
                gmean += gi[j];
                gymean += gi[j] * yi[j];
            }
            gmean /= static_cast<T>(m);
            gymean /= static_cast<T>(m);
            T inv = inv_std[i];
            for (int64_t j = 0; j < m; ++j)
                di[j] = inv * (gi[j] - gmean - yi[j] * gymean);
        }
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> scale_shift_nc(const VarT<T>& x, const VarT<T>& gamma, const VarT<T>& beta) {
    const auto& xs = x.value().shape();
    check(xs.size() == 4, "scale_shift_nc: expects 4-D input");
    const int n = xs[0], c = xs[1];
    const int64_t m = static_cast<int64_t>(xs[2]) * xs[3];
    if (gamma.value().shape() != std::vector<int>{n, c} ||
        beta.value().shape() != std::vector<int>{n, c})
        fail(ErrorCategory::Internal, "adain: parameter shape does not match input channels");

    TensorT<T> out(xs);
    const T* xp = x.value().data();
    const T* gp = gamma.value().data();
    const T* bp = beta.value().data();
    T* op = out.data();
    for (int i = 0; i < n * c; ++i) {
        const T s = gp[i], t = bp[i];
        const T* src = xp + static_cast<int64_t>(i) * m;
        T* dst = op + static_cast<int64_t>(i) * m;
        for (int64_t j = 0; j < m; ++j) dst[j] = s * src[j] + t;
    }

    return make_op<T>(std::move(out), {x, gamma, beta}, [x, gamma, beta, n, c, m](NodeT<T>& self) {
        const T* g = self.grad.data();
        const T* xp = x.value().data();
        if (x.requires_grad()) {
            TensorT<T> dx(x.value().shape());
            const T* gp = gamma.value().data();
            T* dst = dx.data();
            for (int i = 0; i < n * c; ++i) {
                const T s = gp[i];
                const T* gi = g + static_cast<int64_t>(i) * m;
                T* di = dst + static_cast<int64_t>(i) * m;
                for (int64_t j = 0; j < m; ++j) di[j] = s * gi[j];
            }
            x.node()->accum_grad(dx);
        }
        if (gamma.requires_grad()) {
            TensorT<T> dg({n, c});
            for (int i = 0; i < n * c; ++i) {
                const T* gi = g + static_cast<int64_t>(i) * m;
                const T* xi = xp + static_cast<int64_t>(i) * m;
                T acc = 0;
                for (int64_t j = 0; j < m; ++j) acc += gi[j] * xi[j];
                dg[i] = acc;
            }
            gamma.node()->accum_grad(dg);
        }
        if (beta.requires_grad()) {
            TensorT<T> db({n, c});
            for (int i = 0; i < n * c; ++i) {
                const T* gi = g + static_cast<int64_t>(i) * m;
                T acc = 0;
                for (int64_t j = 0; j < m; ++j) acc += gi[j];
                db[i] = acc;
            }
            beta.node()->accum_grad(db);
        }
    });
}

template <typename T>
VarT<T> adain(const VarT<T>& x, const VarT<T>& gamma, const VarT<T>& beta, T eps) {
    return scale_shift_nc(instance_norm(x, eps), gamma, beta);
}

template <typename T>
std::pair<VarT<T>, VarT<T>> style_to_adain_params(const VarT<T>& s, const VarT<T>& w,
                                                  const VarT<T>& b) {
    const auto& ws = w.value().shape();
    check(ws.size() == 2 && ws[0] % 2 == 0, "style_to_adain_params: projection width must be 2C");
    if (s.value().shape()[1] != ws[1])
        fail(ErrorCategory::Internal, "style_to_adain_params: style dimension mismatch");
    const int c = ws[0] / 2;
    VarT<T> h = linear(s, w, b);
    VarT<T> gamma = adds(slice_cols(h, 0, c), T(1));
    VarT<T> beta = slice_cols(h, c, c);
    return {gamma, beta};
}

template <typename T>
VarT<T> relu(const VarT<T>& x) {
    TensorT<T> out(x.value().shape());
    const T* xp = x.value().data();
    T* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] = xp[i] > T(0) ? xp[i] : T(0);
    return make_op<T>(std::move(out), {x}, [x](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(x.value().shape());
        const T* xp = x.value().data();
        const T* g = self.grad.data();
        for (int64_t i = 0; i < dx.numel(); ++i) dx[i] = xp[i] > T(0) ? g[i] : T(0);
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> leaky_relu(const VarT<T>& x, T slope) {
    TensorT<T> out(x.value().shape());
    const T* xp = x.value().data();
    T* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] = xp[i] > T(0) ? xp[i] : slope * xp[i];
    return make_op<T>(std::move(out), {x}, [x, slope](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(x.value().shape());
        const T* xp = x.value().data();
        const T* g = self.grad.data();
        for (int64_t i = 0; i < dx.numel(); ++i) dx[i] = xp[i] > T(0) ? g[i] : slope * g[i];
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> softplus(const VarT<T>& x) {
    TensorT<T> out(x.value().shape());
    const T* xp = x.value().data();
    T* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) {
        T v = xp[i];
        op[i] = std::max(v, T(0)) + std::log1p(std::exp(-std::fabs(v)));
    }
    return make_op<T>(std::move(out), {x}, [x](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(x.value().shape());
        const T* xp = x.value().data();
        const T* g = self.grad.data();
        for (int64_t i = 0; i < dx.numel(); ++i) {
            T v = xp[i];
            T sig = v >= T(0) ? T(1) / (T(1) + std::exp(-v))
                              : std::exp(v) / (T(1) + std::exp(v));
            dx[i] = g[i] * sig;
        }
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> upsample_nearest(const VarT<T>& x, int factor) {
    check(factor >= 1, "upsample_nearest: factor must be >= 1");
    const auto& xs = x.value().shape();
    check(xs.size() == 4, "upsample_nearest: expects 4-D input");
    const int n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    const int oh = h * factor, ow = w * factor;
    TensorT<T> out({n, c, oh, ow});
    const T* xp = x.value().data();
    T* op = out.data();
    for (int i = 0; i < n * c; ++i) {
        const T* src = xp + static_cast<int64_t>(i) * h * w;
        T* dst = op + static_cast<int64_t>(i) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            const T* row = src + (oy / factor) * w;
            for (int ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = row[ox / factor];
        }
    }
    return make_op<T>(std::move(out), {x}, [x, factor, n, c, h, w, oh, ow](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(x.value().shape());
        const T* g = self.grad.data();
        T* dst = dx.data();
        for (int i = 0; i < n * c; ++i) {
            const T* gi = g + static_cast<int64_t>(i) * oh * ow;
            T* di = dst + static_cast<int64_t>(i) * h * w;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox)
                    di[(oy / factor) * w + ox / factor] += gi[oy * ow + ox];
        }
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> maxpool_3x3_s2(const VarT<T>& x) {
    const auto& xs = x.value().shape();
    check(xs.size() == 4, "maxpool: expects 4-D input");
    const int n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    const int oh = (h - 1) / 2 + 1, ow = (w - 1) / 2 + 1;
    TensorT<T> out({n, c, oh, ow});
    auto argmax = std::make_shared<std::vector<int32_t>>(out.numel());
    const T* xp = x.value().data();
    T* op = out.data();
    int64_t oidx = 0;
    for (int i = 0; i < n * c; ++i) {
        const T* src = xp + static_cast<int64_t>(i) * h * w;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox, ++oidx) {
                T best = -std::numeric_limits<T>::infinity();
                int32_t bi = 0;
                for (int ky = 0; ky < 3; ++ky) {
                    int iy = oy * 2 - 1 + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        int ix = ox * 2 - 1 + kx;
                        if (ix < 0 || ix >= w) continue;
                        T v = src[iy * w + ix];
                        if (v > best) {
                            best = v;
                            bi = iy * w + ix;
                        }
                    }
                }
                op[oidx] = best;
                (*argmax)[static_cast<size_t>(oidx)] = bi;
            }
        }
    }
    const int64_t plane_in = static_cast<int64_t>(h) * w;
    const int64_t plane_out = static_cast<int64_t>(oh) * ow;
    return make_op<T>(std::move(out), {x}, [x, argmax, n, c, plane_in, plane_out](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(x.value().shape());
        const T* g = self.grad.data();
        T* dst = dx.data();
        for (int i = 0; i < n * c; ++i) {
            const T* gi = g + i * plane_out;
            T* di = dst + i * plane_in;
            const int32_t* am = argmax->data() + i * plane_out;
            for (int64_t j = 0; j < plane_out; ++j) di[am[j]] += gi[j];
        }
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> maxpool_2x2(const VarT<T>& x) {
    const auto& xs = x.value().shape();
    check(xs.size() == 4 && xs[2] % 2 == 0 && xs[3] % 2 == 0,
          "maxpool_2x2: requires even spatial dims");
    const int n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    const int oh = h / 2, ow = w / 2;
    TensorT<T> out({n, c, oh, ow});
    auto argmax = std::make_shared<std::vector<int32_t>>(out.numel());
    const T* xp = x.value().data();
    T* op = out.data();
    int64_t oidx = 0;
    for (int i = 0; i < n * c; ++i) {
        const T* src = xp + static_cast<int64_t>(i) * h * w;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox, ++oidx) {
                T best = -std::numeric_limits<T>::infinity();
                int32_t bi = 0;
                for (int ky = 0; ky < 2; ++ky)
                    for (int kx = 0; kx < 2; ++kx) {
                        int idx = (2 * oy + ky) * w + 2 * ox + kx;
                        if (src[idx] > best) {
                            best = src[idx];
                            bi = idx;
                        }
                    }
                op[oidx] = best;
                (*argmax)[static_cast<size_t>(oidx)] = bi;
            }
    }
    const int64_t plane_in = static_cast<int64_t>(h) * w;
    const int64_t plane_out = static_cast<int64_t>(oh) * ow;
    return make_op<T>(std::move(out), {x}, [x, argmax, n, c, plane_in, plane_out](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(x.value().shape());
        const T* g = self.grad.data();
        T* dst = dx.data();
        for (int i = 0; i < n * c; ++i) {
            const T* gi = g + i * plane_out;
            T* di = dst + i * plane_in;
            const int32_t* am = argmax->data() + i * plane_out;
            for (int64_t j = 0; j < plane_out; ++j) di[am[j]] += gi[j];
        }
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> avgpool_2x2(const VarT<T>& x) {
    const auto& xs = x.value().shape();
    check(xs.size() == 4 && xs[2] % 2 == 0 && xs[3] % 2 == 0,
          "avgpool_2x2: requires even spatial dims");
    const int n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    const int oh = h / 2, ow = w / 2;
    TensorT<T> out({n, c, oh, ow});
    const T* xp = x.value().data();
    T* op = out.data();
    for (int i = 0; i < n * c; ++i) {
        const T* src = xp + static_cast<int64_t>(i) * h * w;
        T* dst = op + static_cast<int64_t>(i) * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox)
                dst[oy * ow + ox] = (src[(2 * oy) * w + 2 * ox] + src[(2 * oy) * w + 2 * ox + 1] +
                                     src[(2 * oy + 1) * w + 2 * ox] +
                                     src[(2 * oy + 1) * w + 2 * ox + 1]) *
                                    T(0.25);
    }
    return make_op<T>(std::move(out), {x}, [x, n, c, h, w, oh, ow](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(x.value().shape());
        const T* g = self.grad.data();
        T* dst = dx.data();
        for (int i = 0; i < n * c; ++i) {
            const T* gi = g + static_cast<int64_t>(i) * oh * ow;
            T* di = dst + static_cast<int64_t>(i) * h * w;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    T v = gi[oy * ow + ox] * T(0.25);
                    di[(2 * oy) * w + 2 * ox] += v;
                    di[(2 * oy) * w + 2 * ox + 1] += v;
                    di[(2 * oy + 1) * w + 2 * ox] += v;
                    di[(2 * oy + 1) * w + 2 * ox + 1] += v;
                }
        }
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> global_avg_pool(const VarT<T>& x) {
    const auto& xs = x.value().shape();
    check(xs.size() == 4, "global_avg_pool: expects 4-D input");
    const int n = xs[0], c = xs[1];
    const int64_t m = static_cast<int64_t>(xs[2]) * xs[3];
    TensorT<T> out({n, c});
    const T* xp = x.value().data();
    for (int i = 0; i < n * c; ++i) {
        const T* src = xp + static_cast<int64_t>(i) * m;
        T acc = 0;
        for (int64_t j = 0; j < m; ++j) acc += src[j];
        out[i] = acc / static_cast<T>(m);
    }
    return make_op<T>(std::move(out), {x}, [x, n, c, m](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(x.value().shape());
        const T* g = self.grad.data();
        T* dst = dx.data();
        for (int i = 0; i < n * c; ++i) {
            T v = g[i] / static_cast<T>(m);
            T* di = dst + static_cast<int64_t>(i) * m;
            for (int64_t j = 0; j < m; ++j) di[j] = v;
        }
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b) {
    check(a.value().same_shape(b.value()), "add: shape mismatch");
    TensorT<T> out = a.value();
    out.add_(b.value());
    return make_op<T>(std::move(out), {a, b}, [a, b](NodeT<T>& self) {
        if (a.requires_grad()) a.node()->accum_grad(self.grad);
        if (b.requires_grad()) b.node()->accum_grad(self.grad);
    });
}

template <typename T>
VarT<T> sub(const VarT<T>& a, const VarT<T>& b) {
    check(a.value().same_shape(b.value()), "sub: shape mismatch");
    TensorT<T> out(a.value().shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
    return make_op<T>(std::move(out), {a, b}, [a, b](NodeT<T>& self) {
        if (a.requires_grad()) a.node()->accum_grad(self.grad);
        if (b.requires_grad()) {
            TensorT<T> dg(self.grad.shape());
            for (int64_t i = 0; i < dg.numel(); ++i) dg[i] = -self.grad[i];
            b.node()->accum_grad(dg);
        }
    });
}

template <typename T>
VarT<T> mul(const VarT<T>& a, const VarT<T>& b) {
    check(a.value().same_shape(b.value()), "mul: shape mismatch");
    TensorT<T> out(a.value().shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
    return make_op<T>(std::move(out), {a, b}, [a, b](NodeT<T>& self) {
        if (a.requires_grad()) {
            TensorT<T> da(self.grad.shape());
            for (int64_t i = 0; i < da.numel(); ++i) da[i] = self.grad[i] * b.value()[i];
            a.node()->accum_grad(da);
        }
        if (b.requires_grad()) {
            TensorT<T> db(self.grad.shape());
            for (int64_t i = 0; i < db.numel(); ++i) db[i] = self.grad[i] * a.value()[i];
            b.node()->accum_grad(db);
        }
    });
}

template <typename T>
VarT<T> scale(const VarT<T>& x, T c) {
    TensorT<T> out(x.value().shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x.value()[i] * c;
    return make_op<T>(std::move(out), {x}, [x, c](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(self.grad.shape());
        for (int64_t i = 0; i < dx.numel(); ++i) dx[i] = self.grad[i] * c;
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> adds(const VarT<T>& x, T c) {
    TensorT<T> out(x.value().shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x.value()[i] + c;
    return make_op<T>(std::move(out), {x}, [x](NodeT<T>& self) {
        if (x.requires_grad()) x.node()->accum_grad(self.grad);
    });
}

template <typename T>
VarT<T> neg(const VarT<T>& x) {
    return scale(x, T(-1));
}

template <typename T>
VarT<T> abs(const VarT<T>& x) {
    TensorT<T> out(x.value().shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::fabs(x.value()[i]);
    return make_op<T>(std::move(out), {x}, [x](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(self.grad.shape());
        for (int64_t i = 0; i < dx.numel(); ++i) {
            T v = x.value()[i];
            dx[i] = v > T(0) ? self.grad[i] : (v < T(0) ? -self.grad[i] : T(0));
        }
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> square(const VarT<T>& x) {
    TensorT<T> out(x.value().shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x.value()[i] * x.value()[i];
    return make_op<T>(std::move(out), {x}, [x](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(self.grad.shape());
        for (int64_t i = 0; i < dx.numel(); ++i) dx[i] = T(2) * x.value()[i] * self.grad[i];
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> sum(const VarT<T>& x) {
    T acc = 0;
    for (int64_t i = 0; i < x.value().numel(); ++i) acc += x.value()[i];
    return make_op<T>(TensorT<T>::scalar(acc), {x}, [x](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        x.node()->accum_grad(TensorT<T>::full(x.value().shape(), self.grad[0]));
    });
}

template <typename T>
VarT<T> mean(const VarT<T>& x) {
    const int64_t n = x.value().numel();
    check(n > 0, "mean: empty tensor");
    T acc = 0;
    for (int64_t i = 0; i < n; ++i) acc += x.value()[i];
    return make_op<T>(TensorT<T>::scalar(acc / static_cast<T>(n)), {x}, [x, n](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        x.node()->accum_grad(TensorT<T>::full(x.value().shape(), self.grad[0] / static_cast<T>(n)));
    });
}

template <typename T>
VarT<T> reshape(const VarT<T>& x, std::vector<int> shape) {
    TensorT<T> out(std::move(shape), x.value().vec());
    check(out.numel() == x.value().numel(), "reshape: element count mismatch");
    return make_op<T>(std::move(out), {x}, [x](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        x.node()->accum_grad(TensorT<T>(x.value().shape(), self.grad.vec()));
    });
}

template <typename T>
VarT<T> slice_cols(const VarT<T>& x, int c0, int len) {
    const auto& xs = x.value().shape();
    check(xs.size() == 2 && c0 >= 0 && c0 + len <= xs[1], "slice_cols: out of range");
    const int n = xs[0], m = xs[1];
    TensorT<T> out({n, len});
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < len; ++c)
            out[static_cast<int64_t>(r) * len + c] = x.value()[static_cast<int64_t>(r) * m + c0 + c];
    return make_op<T>(std::move(out), {x}, [x, c0, len, n, m](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx({n, m});
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < len; ++c)
                dx[static_cast<int64_t>(r) * m + c0 + c] = self.grad[static_cast<int64_t>(r) * len + c];
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> channel_affine(const VarT<T>& x, std::vector<T> a, std::vector<T> b) {
    const auto& xs = x.value().shape();
    check(xs.size() == 4 && static_cast<int>(a.size()) == xs[1] && a.size() == b.size(),
          "channel_affine: coefficient size mismatch");
    const int n = xs[0], c = xs[1];
    const int64_t m = static_cast<int64_t>(xs[2]) * xs[3];
    TensorT<T> out(xs);
    const T* xp = x.value().data();
    T* op = out.data();
    for (int s = 0; s < n; ++s)
        for (int ch = 0; ch < c; ++ch) {
            const T* src = xp + (static_cast<int64_t>(s) * c + ch) * m;
            T* dst = op + (static_cast<int64_t>(s) * c + ch) * m;
            for (int64_t j = 0; j < m; ++j) dst[j] = a[ch] * src[j] + b[ch];
        }
    return make_op<T>(std::move(out), {x}, [x, a, n, c, m](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx(x.value().shape());
        const T* g = self.grad.data();
        T* dst = dx.data();
        for (int s = 0; s < n; ++s)
            for (int ch = 0; ch < c; ++ch) {
                const T* gi = g + (static_cast<int64_t>(s) * c + ch) * m;
                T* di = dst + (static_cast<int64_t>(s) * c + ch) * m;
                for (int64_t j = 0; j < m; ++j) di[j] = a[ch] * gi[j];
            }
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> select_rows(const std::vector<VarT<T>>& heads, const std::vector<int>& labels) {
    check(!heads.empty(), "select_rows: no heads");
    const int k = static_cast<int>(heads.size());
    const auto& s0 = heads[0].value().shape();
    check(s0.size() == 2, "select_rows: heads must be 2-D");
    const int n = s0[0], d = s0[1];
    check(static_cast<int>(labels.size()) == n, "select_rows: label count mismatch");
    for (const auto& h : heads)
        check(h.value().shape() == s0, "select_rows: head shape mismatch");
    for (int y : labels)
        if (y < 0 || y >= k) fail(ErrorCategory::Args, "invalid domain index " + std::to_string(y));

    TensorT<T> out({n, d});
    for (int r = 0; r < n; ++r) {
        const T* src = heads[static_cast<size_t>(labels[r])].value().data() + static_cast<int64_t>(r) * d;
        std::copy(src, src + d, out.data() + static_cast<int64_t>(r) * d);
    }
    return make_op<T>(std::move(out), heads, [heads, labels, n, d](NodeT<T>& self) {
        for (int k2 = 0; k2 < static_cast<int>(heads.size()); ++k2) {
            if (!heads[static_cast<size_t>(k2)].requires_grad()) continue;
            bool used = false;
            TensorT<T> dh(heads[static_cast<size_t>(k2)].value().shape());
            for (int r = 0; r < n; ++r) {
                if (labels[static_cast<size_t>(r)] != k2) continue;
                used = true;
                const T* g = self.grad.data() + static_cast<int64_t>(r) * d;
                std::copy(g, g + d, dh.data() + static_cast<int64_t>(r) * d);
            }
            if (used) heads[static_cast<size_t>(k2)].node()->accum_grad(dh);
        }
    });
}

template <typename T>
VarT<T> select_logits(const VarT<T>& x, const std::vector<int>& labels) {
    const auto& xs = x.value().shape();
    check(xs.size() == 2, "select_logits: expects N x K input");
    const int n = xs[0], k = xs[1];
    check(static_cast<int>(labels.size()) == n, "select_logits: label count mismatch");
    for (int y : labels)
        if (y < 0 || y >= k) fail(ErrorCategory::Args, "invalid domain index " + std::to_string(y));
    TensorT<T> out({n});
    for (int r = 0; r < n; ++r) out[r] = x.value()[static_cast<int64_t>(r) * k + labels[static_cast<size_t>(r)]];
    return make_op<T>(std::move(out), {x}, [x, labels, n, k](NodeT<T>& self) {
        if (!x.requires_grad()) return;
        TensorT<T> dx({n, k});
        for (int r = 0; r < n; ++r)
            dx[static_cast<int64_t>(r) * k + labels[static_cast<size_t>(r)]] = self.grad[r];
        x.node()->accum_grad(dx);
    });
}

template <typename T>
VarT<T> mean_abs_diff(const VarT<T>& a, const VarT<T>& b) {
    return mean(abs(sub(a, b)));
}

template <typename T>
VarT<T> mean_sq_diff(const VarT<T>& a, const VarT<T>& b) {
    return mean(square(sub(a, b)));
}

// explicit instantiations
#define MISSGAN_INSTANTIATE_NNOPS(T)                                                          \
    template VarT<T> conv2d<T>(const VarT<T>&, const VarT<T>&, const VarT<T>&, int, int);     \
    template VarT<T> linear<T>(const VarT<T>&, const VarT<T>&, const VarT<T>&);               \
    template VarT<T> instance_norm<T>(const VarT<T>&, T);                                     \
    template VarT<T> scale_shift_nc<T>(const VarT<T>&, const VarT<T>&, const VarT<T>&);       \
    template VarT<T> adain<T>(const VarT<T>&, const VarT<T>&, const VarT<T>&, T);             \
    template std::pair<VarT<T>, VarT<T>> style_to_adain_params<T>(const VarT<T>&,             \
                                                                  const VarT<T>&,             \
                                                                  const VarT<T>&);            \
    template VarT<T> relu<T>(const VarT<T>&);                                                 \
    template VarT<T> leaky_relu<T>(const VarT<T>&, T);                                        \
    template VarT<T> softplus<T>(const VarT<T>&);                                             \
    template VarT<T> upsample_nearest<T>(const VarT<T>&, int);                                \
    template VarT<T> maxpool_3x3_s2<T>(const VarT<T>&);                                       \
    template VarT<T> maxpool_2x2<T>(const VarT<T>&);                                          \
    template VarT<T> avgpool_2x2<T>(const VarT<T>&);                                          \
    template VarT<T> global_avg_pool<T>(const VarT<T>&);                                      \
    template VarT<T> add<T>(const VarT<T>&, const VarT<T>&);                                  \
    template VarT<T> sub<T>(const VarT<T>&, const VarT<T>&);                                  \
    template VarT<T> mul<T>(const VarT<T>&, const VarT<T>&);                                  \
    template VarT<T> scale<T>(const VarT<T>&, T);                                             \
    template VarT<T> adds<T>(const VarT<T>&, T);                                              \
    template VarT<T> neg<T>(const VarT<T>&);                                                  \
    template VarT<T> abs<T>(const VarT<T>&);                                                  \
    template VarT<T> square<T>(const VarT<T>&);                                               \
    template VarT<T> sum<T>(const VarT<T>&);                                                  \
    template VarT<T> mean<T>(const VarT<T>&);                                                 \
    template VarT<T> reshape<T>(const VarT<T>&, std::vector<int>);                            \
    template VarT<T> slice_cols<T>(const VarT<T>&, int, int);                                 \
    template VarT<T> channel_affine<T>(const VarT<T>&, std::vector<T>, std::vector<T>);       \
    template VarT<T> select_rows<T>(const std::vector<VarT<T>>&, const std::vector<int>&);    \
    template VarT<T> select_logits<T>(const VarT<T>&, const std::vector<int>&);               \
    template VarT<T> mean_abs_diff<T>(const VarT<T>&, const VarT<T>&);                        \
    template VarT<T> mean_sq_diff<T>(const VarT<T>&, const VarT<T>&);

MISSGAN_INSTANTIATE_NNOPS(float)
MISSGAN_INSTANTIATE_NNOPS(double)

} // namespace nn
} // namespace missgan
