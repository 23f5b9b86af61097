#pragma once

#include <utility>
#include <vector>

#include "missgan/graph.hpp"

namespace missgan {
namespace nn {

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// -------- learned layers --------
// conv2d: x N x Ci x H x W, w Co x Ci x k x k, b Co (pass a
// default-constructed VarT to omit the bias).
template <typename T>
VarT<T> conv2d(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b, int stride, int pad);

// linear: x N x I, w O x I, b O
template <typename T>
VarT<T> linear(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b);

// -------- normalization --------
// Per sample and channel: (x - mean) / sqrt(var + eps), population
// variance over H x W.
template <typename T>
VarT<T> instance_norm(const VarT<T>& x, T eps);

// y[n,c,:,:] = gamma[n,c] * x[n,c,:,:] + beta[n,c]
template <typename T>
VarT<T> scale_shift_nc(const VarT<T>& x, const VarT<T>& gamma, const VarT<T>& beta);

template <typename T>
VarT<T> adain(const VarT<T>& x, const VarT<T>& gamma, const VarT<T>& beta, T eps);

// Projects a style code through an affine map of output width 2C and
// splits it into AdaIN parameters; gamma is identity-centered (1 + raw).
template <typename T>
std::pair<VarT<T>, VarT<T>> style_to_adain_params(const VarT<T>& s, const VarT<T>& w,
                                                  const VarT<T>& b);

// -------- activations --------
template <typename T>
VarT<T> relu(const VarT<T>& x);
template <typename T>
VarT<T> leaky_relu(const VarT<T>& x, T slope);
template <typename T>
VarT<T> softplus(const VarT<T>& x);

// -------- resampling --------
template <typename T>
VarT<T> upsample_nearest(const VarT<T>& x, int factor);
template <typename T>
VarT<T> maxpool_3x3_s2(const VarT<T>& x); // pad 1, halves H and W
template <typename T>
VarT<T> maxpool_2x2(const VarT<T>& x); // stride 2, even H and W
template <typename T>
VarT<T> avgpool_2x2(const VarT<T>& x); // stride 2, even H and W
template <typename T>
VarT<T> global_avg_pool(const VarT<T>& x); // N x C x H x W -> N x C

// -------- elementwise / reductions --------
template <typename T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b);
template <typename T>
VarT<T> sub(const VarT<T>& a, const VarT<T>& b);
template <typename T>
VarT<T> mul(const VarT<T>& a, const VarT<T>& b);
template <typename T>
VarT<T> scale(const VarT<T>& x, T c);
template <typename T>
VarT<T> adds(const VarT<T>& x, T c);
template <typename T>
VarT<T> neg(const VarT<T>& x);
template <typename T>
VarT<T> abs(const VarT<T>& x);
template <typename T>
VarT<T> square(const VarT<T>& x);
template <typename T>
VarT<T> sum(const VarT<T>& x);
template <typename T>
VarT<T> mean(const VarT<T>& x);

// -------- structure --------
template <typename T>
VarT<T> reshape(const VarT<T>& x, std::vector<int> shape);
template <typename T>
VarT<T> slice_cols(const VarT<T>& x, int c0, int len);
// y = a[c] * x + b[c] with fixed per-channel coefficients (not learned)
template <typename T>
VarT<T> channel_affine(const VarT<T>& x, std::vector<T> a, std::vector<T> b);
// out[n,:] = heads[labels[n]][n,:]
template <typename T>
VarT<T> select_rows(const std::vector<VarT<T>>& heads, const std::vector<int>& labels);
// x N x K -> out N, out[n] = x[n, labels[n]]
template <typename T>
VarT<T> select_logits(const VarT<T>& x, const std::vector<int>& labels);

// -------- composites --------
template <typename T>
VarT<T> mean_abs_diff(const VarT<T>& a, const VarT<T>& b);
template <typename T>
VarT<T> mean_sq_diff(const VarT<T>& a, const VarT<T>& b);

} // namespace nn
} // namespace missgan
