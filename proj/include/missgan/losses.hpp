#pragma once

#include "missgan/config.hpp"
#include "missgan/discriminator.hpp"
#include "missgan/graph.hpp"
#include "missgan/perceptual.hpp"

#include <string>
#include <vector>

namespace missgan {

// Per-iteration scalar summary, one CSV row per training step.
struct LossReport {
    float adv_d = 0, adv_g = 0, r1 = 0, sty = 0, ds = 0, cyc = 0, feat = 0, sacl = 0,
          total_g = 0, total_d = 0;

    static const char* csv_header();
    std::string csv_row() const;
    bool all_finite() const;
};

namespace loss {

// non-saturating adversarial pair
template <typename T>
VarT<T> adv_d(const VarT<T>& real_logit, const VarT<T>& fake_logit);
template <typename T>
VarT<T> adv_g(const VarT<T>& fake_logit);

// mean absolute difference, used for style reconstruction, diversity and
// cycle terms alike
template <typename T>
VarT<T> sty(const VarT<T>& s_target, const VarT<T>& s_recovered);
template <typename T>
VarT<T> ds(const VarT<T>& img_a, const VarT<T>& img_b);
template <typename T>
VarT<T> cyc(const VarT<T>& x, const VarT<T>& x_rec);

template <typename T>
VarT<T> content_feat(const PerceptualT<T>& phi, const VarT<T>& x, const VarT<T>& y_x);

// (1/d) * mean squared difference of the deepest encoder features
template <typename T>
VarT<T> sacl(const VarT<T>& enc_x, const VarT<T>& enc_yx, int d);

template <typename T>
VarT<T> generator_objective(const VarT<T>& adv_g, const VarT<T>& sty, const VarT<T>& ds,
                            const VarT<T>& cyc, const VarT<T>& feat, const VarT<T>& sacl,
                            const LossWeights& w, T ds_weight);
template <typename T>
VarT<T> discriminator_objective(const VarT<T>& adv_d, const VarT<T>& r1);

} // namespace loss

// Gradient penalty on real images with exact parameter gradients, built
// from an input-gradient pass followed by a directional-derivative pass:
//   value     = (weight / 2B) * sum_n ||grad_x D(x_n)||^2
//   gradients = the true parameter gradients of that value
// Zeroes the discriminator's accumulated gradients as a side effect, so it
// must run before the backward pass of the enclosing objective.
template <typename T>
VarT<T> r1_penalty(DiscriminatorT<T>& d, const TensorT<T>& x_real,
                   const std::vector<int>& labels, T weight);

} // namespace missgan
