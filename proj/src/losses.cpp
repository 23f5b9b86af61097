#include "missgan/losses.hpp"

#include "missgan/nnops.hpp"

#include <cmath>
#include <cstdio>

namespace missgan {

const char* LossReport::csv_header() {
    return "adv_d,adv_g,r1,sty,ds,cyc,feat,sacl,total_g,total_d";
}

std::string LossReport::csv_row() const {
    const float v[] = {adv_d, adv_g, r1, sty, ds, cyc, feat, sacl, total_g, total_d};
    std::string row;
    char buf[32];
    for (size_t i = 0; i < 10; ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v[i]));
        if (i) row += ',';
        row += buf;
    }
    return row;
}

bool LossReport::all_finite() const {
    const float v[] = {adv_d, adv_g, r1, sty, ds, cyc, feat, sacl, total_g, total_d};
    for (float x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

namespace loss {

namespace {

template <typename T>
void check_pair(const VarT<T>& a, const VarT<T>& b, const char* what) {
    if (!a.value().same_shape(b.value()))
        fail(ErrorCategory::Args, std::string(what) + ": shape mismatch, " +
                                      TensorT<T>::shape_str(a.value().shape()) + " vs " +
                                      TensorT<T>::shape_str(b.value().shape()));
}

template <typename T>
void check_finite(const VarT<T>& v, const char* name) {
    if (!v.value().all_finite())
        fail(ErrorCategory::Numeric, std::string("non-finite ") + name + " loss");
}

} // namespace

template <typename T>
VarT<T> adv_d(const VarT<T>& real_logit, const VarT<T>& fake_logit) {
    return nn::add(nn::mean(nn::softplus(nn::neg(real_logit))),
                   nn::mean(nn::softplus(fake_logit)));
}

template <typename T>
VarT<T> adv_g(const VarT<T>& fake_logit) {
    return nn::mean(nn::softplus(nn::neg(fake_logit)));
}

template <typename T>
VarT<T> sty(const VarT<T>& s_target, const VarT<T>& s_recovered) {
    check_pair(s_target, s_recovered, "style codes");
    return nn::mean_abs_diff(s_target, s_recovered);
}

template <typename T>
VarT<T> ds(const VarT<T>& img_a, const VarT<T>& img_b) {
    check_pair(img_a, img_b, "generated images");
    return nn::mean_abs_diff(img_a, img_b);
}

template <typename T>
VarT<T> cyc(const VarT<T>& x, const VarT<T>& x_rec) {
    check_pair(x, x_rec, "reconstruction");
    return nn::mean_abs_diff(x, x_rec);
}

template <typename T>
VarT<T> content_feat(const PerceptualT<T>& phi, const VarT<T>& x, const VarT<T>& y_x) {
    check_pair(x, y_x, "feature loss images");
    return nn::mean_abs_diff(phi(x), phi(y_x));
}

template <typename T>
VarT<T> sacl(const VarT<T>& enc_x, const VarT<T>& enc_yx, int d) {
    check_pair(enc_x, enc_yx, "encoder features");
    if (d < 1) fail(ErrorCategory::Args, "feature distance divisor must be >= 1");
    return nn::scale(nn::mean_sq_diff(enc_x, enc_yx), T(1) / T(d));
}

template <typename T>
VarT<T> generator_objective(const VarT<T>& adv_g, const VarT<T>& sty, const VarT<T>& ds,
                            const VarT<T>& cyc, const VarT<T>& feat, const VarT<T>& sacl,
                            const LossWeights& w, T ds_weight) {
    check_finite(adv_g, "adv_g");
    check_finite(sty, "sty");
    check_finite(ds, "ds");
    check_finite(cyc, "cyc");
    check_finite(feat, "feat");
    check_finite(sacl, "sacl");
    VarT<T> total = nn::add(adv_g, nn::scale(sty, T(w.lambda_sty)));
    total = nn::sub(total, nn::scale(ds, ds_weight));
    total = nn::add(total, nn::scale(cyc, T(w.lambda_cyc)));
    total = nn::add(total, nn::scale(feat, T(w.lambda_feat)));
    total = nn::add(total, nn::scale(sacl, T(w.lambda_sacl)));
    return total;
}

template <typename T>
VarT<T> discriminator_objective(const VarT<T>& adv_d, const VarT<T>& r1) {
    check_finite(adv_d, "adv_d");
    check_finite(r1, "r1");
    return nn::add(adv_d, r1);
}

#define MISSGAN_INSTANTIATE_LOSSES(T)                                                         \
    template VarT<T> adv_d<T>(const VarT<T>&, const VarT<T>&);                                \
    template VarT<T> adv_g<T>(const VarT<T>&);                                                \
    template VarT<T> sty<T>(const VarT<T>&, const VarT<T>&);                                  \
    template VarT<T> ds<T>(const VarT<T>&, const VarT<T>&);                                   \
    template VarT<T> cyc<T>(const VarT<T>&, const VarT<T>&);                                  \
    template VarT<T> content_feat<T>(const PerceptualT<T>&, const VarT<T>&, const VarT<T>&);  \
    template VarT<T> sacl<T>(const VarT<T>&, const VarT<T>&, int);                            \
    template VarT<T> generator_objective<T>(const VarT<T>&, const VarT<T>&, const VarT<T>&,   \
                                            const VarT<T>&, const VarT<T>&, const VarT<T>&,   \
                                            const LossWeights&, T);                           \
    template VarT<T> discriminator_objective<T>(const VarT<T>&, const VarT<T>&);

MISSGAN_INSTANTIATE_LOSSES(float)
MISSGAN_INSTANTIATE_LOSSES(double)

} // namespace loss

template <typename T>
VarT<T> r1_penalty(DiscriminatorT<T>& d, const TensorT<T>& x_real,
                   const std::vector<int>& labels, T weight) {
    const int batch = x_real.dim(0);
    VarT<T> vx = VarT<T>::leaf(x_real, true);
    backward(nn::sum(d.forward(vx, labels)));
    TensorT<T> g = vx.grad();
    d.params().zero_grad();

    T u = 0;
    for (int64_t i = 0; i < g.numel(); ++i) u += g[i] * g[i];

    VarT<T> h = d.forward_jvp(x_real, g, labels);
    T per_batch = weight / T(batch);
    // constant shift halves the reported value without touching gradients
    return nn::adds(nn::scale(h, per_batch), -per_batch * u / T(2));
}

template VarT<float> r1_penalty<float>(DiscriminatorT<float>&, const TensorT<float>&,
                                       const std::vector<int>&, float);
template VarT<double> r1_penalty<double>(DiscriminatorT<double>&, const TensorT<double>&,
                                         const std::vector<int>&, double);

} // namespace missgan
