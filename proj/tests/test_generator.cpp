#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "missgan/generator.hpp"
#include "missgan/nnops.hpp"

#include "gradcheck.hpp"
#include "testutil.hpp"

#include <string>
#include <vector>

using namespace missgan;
using testutil::check_tensor_near;
using testutil::max_abs_diff;
using testutil::random_tensor;
using testutil::random_tensor_offzero;

namespace {

ModelConfig toy_cfg(GeneratorVariant v, int width = 8, int image = 32, int style = 16) {
    ModelConfig cfg;
    cfg.generator_variant = v;
    cfg.base_width = width;
    cfg.image_size = image;
    cfg.style_dim = style;
    return cfg;
}

std::vector<int> var_shape(const Var& v) { return v.value().shape(); }

void zero_params(ParamSet& ps) {
    for (const auto& name : ps.names()) {
        Var v = ps.at(name);
        v.value_mut().fill(0.0f);
    }
}

bool has_name_containing(const ParamSet& ps, const std::string& needle) {
    for (const auto& name : ps.names())
        if (name.find(needle) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_CASE("encoder taps follow the width and stride schedule") {
    Rng rng(7);
    {
        Generator g(toy_cfg(GeneratorVariant::GanillaRes, 16, 32), Rng(1));
        auto e = g.encode(Var::constant(random_tensor<float>(rng, {1, 3, 32, 32})));
        CHECK(var_shape(e.content) == std::vector<int>{1, 128, 2, 2});
        REQUIRE(e.skips.size() == 3);
        CHECK(var_shape(e.skips[0]) == std::vector<int>{1, 16, 16, 16});
        CHECK(var_shape(e.skips[1]) == std::vector<int>{1, 32, 8, 8});
        CHECK(var_shape(e.skips[2]) == std::vector<int>{1, 64, 4, 4});
    }
    {
        Generator g(toy_cfg(GeneratorVariant::GanillaPlain, 8, 128), Rng(1));
        auto e = g.encode(Var::constant(random_tensor<float>(rng, {1, 3, 128, 128})));
        CHECK(var_shape(e.content) == std::vector<int>{1, 64, 8, 8});
        REQUIRE(e.skips.size() == 3);
        CHECK(var_shape(e.skips[0]) == std::vector<int>{1, 8, 64, 64});
        CHECK(var_shape(e.skips[1]) == std::vector<int>{1, 16, 32, 32});
        CHECK(var_shape(e.skips[2]) == std::vector<int>{1, 32, 16, 16});
    }
    {
        Generator g(toy_cfg(GeneratorVariant::Stargan2, 8, 32), Rng(1));
        auto e = g.encode(Var::constant(random_tensor<float>(rng, {1, 3, 32, 32})));
        CHECK(var_shape(e.content) == std::vector<int>{1, 64, 2, 2});
        CHECK(e.skips.empty());
    }
}

TEST_CASE("forward preserves input shape for every variant") {
    Rng rng(11);
    Tensor x = random_tensor<float>(rng, {2, 3, 32, 32});
    Tensor s = random_tensor<float>(rng, {2, 16});
    for (auto v : {GeneratorVariant::Stargan2, GeneratorVariant::GanillaPlain,
                   GeneratorVariant::GanillaRes}) {
        Generator g(toy_cfg(v), Rng(3));
        Var out = g.forward(Var::constant(x), Var::constant(s));
        CHECK(var_shape(out) == std::vector<int>{2, 3, 32, 32});
        CHECK(out.value().all_finite());
    }
}

TEST_CASE("invalid inputs are rejected") {
    Generator g(toy_cfg(GeneratorVariant::GanillaRes), Rng(5));
    Rng rng(9);

    CHECK_THROWS_WITH_AS(g.encode(Var::constant(random_tensor<float>(rng, {1, 3, 100, 100}))),
                         doctest::Contains("not divisible by 16"), Error);
    try {
        g.encode(Var::constant(random_tensor<float>(rng, {1, 3, 100, 100})));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Args);
    }

    CHECK_THROWS_WITH_AS(g.encode(Var::constant(random_tensor<float>(rng, {1, 1, 32, 32}))),
                         doctest::Contains("N x 3 x H x W"), Error);

    auto e = g.encode(Var::constant(random_tensor<float>(rng, {1, 3, 32, 32})));
    CHECK_THROWS_WITH_AS(g.decode(e, Var::constant(random_tensor<float>(rng, {1, 7}))),
                         doctest::Contains("style code must be"), Error);
}

TEST_CASE("parameter initialization is deterministic in the seed") {
    ModelConfig cfg = toy_cfg(GeneratorVariant::GanillaRes);
    Generator a(cfg, Rng(21));
    Generator b(cfg, Rng(21));
    auto sa = a.params().snapshot();
    auto sb = b.params().snapshot();
    REQUIRE(sa.size() == sb.size());
    for (size_t i = 0; i < sa.size(); ++i) {
        CHECK(sa[i].first == sb[i].first);
        check_tensor_near(sa[i].second, sb[i].second, 0.0);
    }

    Rng rng(13);
    Tensor x = random_tensor<float>(rng, {1, 3, 32, 32});
    Tensor s = random_tensor<float>(rng, {1, 16});
    Var oa = a.forward(Var::constant(x), Var::constant(s));
    Var ob = b.forward(Var::constant(x), Var::constant(s));
    check_tensor_near(oa.value(), ob.value(), 0.0);

    Var oa2 = a.forward(Var::constant(x), Var::constant(s));
    check_tensor_near(oa.value(), oa2.value(), 0.0);

    Generator c(cfg, Rng(22));
    auto sc = c.params().snapshot();
    bool any_diff = false;
    for (size_t i = 0; i < sa.size() && !any_diff; ++i)
        if (max_abs_diff(sa[i].second, sc[i].second) > 0.0) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("variants expose different parameter inventories") {
    Generator res(toy_cfg(GeneratorVariant::GanillaRes), Rng(1));
    Generator plain(toy_cfg(GeneratorVariant::GanillaPlain), Rng(1));
    Generator sg(toy_cfg(GeneratorVariant::Stargan2), Rng(1));

    CHECK(res.params().has("decoder/block0/shortcut/weight"));
    CHECK(res.params().has("decoder/block2/conv2/weight"));
    CHECK(res.params().has("decoder/skip_proj0/weight"));
    CHECK(res.params().has("encoder/layer4/block0/shortcut/weight"));

    CHECK(plain.params().has("decoder/stage0/conv/weight"));
    CHECK_FALSE(has_name_containing(plain.params(), "decoder/block"));
    CHECK_FALSE(has_name_containing(plain.params(), "skip_proj"));
    CHECK(plain.params().has("encoder/layer1/block0/conv1/weight"));

    CHECK(sg.params().has("encoder/down0/conv1/weight"));
    CHECK(sg.params().has("decoder/up3/adain2/weight"));
    CHECK_FALSE(has_name_containing(sg.params(), "encoder/layer"));
    CHECK_FALSE(has_name_containing(sg.params(), "skip_proj"));

    CHECK(res.params().scalar_count() > 0);
    CHECK(res.params().scalar_count() != plain.params().scalar_count());
}

TEST_CASE("all-zero parameters emit the output bias everywhere") {
    Rng rng(31);
    Tensor x = random_tensor<float>(rng, {2, 3, 32, 32});
    Tensor s = random_tensor<float>(rng, {2, 16});

    auto run = [&](GeneratorVariant v, const std::string& bias_name) {
        Generator g(toy_cfg(v), Rng(2));
        zero_params(g.params());
        Var bias = g.params().at(bias_name);
        bias.value_mut()[0] = 0.5f;
        bias.value_mut()[1] = -0.25f;
        bias.value_mut()[2] = 1.0f;
        Tensor out = g.forward(Var::constant(x), Var::constant(s)).value();
        for (int n = 0; n < 2; ++n)
            for (int c = 0; c < 3; ++c)
                for (int i = 0; i < 32; ++i)
                    for (int j = 0; j < 32; ++j) {
                        INFO("variant ", to_string(v), " at ", n, ",", c, ",", i, ",", j);
                        REQUIRE(out.at4(n, c, i, j) == bias.value()[c]);
                    }
    };
    run(GeneratorVariant::GanillaRes, "decoder/final/conv/bias");
    run(GeneratorVariant::GanillaPlain, "decoder/final/conv/bias");
    run(GeneratorVariant::Stargan2, "decoder/to_rgb/conv/bias");
}

TEST_CASE("zeroed decoder branches reduce blocks to their shortcut paths") {
    Generator g(toy_cfg(GeneratorVariant::GanillaRes), Rng(17));
    ParamSet& ps = g.params();
    for (int i = 0; i < 3; ++i) {
        std::string base = "decoder/block" + std::to_string(i);
        for (const char* leaf : {"/conv1/weight", "/conv1/bias", "/conv2/weight", "/conv2/bias",
                                 "/adain1/weight", "/adain1/bias", "/adain2/weight",
                                 "/adain2/bias"}) {
            Var v = ps.at(base + leaf);
            v.value_mut().fill(0.0f);
        }
    }

    Rng rng(23);
    Var x = Var::constant(random_tensor<float>(rng, {1, 3, 32, 32}));
    Var s1 = Var::constant(random_tensor<float>(rng, {1, 16}));
    Var s2 = Var::constant(random_tensor<float>(rng, {1, 16}));

    auto e = g.encode(x);
    Tensor got = g.decode(e, s1).value();

    // with dead branches the style must no longer matter
    check_tensor_near(got, g.decode(e, s2).value(), 0.0);

    // and each block must act as: shortcut(upsample(h)) + skip projection
    Var h = e.content;
    for (int i = 0; i < 3; ++i) {
        std::string base = "decoder/block" + std::to_string(i);
        Var sc = nn::conv2d(nn::upsample_nearest(h, 2), ps.at(base + "/shortcut/weight"),
                            Var(), 1, 0);
        std::string proj = "decoder/skip_proj" + std::to_string(2 - i) + "/weight";
        h = nn::add(sc, nn::conv2d(e.skips[static_cast<size_t>(2 - i)], ps.at(proj), Var(), 1, 0));
    }
    Tensor want = nn::conv2d(nn::upsample_nearest(h, 2), ps.at("decoder/final/conv/weight"),
                             ps.at("decoder/final/conv/bias"), 1, 1)
                      .value();
    check_tensor_near(got, want, 0.0);
}

TEST_CASE("output responds to single style coordinates") {
    Rng rng(41);
    Tensor x = random_tensor<float>(rng, {1, 3, 32, 32});
    Tensor s = random_tensor<float>(rng, {1, 16});
    for (auto v : {GeneratorVariant::Stargan2, GeneratorVariant::GanillaPlain,
                   GeneratorVariant::GanillaRes}) {
        Generator g(toy_cfg(v), Rng(4));
        Tensor base = g.forward(Var::constant(x), Var::constant(s)).value();
        for (int j : {0, 7, 15}) {
            Tensor s2 = s;
            s2[j] += 0.5f;
            Tensor out = g.forward(Var::constant(x), Var::constant(s2)).value();
            INFO("variant ", to_string(v), " coordinate ", j);
            CHECK(max_abs_diff(base, out) > 0.0);
        }
    }
}

TEST_CASE("analytic gradients match finite differences on a toy build") {
    // a style probe shifts whole channels at once, so use a small step to
    // stay clear of relu kinks
    const double step = 1e-5;
    for (auto v : {GeneratorVariant::GanillaRes, GeneratorVariant::GanillaPlain,
                   GeneratorVariant::Stargan2}) {
        INFO("variant ", to_string(v));
        ModelConfig cfg = toy_cfg(v, 4, 16, 8);
        GeneratorT<double> g(cfg, Rng(8));

        Rng rng(19);
        TensorD x = random_tensor_offzero<double>(rng, {1, 3, 16, 16});
        TensorD s = random_tensor_offzero<double>(rng, {1, 8});
        VarD vx = VarD::constant(x);
        VarD vs = VarD::constant(s);

        if (v == GeneratorVariant::GanillaRes) {
            // full probe of image and style inputs on one variant
            gradcheck::check({x, s}, [&](const std::vector<VarD>& in) {
                return nn::sum(g.forward(in[0], in[1]));
            }, step);
        } else {
            gradcheck::check({s}, [&](const std::vector<VarD>& in) {
                return nn::sum(g.forward(vx, in[0]));
            }, step);
        }

        g.params().zero_grad();
        backward(nn::sum(g.forward(vx, vs)));
        Rng pick(5);
        gradcheck::check_param_sample(
            g.params(), [&] { return nn::sum(g.forward(vx, vs)).value()[0]; }, pick, 0.01, 60,
            step);
    }
}
