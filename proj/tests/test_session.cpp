#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "missgan/checkpoint.hpp"
#include "missgan/data.hpp"
#include "missgan/session.hpp"
#include "missgan/training.hpp"

#include "testutil.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace missgan;
using testutil::fresh_temp_dir;
namespace fs = std::filesystem;

namespace {

ModelConfig toy_cfg() {
    ModelConfig cfg;
    cfg.base_width = 4;
    cfg.image_size = 32;
    cfg.latent_dim = 4;
    cfg.style_dim = 4;
    cfg.mapping_width = 8;
    cfg.batch_size = 2;
    cfg.seed = 99;
    return cfg;
}

struct TrainedCheckpoint {
    std::string dir;
    ModelConfig cfg = toy_cfg();

    TrainedCheckpoint() {
        fs::path root = fresh_temp_dir("sessdata");
        make_synthetic_dataset(root.string(), 4, cfg.image_size, 5);
        DatasetManifest data = scan_image_folders(root.string(), default_domain_dirs(cfg));

        fs::path out = fresh_temp_dir("sessckpt");
        Trainer t(cfg);
        t.fit(data, 2, 2, out.string());
        dir = (out / checkpoint_dir_name(2)).string();
    }
};

const TrainedCheckpoint& trained() {
    static TrainedCheckpoint tc;
    return tc;
}

Tensor toy_image(int size, uint64_t seed) {
    Rng rng(seed);
    Tensor img({3, size, size});
    for (int64_t i = 0; i < img.numel(); ++i)
        img[i] = static_cast<float>(rng.uniform() * 2.0 - 1.0);
    return img;
}

bool same_values(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    for (int64_t i = 0; i < a.numel(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

} // namespace

TEST_CASE("style output names are zero padded") {
    CHECK(style_output_name("cat", 0) == "cat_style00.png");
    CHECK(style_output_name("cat", 7) == "cat_style07.png");
    CHECK(style_output_name("a_b", 12) == "a_b_style12.png");
}

TEST_CASE("score_outputs identities") {
    ModelConfig cfg = toy_cfg();
    PerceptualT<float> phi = PerceptualT<float>::from_config(cfg);
    Tensor x = toy_image(cfg.image_size, 1);

    EvalScores same = score_outputs(phi, x, {x, x});
    CHECK(same.content == doctest::Approx(0.0));
    CHECK(same.diversity == doctest::Approx(0.0));

    EvalScores single = score_outputs(phi, x, {toy_image(cfg.image_size, 2)});
    CHECK(single.diversity == 0.0f);
    CHECK(single.content > 0.0f);

    Tensor a = toy_image(cfg.image_size, 3);
    Tensor b = toy_image(cfg.image_size, 4);
    EvalScores two = score_outputs(phi, x, {a, b});
    CHECK(two.content > 0.0f);
    CHECK(two.diversity > 0.0f);
    CHECK(std::isfinite(two.content));
    CHECK(std::isfinite(two.diversity));

    CHECK(score_outputs(phi, x, {}).content == 0.0f);
}

TEST_CASE("open rejects missing and mismatched checkpoints") {
    CHECK_THROWS_WITH_AS(ModelSession::open("/nonexistent/ckpt"),
                         doctest::Contains("no manifest.json"), Error);

    const TrainedCheckpoint& tc = trained();
    fs::path tampered = fresh_temp_dir("sesstamper");
    for (const auto& ent : fs::directory_iterator(tc.dir))
        fs::copy(ent.path(), tampered / ent.path().filename());
    ModelConfig other = tc.cfg;
    other.lr_g = 5e-4f;
    {
        std::ofstream out(tampered / "config.cfg");
        out << other.serialize();
    }
    CHECK_THROWS_WITH_AS(ModelSession::open(tampered.string()),
                         doctest::Contains("does not match"), Error);
}

TEST_CASE("latent generation is seeded and shaped") {
    const TrainedCheckpoint& tc = trained();
    ModelSession s = ModelSession::open(tc.dir);
    CHECK(s.iteration() == 2);
    CHECK(s.config().hash() == tc.cfg.hash());

    Tensor x = toy_image(tc.cfg.image_size, 11);
    std::vector<Tensor> outs = s.generate_latent(x, 1, 3, 123);
    REQUIRE(outs.size() == 3);
    for (const auto& o : outs) {
        CHECK(o.shape() == x.shape());
        for (int64_t i = 0; i < o.numel(); ++i) REQUIRE(std::isfinite(o[i]));
    }
    CHECK_FALSE(same_values(outs[0], outs[1]));

    std::vector<Tensor> again = s.generate_latent(x, 1, 3, 123);
    for (size_t i = 0; i < outs.size(); ++i) CHECK(same_values(outs[i], again[i]));

    std::vector<Tensor> other_seed = s.generate_latent(x, 1, 1, 124);
    CHECK_FALSE(same_values(outs[0], other_seed[0]));

    CHECK_THROWS_AS(s.generate_latent(x, 1, 0, 1), Error);
}

TEST_CASE("ema and live weights are distinct and live matches the trainer") {
    const TrainedCheckpoint& tc = trained();
    ModelSession ema = ModelSession::open(tc.dir, true);
    ModelSession live = ModelSession::open(tc.dir, false);

    Tensor x = toy_image(tc.cfg.image_size, 21);
    Tensor from_ema = ema.generate_latent(x, 1, 1, 7)[0];
    Tensor from_live = live.generate_latent(x, 1, 1, 7)[0];
    CHECK_FALSE(same_values(from_ema, from_live));

    Trainer t(tc.cfg);
    t.load_checkpoint(tc.dir);
    Rng rng = Rng(7).fork("latent styles");
    Tensor z({1, tc.cfg.latent_dim});
    for (int64_t j = 0; j < z.numel(); ++j) z[j] = static_cast<float>(rng.normal());
    VarT<float> style = t.mapping().forward(VarT<float>::constant(z), {1});
    Tensor img({1, 3, tc.cfg.image_size, tc.cfg.image_size}, x.vec());
    Tensor direct = t.generator().forward(VarT<float>::constant(img), style).value();
    Tensor direct_chw({3, tc.cfg.image_size, tc.cfg.image_size}, direct.vec());
    CHECK(same_values(from_live, direct_chw));
}

TEST_CASE("reference generation is deterministic and shaped") {
    const TrainedCheckpoint& tc = trained();
    ModelSession s = ModelSession::open(tc.dir);

    Tensor x = toy_image(tc.cfg.image_size, 31);
    Tensor ref = toy_image(tc.cfg.image_size, 32);
    Tensor out = s.generate_reference(x, ref, 1);
    CHECK(out.shape() == x.shape());
    for (int64_t i = 0; i < out.numel(); ++i) REQUIRE(std::isfinite(out[i]));
    CHECK(same_values(out, s.generate_reference(x, ref, 1)));
    CHECK_FALSE(same_values(out, s.generate_reference(x, ref, 0)));

    Tensor bad({2, 4, 4});
    CHECK_THROWS_AS(s.generate_reference(x, bad, 1), Error);
}

TEST_CASE("eval scores are finite and nonnegative") {
    const TrainedCheckpoint& tc = trained();
    ModelSession s = ModelSession::open(tc.dir);
    Tensor x = toy_image(tc.cfg.image_size, 41);
    EvalScores scores = s.eval_scores(x, 1, 2, 99);
    CHECK(std::isfinite(scores.content));
    CHECK(std::isfinite(scores.diversity));
    CHECK(scores.content >= 0.0f);
    CHECK(scores.diversity >= 0.0f);
}
