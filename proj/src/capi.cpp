#include "missgan.h"

#include "missgan/data.hpp"
#include "missgan/session.hpp"
#include "missgan/training.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

using namespace missgan;

struct mg_config {
    ModelConfig cfg;
};

struct mg_model {
    ModelSession sess;
};

namespace {

thread_local std::string t_last_error;
thread_local mg_status t_last_status = MG_OK;

mg_status record_error(const Error& e) {
    t_last_error = e.what();
    t_last_status = static_cast<mg_status>(e.category());
    return t_last_status;
}

mg_status record_error(const std::exception& e) {
    t_last_error = e.what();
    t_last_status = MG_ERR_INTERNAL;
    return t_last_status;
}

template <typename F>
mg_status guarded(F&& f) {
    try {
        f();
        return MG_OK;
    } catch (const Error& e) {
        return record_error(e);
    } catch (const std::exception& e) {
        return record_error(e);
    } catch (...) {
        t_last_error = "unknown error";
        t_last_status = MG_ERR_INTERNAL;
        return MG_ERR_INTERNAL;
    }
}

void require(const void* p, const char* name) {
    if (!p) fail(ErrorCategory::Args, std::string("null argument: ") + name);
}

Tensor image_tensor(const float* data, int h, int w) {
    if (h <= 0 || w <= 0) fail(ErrorCategory::Args, "image dimensions must be positive");
    Tensor t({3, h, w});
    std::memcpy(t.data(), data, static_cast<size_t>(t.numel()) * sizeof(float));
    return t;
}

} // namespace

extern "C" {

const char* mg_status_name(mg_status s) {
    if (s == MG_OK) return "ok";
    return category_name(static_cast<ErrorCategory>(s));
}

const char* mg_last_error(void) { return t_last_error.c_str(); }

mg_status mg_last_status(void) { return t_last_status; }

mg_config* mg_config_create(const char* preset) {
    try {
        auto* c = new mg_config;
        if (preset) c->cfg = ModelConfig::from_preset(preset);
        return c;
    } catch (const Error& e) {
        record_error(e);
    } catch (const std::exception& e) {
        record_error(e);
    }
    return nullptr;
}

mg_config* mg_config_load(const char* path) {
    try {
        require(path, "path");
        return new mg_config{ModelConfig::parse_file(path)};
    } catch (const Error& e) {
        record_error(e);
    } catch (const std::exception& e) {
        record_error(e);
    }
    return nullptr;
}

void mg_config_free(mg_config* cfg) { delete cfg; }

mg_status mg_config_set(mg_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        require(cfg, "cfg");
        require(key, "key");
        require(value, "value");
        cfg->cfg.set(key, value);
    });
}

mg_status mg_config_get(const mg_config* cfg, const char* key, char* buf, size_t bufsize) {
    return guarded([&] {
        require(cfg, "cfg");
        require(key, "key");
        require(buf, "buf");
        if (bufsize == 0) fail(ErrorCategory::Args, "bufsize must be positive");
        std::string v = cfg->cfg.get(key);
        size_t n = std::min(v.size(), bufsize - 1);
        std::memcpy(buf, v.data(), n);
        buf[n] = '\0';
    });
}

mg_status mg_train(const mg_config* cfg, const char* data_root, int64_t iterations,
                   int64_t checkpoint_every, const char* out_dir, const char* resume_dir) {
    return guarded([&] {
        require(cfg, "cfg");
        require(data_root, "data_root");
        require(out_dir, "out_dir");
        DatasetManifest data =
            scan_image_folders(data_root, default_domain_dirs(cfg->cfg));
        Trainer trainer(cfg->cfg);
        if (resume_dir) trainer.load_checkpoint(resume_dir);
        trainer.fit(data, iterations, checkpoint_every, out_dir);
    });
}

mg_model* mg_model_open(const char* checkpoint_dir, int use_ema) {
    try {
        require(checkpoint_dir, "checkpoint_dir");
        return new mg_model{ModelSession::open(checkpoint_dir, use_ema != 0)};
    } catch (const Error& e) {
        record_error(e);
    } catch (const std::exception& e) {
        record_error(e);
    }
    return nullptr;
}

void mg_model_free(mg_model* m) { delete m; }

int64_t mg_model_iteration(const mg_model* m) { return m ? m->sess.iteration() : -1; }

int mg_model_image_size(const mg_model* m) { return m ? m->sess.config().image_size : -1; }

int mg_model_num_domains(const mg_model* m) { return m ? m->sess.config().num_domains : -1; }

mg_status mg_generate_latent(const mg_model* m, const float* image_chw, int h, int w,
                             int target_domain, int num_styles, uint64_t seed, float* out) {
    return guarded([&] {
        require(m, "m");
        require(image_chw, "image_chw");
        require(out, "out");
        std::vector<Tensor> outs = m->sess.generate_latent(
            image_tensor(image_chw, h, w), target_domain, num_styles, seed);
        for (size_t i = 0; i < outs.size(); ++i)
            std::memcpy(out + static_cast<size_t>(outs[i].numel()) * i, outs[i].data(),
                        static_cast<size_t>(outs[i].numel()) * sizeof(float));
    });
}

mg_status mg_generate_reference(const mg_model* m, const float* image_chw, int h, int w,
                                const float* reference_chw, int target_domain, float* out) {
    return guarded([&] {
        require(m, "m");
        require(image_chw, "image_chw");
        require(reference_chw, "reference_chw");
        require(out, "out");
        int size = m->sess.config().image_size;
        Tensor res = m->sess.generate_reference(image_tensor(image_chw, h, w),
                                                image_tensor(reference_chw, size, size),
                                                target_domain);
        std::memcpy(out, res.data(), static_cast<size_t>(res.numel()) * sizeof(float));
    });
}

mg_status mg_eval(mg_model* m, const float* image_chw, int h, int w, int target_domain,
                  int num_styles, uint64_t seed, float* content, float* diversity) {
    return guarded([&] {
        require(m, "m");
        require(image_chw, "image_chw");
        require(content, "content");
        require(diversity, "diversity");
        EvalScores scores = m->sess.eval_scores(image_tensor(image_chw, h, w),
                                                target_domain, num_styles, seed);
        *content = scores.content;
        *diversity = scores.diversity;
    });
}

mg_status mg_image_load(const char* path, int resize_to, float** out_chw, int* out_h,
                        int* out_w) {
    return guarded([&] {
        require(path, "path");
        require(out_chw, "out_chw");
        require(out_h, "out_h");
        require(out_w, "out_w");
        if (resize_to < 0) fail(ErrorCategory::Args, "resize_to must be nonnegative");
        Tensor img = resize_to > 0 ? decode_image_chw(path, resize_to)
                                   : decode_image_chw(path);
        auto* buf = static_cast<float*>(std::malloc(static_cast<size_t>(img.numel()) *
                                                    sizeof(float)));
        if (!buf) fail(ErrorCategory::Internal, "out of memory");
        std::memcpy(buf, img.data(), static_cast<size_t>(img.numel()) * sizeof(float));
        *out_chw = buf;
        *out_h = img.dim(1);
        *out_w = img.dim(2);
    });
}

void mg_image_free(float* chw) { std::free(chw); }

mg_status mg_image_save(const char* path, const float* chw, int h, int w) {
    return guarded([&] {
        require(path, "path");
        require(chw, "chw");
        save_image_chw(path, image_tensor(chw, h, w));
    });
}

} // extern "C"
