#include "missgan/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>

namespace fs = std::filesystem;

namespace missgan {

float ds_weight_at(int64_t iteration, float initial, int decay_iters) {
    if (decay_iters <= 0) return initial;
    double frac = 1.0 - static_cast<double>(iteration) / static_cast<double>(decay_iters);
    return initial * static_cast<float>(std::max(0.0, frac));
}

AdamOpt::AdamOpt(const ParamSet& ps, float lr, const ModelConfig& cfg)
    : lr_(lr), beta1_(cfg.adam_beta1), beta2_(cfg.adam_beta2), wd_(cfg.weight_decay) {
    for (const auto& name : ps.names()) {
        const auto& shape = ps.at(name).value().shape();
        m_.emplace_back(name, Tensor::zeros(shape));
        v_.emplace_back(name, Tensor::zeros(shape));
    }
}

void AdamOpt::step(ParamSet& ps) {
    ++t_;
    float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
    float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
    for (size_t p = 0; p < m_.size(); ++p) {
        VarT<float> var = ps.at(m_[p].first);
        Tensor& val = var.value_mut();
        const Tensor& grad = var.grad();
        bool has_grad = !grad.empty();
        Tensor& m = m_[p].second;
        Tensor& v = v_[p].second;
        for (int64_t i = 0; i < val.numel(); ++i) {
            float g = (has_grad ? grad[i] : 0.0f) + wd_ * val[i];
            m[i] = beta1_ * m[i] + (1.0f - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0f - beta2_) * g * g;
            float mhat = m[i] / bc1;
            float vhat = v[i] / bc2;
            val[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void AdamOpt::append_state(const std::string& prefix, NamedTensors& out) const {
    for (const auto& [name, t] : m_) out.emplace_back(prefix + "/" + name + "/m", t);
    for (const auto& [name, t] : v_) out.emplace_back(prefix + "/" + name + "/v", t);
}

void AdamOpt::load_state(const std::string& prefix,
                         const std::map<std::string, Tensor>& blob) {
    auto take = [&](const std::string& key, Tensor& dst) {
        auto it = blob.find(key);
        if (it == blob.end())
            fail(ErrorCategory::Checkpoint, "optimizer state missing tensor " + key);
        if (!dst.same_shape(it->second))
            fail(ErrorCategory::Checkpoint, "optimizer tensor " + key + " has the wrong shape");
        dst = it->second;
    };
    for (auto& [name, t] : m_) take(prefix + "/" + name + "/m", t);
    for (auto& [name, t] : v_) take(prefix + "/" + name + "/v", t);
}

Trainer::Trainer(const ModelConfig& cfg)
    : cfg_(cfg), g_(cfg, Rng(cfg.seed).fork("generator")),
      f_(cfg, Rng(cfg.seed).fork("mapping")), e_(cfg, Rng(cfg.seed).fork("style_encoder")),
      d_(cfg, Rng(cfg.seed).fork("discriminator")), ema_g_(cfg, Rng(cfg.seed).fork("ema")),
      ema_f_(cfg, Rng(cfg.seed).fork("ema")), ema_e_(cfg, Rng(cfg.seed).fork("ema")),
      phi_(PerceptualT<float>::from_config(cfg)),
      opt_g_(g_.params(), cfg.lr_g, cfg), opt_f_(f_.params(), cfg.lr_f, cfg),
      opt_e_(e_.params(), cfg.lr_e, cfg), opt_d_(d_.params(), cfg.lr_d, cfg),
      data_rng_(Rng(cfg.seed).fork("data")) {
    cfg_.validate();
    ema_g_.params().copy_values_from(g_.params());
    ema_f_.params().copy_values_from(f_.params());
    ema_e_.params().copy_values_from(e_.params());
}

float Trainer::current_ds_weight() const {
    return ds_weight_at(iteration_, cfg_.loss.lambda_ds, cfg_.ds_decay_iters);
}

LossReport Trainer::step_discriminator(const Batch& batch, bool latent_styles) {
    g_.params().zero_grad();
    f_.params().zero_grad();
    e_.params().zero_grad();
    d_.params().zero_grad();

    VarT<float> r1 = cfg_.loss.r1_gamma > 0.0f
                         ? r1_penalty(d_, batch.x, batch.y_org, cfg_.loss.r1_gamma)
                         : VarT<float>::constant(Tensor::scalar(0.0f));

    VarT<float> s = latent_styles
                        ? f_.forward(VarT<float>::constant(batch.z), batch.y_trg)
                        : e_.forward(VarT<float>::constant(batch.x_ref), batch.y_trg);
    VarT<float> fake = g_.forward(VarT<float>::constant(batch.x), s).detach();

    VarT<float> adv =
        loss::adv_d(d_.forward(VarT<float>::constant(batch.x), batch.y_org),
                    d_.forward(fake, batch.y_trg));
    VarT<float> total = loss::discriminator_objective(adv, r1);
    backward(total);
    opt_d_.step(d_.params());

    LossReport rep;
    rep.adv_d = adv.value()[0];
    rep.r1 = r1.value()[0];
    rep.total_d = total.value()[0];
    return rep;
}

LossReport Trainer::step_generator(const Batch& batch, bool latent_styles) {
    g_.params().zero_grad();
    f_.params().zero_grad();
    e_.params().zero_grad();
    d_.params().zero_grad();

    VarT<float> x = VarT<float>::constant(batch.x);
    VarT<float> s1, s2;
    if (latent_styles) {
        s1 = f_.forward(VarT<float>::constant(batch.z), batch.y_trg);
        s2 = f_.forward(VarT<float>::constant(batch.z2), batch.y_trg);
    } else {
        s1 = e_.forward(VarT<float>::constant(batch.x_ref), batch.y_trg);
        s2 = e_.forward(VarT<float>::constant(batch.x_ref2), batch.y_trg);
    }

    EncodedT<float> enc = g_.encode(x);
    VarT<float> fake = g_.decode(enc, s1);
    VarT<float> adv = loss::adv_g(d_.forward(fake, batch.y_trg));
    VarT<float> sty = loss::sty(s1, e_.forward(fake, batch.y_trg));
    VarT<float> fake2 = g_.decode(enc, s2).detach();
    VarT<float> ds = loss::ds(fake, fake2);
    VarT<float> s_org = e_.forward(x, batch.y_org);
    VarT<float> rec = g_.forward(fake, s_org);
    VarT<float> cyc = loss::cyc(x, rec);
    VarT<float> feat = cfg_.loss.lambda_feat > 0.0f
                           ? loss::content_feat(phi_, x, fake)
                           : VarT<float>::constant(Tensor::scalar(0.0f));
    VarT<float> sacl = cfg_.loss.lambda_sacl > 0.0f
                           ? loss::sacl(enc.content, g_.encode(fake).content,
                                        cfg_.num_domains)
                           : VarT<float>::constant(Tensor::scalar(0.0f));

    VarT<float> total = loss::generator_objective(adv, sty, ds, cyc, feat, sacl, cfg_.loss,
                                                  current_ds_weight());
    backward(total);
    opt_g_.step(g_.params());
    if (latent_styles) {
        opt_f_.step(f_.params());
        opt_e_.step(e_.params());
    }

    LossReport rep;
    rep.adv_g = adv.value()[0];
    rep.sty = sty.value()[0];
    rep.ds = ds.value()[0];
    rep.cyc = cyc.value()[0];
    rep.feat = feat.value()[0];
    rep.sacl = sacl.value()[0];
    rep.total_g = total.value()[0];
    return rep;
}

void Trainer::update_ema() {
    ema_g_.params().ema_update_from(g_.params(), cfg_.ema_decay);
    ema_f_.params().ema_update_from(f_.params(), cfg_.ema_decay);
    ema_e_.params().ema_update_from(e_.params(), cfg_.ema_decay);
}

LossReport Trainer::train_step(const Batch& batch) {
    try {
        LossReport d_latent = step_discriminator(batch, true);
        LossReport d_ref = step_discriminator(batch, false);
        LossReport g_latent = step_generator(batch, true);
        LossReport g_ref = step_generator(batch, false);
        update_ema();
        ++iteration_;

        LossReport rep = g_latent;
        rep.adv_d = d_latent.adv_d;
        rep.r1 = d_latent.r1;
        rep.total_d = d_latent.total_d;
        if (!rep.all_finite() || !d_ref.all_finite() || !g_ref.all_finite())
            fail(ErrorCategory::Numeric, "non-finite loss, latent-round report: " +
                                             rep.csv_row());
        return rep;
    } catch (const Error& e) {
        if (e.category() == ErrorCategory::Numeric)
            fail(ErrorCategory::Numeric,
                 "aborting at iteration " + std::to_string(iteration_) + ": " + e.what());
        throw;
    }
}

Batch Trainer::make_batch(const DatasetManifest& data, int64_t k) const {
    Rng r = data_rng_.fork("batch " + std::to_string(k));
    BatchPlan plan = plan_training_batch(data, cfg_.batch_size, cfg_.latent_dim, r);
    return realize_training_batch(data, plan, cfg_.image_size);
}

void Trainer::fit(const DatasetManifest& data, int64_t total_iters, int64_t checkpoint_every,
                  const std::string& out_dir) {
    if (data.records.empty()) fail(ErrorCategory::Data, "dataset is empty");
    if (checkpoint_every <= 0) fail(ErrorCategory::Args, "checkpoint_every must be positive");
    fs::create_directories(out_dir);

    std::string log_path = (fs::path(out_dir) / "train_log.csv").string();
    bool fresh_log = !fs::exists(log_path) || fs::file_size(log_path) == 0;
    std::ofstream log(log_path, std::ios::app);
    if (!log) fail(ErrorCategory::Io, "cannot open training log: " + log_path);
    if (fresh_log) log << "iteration," << LossReport::csv_header() << '\n';

    bool prefetch = !cfg_.single_threaded_pipeline;
    std::future<Batch> pending;
    if (prefetch && iteration_ < total_iters)
        pending = std::async(std::launch::async,
                             [this, &data](int64_t k) { return make_batch(data, k); },
                             iteration_);

    while (iteration_ < total_iters) {
        Batch batch = prefetch ? pending.get() : make_batch(data, iteration_);
        if (prefetch && iteration_ + 1 < total_iters)
            pending = std::async(std::launch::async,
                                 [this, &data](int64_t k) { return make_batch(data, k); },
                                 iteration_ + 1);

        LossReport rep = train_step(batch);
        log << (iteration_ - 1) << ',' << rep.csv_row() << '\n';
        log.flush();

        if (iteration_ % checkpoint_every == 0 || iteration_ == total_iters)
            save_checkpoint((fs::path(out_dir) / checkpoint_dir_name(iteration_)).string());
    }
}

void Trainer::save_checkpoint(const std::string& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCategory::Io, "cannot create checkpoint dir " + dir + ": " + ec.message());

    CheckpointManifest man;
    man.iteration = iteration_;
    man.config_hash = std::to_string(cfg_.hash());
    man.rng_state = data_rng_.serialize();
    man.optim_steps = {{"g", opt_g_.steps()},
                       {"f", opt_f_.steps()},
                       {"e", opt_e_.steps()},
                       {"d", opt_d_.steps()}};

    auto dump = [&](const std::string& file, const NamedTensors& tensors) {
        write_tensor_blob((fs::path(dir) / file).string(), tensors);
        std::vector<std::string> names;
        for (const auto& [name, t] : tensors) names.push_back(name);
        man.tensor_index[file] = std::move(names);
    };
    dump("generator.mgt", g_.params().snapshot());
    dump("mapping.mgt", f_.params().snapshot());
    dump("style_encoder.mgt", e_.params().snapshot());
    dump("discriminator.mgt", d_.params().snapshot());
    dump("generator_ema.mgt", ema_g_.params().snapshot());
    dump("mapping_ema.mgt", ema_f_.params().snapshot());
    dump("style_encoder_ema.mgt", ema_e_.params().snapshot());

    NamedTensors optim;
    opt_g_.append_state("g", optim);
    opt_f_.append_state("f", optim);
    opt_e_.append_state("e", optim);
    opt_d_.append_state("d", optim);
    dump("optim.mgt", optim);

    std::ofstream cfg_out((fs::path(dir) / "config.cfg").string());
    if (!cfg_out) fail(ErrorCategory::Io, "cannot write config into " + dir);
    cfg_out << cfg_.serialize();
    cfg_out.flush();
    if (!cfg_out) fail(ErrorCategory::Io, "cannot write config into " + dir);

    write_manifest((fs::path(dir) / "manifest.json").string(), man);
}

void Trainer::load_checkpoint(const std::string& dir) {
    CheckpointManifest man = read_manifest((fs::path(dir) / "manifest.json").string());
    if (man.config_hash != std::to_string(cfg_.hash()))
        fail(ErrorCategory::Checkpoint,
             "config hash mismatch: checkpoint has " + man.config_hash + ", this run has " +
                 std::to_string(cfg_.hash()) + "; resume requires the identical configuration");

    iteration_ = man.iteration;
    data_rng_.deserialize(man.rng_state);

    g_.params().load(read_tensor_blob((fs::path(dir) / "generator.mgt").string()));
    f_.params().load(read_tensor_blob((fs::path(dir) / "mapping.mgt").string()));
    e_.params().load(read_tensor_blob((fs::path(dir) / "style_encoder.mgt").string()));
    d_.params().load(read_tensor_blob((fs::path(dir) / "discriminator.mgt").string()));
    ema_g_.params().load(read_tensor_blob((fs::path(dir) / "generator_ema.mgt").string()));
    ema_f_.params().load(read_tensor_blob((fs::path(dir) / "mapping_ema.mgt").string()));
    ema_e_.params().load(
        read_tensor_blob((fs::path(dir) / "style_encoder_ema.mgt").string()));

    auto optim = read_tensor_blob((fs::path(dir) / "optim.mgt").string());
    opt_g_.load_state("g", optim);
    opt_f_.load_state("f", optim);
    opt_e_.load_state("e", optim);
    opt_d_.load_state("d", optim);
    auto opt_steps = [&](const char* key) {
        auto it = man.optim_steps.find(key);
        if (it == man.optim_steps.end())
            fail(ErrorCategory::Checkpoint,
                 std::string("manifest missing optimizer step count for ") + key);
        return it->second;
    };
    opt_g_.set_steps(opt_steps("g"));
    opt_f_.set_steps(opt_steps("f"));
    opt_e_.set_steps(opt_steps("e"));
    opt_d_.set_steps(opt_steps("d"));
}

} // namespace missgan
