#include "wmlab/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "wmlab/checkpoint.hpp"
#include "wmlab/errors.hpp"
#include "wmlab/metrics.hpp"

namespace wmlab {

using nn::Tensor;

DiffusionSchedule DiffusionSchedule::linear(int T, double beta_start,
                                            double beta_end) {
  if (T < 2) throw std::invalid_argument("DiffusionSchedule: T < 2");
  DiffusionSchedule s;
  s.T = T;
  s.betas.resize(T);
  s.alpha_bars.resize(T);
  double prod = 1.0;
  for (int t = 0; t < T; ++t) {
    s.betas[t] = beta_start + (beta_end - beta_start) * t / (T - 1);
    prod *= 1.0 - s.betas[t];
    s.alpha_bars[t] = prod;
  }
  s.validate();
  return s;
}

double DiffusionSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  return alpha_bars[t - 1];
}

void DiffusionSchedule::validate() const {
  if (static_cast<int>(betas.size()) != T ||
      static_cast<int>(alpha_bars.size()) != T)
    throw std::invalid_argument("DiffusionSchedule: array sizes disagree with T");
  for (int t = 0; t < T; ++t) {
    if (!(betas[t] > 0.0 && betas[t] < 1.0))
      throw std::invalid_argument("DiffusionSchedule: beta out of (0,1)");
    if (t > 0 && betas[t] <= betas[t - 1])
      throw std::invalid_argument("DiffusionSchedule: betas must increase");
    if (t > 0 && alpha_bars[t] >= alpha_bars[t - 1])
      throw std::invalid_argument("DiffusionSchedule: alpha_bar must decrease");
  }
  if (alpha_bars[T - 1] >= 0.01)
    throw std::invalid_argument("DiffusionSchedule: alpha_bar_T must be < 0.01");
}

DiffusionModel::DiffusionModel(DiffusionSchedule schedule,
                               DiffusionModelConfig config,
                               std::uint64_t init_seed)
    : schedule_(std::move(schedule)), config_(config), training_seed_(init_seed) {
  schedule_.validate();
  const int c = config_.base_channels;
  const int td = config_.time_embed_dim;
  temb_ = nn::LinearLayer(td, td);
  tproj_in_ = nn::LinearLayer(td, c);
  tproj_down_ = nn::LinearLayer(td, 2 * c);
  tproj_mid_ = nn::LinearLayer(td, 2 * c);
  conv_in_ = nn::ConvLayer(1, c, 3, 1);
  conv_down_ = nn::ConvLayer(c, 2 * c, 3, 2);
  conv_mid_ = nn::ConvLayer(2 * c, 2 * c, 3, 1);
  conv_up_ = nn::ConvLayer(2 * c, c, 3, 1);
  conv_out_ = nn::ConvLayer(c, 1, 3, 1);

  Rng rng(derive_seed(init_seed, "ddpm-init"));
  temb_.init(rng);
  tproj_in_.init(rng);
  tproj_down_.init(rng);
  tproj_mid_.init(rng);
  for (nn::ConvLayer* l :
       {&conv_in_, &conv_down_, &conv_mid_, &conv_up_, &conv_out_})
    l->init(rng);
}

Tensor DiffusionModel::encode_image(const ImageGrid& image) const {
  if (image.channels != 1)
    throw std::invalid_argument("diffusion model expects grayscale images");
  Tensor t(1, image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      t.at(0, y, x) = (image.at(y, x) - data_mean_[0]) / data_std_[0];
  return t;
}

ImageGrid DiffusionModel::decode_latent(const Tensor& latent) const {
  ImageGrid img(latent.h, latent.w, 1);
  for (int y = 0; y < latent.h; ++y)
    for (int x = 0; x < latent.w; ++x)
      img.at(y, x) = std::clamp(
          latent.at(0, y, x) * data_std_[0] + data_mean_[0], 0.0, 1.0);
  return img;
}

Tensor DiffusionModel::add_noise(const ImageGrid& image, int t,
                                 std::uint64_t noise_seed) const {
  if (t < 0 || t > schedule_.T)
    throw std::invalid_argument("add_noise: t outside [0, T]");
  Tensor x0 = encode_image(image);
  if (t == 0) return x0;
  const double ab = schedule_.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  Rng rng(derive_seed(noise_seed, "forward-noise", static_cast<std::uint64_t>(t)));
  for (double& v : x0.v) v = signal * v + noise * rng.gaussian();
  return x0;
}

namespace {

struct DenoiserCache {
  std::vector<double> emb_raw, emb_pre, emb, tin, tdown, tmid;
  Tensor x, a_in, b_in, r_in;
  Tensor a_down, b_down, r_down;
  Tensor a_mid, b_mid, r_mid;
  Tensor up, a_up, s_up, r_up;
  Tensor out;
};

}  // namespace

// Shared forward used by inference and training; cache always filled.
static void denoiser_forward(const DiffusionModel& m, const nn::LinearLayer& temb,
                             const nn::LinearLayer& tproj_in,
                             const nn::LinearLayer& tproj_down,
                             const nn::LinearLayer& tproj_mid,
                             const nn::ConvLayer& conv_in,
                             const nn::ConvLayer& conv_down,
                             const nn::ConvLayer& conv_mid,
                             const nn::ConvLayer& conv_up,
                             const nn::ConvLayer& conv_out, const Tensor& x,
                             int t, DenoiserCache& c) {
  c.x = x;
  c.emb_raw = nn::sinusoidal_embedding(
      static_cast<double>(t) / m.schedule().T, m.config().time_embed_dim);
  c.emb_pre = temb.forward(c.emb_raw);
  c.emb = c.emb_pre;
  for (double& v : c.emb) v = std::tanh(v);
  c.tin = tproj_in.forward(c.emb);
  c.tdown = tproj_down.forward(c.emb);
  c.tmid = tproj_mid.forward(c.emb);

  c.a_in = conv_in.forward(x);
  c.b_in = nn::add_channel_bias(c.a_in, c.tin);
  c.r_in = nn::relu(c.b_in);

  c.a_down = conv_down.forward(c.r_in);
  c.b_down = nn::add_channel_bias(c.a_down, c.tdown);
  c.r_down = nn::relu(c.b_down);

  c.a_mid = conv_mid.forward(c.r_down);
  c.b_mid = nn::add_channel_bias(c.a_mid, c.tmid);
  c.r_mid = nn::relu(c.b_mid);

  c.up = nn::upsample_nearest_2x(c.r_mid);
  c.a_up = conv_up.forward(c.up);
  c.s_up = c.a_up;
  for (std::size_t i = 0; i < c.s_up.v.size(); ++i) c.s_up.v[i] += c.r_in.v[i];
  c.r_up = nn::relu(c.s_up);

  c.out = conv_out.forward(c.r_up);
}

Tensor DiffusionModel::predict_noise(const Tensor& x, int t) const {
  DenoiserCache c;
  denoiser_forward(*this, temb_, tproj_in_, tproj_down_, tproj_mid_, conv_in_,
                   conv_down_, conv_mid_, conv_up_, conv_out_, x, t, c);
  return c.out;
}

ImageGrid DiffusionModel::denoise_from(const Tensor& x_t, int t,
                                       int step_count) const {
  return decode_latent(denoise_latent(x_t, t, step_count));
}

nn::Tensor DiffusionModel::denoise_latent(const Tensor& x_t, int t,
                                          int step_count) const {
  if (t < 0 || t > schedule_.T)
    throw std::invalid_argument("denoise_from: t outside [0, T]");
  if (t == 0) return x_t;
  if (step_count <= 0 || step_count > t)
    throw std::invalid_argument("denoise_from: need 1 <= step_count <= t");

  // Evenly re-spaced sub-schedule from t down to 0.
  std::vector<int> taus;
  taus.reserve(step_count + 1);
  for (int i = 0; i <= step_count; ++i) {
    const int tau = static_cast<int>(
        std::llround(static_cast<double>(t) * (step_count - i) / step_count));
    if (taus.empty() || tau < taus.back()) taus.push_back(tau);
  }

  Tensor y = x_t;
  for (std::size_t i = 0; i + 1 < taus.size(); ++i) {
    const int cur = taus[i];
    const int nxt = taus[i + 1];
    const Tensor eps = predict_noise(y, cur);
    const double ab_cur = schedule_.alpha_bar(cur);
    const double ab_nxt = schedule_.alpha_bar(nxt);
    const double sig_cur = std::sqrt(ab_cur);
    const double noi_cur = std::sqrt(1.0 - ab_cur);
    const double sig_nxt = std::sqrt(ab_nxt);
    const double noi_nxt = std::sqrt(1.0 - ab_nxt);
    for (std::size_t j = 0; j < y.v.size(); ++j) {
      // Clamping the denoised estimate to the valid normalized range keeps
      // the small model stable at high noise levels.
      const double x0_hat =
          std::clamp((y.v[j] - noi_cur * eps.v[j]) / sig_cur, -1.0, 1.0);
      y.v[j] = sig_nxt * x0_hat + noi_nxt * eps.v[j];
    }
  }
  return y;
}

ImageGrid DiffusionModel::regenerate(const ImageGrid& image, double strength,
                                     std::uint64_t seed, int step_count) const {
  if (strength < 0.0 || strength > 1.0)
    throw std::invalid_argument("regenerate: strength outside [0,1]");
  if (strength == 0.0) return image;
  const int t = static_cast<int>(std::llround(strength * schedule_.T));
  if (t == 0) return image;
  if (step_count <= 0) step_count = config_.sample_steps;
  step_count = std::min(step_count, t);
  return denoise_from(add_noise(image, t, seed), t, step_count);
}

std::vector<std::vector<double>*> DiffusionModel::param_values() {
  return {&temb_.w,      &temb_.b,      &tproj_in_.w,  &tproj_in_.b,
          &tproj_down_.w, &tproj_down_.b, &tproj_mid_.w, &tproj_mid_.b,
          &conv_in_.w,   &conv_in_.b,   &conv_down_.w, &conv_down_.b,
          &conv_mid_.w,  &conv_mid_.b,  &conv_up_.w,   &conv_up_.b,
          &conv_out_.w,  &conv_out_.b};
}

std::vector<std::string> DiffusionModel::param_names() const {
  return {"temb.w", "temb.b", "tproj_in.w", "tproj_in.b", "tproj_down.w",
          "tproj_down.b", "tproj_mid.w", "tproj_mid.b", "conv_in.w",
          "conv_in.b", "conv_down.w", "conv_down.b", "conv_mid.w",
          "conv_mid.b", "conv_up.w", "conv_up.b", "conv_out.w", "conv_out.b"};
}

std::vector<nn::ParamRef> DiffusionModel::params_with(
    std::vector<std::vector<double>>& grads) {
  const auto values = param_values();
  if (grads.size() != values.size()) {
    grads.clear();
    for (auto* v : values) grads.emplace_back(v->size(), 0.0);
  }
  std::vector<nn::ParamRef> refs;
  for (std::size_t i = 0; i < values.size(); ++i)
    refs.push_back({values[i], &grads[i]});
  return refs;
}

void DiffusionModel::save(const std::string& path) const {
  nlohmann::json meta;
  meta["kind"] = "diffusion_model";
  meta["training_seed"] = training_seed_;
  meta["trained"] = trained_;
  meta["data_mean"] = data_mean_;
  meta["data_std"] = data_std_;
  meta["schedule"] = {{"T", schedule_.T},
                      {"beta_start", schedule_.betas.front()},
                      {"beta_end", schedule_.betas.back()}};
  meta["config"] = {{"base_channels", config_.base_channels},
                    {"time_embed_dim", config_.time_embed_dim},
                    {"training_steps", config_.training_steps},
                    {"batch_size", config_.batch_size},
                    {"learning_rate", config_.learning_rate},
                    {"sample_steps", config_.sample_steps},
                    {"gate_strength", config_.gate_strength},
                    {"gate_psnr_db", config_.gate_psnr_db},
                    {"gate_images", config_.gate_images}};
  Checkpoint ckpt;
  ckpt.meta_json = meta.dump(2);
  // Schedule constants travel with the parameters.
  ckpt.add_array("schedule.betas", {schedule_.T}, schedule_.betas);
  auto* self = const_cast<DiffusionModel*>(this);
  const auto values = self->param_values();
  const auto names = param_names();
  for (std::size_t i = 0; i < values.size(); ++i)
    ckpt.add_array(names[i], {static_cast<int>(values[i]->size())}, *values[i]);
  ckpt.save(path);
}

DiffusionModel DiffusionModel::load(const std::string& path) {
  const Checkpoint ckpt = Checkpoint::load(path);
  const nlohmann::json meta = nlohmann::json::parse(ckpt.meta_json);
  if (meta.value("kind", "") != "diffusion_model")
    throw IoError("not a diffusion checkpoint: " + path);

  DiffusionSchedule schedule;
  schedule.T = meta.at("schedule").at("T");
  schedule.betas = ckpt.array("schedule.betas");
  schedule.alpha_bars.resize(schedule.T);
  double prod = 1.0;
  for (int t = 0; t < schedule.T; ++t) {
    prod *= 1.0 - schedule.betas[t];
    schedule.alpha_bars[t] = prod;
  }

  const auto& c = meta.at("config");
  DiffusionModelConfig config;
  config.base_channels = c.at("base_channels");
  config.time_embed_dim = c.at("time_embed_dim");
  config.training_steps = c.at("training_steps");
  config.batch_size = c.at("batch_size");
  config.learning_rate = c.at("learning_rate");
  config.sample_steps = c.at("sample_steps");
  config.gate_strength = c.at("gate_strength");
  config.gate_psnr_db = c.at("gate_psnr_db");
  config.gate_images = c.at("gate_images");

  DiffusionModel model(schedule, config,
                       meta.at("training_seed").get<std::uint64_t>());
  model.trained_ = meta.value("trained", false);
  model.data_mean_ = meta.at("data_mean").get<std::vector<double>>();
  model.data_std_ = meta.at("data_std").get<std::vector<double>>();
  const auto values = model.param_values();
  const auto names = model.param_names();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& data = ckpt.array(names[i]);
    if (data.size() != values[i]->size())
      throw IoError("checkpoint parameter size mismatch: " + names[i]);
    *values[i] = data;
  }
  return model;
}

// ----------------------------------------------------------- training ----

struct DiffusionTrainer {
  struct ExampleGrads {
    std::vector<std::vector<double>> g;
    double loss = 0.0;
  };

  static ExampleGrads backprop_example(DiffusionModel& m, const ImageGrid& image,
                                       std::uint64_t rng_seed) {
    ExampleGrads out;
    for (auto* v : m.param_values()) out.g.emplace_back(v->size(), 0.0);
    Rng rng(rng_seed);

    const int t = 1 + static_cast<int>(rng.uniform_index(m.schedule_.T));
    Tensor x0 = m.encode_image(image);
    Tensor eps(x0.c, x0.h, x0.w);
    for (double& v : eps.v) v = rng.gaussian();
    const double ab = m.schedule_.alpha_bar(t);
    Tensor xt = x0;
    for (std::size_t i = 0; i < xt.v.size(); ++i)
      xt.v[i] = std::sqrt(ab) * xt.v[i] + std::sqrt(1.0 - ab) * eps.v[i];

    DenoiserCache c;
    denoiser_forward(m, m.temb_, m.tproj_in_, m.tproj_down_, m.tproj_mid_,
                     m.conv_in_, m.conv_down_, m.conv_mid_, m.conv_up_,
                     m.conv_out_, xt, t, c);

    // Mean squared epsilon-prediction error.
    const double inv_n = 1.0 / static_cast<double>(c.out.v.size());
    Tensor dout(c.out.c, c.out.h, c.out.w);
    for (std::size_t i = 0; i < c.out.v.size(); ++i) {
      const double diff = c.out.v[i] - eps.v[i];
      out.loss += diff * diff * inv_n;
      dout.v[i] = 2.0 * diff * inv_n;
    }

    // Backward through the network. Parameter order must match
    // param_values(): temb, tproj_in, tproj_down, tproj_mid, conv_in,
    // conv_down, conv_mid, conv_up, conv_out.
    Tensor dr_up = m.conv_out_.backward(c.r_up, dout, out.g[16], out.g[17]);
    Tensor ds_up = nn::relu_backward(c.s_up, dr_up);
    // Skip connection: gradient flows both into conv_up and into r_in.
    Tensor dskip = ds_up;
    Tensor dup = m.conv_up_.backward(c.up, ds_up, out.g[14], out.g[15]);
    Tensor dr_mid = nn::upsample_nearest_2x_backward(dup);
    Tensor db_mid = nn::relu_backward(c.b_mid, dr_mid);
    std::vector<double> dtmid = nn::channel_bias_grad(db_mid);
    Tensor dr_down = m.conv_mid_.backward(c.r_down, db_mid, out.g[12], out.g[13]);
    Tensor db_down = nn::relu_backward(c.b_down, dr_down);
    std::vector<double> dtdown = nn::channel_bias_grad(db_down);
    Tensor dr_in = m.conv_down_.backward(c.r_in, db_down, out.g[10], out.g[11]);
    for (std::size_t i = 0; i < dr_in.v.size(); ++i) dr_in.v[i] += dskip.v[i];
    Tensor db_in = nn::relu_backward(c.b_in, dr_in);
    std::vector<double> dtin = nn::channel_bias_grad(db_in);
    m.conv_in_.backward(c.x, db_in, out.g[8], out.g[9]);

    // Time-embedding path.
    std::vector<double> demb(c.emb.size(), 0.0);
    {
      std::vector<double> d =
          m.tproj_mid_.backward(c.emb, dtmid, out.g[6], out.g[7]);
      for (std::size_t i = 0; i < demb.size(); ++i) demb[i] += d[i];
      d = m.tproj_down_.backward(c.emb, dtdown, out.g[4], out.g[5]);
      for (std::size_t i = 0; i < demb.size(); ++i) demb[i] += d[i];
      d = m.tproj_in_.backward(c.emb, dtin, out.g[2], out.g[3]);
      for (std::size_t i = 0; i < demb.size(); ++i) demb[i] += d[i];
    }
    for (std::size_t i = 0; i < demb.size(); ++i) {
      const double th = std::tanh(c.emb_pre[i]);
      demb[i] *= 1.0 - th * th;
    }
    m.temb_.backward(c.emb_raw, demb, out.g[0], out.g[1]);
    return out;
  }

  static void run(DiffusionModel& m, const Corpus& corpus, std::uint64_t seed) {
    if (corpus.train_indices.empty())
      throw CorpusError("train_ddpm: empty train split");
    std::vector<std::vector<double>> main_grads;
    const std::vector<nn::ParamRef> params = m.params_with(main_grads);
    nn::Adam opt;
    opt.lr = m.config_.learning_rate;

    const int batch = m.config_.batch_size;
    for (int step = 0; step < m.config_.training_steps; ++step) {
      std::vector<ExampleGrads> slots(batch);
      nn::parallel_for(batch, 2, [&](int i) {
        Rng pick(derive_seed(seed, "ddpm-batch", step, i));
        const int img_idx = corpus.train_indices[pick.uniform_index(
            corpus.train_indices.size())];
        slots[i] = backprop_example(m, corpus.images[img_idx],
                                    derive_seed(seed, "ddpm-example", step, i));
      });
      for (auto& g : main_grads) std::fill(g.begin(), g.end(), 0.0);
      for (const auto& slot : slots)
        for (std::size_t p = 0; p < main_grads.size(); ++p)
          for (std::size_t j = 0; j < main_grads[p].size(); ++j)
            main_grads[p][j] += slot.g[p][j] / batch;
      opt.step(params);
    }
    m.trained_ = true;
  }
};

DiffusionModel train_ddpm(const Corpus& corpus, const DiffusionSchedule& schedule,
                          const DiffusionModelConfig& config,
                          std::uint64_t seed) {
  DiffusionModel model(schedule, config, seed);
  DiffusionTrainer::run(model, corpus, seed);

  // Quality gate: the model must be a competent reconstructor.
  const auto& idx = corpus.test_indices.empty() ? corpus.train_indices
                                                : corpus.test_indices;
  const int n = std::min<int>(config.gate_images, static_cast<int>(idx.size()));
  std::vector<double> psnrs(n);
  nn::parallel_for(n, 2, [&](int i) {
    const ImageGrid& img = corpus.images[idx[i]];
    const ImageGrid regen = model.regenerate(
        img, config.gate_strength, derive_seed(seed, "ddpm-gate", i));
    psnrs[i] = psnr(img, regen);
  });
  double mean_psnr = 0.0;
  for (const double p : psnrs) mean_psnr += p;
  mean_psnr /= n;
  if (mean_psnr < config.gate_psnr_db)
    throw TrainingGateError("model under-trained: regeneration PSNR " +
                                std::to_string(mean_psnr) + " dB below gate " +
                                std::to_string(config.gate_psnr_db),
                            mean_psnr);
  return model;
}

DiffusionModel train_ddpm(const Corpus& corpus, const DiffusionSchedule& schedule,
                          int steps, std::uint64_t seed) {
  DiffusionModelConfig config;
  config.training_steps = steps;
  return train_ddpm(corpus, schedule, config, seed);
}

double ddpm_validation_loss(const DiffusionModel& model, const Corpus& corpus,
                            std::uint64_t seed, int max_images) {
  const auto& idx = corpus.test_indices.empty() ? corpus.train_indices
                                                : corpus.test_indices;
  const int n = std::min<int>(max_images, static_cast<int>(idx.size()));
  if (n == 0) throw CorpusError("ddpm_validation_loss: no images");
  std::vector<double> losses(n);
  nn::parallel_for(n, 2, [&](int i) {
    Rng rng(derive_seed(seed, "ddpm-val", i));
    const int t = 1 + static_cast<int>(rng.uniform_index(model.schedule().T));
    Tensor x0 = model.encode_image(corpus.images[idx[i]]);
    Tensor eps(x0.c, x0.h, x0.w);
    for (double& v : eps.v) v = rng.gaussian();
    const double ab = model.schedule().alpha_bar(t);
    Tensor xt = x0;
    for (std::size_t j = 0; j < xt.v.size(); ++j)
      xt.v[j] = std::sqrt(ab) * xt.v[j] + std::sqrt(1.0 - ab) * eps.v[j];
    const Tensor pred = model.predict_noise(xt, t);
    double loss = 0.0;
    for (std::size_t j = 0; j < pred.v.size(); ++j) {
      const double d = pred.v[j] - eps.v[j];
      loss += d * d;
    }
    losses[i] = loss / static_cast<double>(pred.v.size());
  });
  double total = 0.0;
  for (const double l : losses) total += l;
  return total / n;
}

}  // namespace wmlab
