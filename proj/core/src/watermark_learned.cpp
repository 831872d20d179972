#include "wmlab/watermark_learned.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "wmlab/checkpoint.hpp"
#include "wmlab/dct.hpp"
#include "wmlab/distortions.hpp"
#include "wmlab/errors.hpp"
#include "wmlab/metrics.hpp"

namespace wmlab {

using nn::ConvLayer;
using nn::Tensor;

namespace {

Tensor tensor_from_image(const ImageGrid& img) {
  Tensor t(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) t.at(c, y, x) = img.at(y, x, c);
  return t;
}

ImageGrid image_from_tensor(const Tensor& t) {
  ImageGrid img(t.h, t.w, t.c);
  for (int c = 0; c < t.c; ++c)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) img.at(y, x, c) = t.at(c, y, x);
  return img;
}

// ------------------------------------------------------------ encoder ----

struct EncCache {
  Tensor in, a1, r1, a2, r2, a3, r3, a4, t4;
};

Tensor encoder_input(const ImageGrid& image, const Payload& payload) {
  Tensor in(image.channels + payload.length(), image.height, image.width);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) in.at(c, y, x) = image.at(y, x, c);
  for (int b = 0; b < payload.length(); ++b) {
    const double v = payload.bits[b] ? 1.0 : -1.0;
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        in.at(image.channels + b, y, x) = v;
  }
  return in;
}

// ------------------------------------------------------------ decoder ----

struct DecCache {
  Tensor in, a1, r1, a2, r2, a3, r3, a4, r4;
  std::vector<double> pooled, logits;
};

// ---------------------------------------------------- soft JPEG layer ----

// Differentiable surrogate of the block-quantization attack: rounding is
// replaced by v - sin(2 pi v)/(2 pi), whose derivative 1 - cos(2 pi v) keeps
// training gradients alive. Evaluation always uses the hard jpeg_like().
struct JpegSoftCache {
  std::vector<double> v;       // c/Q per block coefficient
  std::vector<double> qtable;  // per-coefficient quantum (flattened blocks)
  int ph = 0, pw = 0;
};

Tensor jpeg_soft_forward(const Tensor& x, int quality, JpegSoftCache& cache) {
  const int h = x.h, w = x.w;
  if (h % 8 != 0 || w % 8 != 0)
    throw std::invalid_argument("jpeg_soft: dimensions must be multiples of 8");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  double qtab[8][8];
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      const long q = std::lround(jpeg_quant_table(u, v) * scale / 100.0);
      qtab[u][v] = static_cast<double>(std::clamp(q, 1L, 255L));
    }

  const DctPlan& plan = DctPlan::cached(8);
  Tensor y(x.c, h, w);
  cache.v.assign(x.size(), 0.0);
  cache.qtable.assign(x.size(), 1.0);
  cache.ph = h;
  cache.pw = w;
  std::vector<double> block(64), coeffs(64);
  const double two_pi = 6.283185307179586476925286766559;
  for (int c = 0; c < x.c; ++c) {
    for (int by = 0; by < h; by += 8)
      for (int bx = 0; bx < w; bx += 8) {
        for (int yy = 0; yy < 8; ++yy)
          for (int xx = 0; xx < 8; ++xx)
            block[yy * 8 + xx] = x.at(c, by + yy, bx + xx) * 255.0 - 128.0;
        coeffs = plan.forward_2d(block);
        for (int u = 0; u < 8; ++u)
          for (int vv = 0; vv < 8; ++vv) {
            const double q = qtab[u][vv];
            const double v = coeffs[u * 8 + vv] / q;
            const std::size_t flat =
                ((static_cast<std::size_t>(c) * h + by + u) * w) + bx + vv;
            cache.v[flat] = v;
            cache.qtable[flat] = q;
            coeffs[u * 8 + vv] = q * (v - std::sin(two_pi * v) / two_pi);
          }
        block = plan.inverse_2d(coeffs);
        for (int yy = 0; yy < 8; ++yy)
          for (int xx = 0; xx < 8; ++xx)
            y.at(c, by + yy, bx + xx) = (block[yy * 8 + xx] + 128.0) / 255.0;
      }
  }
  return y;
}

Tensor jpeg_soft_backward(const Tensor& dy, const JpegSoftCache& cache) {
  const DctPlan& plan = DctPlan::cached(8);
  Tensor dx(dy.c, dy.h, dy.w);
  std::vector<double> block(64), coeffs(64);
  const double two_pi = 6.283185307179586476925286766559;
  for (int c = 0; c < dy.c; ++c) {
    for (int by = 0; by < dy.h; by += 8)
      for (int bx = 0; bx < dy.w; bx += 8) {
        // Adjoint of IDCT is the forward DCT (orthonormal), the 255/128
        // scalings cancel between input and output.
        for (int yy = 0; yy < 8; ++yy)
          for (int xx = 0; xx < 8; ++xx)
            block[yy * 8 + xx] = dy.at(c, by + yy, bx + xx);
        coeffs = plan.forward_2d(block);
        for (int u = 0; u < 8; ++u)
          for (int vv = 0; vv < 8; ++vv) {
            const std::size_t flat =
                ((static_cast<std::size_t>(c) * dy.h + by + u) * dy.w) + bx + vv;
            coeffs[u * 8 + vv] *= 1.0 - std::cos(two_pi * cache.v[flat]);
          }
        block = plan.inverse_2d(coeffs);
        for (int yy = 0; yy < 8; ++yy)
          for (int xx = 0; xx < 8; ++xx)
            dx.at(c, by + yy, bx + xx) = block[yy * 8 + xx];
      }
  }
  return dx;
}

// ------------------------------------------------ training augmentations ----

struct AugCache {
  std::string kind;
  Tensor mask;          // crop_mask / clamp masks
  JpegSoftCache jpeg;
  std::vector<double> kernel;  // blur
  int blur_radius = 0;
};

int reflect_idx(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

Tensor blur_tensor(const Tensor& x, const std::vector<double>& kernel,
                   int radius) {
  Tensor tmp(x.c, x.h, x.w), out(x.c, x.h, x.w);
  for (int c = 0; c < x.c; ++c)
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * x.at(c, y, reflect_idx(xx + i, x.w));
        tmp.at(c, y, xx) = acc;
      }
  for (int c = 0; c < x.c; ++c)
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * tmp.at(c, reflect_idx(y + i, x.h), xx);
        out.at(c, y, xx) = acc;
      }
  return out;
}

// Exact adjoint of blur_tensor (scatter through the same reflected taps).
Tensor blur_tensor_adjoint(const Tensor& dy, const std::vector<double>& kernel,
                           int radius) {
  Tensor tmp(dy.c, dy.h, dy.w, 0.0), dx(dy.c, dy.h, dy.w, 0.0);
  for (int c = 0; c < dy.c; ++c)
    for (int y = 0; y < dy.h; ++y)
      for (int xx = 0; xx < dy.w; ++xx)
        for (int i = -radius; i <= radius; ++i)
          tmp.at(c, reflect_idx(y + i, dy.h), xx) +=
              kernel[i + radius] * dy.at(c, y, xx);
  for (int c = 0; c < dy.c; ++c)
    for (int y = 0; y < dy.h; ++y)
      for (int xx = 0; xx < dy.w; ++xx)
        for (int i = -radius; i <= radius; ++i)
          dx.at(c, y, reflect_idx(xx + i, dy.w)) +=
              kernel[i + radius] * tmp.at(c, y, xx);
  return dx;
}

Tensor augment_forward(const Tensor& x, const std::string& kind,
                       const LearnedCodecConfig& cfg, Rng& rng,
                       AugCache& cache) {
  cache.kind = kind;
  if (kind == "identity") return x;
  if (kind == "gaussian_noise") {
    Tensor y = x;
    cache.mask = Tensor(x.c, x.h, x.w, 1.0);
    const double sigma = cfg.noise_sigma_255 / 255.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) {
      const double noisy = y.v[i] + sigma * rng.gaussian();
      const double clamped = std::clamp(noisy, 0.0, 1.0);
      cache.mask.v[i] = noisy == clamped ? 1.0 : 0.0;
      y.v[i] = clamped;
    }
    return y;
  }
  if (kind == "jpeg_soft") return jpeg_soft_forward(x, cfg.jpeg_quality, cache.jpeg);
  if (kind == "crop_mask") {
    const int w = 1 + static_cast<int>(
                          rng.uniform_index(std::max(1, cfg.crop_border_max)));
    Tensor y = x;
    cache.mask = Tensor(x.c, x.h, x.w, 1.0);
    for (int c = 0; c < x.c; ++c)
      for (int yy = 0; yy < x.h; ++yy)
        for (int xx = 0; xx < x.w; ++xx) {
          const bool border =
              yy < w || yy >= x.h - w || xx < w || xx >= x.w - w;
          if (border) {
            y.at(c, yy, xx) = 0.5;
            cache.mask.at(c, yy, xx) = 0.0;
          }
        }
    return y;
  }
  if (kind == "blur") {
    const int radius = static_cast<int>(std::ceil(3.0 * cfg.blur_sigma));
    cache.blur_radius = radius;
    cache.kernel.assign(2 * radius + 1, 0.0);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      cache.kernel[i + radius] =
          std::exp(-(i * i) / (2.0 * cfg.blur_sigma * cfg.blur_sigma));
      sum += cache.kernel[i + radius];
    }
    for (double& k : cache.kernel) k /= sum;
    return blur_tensor(x, cache.kernel, radius);
  }
  throw std::invalid_argument("unknown augmentation: " + kind);
}

Tensor augment_backward(const Tensor& dy, const AugCache& cache) {
  if (cache.kind == "identity") return dy;
  if (cache.kind == "gaussian_noise" || cache.kind == "crop_mask") {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= cache.mask.v[i];
    return dx;
  }
  if (cache.kind == "jpeg_soft") return jpeg_soft_backward(dy, cache.jpeg);
  if (cache.kind == "blur")
    return blur_tensor_adjoint(dy, cache.kernel, cache.blur_radius);
  throw std::invalid_argument("unknown augmentation in backward");
}

}  // namespace

void LearnedCodecConfig::validate() const {
  if (payload_length <= 0 || payload_length > 32)
    throw std::invalid_argument("LearnedCodecConfig: payload_length must be in [1,32]");
  if (!(residual_max > 0.0 && residual_max <= 0.1))
    throw std::invalid_argument("LearnedCodecConfig: residual_max must be in (0, 0.1]");
  if (training_steps <= 0 || batch_size <= 0)
    throw std::invalid_argument("LearnedCodecConfig: steps and batch must be positive");
  if (augmentation_set.empty())
    throw std::invalid_argument("LearnedCodecConfig: augmentation_set empty");
  for (const auto& a : augmentation_set)
    if (a != "identity" && a != "gaussian_noise" && a != "jpeg_soft" &&
        a != "crop_mask" && a != "blur")
      throw std::invalid_argument("LearnedCodecConfig: unknown augmentation " + a);
}

LearnedCodec::LearnedCodec(LearnedCodecConfig config, std::uint64_t init_seed)
    : config_(std::move(config)), training_seed_(init_seed) {
  config_.validate();
  const int img_c = 1;  // the laboratory trains on grayscale corpora
  const int ec = config_.encoder_channels;
  const int dc = config_.decoder_channels;
  e1_ = ConvLayer(img_c + config_.payload_length, ec, 3, 1);
  e2_ = ConvLayer(ec, ec, 3, 1);
  e3_ = ConvLayer(ec, ec, 3, 1);
  e4_ = ConvLayer(ec, img_c, 3, 1);
  d1_ = ConvLayer(img_c, dc, 3, 1);
  d2_ = ConvLayer(dc, 2 * dc, 3, 2);
  d3_ = ConvLayer(2 * dc, 2 * dc, 3, 2);
  d4_ = ConvLayer(2 * dc, 3 * dc, 3, 2);
  head_ = nn::LinearLayer(3 * dc, config_.payload_length);

  Rng rng(derive_seed(init_seed, "codec-init"));
  for (ConvLayer* l : {&e1_, &e2_, &e3_, &e4_, &d1_, &d2_, &d3_, &d4_})
    l->init(rng);
  head_.init(rng);
}

namespace {

Tensor encoder_forward(const LearnedCodec&, const ConvLayer& e1,
                       const ConvLayer& e2, const ConvLayer& e3,
                       const ConvLayer& e4, const Tensor& in, EncCache& cache) {
  cache.in = in;
  cache.a1 = e1.forward(in);
  cache.r1 = nn::relu(cache.a1);
  cache.a2 = e2.forward(cache.r1);
  cache.r2 = nn::relu(cache.a2);
  cache.a3 = e3.forward(cache.r2);
  cache.r3 = nn::relu(cache.a3);
  cache.a4 = e4.forward(cache.r3);
  cache.t4 = nn::tanh_t(cache.a4);
  return cache.t4;
}

void decoder_forward(const ConvLayer& d1, const ConvLayer& d2,
                     const ConvLayer& d3, const ConvLayer& d4,
                     const nn::LinearLayer& head, const Tensor& in,
                     DecCache& cache) {
  cache.in = in;
  cache.a1 = d1.forward(in);
  cache.r1 = nn::relu(cache.a1);
  cache.a2 = d2.forward(cache.r1);
  cache.r2 = nn::relu(cache.a2);
  cache.a3 = d3.forward(cache.r2);
  cache.r3 = nn::relu(cache.a3);
  cache.a4 = d4.forward(cache.r3);
  cache.r4 = nn::relu(cache.a4);
  cache.pooled = nn::global_avg_pool(cache.r4);
  cache.logits = head.forward(cache.pooled);
}

}  // namespace

ImageGrid LearnedCodec::embed_residual(const ImageGrid& image,
                                       const Payload& payload) const {
  if (payload.length() != config_.payload_length)
    throw std::invalid_argument("learned_embed: payload length mismatch");
  if (image.channels != 1)
    throw std::invalid_argument("learned codec expects grayscale images");
  EncCache cache;
  const Tensor t4 =
      encoder_forward(*this, e1_, e2_, e3_, e4_, encoder_input(image, payload), cache);
  ImageGrid res = image_from_tensor(t4);
  for (double& v : res.data) v *= config_.residual_max;
  return res;
}

ImageGrid LearnedCodec::embed(const ImageGrid& image,
                              const Payload& payload) const {
  const ImageGrid res = embed_residual(image, payload);
  ImageGrid out = image;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += res.data[i];
  return clamp01(std::move(out));
}

Payload LearnedCodec::decode(const ImageGrid& image,
                             std::vector<double>* logits) const {
  if (image.channels != 1)
    throw std::invalid_argument("learned codec expects grayscale images");
  DecCache cache;
  decoder_forward(d1_, d2_, d3_, d4_, head_, tensor_from_image(image), cache);
  Payload out;
  out.bits.resize(config_.payload_length);
  for (int i = 0; i < config_.payload_length; ++i)
    out.bits[i] = cache.logits[i] > 0.0 ? 1 : 0;
  if (logits) *logits = cache.logits;
  return out;
}

ImageGrid LearnedCodec::loss_gradient(const ImageGrid& image,
                                      const Payload& target) const {
  if (target.length() != config_.payload_length)
    throw std::invalid_argument("loss_gradient: target length mismatch");
  DecCache cache;
  decoder_forward(d1_, d2_, d3_, d4_, head_, tensor_from_image(image), cache);

  // L = sum_i (sigmoid(logit_i) - t_i)^2
  std::vector<double> dlogits(config_.payload_length);
  for (int i = 0; i < config_.payload_length; ++i) {
    const double s = nn::sigmoid(cache.logits[i]);
    const double t = target.bits[i] ? 1.0 : 0.0;
    dlogits[i] = 2.0 * (s - t) * s * (1.0 - s);
  }

  // Scratch gradient buffers; only the input gradient is wanted here.
  std::vector<double> dw_head(head_.w.size(), 0.0), db_head(head_.b.size(), 0.0);
  const std::vector<double> dpooled =
      head_.backward(cache.pooled, dlogits, dw_head, db_head);
  Tensor dr4 =
      nn::global_avg_pool_backward(cache.r4.c, cache.r4.h, cache.r4.w, dpooled);
  Tensor da4 = nn::relu_backward(cache.a4, dr4);
  std::vector<double> dw(d4_.w.size(), 0.0), db(d4_.b.size(), 0.0);
  Tensor dr3 = d4_.backward(cache.r3, da4, dw, db);
  Tensor da3 = nn::relu_backward(cache.a3, dr3);
  dw.assign(d3_.w.size(), 0.0);
  db.assign(d3_.b.size(), 0.0);
  Tensor dr2 = d3_.backward(cache.r2, da3, dw, db);
  Tensor da2 = nn::relu_backward(cache.a2, dr2);
  dw.assign(d2_.w.size(), 0.0);
  db.assign(d2_.b.size(), 0.0);
  Tensor dr1 = d2_.backward(cache.r1, da2, dw, db);
  Tensor da1 = nn::relu_backward(cache.a1, dr1);
  dw.assign(d1_.w.size(), 0.0);
  db.assign(d1_.b.size(), 0.0);
  Tensor din = d1_.backward(cache.in, da1, dw, db);
  return image_from_tensor(din);
}

std::vector<std::vector<double>*> LearnedCodec::param_values() {
  return {&e1_.w, &e1_.b, &e2_.w, &e2_.b, &e3_.w, &e3_.b, &e4_.w, &e4_.b,
          &d1_.w, &d1_.b, &d2_.w, &d2_.b, &d3_.w, &d3_.b, &d4_.w, &d4_.b,
          &head_.w, &head_.b};
}

std::vector<std::string> LearnedCodec::param_names() const {
  return {"e1.w", "e1.b", "e2.w", "e2.b", "e3.w", "e3.b", "e4.w", "e4.b",
          "d1.w", "d1.b", "d2.w", "d2.b", "d3.w", "d3.b", "d4.w", "d4.b",
          "head.w", "head.b"};
}

std::vector<nn::ParamRef> LearnedCodec::params_with(
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

void LearnedCodec::save(const std::string& path) const {
  nlohmann::json meta;
  meta["kind"] = "learned_codec";
  meta["training_seed"] = training_seed_;
  meta["config"] = {
      {"payload_length", config_.payload_length},
      {"residual_max", config_.residual_max},
      {"image_loss_weight", config_.image_loss_weight},
      {"training_steps", config_.training_steps},
      {"batch_size", config_.batch_size},
      {"augmentation_set", config_.augmentation_set},
      {"learning_rate", config_.learning_rate},
      {"momentum", config_.momentum},
      {"encoder_channels", config_.encoder_channels},
      {"decoder_channels", config_.decoder_channels},
      {"noise_sigma_255", config_.noise_sigma_255},
      {"jpeg_quality", config_.jpeg_quality},
      {"blur_sigma", config_.blur_sigma},
      {"crop_border_max", config_.crop_border_max},
  };
  Checkpoint ckpt;
  ckpt.meta_json = meta.dump(2);
  auto* self = const_cast<LearnedCodec*>(this);
  const auto values = self->param_values();
  const auto names = param_names();
  for (std::size_t i = 0; i < values.size(); ++i)
    ckpt.add_array(names[i], {static_cast<int>(values[i]->size())}, *values[i]);
  ckpt.save(path);
}

LearnedCodec LearnedCodec::load(const std::string& path) {
  const Checkpoint ckpt = Checkpoint::load(path);
  const nlohmann::json meta = nlohmann::json::parse(ckpt.meta_json);
  if (meta.value("kind", "") != "learned_codec")
    throw IoError("not a learned codec checkpoint: " + path);
  const auto& c = meta.at("config");
  LearnedCodecConfig config;
  config.payload_length = c.at("payload_length");
  config.residual_max = c.at("residual_max");
  config.image_loss_weight = c.at("image_loss_weight");
  config.training_steps = c.at("training_steps");
  config.batch_size = c.at("batch_size");
  config.augmentation_set = c.at("augmentation_set").get<std::vector<std::string>>();
  config.learning_rate = c.at("learning_rate");
  config.momentum = c.at("momentum");
  config.encoder_channels = c.at("encoder_channels");
  config.decoder_channels = c.at("decoder_channels");
  config.noise_sigma_255 = c.at("noise_sigma_255");
  config.jpeg_quality = c.at("jpeg_quality");
  config.blur_sigma = c.at("blur_sigma");
  config.crop_border_max = c.at("crop_border_max");

  LearnedCodec codec(config, meta.at("training_seed").get<std::uint64_t>());
  const auto values = codec.param_values();
  const auto names = codec.param_names();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& data = ckpt.array(names[i]);
    if (data.size() != values[i]->size())
      throw IoError("checkpoint parameter size mismatch: " + names[i]);
    *values[i] = data;
  }
  return codec;
}

// ----------------------------------------------------------- training ----

namespace {

struct ExampleGrads {
  std::vector<std::vector<double>> g;
  double bit_loss = 0.0;
  double image_loss = 0.0;
};

}  // namespace

struct LearnedCodecTrainer {
  static void run(LearnedCodec& codec, const Corpus& corpus, std::uint64_t seed) {
    const LearnedCodecConfig& cfg = codec.config_;
    if (corpus.train_indices.empty())
      throw CorpusError("train_codec: empty train split");

    std::vector<std::vector<double>> main_grads;
    const std::vector<nn::ParamRef> params = codec.params_with(main_grads);
    nn::SgdMomentum opt;
    opt.lr = cfg.learning_rate;
    opt.momentum = cfg.momentum;

    const int batch = cfg.batch_size;
    const int n_aug = static_cast<int>(cfg.augmentation_set.size());
    const int threads = 2;

    for (int step = 0; step < cfg.training_steps; ++step) {
      std::vector<ExampleGrads> slots(batch);
      nn::parallel_for(batch, threads, [&](int i) {
        Rng rng(derive_seed(seed, "codec-train", step, i));
        const int img_idx = corpus.train_indices[rng.uniform_index(
            corpus.train_indices.size())];
        const ImageGrid& image = corpus.images[img_idx];
        Payload payload(std::vector<std::uint8_t>(cfg.payload_length));
        for (auto& b : payload.bits) b = rng.bernoulli(0.5) ? 1 : 0;
        const std::string& aug =
            cfg.augmentation_set[(static_cast<std::size_t>(step) * batch + i) %
                                 n_aug];
        slots[i] = backprop_example(codec, image, payload, aug, rng);
      });

      for (auto& g : main_grads) std::fill(g.begin(), g.end(), 0.0);
      for (const auto& slot : slots)
        for (std::size_t p = 0; p < main_grads.size(); ++p)
          for (std::size_t j = 0; j < main_grads[p].size(); ++j)
            main_grads[p][j] += slot.g[p][j] / batch;
      opt.step(params);
    }
  }

  static ExampleGrads backprop_example(LearnedCodec& codec,
                                       const ImageGrid& image,
                                       const Payload& payload,
                                       const std::string& aug, Rng& rng) {
    const LearnedCodecConfig& cfg = codec.config_;
    ExampleGrads out;
    for (auto* v : codec.param_values()) out.g.emplace_back(v->size(), 0.0);

    // Forward: encode, clamp, augment, decode.
    EncCache enc;
    const Tensor t4 = encoder_forward(codec, codec.e1_, codec.e2_, codec.e3_,
                                      codec.e4_, encoder_input(image, payload),
                                      enc);
    const Tensor img_t = tensor_from_image(image);
    Tensor wm(img_t.c, img_t.h, img_t.w);
    Tensor clamp_mask(img_t.c, img_t.h, img_t.w, 1.0);
    for (std::size_t i = 0; i < wm.v.size(); ++i) {
      const double raw = img_t.v[i] + cfg.residual_max * t4.v[i];
      const double cl = std::clamp(raw, 0.0, 1.0);
      clamp_mask.v[i] = raw == cl ? 1.0 : 0.0;
      wm.v[i] = cl;
    }

    AugCache aug_cache;
    const Tensor attacked = augment_forward(wm, aug, cfg, rng, aug_cache);

    DecCache dec;
    decoder_forward(codec.d1_, codec.d2_, codec.d3_, codec.d4_, codec.head_,
                    attacked, dec);

    // Mean binary cross-entropy on logits + weighted mean squared residual.
    const int L = cfg.payload_length;
    std::vector<double> dlogits(L);
    for (int i = 0; i < L; ++i) {
      const double s = nn::sigmoid(dec.logits[i]);
      const double t = payload.bits[i] ? 1.0 : 0.0;
      out.bit_loss += -(t * std::log(std::max(s, 1e-12)) +
                        (1.0 - t) * std::log(std::max(1.0 - s, 1e-12))) / L;
      dlogits[i] = (s - t) / L;
    }

    // Decoder backward (params 8..17 in registration order).
    const std::vector<double> dpooled =
        codec.head_.backward(dec.pooled, dlogits, out.g[16], out.g[17]);
    Tensor dr4 = nn::global_avg_pool_backward(dec.r4.c, dec.r4.h, dec.r4.w,
                                              dpooled);
    Tensor da4 = nn::relu_backward(dec.a4, dr4);
    Tensor dr3 = codec.d4_.backward(dec.r3, da4, out.g[14], out.g[15]);
    Tensor da3 = nn::relu_backward(dec.a3, dr3);
    Tensor dr2 = codec.d3_.backward(dec.r2, da3, out.g[12], out.g[13]);
    Tensor da2 = nn::relu_backward(dec.a2, dr2);
    Tensor dr1 = codec.d2_.backward(dec.r1, da2, out.g[10], out.g[11]);
    Tensor da1 = nn::relu_backward(dec.a1, dr1);
    Tensor d_attacked = codec.d1_.backward(dec.in, da1, out.g[8], out.g[9]);

    // Through the augmentation to the watermarked image.
    Tensor d_wm = augment_backward(d_attacked, aug_cache);

    // Image loss: mean squared residual, gradient straight onto wm.
    const double inv_n = 1.0 / static_cast<double>(wm.v.size());
    for (std::size_t i = 0; i < wm.v.size(); ++i) {
      const double diff = wm.v[i] - img_t.v[i];
      out.image_loss += cfg.image_loss_weight * diff * diff * inv_n;
      d_wm.v[i] += cfg.image_loss_weight * 2.0 * diff * inv_n;
    }

    // Through the clamp and the residual scaling into the encoder.
    Tensor dt4 = d_wm;
    for (std::size_t i = 0; i < dt4.v.size(); ++i)
      dt4.v[i] *= clamp_mask.v[i] * cfg.residual_max;
    Tensor da4e = nn::tanh_backward_from_y(enc.t4, dt4);
    Tensor dr3e = codec.e4_.backward(enc.r3, da4e, out.g[6], out.g[7]);
    Tensor da3e = nn::relu_backward(enc.a3, dr3e);
    Tensor dr2e = codec.e3_.backward(enc.r2, da3e, out.g[4], out.g[5]);
    Tensor da2e = nn::relu_backward(enc.a2, dr2e);
    Tensor dr1e = codec.e2_.backward(enc.r1, da2e, out.g[2], out.g[3]);
    Tensor da1e = nn::relu_backward(enc.a1, dr1e);
    codec.e1_.backward(enc.in, da1e, out.g[0], out.g[1]);
    return out;
  }
};

double codec_eval_accuracy(const LearnedCodec& codec, const Corpus& corpus,
                           const std::string& augmentation, std::uint64_t seed,
                           int max_images) {
  const auto& idx = corpus.test_indices.empty() ? corpus.train_indices
                                                : corpus.test_indices;
  const int n = std::min<int>(max_images, static_cast<int>(idx.size()));
  if (n == 0) throw CorpusError("codec_eval_accuracy: no evaluation images");
  const LearnedCodecConfig& cfg = codec.config();

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const ImageGrid& image = corpus.images[idx[i]];
    const Payload payload = Payload::random(
        cfg.payload_length, derive_seed(seed, "codec-eval", i));
    ImageGrid wm = codec.embed(image, payload);
    ImageGrid attacked;
    if (augmentation == "identity") {
      attacked = wm;
    } else if (augmentation == "gaussian_noise") {
      attacked = gaussian_noise(wm, cfg.noise_sigma_255,
                                derive_seed(seed, "codec-eval-noise", i));
    } else if (augmentation == "jpeg_soft" || augmentation == "jpeg") {
      attacked = jpeg_like(wm, cfg.jpeg_quality);  // hard quantization
    } else if (augmentation == "crop_mask") {
      attacked = crop_border(wm, 0.10);
    } else if (augmentation == "blur") {
      attacked = blur(wm, cfg.blur_sigma);
    } else {
      throw std::invalid_argument("codec_eval_accuracy: unknown augmentation " +
                                  augmentation);
    }
    total += bit_metrics(payload, codec.decode(attacked)).bit_accuracy;
  }
  return total / n;
}

LearnedCodec train_codec(const Corpus& corpus, const LearnedCodecConfig& config,
                         std::uint64_t seed) {
  config.validate();
  LearnedCodec codec(config, seed);
  LearnedCodecTrainer::run(codec, corpus, seed);

  const double identity_acc =
      codec_eval_accuracy(codec, corpus, "identity", seed);
  if (identity_acc < 0.95)
    throw TrainingGateError(
        "codec under-trained: identity bit accuracy " +
            std::to_string(identity_acc) + " below the 0.95 gate",
        identity_acc);
  return codec;
}

}  // namespace wmlab
