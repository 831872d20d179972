#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wmlab/corpus.hpp"
#include "wmlab/image.hpp"
#include "wmlab/nn.hpp"

namespace wmlab {

// Noising schedule shared by the diffusion model, the attacks, and the
// analytic MI channel: beta_t linear, alpha_bar_t = prod_{s<=t}(1 - beta_s).
struct DiffusionSchedule {
  int T = 1000;
  std::vector<double> betas;       // betas[t-1] = beta_t, t in 1..T
  std::vector<double> alpha_bars;  // alpha_bars[t-1] = alpha_bar_t

  static DiffusionSchedule linear(int T = 1000, double beta_start = 1e-4,
                                  double beta_end = 0.02);

  // alpha_bar(0) = 1 by convention.
  double alpha_bar(int t) const;
  void validate() const;
};

struct DiffusionModelConfig {
  int base_channels = 16;
  int time_embed_dim = 32;
  int training_steps = 4000;
  int batch_size = 8;
  double learning_rate = 2e-3;
  int sample_steps = 50;       // default reverse-step count
  double gate_strength = 0.3;  // post-training quality gate
  double gate_psnr_db = 24.0;
  int gate_images = 48;
};

// Pixel-space denoising diffusion model with an identity latent codec:
// EncodeImageToLatent / DecodeLatentToImage are the (x - 0.5)/0.5
// normalization and its inverse, kept explicit so the attack control flow
// matches the latent formulation line for line.
//
// Denoiser: small two-resolution convolutional network with a skip
// connection and sinusoidal timestep embedding added per channel.
class DiffusionModel {
public:
  DiffusionModel(DiffusionSchedule schedule, DiffusionModelConfig config,
                 std::uint64_t init_seed);

  const DiffusionSchedule& schedule() const { return schedule_; }
  const DiffusionModelConfig& config() const { return config_; }
  std::uint64_t training_seed() const { return training_seed_; }
  bool trained() const { return trained_; }

  // Latent codec (identity mode). decode(encode(x)) == x exactly for
  // x in [0,1].
  nn::Tensor encode_image(const ImageGrid& image) const;
  ImageGrid decode_latent(const nn::Tensor& latent) const;

  // x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) eps in model space;
  // t = 0 returns the encoded image unchanged. Throws for t outside [0, T].
  nn::Tensor add_noise(const ImageGrid& image, int t,
                       std::uint64_t noise_seed) const;

  // Epsilon prediction eps_hat(x, t).
  nn::Tensor predict_noise(const nn::Tensor& x, int t) const;

  // Deterministic reverse sampling over step_count evenly spaced timesteps
  // from t to 0 (DDIM, no stochastic injection), decoded to [0,1].
  // Fully determined by (x_t, t, step_count) and the model parameters.
  ImageGrid denoise_from(const nn::Tensor& x_t, int t, int step_count) const;

  // Same walk but returning the final latent, for attacks that update it
  // before decoding.
  nn::Tensor denoise_latent(const nn::Tensor& x_t, int t, int step_count) const;

  // add_noise + denoise_from at strength s = t/T; strength 0 is the
  // identity map.
  ImageGrid regenerate(const ImageGrid& image, double strength,
                       std::uint64_t seed, int step_count = 0) const;

  void save(const std::string& path) const;
  static DiffusionModel load(const std::string& path);

  std::vector<nn::ParamRef> params_with(std::vector<std::vector<double>>& grads);
  std::vector<std::vector<double>*> param_values();
  std::vector<std::string> param_names() const;

private:
  friend struct DiffusionTrainer;

  DiffusionSchedule schedule_;
  DiffusionModelConfig config_;
  std::uint64_t training_seed_ = 0;
  bool trained_ = false;
  std::vector<double> data_mean_{0.5};
  std::vector<double> data_std_{0.5};

  nn::LinearLayer temb_, tproj_in_, tproj_down_, tproj_mid_;
  nn::ConvLayer conv_in_, conv_down_, conv_mid_, conv_up_, conv_out_;
};

// Trains the epsilon predictor with Adam on the corpus train split;
// deterministic given seed. After training, regeneration quality at the
// gate strength must reach config.gate_psnr_db corpus-mean PSNR, otherwise
// TrainingGateError ("model under-trained") carrying the achieved value.
DiffusionModel train_ddpm(const Corpus& corpus, const DiffusionSchedule& schedule,
                          const DiffusionModelConfig& config, std::uint64_t seed);

// Spec-shaped convenience overload: steps overrides the config default.
DiffusionModel train_ddpm(const Corpus& corpus, const DiffusionSchedule& schedule,
                          int steps, std::uint64_t seed);

// Mean epsilon-prediction MSE over a corpus split (validation loss).
double ddpm_validation_loss(const DiffusionModel& model, const Corpus& corpus,
                            std::uint64_t seed, int max_images = 64);

}  // namespace wmlab
