#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wmlab/corpus.hpp"
#include "wmlab/image.hpp"
#include "wmlab/nn.hpp"
#include "wmlab/watermark.hpp"

namespace wmlab {

// Configuration and hyperparameters of the learned codec. Augmentation
// severities default to the evaluation attack settings (noise sigma 10,
// JPEG quality 50, 10% border crop, blur sigma 1).
struct LearnedCodecConfig {
  int payload_length = 16;       // <= 32
  double residual_max = 0.04;    // (0, 0.1]; architectural L-inf bound
  double image_loss_weight = 1.0;
  int training_steps = 2600;
  int batch_size = 12;
  std::vector<std::string> augmentation_set = {
      "identity", "gaussian_noise", "jpeg_soft", "crop_mask", "blur"};

  double learning_rate = 0.05;
  double momentum = 0.9;
  int encoder_channels = 16;
  int decoder_channels = 16;

  double noise_sigma_255 = 10.0;
  int jpeg_quality = 50;
  double blur_sigma = 1.0;
  int crop_border_max = 2;  // crop_mask draws border width in [1, this]

  void validate() const;
};

// Encoder: payload bits mapped to +-1 planes, concatenated with the image,
// four 3x3 conv layers to a residual squashed by tanh and scaled by
// residual_max, so the perturbation bound holds architecturally for every
// input. Decoder: four strided conv layers, global average pooling, linear
// head to payload_length logits.
class LearnedCodec : public WatermarkDecoder {
public:
  LearnedCodec(LearnedCodecConfig config, std::uint64_t init_seed);

  std::string name() const override { return "learned"; }
  int payload_length() const override { return config_.payload_length; }
  const LearnedCodecConfig& config() const { return config_; }
  std::uint64_t training_seed() const { return training_seed_; }

  // clamp(image + residual), ||residual||_inf <= residual_max.
  ImageGrid embed(const ImageGrid& image, const Payload& payload) const;
  ImageGrid embed_residual(const ImageGrid& image, const Payload& payload) const;

  Payload decode(const ImageGrid& image,
                 std::vector<double>* logits = nullptr) const override;

  // Backpropagated gradient of sum_i (sigmoid(logit_i) - target_i)^2.
  ImageGrid loss_gradient(const ImageGrid& image,
                          const Payload& target) const override;

  void save(const std::string& path) const;
  static LearnedCodec load(const std::string& path);

  // Internal parameter access for the trainer and the checkpoint writer.
  std::vector<nn::ParamRef> params_with(std::vector<std::vector<double>>& grads);
  std::vector<std::vector<double>*> param_values();
  std::vector<std::string> param_names() const;

  struct TrainHooks;  // implementation detail of train_codec

private:
  friend LearnedCodec train_codec(const Corpus&, const LearnedCodecConfig&,
                                  std::uint64_t);
  friend struct LearnedCodecTrainer;

  LearnedCodecConfig config_;
  std::uint64_t training_seed_ = 0;

  nn::ConvLayer e1_, e2_, e3_, e4_;
  nn::ConvLayer d1_, d2_, d3_, d4_;
  nn::LinearLayer head_;
};

// Trains encoder and decoder jointly with distortion augmentation using
// plain SGD with momentum. Deterministic given seed. Throws
// TrainingGateError ("codec under-trained") when held-out identity bit
// accuracy stays below 95% after training_steps.
LearnedCodec train_codec(const Corpus& corpus, const LearnedCodecConfig& config,
                         std::uint64_t seed);

// Held-out accuracy of the codec under one named augmentation at its
// training severity (hard JPEG for "jpeg_soft"). Used by the training gate
// and the acceptance suite.
double codec_eval_accuracy(const LearnedCodec& codec, const Corpus& corpus,
                           const std::string& augmentation, std::uint64_t seed,
                           int max_images = 128);

}  // namespace wmlab
