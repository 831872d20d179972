#include "wmlab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "wmlab/distortions.hpp"
#include "wmlab/errors.hpp"

namespace wmlab {

void GuidedAttackConfig::validate() const {
  if (decoder == nullptr)
    throw std::invalid_argument("guided_remove: decoder handle missing");
  if (lambda_weight < 0.0)
    throw std::invalid_argument("guided_remove: lambda must be >= 0");
  if (gradient_steps < 1)
    throw std::invalid_argument("guided_remove: gradient_steps must be >= 1");
  if (!(strength > 0.0 && strength <= 1.0))
    throw std::invalid_argument("guided_remove: strength must lie in (0, 1]");
  if (target_message.length() != 0 &&
      target_message.length() != decoder->payload_length())
    throw std::invalid_argument(
        "guided_remove: target length does not match the decoder");
}

ImageGrid regenerate(const DiffusionModel& model, const ImageGrid& image,
                     double strength, std::uint64_t seed, int step_count) {
  if (!model.trained())
    throw std::invalid_argument("regenerate: diffusion model is untrained");
  return model.regenerate(image, strength, seed, step_count);
}

ImageGrid guided_remove(const DiffusionModel& model, const ImageGrid& image,
                        const GuidedAttackConfig& config, std::uint64_t seed,
                        int step_count) {
  config.validate();
  if (!model.trained())
    throw std::invalid_argument("guided_remove: diffusion model is untrained");
  const Payload target = config.target_message.length() == 0
                             ? Payload::zeros(config.decoder->payload_length())
                             : config.target_message;

  const int t = static_cast<int>(std::llround(config.strength * model.schedule().T));
  if (t == 0) return image;
  int steps = step_count > 0 ? step_count : model.config().sample_steps;
  steps = std::min(steps, t);

  nn::Tensor y =
      model.denoise_latent(model.add_noise(image, t, seed), t, steps);

  // Final-step guidance: y <- y - lambda * dL/dy with
  // dL/dy = d(decode)/dy * dL/dimage; the decode map is affine with slope
  // 0.5 (the clamp's boundary subgradient is not modeled).
  for (int step = 0; step < config.gradient_steps; ++step) {
    if (config.lambda_weight == 0.0) break;
    const ImageGrid decoded = model.decode_latent(y);
    const ImageGrid grad = config.decoder->loss_gradient(decoded, target);
    if (grad.height != y.h || grad.width != y.w || grad.channels != 1)
      throw std::invalid_argument(
          "guided_remove: decoder gradient resolution mismatch");
    for (int yy = 0; yy < y.h; ++yy)
      for (int xx = 0; xx < y.w; ++xx)
        y.at(0, yy, xx) -= config.lambda_weight * 0.5 * grad.at(yy, xx);
    for (double& v : y.v) v = std::clamp(v, -1.0, 1.0);
  }
  return model.decode_latent(y);
}

double ss_guided_lambda_min(const SpreadSpectrumCodec& codec) {
  return 2.0 / codec.chips_per_bit();
}

void AttackSpec::validate() const {
  const auto need = [&](const std::string& p) {
    if (params.find(p) == params.end())
      throw std::invalid_argument("AttackSpec " + kind + ": missing param " + p);
    return params.at(p);
  };
  if (kind == "identity") {
    return;
  } else if (kind == "jpeg_like") {
    const double q = need("quality");
    if (q < 1 || q > 100 || q != std::floor(q))
      throw std::invalid_argument("AttackSpec jpeg_like: quality must be an int in [1,100]");
  } else if (kind == "gaussian_noise") {
    if (need("sigma") < 0)
      throw std::invalid_argument("AttackSpec gaussian_noise: sigma must be >= 0");
  } else if (kind == "crop") {
    const double f = need("fraction");
    if (f < 0.0 || f >= 0.5)
      throw std::invalid_argument("AttackSpec crop: fraction must lie in [0, 0.5)");
  } else if (kind == "affine") {
    const double a = need("angle");
    const double s = need("scale");
    if (std::abs(a) > 5.0 || s < 0.9 || s > 1.1)
      throw std::invalid_argument("AttackSpec affine: params out of range");
  } else if (kind == "blur") {
    const double s = need("sigma");
    if (!(s > 0.0) || s > 3.0)
      throw std::invalid_argument("AttackSpec blur: sigma must lie in (0,3]");
  } else if (kind == "sharpen") {
    const double a = need("amount");
    if (!(a > 0.0) || a > 1.0)
      throw std::invalid_argument("AttackSpec sharpen: amount must lie in (0,1]");
  } else if (kind == "regeneration") {
    const double s = need("strength");
    if (s < 0.0 || s > 1.0)
      throw std::invalid_argument("AttackSpec regeneration: strength outside [0,1]");
  } else if (kind == "guided_removal") {
    const double s = need("strength");
    if (!(s > 0.0) || s > 1.0)
      throw std::invalid_argument("AttackSpec guided_removal: strength outside (0,1]");
    if (need("lambda") < 0.0)
      throw std::invalid_argument("AttackSpec guided_removal: lambda must be >= 0");
    if (params.count("gradient_steps") && param("gradient_steps") < 1)
      throw std::invalid_argument("AttackSpec guided_removal: gradient_steps >= 1");
    if (decoder_name.empty())
      throw std::invalid_argument("AttackSpec guided_removal: decoder_name required");
  } else {
    throw std::invalid_argument("AttackSpec: unknown kind " + kind);
  }
}

double AttackSpec::param(const std::string& name) const {
  const auto it = params.find(name);
  if (it == params.end())
    throw std::invalid_argument("AttackSpec " + kind + ": missing param " + name);
  return it->second;
}

std::string AttackSpec::label() const {
  char buf[128];
  if (kind == "identity") return "identity";
  if (kind == "jpeg_like") {
    std::snprintf(buf, sizeof(buf), "jpeg_like_q%d", static_cast<int>(param("quality")));
  } else if (kind == "gaussian_noise") {
    std::snprintf(buf, sizeof(buf), "noise_s%g", param("sigma"));
  } else if (kind == "crop") {
    std::snprintf(buf, sizeof(buf), "crop_f%g", param("fraction"));
  } else if (kind == "affine") {
    std::snprintf(buf, sizeof(buf), "affine_a%g_s%g", param("angle"), param("scale"));
  } else if (kind == "blur") {
    std::snprintf(buf, sizeof(buf), "blur_s%g", param("sigma"));
  } else if (kind == "sharpen") {
    std::snprintf(buf, sizeof(buf), "sharpen_a%g", param("amount"));
  } else if (kind == "regeneration") {
    std::snprintf(buf, sizeof(buf), "regen_s%g", param("strength"));
  } else if (kind == "guided_removal") {
    std::snprintf(buf, sizeof(buf), "guided_%s_s%g", decoder_name.c_str(),
                  param("strength"));
  } else {
    return kind;
  }
  return buf;
}

std::string AttackSpec::params_json() const {
  nlohmann::json j(params);  // std::map keeps keys sorted
  if (!decoder_name.empty()) j["decoder"] = decoder_name;
  if (!target_hex.empty()) j["target"] = target_hex;
  return j.dump();
}

ImageGrid apply_attack(const AttackSpec& spec, const ImageGrid& image,
                       const AttackContext& ctx) {
  spec.validate();
  if (spec.kind == "identity") return image;
  if (spec.kind == "jpeg_like")
    return jpeg_like(image, static_cast<int>(spec.param("quality")));
  if (spec.kind == "gaussian_noise")
    return gaussian_noise(image, spec.param("sigma"), spec.seed);
  if (spec.kind == "crop") return crop_border(image, spec.param("fraction"));
  if (spec.kind == "affine")
    return affine(image, spec.param("angle"), spec.param("scale"));
  if (spec.kind == "blur") return blur(image, spec.param("sigma"));
  if (spec.kind == "sharpen") return sharpen(image, spec.param("amount"));

  if (ctx.model == nullptr)
    throw std::invalid_argument("apply_attack: diffusion attack without a model");
  if (spec.kind == "regeneration")
    return regenerate(*ctx.model, image, spec.param("strength"), spec.seed,
                      ctx.sample_steps);
  // guided_removal
  const auto it = ctx.decoders.find(spec.decoder_name);
  if (it == ctx.decoders.end())
    throw std::invalid_argument("apply_attack: unknown decoder " +
                                spec.decoder_name);
  GuidedAttackConfig cfg;
  cfg.strength = spec.param("strength");
  cfg.lambda_weight = spec.param("lambda");
  if (spec.params.count("gradient_steps"))
    cfg.gradient_steps = static_cast<int>(spec.param("gradient_steps"));
  cfg.decoder = it->second;
  if (!spec.target_hex.empty())
    cfg.target_message =
        Payload::from_hex(spec.target_hex, it->second->payload_length());
  return guided_remove(*ctx.model, image, cfg, spec.seed, ctx.sample_steps);
}

}  // namespace wmlab
