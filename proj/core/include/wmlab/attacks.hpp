#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "wmlab/diffusion.hpp"
#include "wmlab/image.hpp"
#include "wmlab/watermark.hpp"
#include "wmlab/watermark_ss.hpp"

namespace wmlab {

// Parameters of the decoder-guided removal attack. The loss
// ||decoder_outputs - targets||^2 is applied at the final reverse step and
// the latent is updated by gradient_steps explicit descent steps of size
// lambda_weight, then clamped to the valid normalized range [-1, 1].
struct GuidedAttackConfig {
  double lambda_weight = 0.5;
  Payload target_message;  // empty = all-zeros of the decoder's length
  int gradient_steps = 1;
  double strength = 0.3;
  const WatermarkDecoder* decoder = nullptr;

  void validate() const;
};

// Unguided regeneration: noise to round(strength * T), deterministic
// denoising back. Strength 0 is the identity. Throws when the model has not
// been trained.
ImageGrid regenerate(const DiffusionModel& model, const ImageGrid& image,
                     double strength, std::uint64_t seed, int step_count = 0);

ImageGrid guided_remove(const DiffusionModel& model, const ImageGrid& image,
                        const GuidedAttackConfig& config, std::uint64_t seed,
                        int step_count = 0);

// Smallest lambda for which one guided step provably lands the
// spread-spectrum decoder on the target bits (host interference aside):
// the closed-form update multiplies (z - z~) by (1 - lambda c / 2), so
// lambda >= 2 / chips_per_bit suffices.
double ss_guided_lambda_min(const SpreadSpectrumCodec& codec);

// Declarative attack description used by run configs and reports.
// kind: identity | jpeg_like | gaussian_noise | crop | affine | blur |
//       sharpen | regeneration | guided_removal
struct AttackSpec {
  std::string kind = "identity";
  std::map<std::string, double> params;
  std::string decoder_name;  // guided_removal: which decoder to target
  std::string target_hex;    // guided_removal: target payload (empty = zeros)
  std::uint64_t seed = 0;

  void validate() const;
  double param(const std::string& name) const;
  bool is_diffusion() const {
    return kind == "regeneration" || kind == "guided_removal";
  }
  // Stable label for CSV rows and filenames, e.g. "jpeg_like_q50".
  std::string label() const;
  // Canonical JSON rendering of the parameter map.
  std::string params_json() const;
};

struct AttackContext {
  const DiffusionModel* model = nullptr;
  std::map<std::string, const WatermarkDecoder*> decoders;
  int sample_steps = 0;  // 0 = model default
};

ImageGrid apply_attack(const AttackSpec& spec, const ImageGrid& image,
                       const AttackContext& ctx);

}  // namespace wmlab
