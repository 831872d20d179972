#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wmlab/attacks.hpp"
#include "wmlab/corpus.hpp"
#include "wmlab/diffusion.hpp"
#include "wmlab/metrics.hpp"
#include "wmlab/theory_mi.hpp"
#include "wmlab/watermark_learned.hpp"
#include "wmlab/watermark_ss.hpp"

namespace wmlab {

// Everything that determines a run's outputs. Two runs with an equal config
// produce identical CSVs.
struct RunConfig {
  // Corpus: a directory of images, or the built-in synthetic generator when
  // corpus_dir is empty.
  std::string corpus_dir;
  int corpus_count = 512;
  int image_size = 32;
  int channels = 1;
  double train_fraction = 0.8;

  int payload_length = 16;

  SpreadSpectrumConfig ss;
  bool ss_calibrate = true;
  double ss_target_psnr_db = 42.25;

  bool use_learned_codec = true;
  LearnedCodecConfig learned;

  int schedule_T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  DiffusionModelConfig diffusion;

  std::vector<AttackSpec> attacks;  // identity is always prepended
  std::vector<double> sweep_strengths = {0.0, 0.05, 0.1, 0.2, 0.3, 0.4};

  std::uint64_t master_seed = 1;
  std::string output_dir = "wmlab_out";
  int eval_max_images = 100;
  int threads = 2;
  bool allow_training = true;  // error on missing checkpoints when false

  // Table-style default grid: JPEG-50, 10% crop, noise sigma 10,
  // regeneration 0.3, guided removal 0.3 against the row's own codec.
  static RunConfig defaults();

  static RunConfig from_json_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text);
  void to_json_file(const std::string& path) const;
  std::string to_json_text() const;

  // Hashes of the training-relevant sections, used as checkpoint cache keys.
  std::uint64_t ddpm_cache_key() const;
  std::uint64_t codec_cache_key() const;
};

// One row per (image, codec, attack) cell.
struct AttackReport {
  std::string image_id;
  std::string codec;
  std::string attack;
  std::string param_json;
  DecodeMetrics decode;
  double psnr_vs_wm = 0.0;
  double ssim_vs_wm = 0.0;
  double psnr_vs_orig = 0.0;
  double ssim_vs_orig = 0.0;
  bool is_diffusion = false;
  double t_frac = 0.0;
  double one_minus_alpha_bar = 0.0;
};

struct SummaryCell {
  std::string codec;
  std::string attack;
  int n = 0;
  double mean_bit_acc = 0.0;
  double mean_ber = 0.0;
  double payload_success_rate = 0.0;
  double mean_psnr_vs_wm = 0.0;
  double mean_ssim_vs_wm = 0.0;
  double mean_psnr_vs_orig = 0.0;
  double mean_ssim_vs_orig = 0.0;
};

struct EvaluationResult {
  std::vector<AttackReport> rows;
  std::vector<SummaryCell> summary;  // codec-major, attack order of the grid

  const SummaryCell* cell(const std::string& codec,
                          const std::string& attack) const;
};

struct SweepPoint {
  std::string codec;
  double strength = 0.0;
  int t = 0;
  double one_minus_alpha_bar = 0.0;
  double mean_bit_acc = 0.0;
  double mean_psnr_vs_wm = 0.0;
};

// Owns the corpus, the trained models (with checkpoint reuse keyed by the
// training-relevant config hash) and runs the experiment operations.
class Harness {
public:
  explicit Harness(RunConfig config);

  const RunConfig& config() const { return config_; }
  const Corpus& corpus();
  SpreadSpectrumCodec& ss_codec();
  LearnedCodec& learned_codec();
  DiffusionModel& diffusion_model();
  double ss_alpha();  // calibrated embedding strength

  EvaluationResult run_evaluation_grid();
  std::vector<SweepPoint> run_strength_sweep(const std::vector<double>& strengths);
  MICurve analytic_curve();
  DpiReport dpi_report(const std::vector<double>& strengths);

  // Writes summary.csv, reports.csv, mi_curve.csv (when curves are given),
  // sweep.csv (when points are given) and the static charts.
  void emit_report(const EvaluationResult& result,
                   const std::vector<SweepPoint>& sweep,
                   const std::vector<MICurve>& mi_curves,
                   const std::string& output_dir);

private:
  void ensure_corpus();
  AttackContext attack_context();

  RunConfig config_;
  std::optional<Corpus> corpus_;
  std::optional<SpreadSpectrumCodec> ss_;
  std::optional<LearnedCodec> learned_;
  std::optional<DiffusionModel> ddpm_;
  double ss_alpha_ = 0.0;
};

std::string format_csv_double(double v);  // %.6f, "inf" for infinities

}  // namespace wmlab
