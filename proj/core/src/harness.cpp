#include "wmlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "wmlab/errors.hpp"
#include "wmlab/plot.hpp"
#include "wmlab/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wmlab {
namespace {

json attack_to_json(const AttackSpec& a) {
  json j;
  j["kind"] = a.kind;
  j["params"] = a.params;
  if (!a.decoder_name.empty()) j["decoder"] = a.decoder_name;
  if (!a.target_hex.empty()) j["target"] = a.target_hex;
  return j;
}

AttackSpec attack_from_json(const json& j) {
  AttackSpec a;
  a.kind = j.at("kind");
  if (j.contains("params"))
    a.params = j.at("params").get<std::map<std::string, double>>();
  a.decoder_name = j.value("decoder", "");
  a.target_hex = j.value("target", "");
  return a;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

json corpus_section(const RunConfig& c) {
  return json{{"dir", c.corpus_dir},
              {"count", c.corpus_count},
              {"image_size", c.image_size},
              {"channels", c.channels},
              {"train_fraction", c.train_fraction},
              {"master_seed", c.master_seed}};
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.attacks = {
      AttackSpec{"jpeg_like", {{"quality", 50}}, "", "", 0},
      AttackSpec{"crop", {{"fraction", 0.10}}, "", "", 0},
      AttackSpec{"gaussian_noise", {{"sigma", 10}}, "", "", 0},
      AttackSpec{"regeneration", {{"strength", 0.3}}, "", "", 0},
      AttackSpec{"guided_removal",
                 {{"strength", 0.3}, {"lambda", 0.5}, {"gradient_steps", 1}},
                 "self",
                 "",
                 0},
  };
  return c;
}

std::string RunConfig::to_json_text() const {
  json j;
  j["corpus"] = {{"dir", corpus_dir},
                 {"count", corpus_count},
                 {"image_size", image_size},
                 {"channels", channels},
                 {"train_fraction", train_fraction}};
  j["payload_length"] = payload_length;
  j["ss"] = {{"strength_alpha", ss.strength_alpha},
             {"band_lo", ss.band_lo},
             {"band_hi", ss.band_hi},
             {"chips_per_bit", ss.chips_per_bit},
             {"calibrate", ss_calibrate},
             {"target_psnr_db", ss_target_psnr_db}};
  j["learned"] = {{"enabled", use_learned_codec},
                  {"payload_length", learned.payload_length},
                  {"residual_max", learned.residual_max},
                  {"image_loss_weight", learned.image_loss_weight},
                  {"training_steps", learned.training_steps},
                  {"batch_size", learned.batch_size},
                  {"augmentation_set", learned.augmentation_set},
                  {"learning_rate", learned.learning_rate},
                  {"momentum", learned.momentum},
                  {"encoder_channels", learned.encoder_channels},
                  {"decoder_channels", learned.decoder_channels},
                  {"noise_sigma_255", learned.noise_sigma_255},
                  {"jpeg_quality", learned.jpeg_quality},
                  {"blur_sigma", learned.blur_sigma},
                  {"crop_border_max", learned.crop_border_max}};
  j["diffusion"] = {{"T", schedule_T},
                    {"beta_start", beta_start},
                    {"beta_end", beta_end},
                    {"base_channels", diffusion.base_channels},
                    {"time_embed_dim", diffusion.time_embed_dim},
                    {"training_steps", diffusion.training_steps},
                    {"batch_size", diffusion.batch_size},
                    {"learning_rate", diffusion.learning_rate},
                    {"sample_steps", diffusion.sample_steps},
                    {"gate_strength", diffusion.gate_strength},
                    {"gate_psnr_db", diffusion.gate_psnr_db},
                    {"gate_images", diffusion.gate_images}};
  j["attacks"] = json::array();
  for (const auto& a : attacks) j["attacks"].push_back(attack_to_json(a));
  j["sweep_strengths"] = sweep_strengths;
  j["master_seed"] = master_seed;
  j["output_dir"] = output_dir;
  j["eval_max_images"] = eval_max_images;
  j["threads"] = threads;
  j["allow_training"] = allow_training;
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  RunConfig c;
  if (j.contains("corpus")) {
    const auto& jc = j.at("corpus");
    c.corpus_dir = jc.value("dir", c.corpus_dir);
    c.corpus_count = jc.value("count", c.corpus_count);
    c.image_size = jc.value("image_size", c.image_size);
    c.channels = jc.value("channels", c.channels);
    c.train_fraction = jc.value("train_fraction", c.train_fraction);
  }
  c.payload_length = j.value("payload_length", c.payload_length);
  if (j.contains("ss")) {
    const auto& js = j.at("ss");
    c.ss.strength_alpha = js.value("strength_alpha", c.ss.strength_alpha);
    c.ss.band_lo = js.value("band_lo", c.ss.band_lo);
    c.ss.band_hi = js.value("band_hi", c.ss.band_hi);
    c.ss.chips_per_bit = js.value("chips_per_bit", c.ss.chips_per_bit);
    c.ss_calibrate = js.value("calibrate", c.ss_calibrate);
    c.ss_target_psnr_db = js.value("target_psnr_db", c.ss_target_psnr_db);
  }
  if (j.contains("learned")) {
    const auto& jl = j.at("learned");
    c.use_learned_codec = jl.value("enabled", c.use_learned_codec);
    c.learned.payload_length = jl.value("payload_length", c.learned.payload_length);
    c.learned.residual_max = jl.value("residual_max", c.learned.residual_max);
    c.learned.image_loss_weight =
        jl.value("image_loss_weight", c.learned.image_loss_weight);
    c.learned.training_steps = jl.value("training_steps", c.learned.training_steps);
    c.learned.batch_size = jl.value("batch_size", c.learned.batch_size);
    if (jl.contains("augmentation_set"))
      c.learned.augmentation_set =
          jl.at("augmentation_set").get<std::vector<std::string>>();
    c.learned.learning_rate = jl.value("learning_rate", c.learned.learning_rate);
    c.learned.momentum = jl.value("momentum", c.learned.momentum);
    c.learned.encoder_channels =
        jl.value("encoder_channels", c.learned.encoder_channels);
    c.learned.decoder_channels =
        jl.value("decoder_channels", c.learned.decoder_channels);
    c.learned.noise_sigma_255 = jl.value("noise_sigma_255", c.learned.noise_sigma_255);
    c.learned.jpeg_quality = jl.value("jpeg_quality", c.learned.jpeg_quality);
    c.learned.blur_sigma = jl.value("blur_sigma", c.learned.blur_sigma);
    c.learned.crop_border_max = jl.value("crop_border_max", c.learned.crop_border_max);
  }
  if (j.contains("diffusion")) {
    const auto& jd = j.at("diffusion");
    c.schedule_T = jd.value("T", c.schedule_T);
    c.beta_start = jd.value("beta_start", c.beta_start);
    c.beta_end = jd.value("beta_end", c.beta_end);
    c.diffusion.base_channels = jd.value("base_channels", c.diffusion.base_channels);
    c.diffusion.time_embed_dim = jd.value("time_embed_dim", c.diffusion.time_embed_dim);
    c.diffusion.training_steps = jd.value("training_steps", c.diffusion.training_steps);
    c.diffusion.batch_size = jd.value("batch_size", c.diffusion.batch_size);
    c.diffusion.learning_rate = jd.value("learning_rate", c.diffusion.learning_rate);
    c.diffusion.sample_steps = jd.value("sample_steps", c.diffusion.sample_steps);
    c.diffusion.gate_strength = jd.value("gate_strength", c.diffusion.gate_strength);
    c.diffusion.gate_psnr_db = jd.value("gate_psnr_db", c.diffusion.gate_psnr_db);
    c.diffusion.gate_images = jd.value("gate_images", c.diffusion.gate_images);
  }
  if (j.contains("attacks")) {
    c.attacks.clear();
    for (const auto& ja : j.at("attacks")) c.attacks.push_back(attack_from_json(ja));
  } else {
    c.attacks = RunConfig::defaults().attacks;
  }
  if (j.contains("sweep_strengths"))
    c.sweep_strengths = j.at("sweep_strengths").get<std::vector<double>>();
  c.master_seed = j.value("master_seed", c.master_seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.eval_max_images = j.value("eval_max_images", c.eval_max_images);
  c.threads = j.value("threads", c.threads);
  c.allow_training = j.value("allow_training", c.allow_training);
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

void RunConfig::to_json_file(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write run config: " + path);
  out << to_json_text();
}

std::uint64_t RunConfig::ddpm_cache_key() const {
  json j;
  j["corpus"] = corpus_section(*this);
  j["schedule"] = {{"T", schedule_T}, {"beta_start", beta_start}, {"beta_end", beta_end}};
  j["model"] = {{"base_channels", diffusion.base_channels},
                {"time_embed_dim", diffusion.time_embed_dim},
                {"training_steps", diffusion.training_steps},
                {"batch_size", diffusion.batch_size},
                {"learning_rate", diffusion.learning_rate}};
  return fnv1a(j.dump());
}

std::uint64_t RunConfig::codec_cache_key() const {
  json j;
  j["corpus"] = corpus_section(*this);
  j["codec"] = {{"payload_length", learned.payload_length},
                {"residual_max", learned.residual_max},
                {"image_loss_weight", learned.image_loss_weight},
                {"training_steps", learned.training_steps},
                {"batch_size", learned.batch_size},
                {"augmentation_set", learned.augmentation_set},
                {"learning_rate", learned.learning_rate},
                {"momentum", learned.momentum},
                {"encoder_channels", learned.encoder_channels},
                {"decoder_channels", learned.decoder_channels},
                {"noise_sigma_255", learned.noise_sigma_255},
                {"jpeg_quality", learned.jpeg_quality},
                {"blur_sigma", learned.blur_sigma},
                {"crop_border_max", learned.crop_border_max}};
  return fnv1a(j.dump());
}

const SummaryCell* EvaluationResult::cell(const std::string& codec,
                                          const std::string& attack) const {
  for (const auto& c : summary)
    if (c.codec == codec && c.attack == attack) return &c;
  return nullptr;
}

// ----------------------------------------------------------- Harness ----

Harness::Harness(RunConfig config) : config_(std::move(config)) {
  if (config_.payload_length != 16 && config_.payload_length != 32 &&
      config_.payload_length != 56)
    throw std::invalid_argument("payload_length must be 16, 32 or 56");
  config_.learned.payload_length = config_.payload_length;
}

void Harness::ensure_corpus() {
  if (corpus_) return;
  Corpus c = config_.corpus_dir.empty()
                 ? make_synthetic_corpus(config_.corpus_count, config_.image_size,
                                         config_.channels,
                                         derive_seed(config_.master_seed, "corpus"))
                 : load_corpus(config_.corpus_dir, config_.image_size);
  corpus_ = split_corpus(std::move(c), config_.train_fraction,
                         derive_seed(config_.master_seed, "split"));
}

const Corpus& Harness::corpus() {
  ensure_corpus();
  return *corpus_;
}

SpreadSpectrumCodec& Harness::ss_codec() {
  if (!ss_) {
    ensure_corpus();
    const WatermarkKey key{derive_seed(config_.master_seed, "ss-key")};
    SpreadSpectrumConfig cfg = config_.ss;
    if (config_.ss_calibrate) {
      // Calibrate on a train-split sample to keep the startup cheap.
      Corpus sample;
      const int n = std::min<int>(32, static_cast<int>(corpus_->train_indices.size()));
      for (int i = 0; i < n; ++i)
        sample.images.push_back(corpus_->images[corpus_->train_indices[i]]);
      sample.train_indices.resize(n);
      for (int i = 0; i < n; ++i) sample.train_indices[i] = i;
      cfg.strength_alpha = calibrate_ss_alpha(
          sample, config_.payload_length, key, cfg, config_.ss_target_psnr_db,
          derive_seed(config_.master_seed, "ss-calibration"));
    }
    ss_.emplace(config_.payload_length, key, cfg);
    ss_alpha_ = cfg.strength_alpha;
  }
  return *ss_;
}

double Harness::ss_alpha() {
  ss_codec();
  return ss_alpha_;
}

LearnedCodec& Harness::learned_codec() {
  if (!learned_) {
    ensure_corpus();
    const fs::path cache_dir = fs::path(config_.output_dir) / "cache";
    char name[64];
    std::snprintf(name, sizeof(name), "codec_%016llx.ckpt",
                  static_cast<unsigned long long>(config_.codec_cache_key()));
    const fs::path path = cache_dir / name;
    if (fs::exists(path)) {
      learned_ = LearnedCodec::load(path.string());
    } else {
      if (!config_.allow_training)
        throw std::runtime_error(
            "learned codec checkpoint missing and training disabled: " +
            path.string());
      learned_ = train_codec(*corpus_, config_.learned,
                             derive_seed(config_.master_seed, "codec-train"));
      fs::create_directories(cache_dir);
      learned_->save(path.string());
    }
  }
  return *learned_;
}

std::uint64_t RunConfig_seed_for_ddpm(const RunConfig& c) {
  return derive_seed(c.master_seed, "ddpm-train");
}

DiffusionModel& Harness::diffusion_model() {
  if (!ddpm_) {
    ensure_corpus();
    const fs::path cache_dir = fs::path(config_.output_dir) / "cache";
    char name[64];
    std::snprintf(name, sizeof(name), "ddpm_%016llx.ckpt",
                  static_cast<unsigned long long>(config_.ddpm_cache_key()));
    const fs::path path = cache_dir / name;
    if (fs::exists(path)) {
      ddpm_ = DiffusionModel::load(path.string());
    } else {
      if (!config_.allow_training)
        throw std::runtime_error(
            "diffusion checkpoint missing and training disabled: " +
            path.string());
      const DiffusionSchedule schedule = DiffusionSchedule::linear(
          config_.schedule_T, config_.beta_start, config_.beta_end);
      ddpm_ = train_ddpm(*corpus_, schedule, config_.diffusion,
                         RunConfig_seed_for_ddpm(config_));
      fs::create_directories(cache_dir);
      ddpm_->save(path.string());
    }
  }
  return *ddpm_;
}

AttackContext Harness::attack_context() {
  AttackContext ctx;
  ctx.model = &diffusion_model();
  ctx.decoders["ss"] = &ss_codec();
  if (config_.use_learned_codec) ctx.decoders["learned"] = &learned_codec();
  ctx.sample_steps = config_.diffusion.sample_steps;
  return ctx;
}

EvaluationResult Harness::run_evaluation_grid() {
  ensure_corpus();
  const bool needs_diffusion = [&] {
    for (const auto& a : config_.attacks)
      if (a.is_diffusion()) return true;
    return false;
  }();

  std::vector<AttackSpec> grid;
  grid.push_back(AttackSpec{});  // identity / No Attack column
  for (const auto& a : config_.attacks) grid.push_back(a);

  // Codecs under evaluation.
  std::vector<const WatermarkDecoder*> codecs;
  ss_codec();
  codecs.push_back(&*ss_);
  if (config_.use_learned_codec) {
    learned_codec();
    codecs.push_back(&*learned_);
  }

  AttackContext ctx;
  if (needs_diffusion) ctx = attack_context();
  else {
    ctx.decoders["ss"] = &*ss_;
    if (config_.use_learned_codec) ctx.decoders["learned"] = &*learned_;
  }

  const auto& test_idx = corpus_->test_indices;
  const int n_img = std::min<int>(config_.eval_max_images,
                                  static_cast<int>(test_idx.size()));
  if (n_img == 0) throw CorpusError("run_evaluation_grid: empty test split");
  const int n_codec = static_cast<int>(codecs.size());
  const int n_attack = static_cast<int>(grid.size());

  EvaluationResult result;
  result.rows.resize(static_cast<std::size_t>(n_img) * n_codec * n_attack);

  const DiffusionSchedule* schedule =
      needs_diffusion ? &ddpm_->schedule() : nullptr;

  nn::parallel_for(n_img, config_.threads, [&](int ii) {
    const ImageGrid& original = corpus_->images[test_idx[ii]];
    const Payload payload = Payload::random(
        config_.payload_length, derive_seed(config_.master_seed, "payload", ii));
    for (int ci = 0; ci < n_codec; ++ci) {
      const WatermarkDecoder* codec = codecs[ci];
      const ImageGrid wm =
          codec->name() == "ss" ? ss_->embed(original, payload)
                                : learned_->embed(original, payload);
      for (int ai = 0; ai < n_attack; ++ai) {
        AttackSpec spec = grid[ai];
        if (spec.kind == "guided_removal" &&
            (spec.decoder_name == "self" || spec.decoder_name.empty()))
          spec.decoder_name = codec->name();
        spec.seed = derive_seed(config_.master_seed, "attack", ai,
                                static_cast<std::uint64_t>(ii));
        const ImageGrid attacked = apply_attack(spec, wm, ctx);

        AttackReport row;
        row.image_id = corpus_->names[test_idx[ii]];
        row.codec = codec->name();
        row.attack = spec.label();
        row.param_json = spec.params_json();
        row.decode = bit_metrics(payload, codec->decode(attacked));
        row.psnr_vs_wm = psnr(wm, attacked);
        row.ssim_vs_wm = ssim(wm, attacked);
        row.psnr_vs_orig = psnr(original, attacked);
        row.ssim_vs_orig = ssim(original, attacked);
        row.is_diffusion = spec.is_diffusion();
        if (row.is_diffusion && schedule) {
          row.t_frac = spec.param("strength");
          const int t = static_cast<int>(std::llround(row.t_frac * schedule->T));
          row.one_minus_alpha_bar = 1.0 - schedule->alpha_bar(t);
        }
        result.rows[(static_cast<std::size_t>(ii) * n_codec + ci) * n_attack +
                    ai] = std::move(row);
      }
    }
  });

  // Summary: corpus means per (codec, attack) cell in grid order.
  for (int ci = 0; ci < n_codec; ++ci) {
    for (int ai = 0; ai < n_attack; ++ai) {
      SummaryCell cell;
      cell.codec = codecs[ci]->name();
      for (int ii = 0; ii < n_img; ++ii) {
        const AttackReport& row =
            result.rows[(static_cast<std::size_t>(ii) * n_codec + ci) * n_attack +
                        ai];
        if (ii == 0) cell.attack = row.attack;
        cell.n += 1;
        cell.mean_bit_acc += row.decode.bit_accuracy;
        cell.mean_ber += row.decode.ber;
        cell.payload_success_rate += row.decode.payload_success ? 1.0 : 0.0;
        cell.mean_psnr_vs_wm += row.psnr_vs_wm;
        cell.mean_ssim_vs_wm += row.ssim_vs_wm;
        cell.mean_psnr_vs_orig += row.psnr_vs_orig;
        cell.mean_ssim_vs_orig += row.ssim_vs_orig;
      }
      cell.mean_bit_acc /= cell.n;
      cell.mean_ber /= cell.n;
      cell.payload_success_rate /= cell.n;
      cell.mean_psnr_vs_wm /= cell.n;
      cell.mean_ssim_vs_wm /= cell.n;
      cell.mean_psnr_vs_orig /= cell.n;
      cell.mean_ssim_vs_orig /= cell.n;
      result.summary.push_back(std::move(cell));
    }
  }
  return result;
}

std::vector<SweepPoint> Harness::run_strength_sweep(
    const std::vector<double>& strengths) {
  ensure_corpus();
  ss_codec();
  DiffusionModel& model = diffusion_model();
  std::vector<const WatermarkDecoder*> codecs{&*ss_};
  if (config_.use_learned_codec) {
    learned_codec();
    codecs.push_back(&*learned_);
  }

  const auto& test_idx = corpus_->test_indices;
  const int n_img = std::min<int>(config_.eval_max_images,
                                  static_cast<int>(test_idx.size()));
  if (n_img == 0) throw CorpusError("run_strength_sweep: empty test split");

  std::vector<SweepPoint> points;
  for (const WatermarkDecoder* codec : codecs) {
    for (std::size_t si = 0; si < strengths.size(); ++si) {
      const double s = strengths[si];
      std::vector<double> accs(n_img), psnrs(n_img);
      nn::parallel_for(n_img, config_.threads, [&](int ii) {
        const ImageGrid& original = corpus_->images[test_idx[ii]];
        const Payload payload = Payload::random(
            config_.payload_length,
            derive_seed(config_.master_seed, "payload", ii));
        const ImageGrid wm = codec->name() == "ss"
                                 ? ss_->embed(original, payload)
                                 : learned_->embed(original, payload);
        const ImageGrid attacked =
            s == 0.0 ? wm
                     : model.regenerate(
                           wm, s,
                           derive_seed(config_.master_seed, "sweep", si,
                                       static_cast<std::uint64_t>(ii)),
                           config_.diffusion.sample_steps);
        accs[ii] = bit_metrics(payload, codec->decode(attacked)).bit_accuracy;
        psnrs[ii] = psnr(wm, attacked);
      });
      SweepPoint p;
      p.codec = codec->name();
      p.strength = s;
      p.t = static_cast<int>(std::llround(s * model.schedule().T));
      p.one_minus_alpha_bar = 1.0 - model.schedule().alpha_bar(p.t);
      for (int ii = 0; ii < n_img; ++ii) {
        p.mean_bit_acc += accs[ii];
        p.mean_psnr_vs_wm += psnrs[ii];
      }
      p.mean_bit_acc /= n_img;
      p.mean_psnr_vs_wm /= n_img;
      points.push_back(p);
    }
  }
  return points;
}

MICurve Harness::analytic_curve() {
  ss_codec();
  const DiffusionSchedule schedule = DiffusionSchedule::linear(
      config_.schedule_T, config_.beta_start, config_.beta_end);
  return analytic_mi_curve(schedule, ss_->amplitude_normalized());
}

DpiReport Harness::dpi_report(const std::vector<double>& strengths) {
  ensure_corpus();
  ss_codec();
  DiffusionModel& model = diffusion_model();
  return dpi_consistency(model.schedule(), ss_->amplitude_normalized(), model,
                         *ss_, *corpus_, strengths,
                         derive_seed(config_.master_seed, "dpi"),
                         config_.eval_max_images);
}

std::string format_csv_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

void Harness::emit_report(const EvaluationResult& result,
                          const std::vector<SweepPoint>& sweep,
                          const std::vector<MICurve>& mi_curves,
                          const std::string& output_dir) {
  fs::create_directories(output_dir);
  {
    std::ofstream out(fs::path(output_dir) / "reports.csv", std::ios::trunc);
    if (!out) throw IoError("cannot write reports.csv");
    out << "image_id,codec,attack,param_json,bit_acc,ber,success,psnr_vs_wm,"
           "ssim_vs_wm,psnr_vs_orig,ssim_vs_orig,t_frac,one_minus_alpha_bar\n";
    for (const auto& r : result.rows) {
      out << r.image_id << ',' << r.codec << ',' << r.attack << ','
          << csv_quote(r.param_json) << ','
          << format_csv_double(r.decode.bit_accuracy) << ','
          << format_csv_double(r.decode.ber) << ','
          << (r.decode.payload_success ? 1 : 0) << ','
          << format_csv_double(r.psnr_vs_wm) << ','
          << format_csv_double(r.ssim_vs_wm) << ','
          << format_csv_double(r.psnr_vs_orig) << ','
          << format_csv_double(r.ssim_vs_orig) << ',';
      if (r.is_diffusion)
        out << format_csv_double(r.t_frac) << ','
            << format_csv_double(r.one_minus_alpha_bar) << '\n';
      else
        out << ",\n";
    }
  }
  {
    std::ofstream out(fs::path(output_dir) / "summary.csv", std::ios::trunc);
    if (!out) throw IoError("cannot write summary.csv");
    out << "codec,attack,n,bit_acc,ber,payload_success_rate,psnr_vs_wm,"
           "ssim_vs_wm,psnr_vs_orig,ssim_vs_orig\n";
    for (const auto& c : result.summary) {
      out << c.codec << ',' << c.attack << ',' << c.n << ','
          << format_csv_double(c.mean_bit_acc) << ','
          << format_csv_double(c.mean_ber) << ','
          << format_csv_double(c.payload_success_rate) << ','
          << format_csv_double(c.mean_psnr_vs_wm) << ','
          << format_csv_double(c.mean_ssim_vs_wm) << ','
          << format_csv_double(c.mean_psnr_vs_orig) << ','
          << format_csv_double(c.mean_ssim_vs_orig) << '\n';
    }
  }
  if (!sweep.empty()) {
    std::ofstream out(fs::path(output_dir) / "sweep.csv", std::ios::trunc);
    if (!out) throw IoError("cannot write sweep.csv");
    out << "codec,strength,t,one_minus_alpha_bar,bit_acc,psnr_vs_wm\n";
    for (const auto& p : sweep) {
      out << p.codec << ',' << format_csv_double(p.strength) << ',' << p.t << ','
          << format_csv_double(p.one_minus_alpha_bar) << ','
          << format_csv_double(p.mean_bit_acc) << ','
          << format_csv_double(p.mean_psnr_vs_wm) << '\n';
    }

    // Accuracy-vs-strength chart, one series per codec.
    std::vector<PlotSeries> series;
    for (const auto& p : sweep) {
      if (series.empty() || series.back().label != p.codec)
        series.push_back(PlotSeries{p.codec, {}, {}});
      series.back().x.push_back(p.strength);
      series.back().y.push_back(p.mean_bit_acc);
    }
    save_chart(render_line_chart(series),
               (fs::path(output_dir) / "accuracy_vs_strength.png").string());
  }
  if (!mi_curves.empty()) {
    write_mi_curve_csv(mi_curves, (fs::path(output_dir) / "mi_curve.csv").string());
    std::vector<PlotSeries> series;
    for (const auto& curve : mi_curves) {
      PlotSeries s;
      s.label = curve.variant;
      for (std::size_t i = 0; i < curve.timesteps.size(); ++i) {
        s.x.push_back(curve.timesteps[i]);
        s.y.push_back(curve.mi_bits[i]);
      }
      series.push_back(std::move(s));
    }
    save_chart(render_line_chart(series),
               (fs::path(output_dir) / "mi_vs_t.png").string());
  }
  if (!result.summary.empty()) {
    // Bar chart of bit accuracy per attack, one series per codec.
    std::vector<std::string> attacks;
    std::vector<PlotSeries> series;
    for (const auto& c : result.summary) {
      if (std::find(attacks.begin(), attacks.end(), c.attack) == attacks.end())
        attacks.push_back(c.attack);
      PlotSeries* s = nullptr;
      for (auto& sr : series)
        if (sr.label == c.codec) s = &sr;
      if (!s) {
        series.push_back(PlotSeries{c.codec, {}, {}});
        s = &series.back();
      }
      s->y.push_back(c.mean_bit_acc);
    }
    save_chart(render_bar_chart(attacks, series),
               (fs::path(output_dir) / "summary_accuracy.png").string());
  }
}

}  // namespace wmlab
