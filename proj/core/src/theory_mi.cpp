#include "wmlab/theory_mi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>

#include "wmlab/attacks.hpp"
#include "wmlab/errors.hpp"
#include "wmlab/metrics.hpp"
#include "wmlab/rng.hpp"

namespace wmlab {
namespace {

// Nodes by Newton iteration on the normalized Hermite recurrence, largest
// root first with the usual asymptotic starting guesses.
GaussHermite compute_gauss_hermite(int n) {
  if (n < 2) throw std::invalid_argument("GaussHermite: n < 2");
  const double eps = 3e-14;
  const double pim4 = 0.7511255444649424828587;  // pi^(-1/4)
  GaussHermite gh;
  gh.nodes.assign(n, 0.0);
  gh.weights.assign(n, 0.0);

  const int m = (n + 1) / 2;
  double z = 0.0, pp = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) -
          1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * gh.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * gh.nodes[1];
    } else {
      z = 2.0 * z - gh.nodes[i - 2];
    }
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= eps) break;
    }
    gh.nodes[i] = z;
    gh.nodes[n - 1 - i] = -z;
    gh.weights[i] = 2.0 / (pp * pp);
    gh.weights[n - 1 - i] = gh.weights[i];
  }
  return gh;
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

}  // namespace

const GaussHermite& GaussHermite::cached(int n) {
  static std::mutex mu;
  static std::map<int, GaussHermite> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_hermite(n)).first;
  return it->second;
}

double mi_binary_gaussian(double snr, int quadrature_nodes) {
  if (snr < 0.0) throw std::invalid_argument("mi_binary_gaussian: snr < 0");
  if (snr == 0.0) return 0.0;
  if (std::isinf(snr)) return 1.0;
  const GaussHermite& gh = GaussHermite::cached(quadrature_nodes);
  const double mu = std::sqrt(snr);
  const double inv_sqrt_pi = 0.5641895835477562869481;
  const double sqrt2 = 1.4142135623730950488017;
  double acc = 0.0;
  for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
    const double zval = sqrt2 * gh.nodes[k] + mu;  // z ~ N(mu, 1)
    const double a = 2.0 * mu * zval;
    const double p = 1.0 / (1.0 + std::exp(-a));  // P(W=+1 | z)
    acc += gh.weights[k] * binary_entropy(p);
  }
  const double mi = 1.0 - inv_sqrt_pi * acc;
  return std::clamp(mi, 0.0, 1.0);
}

double channel_snr(const DiffusionSchedule& schedule, double amplitude, int t) {
  if (amplitude <= 0.0) throw std::invalid_argument("channel_snr: amplitude <= 0");
  const double ab = schedule.alpha_bar(t);
  if (t == 0 || ab >= 1.0) return std::numeric_limits<double>::infinity();
  return ab * amplitude * amplitude / (1.0 - ab);
}

MICurve analytic_mi_curve(const DiffusionSchedule& schedule, double amplitude) {
  if (amplitude <= 0.0)
    throw std::invalid_argument("analytic_mi_curve: amplitude <= 0");
  MICurve curve;
  curve.variant = "analytic";
  curve.timesteps.reserve(schedule.T);
  for (int t = 1; t <= schedule.T; ++t) {
    const double snr = channel_snr(schedule, amplitude, t);
    curve.timesteps.push_back(t);
    curve.alpha_bars.push_back(schedule.alpha_bar(t));
    curve.snrs.push_back(snr);
    curve.mi_bits.push_back(mi_binary_gaussian(snr));
  }
  return curve;
}

double plugin_mi(const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.size() < 100)
    throw std::invalid_argument("plugin_mi: need at least 100 pairs");
  double joint[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (const auto& [a, b] : pairs) {
    if ((a != 0 && a != 1) || (b != 0 && b != 1))
      throw std::invalid_argument("plugin_mi: symbols must be binary");
    joint[a][b] += 1.0;
  }
  const double n = static_cast<double>(pairs.size());
  double px[2] = {0.0, 0.0}, py[2] = {0.0, 0.0};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      joint[a][b] /= n;
      px[a] += joint[a][b];
      py[b] += joint[a][b];
    }
  double mi = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      if (joint[a][b] <= 0.0) continue;
      mi += joint[a][b] * std::log2(joint[a][b] / (px[a] * py[b]));
    }
  return std::clamp(mi, 0.0, 1.0);
}

void write_mi_curve_csv(const std::vector<MICurve>& curves,
                        const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write MI curve CSV: " + path);
  out << "t,alpha_bar,snr,mi_bits,variant\n";
  char buf[160];
  for (const auto& curve : curves) {
    for (std::size_t i = 0; i < curve.timesteps.size(); ++i) {
      const double snr = curve.snrs.empty() ? 0.0 : curve.snrs[i];
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%s\n",
                    curve.timesteps[i], curve.alpha_bars[i], snr,
                    curve.mi_bits[i], curve.variant.c_str());
      out << buf;
    }
  }
  if (!out) throw IoError("MI curve CSV write failed: " + path);
}

DpiReport dpi_consistency(const DiffusionSchedule& schedule, double amplitude,
                          const DiffusionModel& model,
                          const SpreadSpectrumCodec& codec, const Corpus& corpus,
                          const std::vector<double>& strengths,
                          std::uint64_t seed, int max_images) {
  if (!model.trained())
    throw std::invalid_argument("dpi_consistency: untrained model");
  const auto& idx = corpus.test_indices.empty() ? corpus.train_indices
                                                : corpus.test_indices;
  const int n = std::min<int>(max_images, static_cast<int>(idx.size()));
  if (n == 0) throw CorpusError("dpi_consistency: no evaluation images");

  DpiReport report;
  report.consistent = true;
  for (const double s : strengths) {
    const int t = static_cast<int>(std::llround(s * schedule.T));
    const double analytic =
        t == 0 ? 1.0 : mi_binary_gaussian(channel_snr(schedule, amplitude, t));

    std::vector<std::vector<std::pair<int, int>>> per_image(n);
    nn::parallel_for(n, 2, [&](int i) {
      const ImageGrid& img = corpus.images[idx[i]];
      const Payload payload = Payload::random(
          codec.payload_length(), derive_seed(seed, "dpi-payload", i));
      const ImageGrid wm = codec.embed(img, payload);
      const ImageGrid attacked =
          s == 0.0 ? wm
                   : model.regenerate(wm, s, derive_seed(seed, "dpi-noise", i,
                                                         static_cast<std::uint64_t>(t)));
      const Payload decoded = codec.decode(attacked);
      for (int b = 0; b < payload.length(); ++b)
        per_image[i].emplace_back(payload.bits[b], decoded.bits[b]);
    });
    std::vector<std::pair<int, int>> pairs;
    for (const auto& pi : per_image) pairs.insert(pairs.end(), pi.begin(), pi.end());

    const double empirical = plugin_mi(pairs);
    report.strengths.push_back(s);
    report.timesteps.push_back(t);
    report.analytic_bits.push_back(analytic);
    report.empirical_bits.push_back(empirical);
    if (empirical > analytic + report.epsilon) report.consistent = false;
  }
  return report;
}

}  // namespace wmlab
