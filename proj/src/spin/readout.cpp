#include "hprobe/spin/readout.hpp"

#include <cmath>
#include <random>

#include "hprobe/core/error.hpp"
#include "hprobe/core/rng.hpp"

namespace hprobe::spin {

void ReadoutParams::validate() const {
  if (cycles_per_transition < 1) throw ValidationError("cycles_per_transition must be >= 1");
  require_in_range(detection_efficiency, 0.0, 1.0, "detection_efficiency");
  require_in_range(spin_flip_probability, 0.0, 1.0, "spin_flip_probability");
  require_in_range(initial_up_probability, 0.0, 1.0, "initial_up_probability");
  if (!(photons_per_excitation >= 0.0)) throw ValidationError("photons_per_excitation must be >= 0");
  if (!(dark_rate >= 0.0)) throw ValidationError("dark_rate must be >= 0");
  if (!(cycle_duration > 0.0)) throw ValidationError("cycle_duration must be > 0");
}

double ReadoutParams::bright_mean() const {
  return cycles_per_transition * (photons_per_excitation * detection_efficiency + dark_rate * cycle_duration);
}

double ReadoutParams::dark_mean() const { return cycles_per_transition * dark_rate * cycle_duration; }

PhotonTrace readout_monte_carlo(const ReadoutParams& p, double duration, std::uint64_t seed) {
  p.validate();
  if (!(duration > 0.0)) throw ValidationError("readout duration must be > 0");
  const auto windows = static_cast<std::size_t>(std::floor(duration / p.window_duration() + 1e-9));
  auto eng = rng::stream(seed, 0, 0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double signal = p.photons_per_excitation * p.detection_efficiency;
  const double dark = p.dark_rate * p.cycle_duration;

  auto poisson = [&](double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<int>(mean)(eng);
  };

  PhotonTrace t;
  bool up = uni(eng) < p.initial_up_probability;
  for (std::size_t w = 0; w < windows; ++w) {
    if (p.reinitialize_each_window && w > 0) up = uni(eng) < p.initial_up_probability;
    t.time_bins.push_back(static_cast<double>(w) * p.window_duration());
    t.true_state_up.push_back(up);
    int counts[2] = {0, 0};
    for (int block = 0; block < 2; ++block) {
      // block 0 excites A (bright for up), block 1 excites B (bright for down)
      for (int c = 0; c < p.cycles_per_transition; ++c) {
        const bool bright = (block == 0) == up;
        counts[block] += poisson(dark + (bright ? signal : 0.0));
        if (p.spin_flip_probability > 0.0 && uni(eng) < p.spin_flip_probability) up = !up;
      }
    }
    t.counts_A.push_back(counts[0]);
    t.counts_B.push_back(counts[1]);
  }
  return t;
}

Classification classify_state(const PhotonTrace& t, int threshold) {
  if (t.counts_A.size() != t.counts_B.size() || t.counts_A.size() != t.true_state_up.size())
    throw ValidationError("photon trace arrays differ in length");
  if (threshold < 0) throw ValidationError("classification threshold must be >= 0");
  Classification c;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < t.counts_A.size(); ++i) {
    const bool est = t.counts_A[i] - t.counts_B[i] >= threshold;
    c.estimate_up.push_back(est);
    if (est == t.true_state_up[i]) ++correct;
  }
  c.fidelity = t.counts_A.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(t.counts_A.size());
  return c;
}

namespace {

std::vector<double> poisson_pmf(double mean, double tail = 1e-16) {
  std::vector<double> pmf;
  if (mean <= 0.0) return {1.0};
  const int kmax = static_cast<int>(std::ceil(mean + 12.0 * std::sqrt(mean) + 30.0));
  double cum = 0.0;
  for (int k = 0; k <= kmax; ++k) {
    pmf.push_back(std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0)));
    cum += pmf.back();
    if (k > mean && 1.0 - cum < tail) break;
  }
  return pmf;
}

// P(X - Y >= t) for independent Poisson X (mean mx), Y (mean my).
double skellam_tail(double mx, double my, int t) {
  const auto px = poisson_pmf(mx), py = poisson_pmf(my);
  double s = 0.0;
  for (std::size_t y = 0; y < py.size(); ++y) {
    const long need = static_cast<long>(y) + t;  // x >= y + t
    double tx = 0.0;
    for (long x = std::max(0L, need); x < static_cast<long>(px.size()); ++x) tx += px[static_cast<std::size_t>(x)];
    s += py[y] * tx;
  }
  return s;
}

}  // namespace

double poisson_discrimination_fidelity(double bright, double dark, int t) {
  if (!(bright >= 0.0) || !(dark >= 0.0)) throw ValidationError("Poisson means must be >= 0");
  const double up_ok = skellam_tail(bright, dark, t);
  const double down_ok = 1.0 - skellam_tail(dark, bright, t);
  return 0.5 * (up_ok + down_ok);
}

int optimal_threshold(double bright, double dark, int range) {
  int best = 0;
  double fbest = -1.0;
  for (int t = 0; t <= range; ++t) {
    const double f = poisson_discrimination_fidelity(bright, dark, t);
    if (f > fbest + 1e-15) {
      fbest = f;
      best = t;
    }
  }
  return best;
}

}  // namespace hprobe::spin
