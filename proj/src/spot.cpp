#include "bsodiag/spot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bsodiag/error.hpp"

namespace bsodiag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ExcessStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

ExcessStats stats_of(std::span<const double> y) {
  ExcessStats s;
  s.min = *std::min_element(y.begin(), y.end());
  s.max = *std::max_element(y.begin(), y.end());
  s.mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double acc = 0.0;
  for (double v : y) acc += (v - s.mean) * (v - s.mean);
  s.var = acc / static_cast<double>(y.size());
  return s;
}

// Grimshaw: for x = gamma / sigma, the likelihood equations reduce to
// u(x) * v(x) = 1 with u(x) = mean(1 / (1 + x y)), v(x) = 1 + mean(log(1 + x y)).
double grimshaw_w(std::span<const double> y, double x) {
  double u = 0.0;
  double v = 0.0;
  for (double yi : y) {
    const double s = 1.0 + x * yi;
    u += 1.0 / s;
    v += std::log(s);
  }
  const double n = static_cast<double>(y.size());
  return (u / n) * (1.0 + v / n) - 1.0;
}

void find_roots(std::span<const double> y, double lo, double hi, std::vector<double>& roots) {
  if (!(lo < hi)) return;
  constexpr int kGrid = 64;
  double prev_x = lo;
  double prev_w = grimshaw_w(y, lo);
  for (int i = 1; i <= kGrid; ++i) {
    const double x = lo + (hi - lo) * i / kGrid;
    const double w = grimshaw_w(y, x);
    if (std::isfinite(prev_w) && std::isfinite(w) && ((prev_w <= 0.0) != (w <= 0.0))) {
      double a = prev_x, b = x, wa = prev_w;
      for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double wm = grimshaw_w(y, m);
        if ((wm <= 0.0) == (wa <= 0.0)) {
          a = m;
          wa = wm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_w = w;
  }
}

GpdParams method_of_moments(const ExcessStats& s) {
  if (s.var <= 0.0) return {0.0, s.mean};
  const double ratio = s.mean * s.mean / s.var;
  return {0.5 * (1.0 - ratio), 0.5 * s.mean * (ratio + 1.0)};
}

}  // namespace

double gpd_log_likelihood(std::span<const double> y, GpdParams p) {
  if (y.empty()) return 0.0;
  if (!(p.scale > 0.0)) return kNegInf;
  const double n = static_cast<double>(y.size());
  if (std::abs(p.shape) < 1e-12) {
    const double sum = std::accumulate(y.begin(), y.end(), 0.0);
    return -n * std::log(p.scale) - sum / p.scale;
  }
  const double tau = p.shape / p.scale;
  double acc = 0.0;
  for (double yi : y) {
    const double s = 1.0 + tau * yi;
    if (s <= 0.0) return kNegInf;
    acc += std::log(s);
  }
  return -n * std::log(p.scale) - (1.0 + 1.0 / p.shape) * acc;
}

GpdParams fit_gpd(std::span<const double> y) {
  if (y.empty()) throw NumericError("fit_gpd: no excesses");
  for (double v : y) {
    if (!std::isfinite(v) || v <= 0.0) throw NumericError("fit_gpd: excesses must be finite and positive");
  }
  const auto s = stats_of(y);

  // gamma = 0 (exponential) is always a candidate.
  GpdParams best{0.0, s.mean};
  if (y.size() < kGpdMinShapePeaks) return best;
  double best_ll = gpd_log_likelihood(y, best);

  double eps = 1e-8;
  const double a = -1.0 / s.max;
  if (std::abs(a) < 2.0 * eps) eps = std::abs(a) / 10.0;
  std::vector<double> roots;
  find_roots(y, a + eps, -eps, roots);
  if (s.min > 0.0 && s.mean > s.min) {
    const double b = 2.0 * (s.mean - s.min) / (s.mean * s.min);
    const double c = 2.0 * (s.mean - s.min) / (s.min * s.min);
    find_roots(y, b, c, roots);
  }
  bool any_root = false;
  for (double x : roots) {
    double mean_log = 0.0;
    for (double yi : y) mean_log += std::log(1.0 + x * yi);
    const double gamma = mean_log / static_cast<double>(y.size());
    const double sigma = gamma / x;
    if (!std::isfinite(gamma) || !std::isfinite(sigma) || sigma <= 0.0) continue;
    any_root = true;
    const double ll = gpd_log_likelihood(y, {gamma, sigma});
    if (ll > best_ll) {
      best = {gamma, sigma};
      best_ll = ll;
    }
  }
  if (!any_root) {
    // Root search failed: method of moments competes with the exponential fit.
    const auto mom = method_of_moments(s);
    const double mom_ll = gpd_log_likelihood(y, mom);
    if (mom.scale > 0.0 && std::isfinite(mom_ll) && mom_ll > best_ll) best = mom;
  }

  if (best.shape < kGpdShapeMin || best.shape > kGpdShapeMax || !std::isfinite(best.shape)) {
    best.shape = std::clamp(std::isfinite(best.shape) ? best.shape : 0.0, kGpdShapeMin, kGpdShapeMax);
    // Keep the fitted mean excess when the clipped shape still has one.
    if (best.shape < 1.0) best.scale = s.mean * (1.0 - best.shape);
  }
  best.scale = std::max(best.scale, 1e-12);
  return best;
}

double gpd_quantile(double threshold, GpdParams p, double q, std::size_t n, std::size_t n_peaks) {
  if (n_peaks == 0) return threshold;
  const double r = q * static_cast<double>(n) / static_cast<double>(n_peaks);
  double z;
  if (std::abs(p.shape) < 1e-12) {
    z = threshold - p.scale * std::log(r);
  } else {
    z = threshold + (p.scale / p.shape) * (std::pow(r, -p.shape) - 1.0);
  }
  if (!std::isfinite(z)) z = std::numeric_limits<double>::max();
  return std::max(z, threshold);
}

SpotState spot_init(std::span<const double> init, const SpotParams& params) {
  if (!(params.q > 0.0 && params.q < 1.0)) throw ConfigError("spot: risk q must lie in (0, 1)");
  if (!(params.init_quantile > 0.0 && params.init_quantile < 1.0)) {
    throw ConfigError("spot: init quantile must lie in (0, 1)");
  }
  SpotState st;
  st.risk = params.q;
  st.n_seen = init.size();

  std::vector<double> sorted(init.begin(), init.end());
  std::sort(sorted.begin(), sorted.end());
  const auto nonzero = static_cast<std::size_t>(std::count_if(sorted.begin(), sorted.end(), [](double v) { return v != 0.0; }));
  const bool constant = sorted.empty() || sorted.front() == sorted.back();
  if (nonzero < params.min_nonzero_init || constant) {
    st.cold = true;
    st.init_threshold = sorted.empty() ? 0.0 : std::max(0.0, sorted.back());
    st.anomaly_threshold = st.init_threshold;
    return st;
  }

  auto idx = static_cast<std::size_t>(params.init_quantile * static_cast<double>(sorted.size()));
  idx = std::min(idx, sorted.size() - 1);
  double t = sorted[idx];
  if (t >= sorted.back()) {
    // Discrete data can put the quantile on the maximum; step down to the
    // next distinct value so the tail has at least one excess.
    t = *std::prev(std::lower_bound(sorted.begin(), sorted.end(), sorted.back()));
  }
  st.init_threshold = t;
  for (double v : sorted) {
    if (v > t) st.peaks.push_back(v - t);
  }
  st.gpd = fit_gpd(st.peaks);
  st.anomaly_threshold = gpd_quantile(t, st.gpd, st.risk, st.n_seen, st.peaks.size());
  return st;
}

bool spot_update(SpotState& st, double x) {
  ++st.n_seen;
  if (st.cold) return x > st.init_threshold;
  if (x > st.anomaly_threshold) return true;
  if (x > st.init_threshold) {
    st.peaks.push_back(x - st.init_threshold);
    st.gpd = fit_gpd(st.peaks);
    st.anomaly_threshold = gpd_quantile(st.init_threshold, st.gpd, st.risk, st.n_seen, st.peaks.size());
  }
  return false;
}

SpotStep spot_step(SpotState state, double x) {
  const bool out = spot_update(state, x);
  return {std::move(state), out};
}

std::vector<bool> spot_run(std::span<const double> init, std::span<const double> stream, const SpotParams& params) {
  auto st = spot_init(init, params);
  std::vector<bool> flags;
  flags.reserve(stream.size());
  for (double x : stream) flags.push_back(spot_update(st, x));
  return flags;
}

}  // namespace bsodiag
