#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bsodiag {

/// Generalized Pareto parameters for threshold excesses.
struct GpdParams {
  double shape = 0.0;  // gamma
  double scale = 1.0;  // sigma > 0
};

inline constexpr double kGpdShapeMin = -0.5;
inline constexpr double kGpdShapeMax = 2.0;
/// Below this many excesses the shape is not estimated: the fit is exponential.
inline constexpr std::size_t kGpdMinShapePeaks = 10;

/// GPD log-likelihood of `excesses` (all > 0). Returns -inf outside the support.
double gpd_log_likelihood(std::span<const double> excesses, GpdParams params);

/// Maximum-likelihood GPD fit via Grimshaw's reduction to a one-dimensional
/// root search, falling back to the method of moments when no admissible
/// root exists. The shape is clipped to [kGpdShapeMin, kGpdShapeMax]. With
/// fewer than kGpdMinShapePeaks excesses, shape 0 and the mean excess.
GpdParams fit_gpd(std::span<const double> excesses);

/// Upper quantile z with P(X > z) = q, given `n` observations of which
/// `n_peaks` exceeded `threshold`. Never below `threshold`.
double gpd_quantile(double threshold, GpdParams params, double q, std::size_t n, std::size_t n_peaks);

struct SpotParams {
  double q = 1e-4;
  double init_quantile = 0.98;
  std::size_t min_nonzero_init = 10;
};

/// Streaming peaks-over-threshold detector state.
///
/// A "cold" state is produced when the initial window is too sparse or
/// constant to fit a tail. Cold states flag any value strictly above the
/// largest initial value; for an all-zero initial window that is any
/// positive value.
struct SpotState {
  double init_threshold = 0.0;      // t
  GpdParams gpd;                    // fitted on `peaks`
  double anomaly_threshold = 0.0;   // z_q
  std::vector<double> peaks;        // excesses over t
  std::size_t n_seen = 0;
  double risk = 1e-4;               // q
  bool cold = false;
};

SpotState spot_init(std::span<const double> init_values, const SpotParams& params);

/// Processes one value in place. Returns true if `x` is an outlier.
bool spot_update(SpotState& state, double x);

struct SpotStep {
  SpotState state;
  bool is_outlier = false;
};

/// Value-semantics wrapper around spot_update.
SpotStep spot_step(SpotState state, double x);

/// Runs spot_init on `init` and spot_update over `stream`, returning one
/// flag per stream element.
std::vector<bool> spot_run(std::span<const double> init, std::span<const double> stream, const SpotParams& params);

}  // namespace bsodiag
