#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "kalrec/concept_space.hpp"
#include "kalrec/error.hpp"
#include "kalrec/profile_builder.hpp"

namespace kalrec {

inline constexpr double kDefaultCosineThreshold = 0.15;

/// Fidelity of one user's predictions against the observed profiles.
struct EvalReport {
  std::vector<std::optional<double>> per_step_cosine;  // empty entry: zero-norm step, skipped
  std::size_t skipped_steps = 0;
  std::size_t below_threshold = 0;
  double threshold = kDefaultCosineThreshold;
  double fraction_below_threshold = 0.0;
  double smoothness_ratio = 0.0;
  InterestVector per_axis_rmse;

  std::size_t evaluated_steps() const { return per_step_cosine.size() - skipped_steps; }
};

namespace detail {

/// Sample variance (n - 1 denominator) of the first differences of `series`,
/// summed over axes. Fewer than two differences contribute zero.
inline double summed_difference_variance(std::span<const InterestVector> series) {
  if (series.size() < 3) return 0.0;
  const Eigen::Index d = series.front().size();
  const auto n = static_cast<double>(series.size() - 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    double mean = 0.0;
    for (std::size_t k = 1; k < series.size(); ++k) mean += series[k][i] - series[k - 1][i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t k = 1; k < series.size(); ++k) {
      const double diff = series[k][i] - series[k - 1][i] - mean;
      ss += diff * diff;
    }
    total += ss / (n - 1.0);
  }
  return total;
}

}  // namespace detail

/// Scores predictions[j] against truth.profiles[j + 1]: the out-of-sample
/// pairing produced by track_series. Steps where either vector has zero norm
/// are skipped and counted. The smoothness ratio divides the first-difference
/// variance of the predictions by that of the matching observations.
inline EvalReport evaluate(const ProfileSeries& truth, std::span<const InterestVector> predictions,
                           double threshold = kDefaultCosineThreshold) {
  detail::require(!truth.profiles.empty(), "evaluate: empty truth series for '" + truth.user_id + "'");
  detail::require(predictions.size() + 1 == truth.size(),
                  "evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                      std::to_string(truth.size()) + " observations of '" + truth.user_id +
                      "' (expected one fewer)");
  detail::require(std::isfinite(threshold) && threshold >= 0.0, "evaluate: threshold must be >= 0");
  const Eigen::Index d = truth.profiles.front().size();

  EvalReport report;
  report.threshold = threshold;
  report.per_axis_rmse = InterestVector::Zero(d);
  std::vector<InterestVector> observed;
  observed.reserve(predictions.size());
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    const InterestVector& z = truth.profiles[j + 1];
    const InterestVector& p = predictions[j];
    detail::require(p.size() == d && z.size() == d, "evaluate: dimension mismatch at step " + std::to_string(j + 1));
    observed.push_back(z);
    report.per_axis_rmse += (p - z).cwiseAbs2();
    if (p.norm() == 0.0 || z.norm() == 0.0) {
      report.per_step_cosine.emplace_back();
      ++report.skipped_steps;
      continue;
    }
    const double dist = cosine_distance(p, z);
    report.per_step_cosine.emplace_back(dist);
    if (dist < threshold) ++report.below_threshold;
  }
  if (!predictions.empty()) {
    report.per_axis_rmse = (report.per_axis_rmse / static_cast<double>(predictions.size())).cwiseSqrt();
  }
  const std::size_t evaluated = report.evaluated_steps();
  report.fraction_below_threshold =
      evaluated == 0 ? 0.0 : static_cast<double>(report.below_threshold) / static_cast<double>(evaluated);

  const double num = detail::summed_difference_variance(predictions);
  const double den = detail::summed_difference_variance(observed);
  if (den > 0.0) {
    report.smoothness_ratio = num / den;
  } else {
    report.smoothness_ratio = num > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  return report;
}

inline EvalReport evaluate(const ProfileSeries& truth, const std::vector<InterestVector>& predictions,
                           double threshold = kDefaultCosineThreshold) {
  return evaluate(truth, std::span<const InterestVector>(predictions), threshold);
}

/// Aggregate over users: every evaluated step counts once.
struct PooledSummary {
  static constexpr std::size_t kBins = 20;  // width 0.05 over [0, 1]

  std::size_t users = 0;
  std::size_t evaluated_steps = 0;
  std::size_t skipped_steps = 0;
  std::size_t below_threshold = 0;
  double threshold = kDefaultCosineThreshold;
  double fraction_below_threshold = 0.0;
  double mean_cosine = 0.0;
  double max_cosine = 0.0;
  double mean_smoothness_ratio = 0.0;
  double fraction_smoothing = 0.0;  // users with smoothness_ratio <= 1
  std::array<std::size_t, kBins + 1> histogram{};  // last bin collects distances >= 1
};

inline PooledSummary pool(std::span<const EvalReport> reports) {
  PooledSummary s;
  s.users = reports.size();
  if (!reports.empty()) s.threshold = reports.front().threshold;
  double cosine_sum = 0.0;
  double ratio_sum = 0.0;
  std::size_t smoothing = 0;
  for (const auto& r : reports) {
    detail::require(r.threshold == s.threshold, "pool: reports use different thresholds");
    s.skipped_steps += r.skipped_steps;
    s.below_threshold += r.below_threshold;
    for (const auto& c : r.per_step_cosine) {
      if (!c) continue;
      ++s.evaluated_steps;
      cosine_sum += *c;
      s.max_cosine = std::max(s.max_cosine, *c);
      const auto bin = static_cast<std::size_t>(std::clamp(*c, 0.0, 1.0) * PooledSummary::kBins);
      ++s.histogram[std::min(bin, PooledSummary::kBins)];
    }
    ratio_sum += r.smoothness_ratio;
    if (r.smoothness_ratio <= 1.0) ++smoothing;
  }
  if (s.evaluated_steps > 0) {
    s.fraction_below_threshold = static_cast<double>(s.below_threshold) / static_cast<double>(s.evaluated_steps);
    s.mean_cosine = cosine_sum / static_cast<double>(s.evaluated_steps);
  }
  if (s.users > 0) {
    s.mean_smoothness_ratio = ratio_sum / static_cast<double>(s.users);
    s.fraction_smoothing = static_cast<double>(smoothing) / static_cast<double>(s.users);
  }
  return s;
}

inline PooledSummary pool(const std::vector<EvalReport>& reports) {
  return pool(std::span<const EvalReport>(reports));
}

}  // namespace kalrec
