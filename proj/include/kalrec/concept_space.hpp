#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kalrec/error.hpp"

namespace kalrec {

/// Interest scores, one per genre axis of a ConceptSpace.
using InterestVector = Eigen::VectorXd;

/// Ordered genre vocabulary. Axis i of every InterestVector is labels()[i].
///
/// Labels must be unique, non-blank and free of the delimiter characters used
/// by the on-disk formats (`,` `;` `"` and control characters).
class ConceptSpace {
 public:
  explicit ConceptSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    detail::require(!labels_.empty(), "concept space needs at least one genre label");
    index_.reserve(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const auto& label = labels_[i];
      validate_label(label, i);
      const auto [it, inserted] = index_.emplace(label, static_cast<Eigen::Index>(i));
      if (!inserted) {
        throw ValidationError("duplicate genre label '" + label + "' at axes " +
                              std::to_string(it->second) + " and " + std::to_string(i));
      }
    }
  }

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(Eigen::Index axis) const { return labels_.at(static_cast<std::size_t>(axis)); }

  std::optional<Eigen::Index> find(std::string_view label) const {
    const auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Axis of `label`; throws ValidationError if the label is not in the space.
  Eigen::Index axis(std::string_view label) const {
    if (auto found = find(label)) return *found;
    throw ValidationError("unknown genre label '" + std::string(label) + "'");
  }

  InterestVector zero() const { return InterestVector::Zero(dimension()); }

 private:
  static void validate_label(const std::string& label, std::size_t position) {
    const bool blank = std::all_of(label.begin(), label.end(),
                                   [](unsigned char c) { return std::isspace(c) != 0; });
    if (blank) {
      throw ValidationError("empty genre label at axis " + std::to_string(position));
    }
    for (unsigned char c : label) {
      if (c == ',' || c == ';' || c == '"' || c < 0x20 || c == 0x7f) {
        throw ValidationError("genre label '" + label + "' contains a reserved character");
      }
    }
  }

  std::vector<std::string> labels_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

/// 1 - cos(u, v). Throws UndefinedDistanceError when either vector has zero
/// norm. For nonnegative inputs the result lies in [0, 1].
inline double cosine_distance(const InterestVector& u, const InterestVector& v) {
  detail::require(u.size() == v.size(), "cosine_distance: dimension mismatch (" +
                                            std::to_string(u.size()) + " vs " +
                                            std::to_string(v.size()) + ")");
  if (!u.allFinite() || !v.allFinite()) {
    throw ValidationError("cosine_distance: non-finite entry");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw UndefinedDistanceError("cosine distance is undefined for a zero-norm vector");
  }
  const double similarity = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return 1.0 - similarity;
}

}  // namespace kalrec
