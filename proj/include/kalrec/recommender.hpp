#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kalrec/concept_space.hpp"
#include "kalrec/error.hpp"

namespace kalrec {

enum class DeltaClass { Positive, Negative, Neutral };

/// estimated - calculated interest on one axis.
struct ConceptDelta {
  Eigen::Index axis = 0;
  double delta = 0.0;
  DeltaClass classification = DeltaClass::Neutral;
};

struct Recommendation {
  std::string user_id;
  std::vector<std::string> promoted;          // descending delta
  std::vector<std::string> demoted;           // ascending delta
  std::vector<std::string> excluded_watched;  // positives already watched today
};

/// Positive when delta >= threshold, negative when delta <= -threshold.
inline std::vector<ConceptDelta> concept_deltas(const InterestVector& estimated,
                                                const InterestVector& calculated, double threshold) {
  detail::require(estimated.size() == calculated.size(),
                  "concept_deltas: dimension mismatch (" + std::to_string(estimated.size()) + " vs " +
                      std::to_string(calculated.size()) + ")");
  detail::require(std::isfinite(threshold) && threshold > 0.0, "concept_deltas: threshold must be > 0");
  std::vector<ConceptDelta> out;
  out.reserve(static_cast<std::size_t>(estimated.size()));
  for (Eigen::Index i = 0; i < estimated.size(); ++i) {
    ConceptDelta cd;
    cd.axis = i;
    cd.delta = estimated[i] - calculated[i];
    if (cd.delta >= threshold) {
      cd.classification = DeltaClass::Positive;
    } else if (cd.delta <= -threshold) {
      cd.classification = DeltaClass::Negative;
    }
    out.push_back(cd);
  }
  return out;
}

/// Ranks rising genres, drops the ones already watched today and lists the
/// falling ones. Equal deltas keep axis order.
inline Recommendation recommend(std::span<const ConceptDelta> deltas,
                                const std::set<std::string>& watched_today, const ConceptSpace& space) {
  std::set<Eigen::Index> watched_axes;
  for (const auto& label : watched_today) {
    const auto axis = space.find(label);
    if (!axis) throw ValidationError("unknown watched genre label '" + label + "'");
    watched_axes.insert(*axis);
  }

  std::vector<ConceptDelta> positives;
  std::vector<ConceptDelta> negatives;
  for (const auto& cd : deltas) {
    detail::require(cd.axis >= 0 && cd.axis < space.dimension(), "recommend: delta axis out of range");
    if (cd.classification == DeltaClass::Positive) positives.push_back(cd);
    if (cd.classification == DeltaClass::Negative) negatives.push_back(cd);
  }
  std::stable_sort(positives.begin(), positives.end(), [](const ConceptDelta& a, const ConceptDelta& b) {
    return a.delta > b.delta || (a.delta == b.delta && a.axis < b.axis);
  });
  std::stable_sort(negatives.begin(), negatives.end(), [](const ConceptDelta& a, const ConceptDelta& b) {
    return a.delta < b.delta || (a.delta == b.delta && a.axis < b.axis);
  });

  Recommendation rec;
  for (const auto& cd : positives) {
    auto& target = watched_axes.count(cd.axis) ? rec.excluded_watched : rec.promoted;
    target.push_back(space.label(cd.axis));
  }
  for (const auto& cd : negatives) rec.demoted.push_back(space.label(cd.axis));
  return rec;
}

inline Recommendation recommend(const std::vector<ConceptDelta>& deltas,
                                const std::set<std::string>& watched_today, const ConceptSpace& space) {
  return recommend(std::span<const ConceptDelta>(deltas), watched_today, space);
}

struct Program {
  std::string id;
  std::vector<std::string> genres;
};

/// Programs sharing at least one promoted genre and carrying no demoted one.
inline std::vector<Program> filter_catalog(std::span<const Program> catalog, const Recommendation& rec) {
  const std::set<std::string> promoted(rec.promoted.begin(), rec.promoted.end());
  const std::set<std::string> demoted(rec.demoted.begin(), rec.demoted.end());
  std::vector<Program> out;
  for (const auto& program : catalog) {
    const auto has = [&](const std::set<std::string>& s) {
      return std::any_of(program.genres.begin(), program.genres.end(),
                         [&](const std::string& g) { return s.count(g) > 0; });
    };
    if (has(promoted) && !has(demoted)) out.push_back(program);
  }
  return out;
}

}  // namespace kalrec
