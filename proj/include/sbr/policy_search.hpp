#ifndef SBR_POLICY_SEARCH_HPP
#define SBR_POLICY_SEARCH_HPP

#include "sbr/multi_level.hpp"

#include <vector>

namespace sbr::policy {

/// What each table row holds.
enum class Objective {
    WeightedProportion, ///< gamma-weighted abandonments over offered load
    RawProportion,      ///< abandonment count over offered load
    ExpectedCost,       ///< expected value of a MeasureSpec
};

struct Row {
    multi::Reservation n;
    double value;
};

using Table = std::vector<Row>;

struct SearchSpec {
    Objective objective = Objective::WeightedProportion;
    multi::MeasureSpec measure; ///< used by ExpectedCost only
};

/// Every n in {0..k2} x {0..k3} x {0..k4}, lexicographic order. Vectors are
/// evaluated in parallel.
Table evaluate_all(const multi::Params &params, const multi::State &state, double t,
                   const SearchSpec &spec = {}, const EulerParams &euler = {});

/// Minimum value; ties go to the lexicographically smallest n.
Row best(const Table &table);

} // namespace sbr::policy

#endif
