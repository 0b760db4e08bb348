#ifndef SBR_SIMULATOR_HPP
#define SBR_SIMULATOR_HPP

#include "sbr/multi_level.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <variant>

namespace sbr::sim {

using multi::kLevels;

/// Reservation routing: overflow to a level i+1 agent only when more than
/// n_{i+1} of them are idle; freed agents prefer their own level.
struct ReservationPolicy {
    multi::Reservation n;
};

/// No reservation; a freed agent takes the earliest-arrived caller it is
/// eligible for, across its own level and the level below.
struct GlobalFcfsPolicy {};

/// As GlobalFcfsPolicy, but a waiting caller becomes eligible for next-level
/// agents only `delay` minutes after arrival.
struct DelayedTransferPolicy {
    double delay = 0.0;
};

using Policy = std::variant<ReservationPolicy, GlobalFcfsPolicy, DelayedTransferPolicy>;

std::string describe(const Policy &policy);

struct SimConfig {
    multi::Params params;
    Policy policy = ReservationPolicy{};
    double horizon = 60.0;
    int replications = 1;
    std::uint64_t seed = 0;
    multi::State initial;
    /// Check after every event that the reservation-policy configuration is a
    /// feasible, work-conserving state (counted in Tally::audit_failures).
    bool audit = false;
    /// When false no arrival is blocked; params.ell is ignored. Auditing
    /// requires a bounded line.
    bool bounded_line = true;

    void validate() const;
};

/// Counts from one replication over [0, horizon].
struct Tally {
    std::array<long, kLevels> arrivals{};
    std::array<long, kLevels> blocked{};
    std::array<long, kLevels> abandonments{};
    std::array<long, kLevels> services{};
    long events = 0;
    long audit_failures = 0;

    bool operator==(const Tally &) const = default;
};

Tally simulate_once(const SimConfig &config, std::uint64_t replication);

struct Estimate {
    double mean = 0.0;
    double half_width = 0.0; ///< 95% normal-approximation half-width
};

struct LevelStats {
    Estimate abandonments;
    Estimate cost; ///< gamma-weighted abandonments plus beta-weighted blocking
    Estimate blocked;
};

struct SimResult {
    std::array<LevelStats, kLevels> levels;
    LevelStats total;
    /// gamma-weighted abandonments over expected offered load sum(lambda)*horizon.
    Estimate proportion;
    /// Unweighted abandonment count over the same denominator.
    Estimate raw_proportion;
    int replications = 0;
    long audit_failures = 0;
};

SimResult simulate_many(const SimConfig &config);

} // namespace sbr::sim

#endif
