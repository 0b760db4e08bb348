#ifndef SBR_CONFIG_HPP
#define SBR_CONFIG_HPP

#include "sbr/inversion.hpp"
#include "sbr/multi_level.hpp"
#include "sbr/simulator.hpp"
#include "sbr/single_level.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace sbr::config {

struct SimSection {
    std::string policy = "reservation"; ///< reservation | fcfs | delayed
    double y = 0.0;                     ///< transfer delay for "delayed"
    int replications = 2000;
    std::uint64_t seed = 1;
    bool bounded_line = true; ///< false: arrivals are never blocked
};

/// Parsed configuration file. Absent sections stay empty; commands that need
/// one report a ConfigError.
struct Config {
    std::optional<single::Params> single;
    std::optional<multi::Params> multi;
    std::optional<multi::Reservation> reservation;
    EulerParams euler;
    std::optional<SimSection> sim;
    std::optional<single::Schedule> schedule;
};

/// Numbers may be JSON numbers or "p/q" strings. Unknown keys, wrong types
/// and values violating model invariants raise ConfigError.
Config parse(const std::string &text);
Config load(const std::filesystem::path &path);

/// "p/q", "p" or a decimal literal.
double parse_rational(const std::string &text);

/// Policy named by a sim section, using `reservation` for the reservation
/// policy.
sim::Policy make_policy(const SimSection &section, const multi::Reservation &reservation);

} // namespace sbr::config

#endif
