#include "sbr/simulator.hpp"

#include "sbr/errors.hpp"
#include "sbr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

namespace sbr::sim {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One independent stream per (seed, replication): mt19937_64 keyed by a
// splitmix64 hash of both. Variates are built by hand so the output does not
// depend on the standard library's distribution implementations.
class Stream {
  public:
    Stream(std::uint64_t seed, std::uint64_t replication)
        : m_engine(splitmix64(splitmix64(seed) ^ splitmix64(replication + 0x632be59bd9b4e019ULL))) {}

    double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
    std::size_t index(std::size_t n) {
        return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
    }

  private:
    std::mt19937_64 m_engine;
};

struct Caller {
    double arrival;
    double eligible_up; ///< time from which a next-level agent may take the call
    bool promoted = false;
};

class Replication {
  public:
    Replication(const SimConfig &config, std::uint64_t index)
        : m_cfg(config), m_p(config.params), m_rng(config.seed, index) {
        if (const auto *r = std::get_if<ReservationPolicy>(&config.policy)) {
            m_reservation = r->n;
            m_uses_reservation = true;
        } else if (const auto *d = std::get_if<DelayedTransferPolicy>(&config.policy)) {
            m_delay = d->delay;
        }
        place_initial();
    }

    Tally run() {
        audit();
        while (true) {
            double rates[kLevels * 4];
            double total = 0.0;
            for (int i = 0; i < kLevels; ++i) {
                rates[4 * i + 0] = m_p.lambda[i];
                rates[4 * i + 1] = m_own[i] * m_p.mu[i];
                rates[4 * i + 2] = i + 1 < kLevels ? m_up[i] * m_p.mu_up[i] : 0.0;
                rates[4 * i + 3] = static_cast<double>(m_queue[i].size()) * m_p.theta[i];
                for (int e = 0; e < 4; ++e)
                    total += rates[4 * i + e];
            }
            const double timer = next_timer();
            const double step = total > 0.0 ? m_rng.exponential(total) : kInfinity;
            if (timer <= m_now + step) {
                if (timer > m_cfg.horizon)
                    break;
                m_now = timer;
                fire_timers();
            } else {
                if (m_now + step > m_cfg.horizon)
                    break;
                m_now += step;
                double pick = m_rng.uniform() * total;
                int event = 0;
                for (; event < kLevels * 4 - 1; ++event) {
                    if (pick < rates[event] && rates[event] > 0.0)
                        break;
                    pick -= rates[event];
                }
                // Guard against rounding leaving a zero-rate slot selected.
                while (rates[event] <= 0.0)
                    --event;
                dispatch(event / 4, event % 4);
            }
            ++m_tally.events;
            audit();
        }
        return m_tally;
    }

  private:
    int customers() const {
        int n = 0;
        for (int i = 0; i < kLevels; ++i)
            n += m_own[i] + static_cast<int>(m_queue[i].size()) + (i + 1 < kLevels ? m_up[i] : 0);
        return n;
    }

    int idle(int level) const {
        return m_p.k[level] - m_own[level] - (level > 0 ? m_up[level - 1] : 0);
    }

    int reserved(int level) const { return m_uses_reservation ? m_reservation.at(level) : 0; }

    void place_initial() {
        const multi::State &s = m_cfg.initial;
        if (m_uses_reservation) {
            const auto occ = multi::occupancy(s, m_p);
            for (int i = 0; i < kLevels; ++i) {
                m_own[i] = occ.own_served[i];
                if (i + 1 < kLevels)
                    m_up[i] = s.transferred(i);
                // Waiting callers predate time 0, oldest first.
                for (int w = occ.waiting[i]; w > 0; --w)
                    m_queue[i].push_back({-static_cast<double>(w), -static_cast<double>(w), true});
            }
            return;
        }
        for (int i = 0; i < kLevels; ++i)
            for (int c = 0; c < s.callers(i); ++c)
                admit(i);
    }

    void dispatch(int level, int kind) {
        switch (kind) {
        case 0:
            ++m_tally.arrivals[level];
            if (m_cfg.bounded_line && customers() >= m_p.ell)
                ++m_tally.blocked[level];
            else
                admit(level);
            break;
        case 1:
            ++m_tally.services[level];
            --m_own[level];
            agent_freed(level);
            break;
        case 2:
            ++m_tally.services[level];
            --m_up[level];
            agent_freed(level + 1);
            break;
        case 3: {
            auto &q = m_queue[level];
            q.erase(q.begin() + static_cast<std::ptrdiff_t>(m_rng.index(q.size())));
            ++m_tally.abandonments[level];
            break;
        }
        }
    }

    void admit(int level) {
        if (idle(level) > 0) {
            ++m_own[level];
            return;
        }
        const bool has_next = level + 1 < kLevels;
        if (m_uses_reservation) {
            if (has_next && idle(level + 1) > reserved(level + 1))
                ++m_up[level];
            else
                m_queue[level].push_back({m_now, m_now, true});
            return;
        }
        if (has_next && m_delay == 0.0 && idle(level + 1) > 0) {
            ++m_up[level];
            return;
        }
        m_queue[level].push_back({m_now, m_now + m_delay, m_delay == 0.0 || !has_next});
    }

    // A level `level` agent has just become idle.
    void agent_freed(int level) {
        auto &own = m_queue[level];
        if (m_uses_reservation) {
            if (!own.empty()) {
                own.pop_front();
                ++m_own[level];
            } else if (level > 0 && !m_queue[level - 1].empty() &&
                       idle(level) > reserved(level)) {
                m_queue[level - 1].pop_front();
                ++m_up[level - 1];
            }
            return;
        }
        const bool lower_ready = level > 0 && !m_queue[level - 1].empty() &&
                                 m_queue[level - 1].front().eligible_up <= m_now;
        if (!own.empty() && (!lower_ready || own.front().arrival <= m_queue[level - 1].front().arrival)) {
            own.pop_front();
            ++m_own[level];
        } else if (lower_ready) {
            m_queue[level - 1].pop_front();
            ++m_up[level - 1];
        }
    }

    double next_timer() const {
        double t = kInfinity;
        for (int i = 0; i + 1 < kLevels; ++i)
            for (const Caller &c : m_queue[i])
                if (!c.promoted)
                    t = std::min(t, c.eligible_up);
        return t;
    }

    // Delayed callers whose wait has expired go to an idle next-level agent
    // if there is one; otherwise they stay queued, eligible for both levels.
    void fire_timers() {
        for (int i = 0; i + 1 < kLevels; ++i) {
            auto &q = m_queue[i];
            for (auto it = q.begin(); it != q.end();) {
                if (!it->promoted && it->eligible_up <= m_now) {
                    it->promoted = true;
                    // FCFS among eligible callers: only the oldest eligible
                    // caller can be ahead, and it was promoted earlier.
                    if (idle(i + 1) > 0) {
                        it = q.erase(it);
                        ++m_up[i];
                        continue;
                    }
                }
                ++it;
            }
        }
    }

    void audit() {
        if (!m_cfg.audit || !m_uses_reservation)
            return;
        multi::State s{m_own[0] + m_up[0] + static_cast<int>(m_queue[0].size()), m_up[0],
                       m_own[1] + m_up[1] + static_cast<int>(m_queue[1].size()), m_up[1],
                       m_own[2] + m_up[2] + static_cast<int>(m_queue[2].size()), m_up[2],
                       m_own[3] + static_cast<int>(m_queue[3].size())};
        if (!multi::in_state_space(s, m_p, m_reservation) ||
            !multi::is_work_conserving(s, m_p, m_reservation))
            ++m_tally.audit_failures;
        const auto occ = multi::occupancy(s, m_p);
        for (int i = 0; i < kLevels; ++i)
            if (occ.own_served[i] != m_own[i] ||
                occ.waiting[i] != static_cast<int>(m_queue[i].size())) {
                ++m_tally.audit_failures;
                break;
            }
    }

    const SimConfig &m_cfg;
    const multi::Params &m_p;
    Stream m_rng;
    multi::Reservation m_reservation;
    bool m_uses_reservation = false;
    double m_delay = 0.0;
    double m_now = 0.0;
    std::array<int, kLevels> m_own{};
    std::array<int, kLevels - 1> m_up{};
    std::array<std::deque<Caller>, kLevels> m_queue;
    Tally m_tally;
};

Estimate estimate(const std::vector<double> &samples) {
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double x : samples)
        mean += x;
    mean /= n;
    if (samples.size() < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (double x : samples)
        ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return {mean, 1.959963984540054 * sd / std::sqrt(n)};
}

} // namespace

std::string describe(const Policy &policy) {
    std::ostringstream os;
    if (const auto *r = std::get_if<ReservationPolicy>(&policy))
        os << "reservation" << r->n.to_string();
    else if (std::holds_alternative<GlobalFcfsPolicy>(policy))
        os << "global-fcfs";
    else
        os << "delayed-transfer(y=" << std::get<DelayedTransferPolicy>(policy).delay << ")";
    return os.str();
}

void SimConfig::validate() const {
    params.validate();
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("simulation horizon must be > 0");
    if (replications < 1)
        throw DomainError("simulation needs at least one replication");
    if (audit && !bounded_line)
        throw DomainError("state audit requires a bounded line");
    if (const auto *r = std::get_if<ReservationPolicy>(&policy)) {
        r->n.validate(params);
        if (!multi::in_state_space(initial, params, r->n))
            throw DomainError("initial state " + initial.to_string() +
                              " is not in the state space");
    } else {
        if (const auto *d = std::get_if<DelayedTransferPolicy>(&policy))
            if (!(d->delay >= 0.0) || !std::isfinite(d->delay))
                throw DomainError("transfer delay must be >= 0");
        for (int i = 0; i < kLevels; ++i)
            if (initial.callers(i) < 0)
                throw DomainError("initial caller counts must be >= 0");
        if (bounded_line && initial.customers() > params.ell)
            throw DomainError("initial callers exceed the line capacity");
    }
}

Tally simulate_once(const SimConfig &config, std::uint64_t replication) {
    config.validate();
    return Replication(config, replication).run();
}

SimResult simulate_many(const SimConfig &config) {
    config.validate();
    const auto reps = static_cast<std::size_t>(config.replications);
    std::vector<Tally> tallies(reps);
    parallel_for(reps, [&](std::size_t r) { tallies[r] = Replication(config, r).run(); });

    const auto &p = config.params;
    const double offered = p.total_arrival_rate() * config.horizon;
    SimResult out;
    out.replications = config.replications;
    std::vector<double> aband(reps), cost(reps), blocked(reps);
    std::vector<double> t_aband(reps, 0.0), t_cost(reps, 0.0), t_blocked(reps, 0.0);
    for (int i = 0; i < kLevels; ++i) {
        for (std::size_t r = 0; r < reps; ++r) {
            const Tally &t = tallies[r];
            aband[r] = static_cast<double>(t.abandonments[i]);
            blocked[r] = static_cast<double>(t.blocked[i]);
            cost[r] = p.gamma[i] * aband[r] + p.beta * blocked[r];
            t_aband[r] += aband[r];
            t_blocked[r] += blocked[r];
            t_cost[r] += cost[r];
        }
        out.levels[i] = {estimate(aband), estimate(cost), estimate(blocked)};
    }
    out.total = {estimate(t_aband), estimate(t_cost), estimate(t_blocked)};

    std::vector<double> weighted(reps), raw(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        double w = 0.0;
        for (int i = 0; i < kLevels; ++i)
            w += p.gamma[i] * static_cast<double>(tallies[r].abandonments[i]);
        weighted[r] = offered > 0.0 ? w / offered : 0.0;
        raw[r] = offered > 0.0 ? t_aband[r] / offered : 0.0;
        out.audit_failures += tallies[r].audit_failures;
    }
    out.proportion = estimate(weighted);
    out.raw_proportion = estimate(raw);
    return out;
}

} // namespace sbr::sim
