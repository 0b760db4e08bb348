#ifndef SBR_MULTI_LEVEL_HPP
#define SBR_MULTI_LEVEL_HPP

#include "sbr/inversion.hpp"
#include "sbr/linsolve.hpp"
#include "sbr/single_level.hpp"

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sbr::multi {

/// Number of call types and agent levels. Level i agents handle level i calls
/// and overflow from level i-1.
inline constexpr int kLevels = 4;

struct Params {
    std::array<double, kLevels> lambda{};     ///< arrival rates
    std::array<double, kLevels> mu{};         ///< service rate by own-level agent
    std::array<double, kLevels - 1> mu_up{};  ///< service rate by next-level agent
    std::array<double, kLevels> theta{};      ///< abandonment rates
    std::array<int, kLevels> k{};             ///< agents per level
    std::array<double, kLevels> gamma{};      ///< abandonment costs
    int ell = 0;                              ///< shared line capacity
    double beta = 0.0;                        ///< cost per blocked arrival

    void validate() const;
    double total_arrival_rate() const;
};

/// Agents of levels 2, 3 and 4 held back from lower-level overflow.
struct Reservation {
    int n2 = 0;
    int n3 = 0;
    int n4 = 0;

    /// Reserved agents at a 0-based level index; level 0 never reserves.
    int at(int level) const;
    void validate(const Params &params) const;
    std::string to_string() const;

    auto operator<=>(const Reservation &) const = default;
};

/// (a, a1, b, b1, c, c1, d): callers in system per level, and the number of
/// level 1/2/3 callers currently held by a level 2/3/4 agent.
struct State {
    int a = 0;
    int a1 = 0;
    int b = 0;
    int b1 = 0;
    int c = 0;
    int c1 = 0;
    int d = 0;

    int customers() const { return a + b + c + d; }
    int callers(int level) const;
    /// Level `level` callers served by a level+1 agent (0 for the top level).
    int transferred(int level) const;
    std::string to_string() const;

    auto operator<=>(const State &) const = default;
};

/// Per-level bookkeeping derived from a State.
struct Occupancy {
    std::array<int, kLevels> own_served{};   ///< level i callers with level i agents
    std::array<int, kLevels> waiting{};      ///< level i callers in queue
    std::array<int, kLevels> free_agents{};  ///< idle level i agents
};

Occupancy occupancy(const State &state, const Params &params);

/// Membership in the feasible set defined by the capacity and a1/b1/c1 bounds.
bool in_state_space(const State &state, const Params &params, const Reservation &n);

/// True when no caller waits while an agent that may take them (respecting
/// the reservation) is idle. These are exactly the states reachable from the
/// empty system, and they are closed under transitions().
bool is_work_conserving(const State &state, const Params &params, const Reservation &n);

/// Feasible states in lexicographic (a, a1, b, b1, c, c1, d) order.
class StateSpace {
  public:
    StateSpace() = default;
    explicit StateSpace(std::vector<State> states);

    std::size_t size() const { return m_states.size(); }
    const State &operator[](std::size_t i) const { return m_states[i]; }
    auto begin() const { return m_states.begin(); }
    auto end() const { return m_states.end(); }
    std::optional<std::size_t> index_of(const State &state) const;

  private:
    std::vector<State> m_states;
};

StateSpace enumerate_states(const Params &params, const Reservation &n);

enum class Event { Arrival, OwnService, UpService, Abandonment };

struct Transition {
    State target;
    double rate;
    double instant_cost;
    Event event;
    int level; ///< 0-based level of the caller involved
};

/// Outgoing transitions with positive rate. Blocked arrivals are not
/// transitions; blocking cost is a source term of the transform system.
std::vector<Transition> transitions(const State &state, const Params &params,
                                    const Reservation &n);

/// Source term selection for the four-level transform system. For Cost the
/// weights are per-level abandonment costs; otherwise they select levels.
struct MeasureSpec {
    MeasureKind kind = MeasureKind::CostOfAbandonmentsAndLosses;
    std::array<double, kLevels> weights{1.0, 1.0, 1.0, 1.0};
    double beta = 0.0;

    static MeasureSpec cost(const Params &params);
    static MeasureSpec abandonments();
    static MeasureSpec weighted_abandonments(const Params &params);
    static MeasureSpec blocked();
    static MeasureSpec waiting_time();
    static MeasureSpec services();

    void validate() const;
};

/// Per-state source rate (the numerator term multiplying 1/s).
double source_rate(const State &state, const Params &params, const MeasureSpec &spec);

SparseSystem assemble_transform_system(const Params &params, const Reservation &n,
                                       const MeasureSpec &spec, Complex s);

/// Generator structure of one (params, n) pair, reused across Laplace nodes
/// and measures.
class TransformModel {
  public:
    TransformModel(const Params &params, const Reservation &n);

    const StateSpace &space() const { return m_space; }
    const Params &params() const { return m_params; }
    const Reservation &reservation() const { return m_reservation; }

    std::vector<double> sources(const MeasureSpec &spec) const;
    /// (diag(outflow) + sI - offdiag) as sparse entries; transposed for the
    /// forward equations.
    std::vector<SparseEntry> matrix_entries(Complex s, bool transposed = false) const;
    double outflow(std::size_t row) const { return m_outflow[row]; }

  private:
    struct Link {
        std::size_t col;
        double rate;
    };
    Params m_params;
    Reservation m_reservation;
    StateSpace m_space;
    std::vector<double> m_outflow;
    std::vector<std::vector<Link>> m_links;
};

/// Expected value over (0, t) from `state` for several measures sharing one
/// factorization per Laplace node.
std::vector<double> expected_measures(const TransformModel &model,
                                      std::span<const MeasureSpec> specs,
                                      const State &state, double t,
                                      const EulerParams &euler = {});

double expected_measure(const Params &params, const Reservation &n,
                        const MeasureSpec &spec, const State &state, double t,
                        const EulerParams &euler = {});

/// Expected abandonment cost (gamma weighted, or raw counts when
/// `weighted` is false) over (0, t) divided by the expected offered load.
double abandonment_proportion(const Params &params, const Reservation &n,
                              const State &state, double t, bool weighted = true,
                              const EulerParams &euler = {});

double abandonment_proportion(const TransformModel &model, const State &state, double t,
                              bool weighted = true, const EulerParams &euler = {});

/// Distribution over model.space() at time t.
std::vector<double> transition_distribution(const TransformModel &model, const State &state,
                                            double t, const EulerParams &euler = {});

std::vector<double> transition_distribution(const Params &params, const Reservation &n,
                                            const State &state, double t,
                                            const EulerParams &euler = {});

} // namespace sbr::multi

#endif
