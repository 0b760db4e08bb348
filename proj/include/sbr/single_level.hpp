#ifndef SBR_SINGLE_LEVEL_HPP
#define SBR_SINGLE_LEVEL_HPP

#include "sbr/inversion.hpp"
#include "sbr/linsolve.hpp"

#include <vector>

namespace sbr {

/// Which cumulative quantity a transform system accumulates. All three share
/// the same generator and differ only in the per-state source term.
enum class MeasureKind {
    CostOfAbandonmentsAndLosses,
    TotalWaitingTime,
    Services,
};

namespace single {

/// One call type, one agent pool, `ell` lines. Rates are per minute.
struct Params {
    double lambda = 0.0; ///< arrival rate
    double mu = 0.0;     ///< service rate per busy agent
    double theta = 0.0;  ///< abandonment rate per waiting caller
    int k = 0;           ///< agents
    int ell = 0;         ///< line capacity
    double beta = 0.0;   ///< cost per blocked arrival
    double gamma = 0.0;  ///< cost per abandonment

    void validate() const;
};

struct Rates {
    double up;
    double down;
};

struct Segment {
    Params params;
    double duration;
};

/// Piecewise-constant parameters over consecutive intervals. The line
/// capacity must be the same in every segment.
using Schedule = std::vector<Segment>;

Rates transition_rates(const Params &params, int a);

/// Laplace transforms of the chosen measure for every initial state 0..ell.
ComplexVector measure_transform(const Params &params, MeasureKind kind, Complex s);

/// Expected value over (0, t) of the measure, starting from `a` callers.
double expected_measure(const Params &params, MeasureKind kind, int a, double t,
                        const EulerParams &euler = {});

/// As expected_measure, for every initial state at once.
std::vector<double> expected_measure_all(const Params &params, MeasureKind kind,
                                         double t, const EulerParams &euler = {});

/// Row i of P(t): probabilities of each occupancy j at time t.
std::vector<double> transition_probabilities(const Params &params, int i, double t,
                                             const EulerParams &euler = {});

struct Projection {
    double total;
    std::vector<double> final_distribution;
};

Projection project_schedule(const Schedule &schedule, const std::vector<double> &initial,
                            MeasureKind kind, const EulerParams &euler = {});

/// Mean wait of a tagged FCFS caller with `ahead` callers in front of them.
/// Evaluates the closed form and the step recursion and checks they agree.
double tagged_wait(const Params &params, int ahead);

/// The step recursion alone, from R_{k-1} = 0 upward.
double tagged_wait_recursive(const Params &params, int ahead);

} // namespace single
} // namespace sbr

#endif
