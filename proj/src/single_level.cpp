#include "sbr/single_level.hpp"

#include "sbr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sbr::single {

namespace {

constexpr double kProbabilityTolerance = 1e-6;

bool nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

double source_term(const Params &p, MeasureKind kind, int a) {
    const int waiting = std::max(0, a - p.k);
    switch (kind) {
    case MeasureKind::CostOfAbandonmentsAndLosses:
        return waiting * p.theta * p.gamma + (a == p.ell ? p.lambda * p.beta : 0.0);
    case MeasureKind::TotalWaitingTime:
        return waiting;
    case MeasureKind::Services:
        return std::min(a, p.k) * p.mu;
    }
    return 0.0;
}

std::vector<double> clip_and_normalize(std::vector<double> row) {
    double total = 0.0;
    for (double &v : row) {
        if (!std::isfinite(v) || v < -kProbabilityTolerance || v > 1.0 + kProbabilityTolerance)
            throw NumericalError("inverted probability " + std::to_string(v) +
                                 " outside [0,1] beyond tolerance");
        v = std::clamp(v, 0.0, 1.0);
        total += v;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance)
        throw NumericalError("inverted probabilities sum to " + std::to_string(total));
    for (double &v : row)
        v /= total;
    return row;
}

void check_state(const Params &p, int a) {
    if (a < 0 || a > p.ell)
        throw DomainError("state " + std::to_string(a) + " outside 0.." +
                          std::to_string(p.ell));
}

} // namespace

void Params::validate() const {
    if (!nonnegative(lambda) || !nonnegative(mu) || !nonnegative(theta))
        throw DomainError("single-level rates must be finite and >= 0");
    if (k < 0 || k > ell)
        throw DomainError("single-level agents must satisfy 0 <= k <= ell");
    if (!nonnegative(beta) || !nonnegative(gamma))
        throw DomainError("single-level costs must be finite and >= 0");
}

Rates transition_rates(const Params &params, int a) {
    check_state(params, a);
    const double up = a < params.ell ? params.lambda : 0.0;
    const double down = std::min(a, params.k) * params.mu +
                        std::max(0, a - params.k) * params.theta;
    return {up, down};
}

ComplexVector measure_transform(const Params &params, MeasureKind kind, Complex s) {
    params.validate();
    const auto n = static_cast<std::size_t>(params.ell) + 1;
    TridiagonalSystem sys;
    sys.diagonal.resize(n);
    sys.rhs.resize(n);
    sys.lower.resize(n - 1);
    sys.upper.resize(n - 1);
    for (int a = 0; a <= params.ell; ++a) {
        const Rates r = transition_rates(params, a);
        sys.diagonal[a] = r.up + r.down + s;
        sys.rhs[a] = source_term(params, kind, a) / s;
        if (a < params.ell)
            sys.upper[a] = -r.up;
        if (a > 0)
            sys.lower[a - 1] = -r.down;
    }
    return solve_tridiagonal(sys);
}

std::vector<double> expected_measure_all(const Params &params, MeasureKind kind,
                                         double t, const EulerParams &euler) {
    params.validate();
    if (!(t >= 0.0))
        throw DomainError("time must be >= 0");
    if (t == 0.0)
        return std::vector<double>(params.ell + 1, 0.0);
    return invert_vector(
        [&](Complex s) { return measure_transform(params, kind, s); }, t, euler);
}

double expected_measure(const Params &params, MeasureKind kind, int a, double t,
                        const EulerParams &euler) {
    params.validate();
    check_state(params, a);
    if (!(t >= 0.0))
        throw DomainError("time must be >= 0");
    if (t == 0.0)
        return 0.0;
    return invert([&](Complex s) { return measure_transform(params, kind, s)[a]; }, t,
                  euler);
}

std::vector<double> transition_probabilities(const Params &params, int i, double t,
                                             const EulerParams &euler) {
    params.validate();
    check_state(params, i);
    if (!(t >= 0.0))
        throw DomainError("time must be >= 0");
    const auto n = static_cast<std::size_t>(params.ell) + 1;
    if (t == 0.0) {
        std::vector<double> row(n, 0.0);
        row[i] = 1.0;
        return row;
    }
    // Forward equations for a fixed origin i: unknowns are p~_{i,j}(s) over j.
    auto transform = [&](Complex s) {
        TridiagonalSystem sys;
        sys.diagonal.resize(n);
        sys.rhs.assign(n, 0.0);
        sys.lower.resize(n - 1);
        sys.upper.resize(n - 1);
        for (int j = 0; j <= params.ell; ++j) {
            const Rates r = transition_rates(params, j);
            sys.diagonal[j] = r.up + r.down + s;
            if (j > 0)
                sys.lower[j - 1] = -transition_rates(params, j - 1).up;
            if (j < params.ell)
                sys.upper[j] = -transition_rates(params, j + 1).down;
        }
        sys.rhs[i] = 1.0;
        return solve_tridiagonal(sys);
    };
    return clip_and_normalize(invert_vector(transform, t, euler));
}

Projection project_schedule(const Schedule &schedule, const std::vector<double> &initial,
                            MeasureKind kind, const EulerParams &euler) {
    if (schedule.empty())
        throw DomainError("schedule must contain at least one segment");
    const int ell = schedule.front().params.ell;
    for (const auto &seg : schedule) {
        seg.params.validate();
        if (seg.params.ell != ell)
            throw DomainError("schedule segments must share the line capacity");
        if (!(seg.duration > 0.0) || !std::isfinite(seg.duration))
            throw DomainError("schedule segment durations must be > 0");
    }
    if (initial.size() != static_cast<std::size_t>(ell) + 1)
        throw DomainError("initial distribution has " + std::to_string(initial.size()) +
                          " entries, expected " + std::to_string(ell + 1));
    const double mass = std::accumulate(initial.begin(), initial.end(), 0.0);
    if (std::abs(mass - 1.0) > kProbabilityTolerance ||
        std::any_of(initial.begin(), initial.end(), [](double v) { return !(v >= 0.0); }))
        throw DomainError("initial distribution must be a probability vector");

    Projection out{0.0, initial};
    for (const auto &seg : schedule) {
        const auto values = expected_measure_all(seg.params, kind, seg.duration, euler);
        std::vector<double> next(initial.size(), 0.0);
        for (int a = 0; a <= ell; ++a) {
            const double w = out.final_distribution[a];
            if (w == 0.0)
                continue;
            out.total += w * values[a];
            const auto row = transition_probabilities(seg.params, a, seg.duration, euler);
            for (int j = 0; j <= ell; ++j)
                next[j] += w * row[j];
        }
        out.final_distribution = std::move(next);
    }
    return out;
}

double tagged_wait_recursive(const Params &params, int ahead) {
    if (ahead < 0)
        throw DomainError("callers ahead must be >= 0");
    const double k_mu = params.k * params.mu;
    double r = 0.0;
    for (int a = params.k; a <= ahead; ++a) {
        const double denom = k_mu + (a + 1 - params.k) * params.theta;
        if (denom == 0.0)
            throw DomainError("degenerate rates: k*mu + (a+1-k)*theta = 0");
        r = (1.0 + (k_mu + (a - params.k) * params.theta) * r) / denom;
    }
    return r;
}

double tagged_wait(const Params &params, int ahead) {
    if (ahead < 0)
        throw DomainError("callers ahead must be >= 0");
    if (ahead < params.k)
        return 0.0;
    const double excess = ahead + 1 - params.k;
    const double denom = params.k * params.mu + excess * params.theta;
    if (denom == 0.0)
        throw DomainError("degenerate rates: k*mu + (a+1-k)*theta = 0");
    const double closed = excess / denom;
    const double stepped = tagged_wait_recursive(params, ahead);
    if (std::abs(closed - stepped) > 1e-12 * std::max(1.0, std::abs(closed)))
        throw NumericalError("tagged wait closed form and recursion disagree");
    return closed;
}

} // namespace sbr::single
