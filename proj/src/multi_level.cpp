#include "sbr/multi_level.hpp"

#include "sbr/errors.hpp"
#include "sbr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sbr::multi {

namespace {

constexpr double kDistributionTolerance = 1e-5;

bool nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

// Array view of a State: callers per level and overflow held one level up.
struct Counts {
    std::array<int, kLevels> callers{};
    std::array<int, kLevels - 1> up{};

    explicit Counts(const State &s)
        : callers{s.a, s.b, s.c, s.d}, up{s.a1, s.b1, s.c1} {}

    State to_state() const {
        return {callers[0], up[0], callers[1], up[1], callers[2], up[2], callers[3]};
    }
    int transferred(int level) const { return level < kLevels - 1 ? up[level] : 0; }
    int serving_lower(int level) const { return level > 0 ? up[level - 1] : 0; }
};

Occupancy occupancy_of(const Counts &x, const Params &p) {
    Occupancy occ;
    for (int i = 0; i < kLevels; ++i) {
        const int unassigned = x.callers[i] - x.transferred(i);
        const int capacity = p.k[i] - x.serving_lower(i);
        occ.own_served[i] = std::min(unassigned, capacity);
        occ.waiting[i] = unassigned - occ.own_served[i];
        occ.free_agents[i] = capacity - occ.own_served[i];
    }
    return occ;
}

// Lower bound on a1 (resp. b1, c1) from the state-space definition. Note the
// bound uses the raw count of next-level callers, not those unassigned.
int overflow_lower_bound(int lower, int k_lower, int upper, int k_upper, int reserved) {
    if (lower > k_lower && upper < k_upper - reserved)
        return std::min(lower - k_lower, k_upper - upper - reserved);
    return 0;
}

std::vector<double> clip_and_normalize(std::vector<double> row) {
    double total = 0.0;
    for (double &v : row) {
        if (!std::isfinite(v) || v < -kDistributionTolerance ||
            v > 1.0 + kDistributionTolerance)
            throw NumericalError("inverted probability " + std::to_string(v) +
                                 " outside [0,1] beyond tolerance");
        v = std::clamp(v, 0.0, 1.0);
        total += v;
    }
    if (std::abs(total - 1.0) > kDistributionTolerance)
        throw NumericalError("inverted distribution sums to " + std::to_string(total));
    for (double &v : row)
        v /= total;
    return row;
}

std::size_t require_start(const TransformModel &model, const State &state) {
    const auto index = model.space().index_of(state);
    if (!index)
        throw DomainError("state " + state.to_string() + " is not in the state space");
    if (!is_work_conserving(state, model.params(), model.reservation()))
        throw DomainError("state " + state.to_string() +
                          " is not reachable under the reservation policy");
    return *index;
}

} // namespace

void Params::validate() const {
    for (int i = 0; i < kLevels; ++i) {
        if (!nonnegative(lambda[i]) || !nonnegative(mu[i]) || !nonnegative(theta[i]))
            throw DomainError("multi-level rates must be finite and >= 0");
        if (!nonnegative(gamma[i]))
            throw DomainError("multi-level abandonment costs must be finite and >= 0");
        if (k[i] < 0)
            throw DomainError("multi-level agent counts must be >= 0");
    }
    for (double r : mu_up)
        if (!nonnegative(r))
            throw DomainError("multi-level rates must be finite and >= 0");
    if (ell < 0)
        throw DomainError("line capacity must be >= 0");
    if (!nonnegative(beta))
        throw DomainError("blocking cost must be finite and >= 0");
}

double Params::total_arrival_rate() const {
    return std::accumulate(lambda.begin(), lambda.end(), 0.0);
}

int Reservation::at(int level) const {
    switch (level) {
    case 1:
        return n2;
    case 2:
        return n3;
    case 3:
        return n4;
    default:
        return 0;
    }
}

void Reservation::validate(const Params &params) const {
    for (int level = 1; level < kLevels; ++level)
        if (at(level) < 0 || at(level) > params.k[level])
            throw DomainError("reservation " + to_string() +
                              " must satisfy 0 <= n_i <= k_i");
}

std::string Reservation::to_string() const {
    std::ostringstream os;
    os << '(' << n2 << ',' << n3 << ',' << n4 << ')';
    return os.str();
}

int State::callers(int level) const { return Counts(*this).callers.at(level); }

int State::transferred(int level) const { return Counts(*this).transferred(level); }

std::string State::to_string() const {
    std::ostringstream os;
    os << '(' << a << ',' << a1 << ',' << b << ',' << b1 << ',' << c << ',' << c1 << ','
       << d << ')';
    return os.str();
}

Occupancy occupancy(const State &state, const Params &params) {
    return occupancy_of(Counts(state), params);
}

bool in_state_space(const State &s, const Params &p, const Reservation &n) {
    const Counts x(s);
    for (int v : x.callers)
        if (v < 0)
            return false;
    if (s.customers() > p.ell)
        return false;
    for (int i = 0; i + 1 < kLevels; ++i) {
        const int reserved = n.at(i + 1);
        const int lo = overflow_lower_bound(x.callers[i], p.k[i], x.callers[i + 1],
                                            p.k[i + 1], reserved);
        const int hi = std::min(p.k[i + 1] - reserved, x.callers[i]);
        if (x.up[i] < lo || x.up[i] > hi)
            return false;
    }
    return true;
}

bool is_work_conserving(const State &state, const Params &params, const Reservation &n) {
    const Occupancy occ = occupancy(state, params);
    for (int i = 0; i + 1 < kLevels; ++i)
        if (occ.waiting[i] > 0 && occ.free_agents[i + 1] > n.at(i + 1))
            return false;
    return true;
}

StateSpace::StateSpace(std::vector<State> states) : m_states(std::move(states)) {
    if (!std::is_sorted(m_states.begin(), m_states.end()) ||
        std::adjacent_find(m_states.begin(), m_states.end()) != m_states.end())
        throw DomainError("state list must be strictly lexicographically increasing");
}

std::optional<std::size_t> StateSpace::index_of(const State &state) const {
    const auto it = std::lower_bound(m_states.begin(), m_states.end(), state);
    if (it == m_states.end() || *it != state)
        return std::nullopt;
    return static_cast<std::size_t>(it - m_states.begin());
}

StateSpace enumerate_states(const Params &p, const Reservation &n) {
    p.validate();
    n.validate(p);
    const int ell = p.ell;
    const auto [k1, k2, k3, k4] = p.k;
    std::vector<State> out;
    for (int a = 0; a <= ell; ++a)
        for (int a1 = 0; a1 <= std::min(k2 - n.n2, a); ++a1)
            for (int b = 0; a + b <= ell; ++b) {
                if (a1 < overflow_lower_bound(a, k1, b, k2, n.n2))
                    continue;
                for (int b1 = 0; b1 <= std::min(k3 - n.n3, b); ++b1)
                    for (int c = 0; a + b + c <= ell; ++c) {
                        if (b1 < overflow_lower_bound(b, k2, c, k3, n.n3))
                            continue;
                        for (int c1 = 0; c1 <= std::min(k4 - n.n4, c); ++c1)
                            for (int d = 0; a + b + c + d <= ell; ++d) {
                                if (c1 < overflow_lower_bound(c, k3, d, k4, n.n4))
                                    continue;
                                out.push_back({a, a1, b, b1, c, c1, d});
                            }
                    }
            }
    return StateSpace(std::move(out));
}

// Routing rules, stated through idle-agent counts. They coincide with the
// indicator expressions of the transition catalogue on every reachable state,
// with two corrections where the printed indicators ignore agents lent to the
// level below:
//  - a level i arrival overflows when no level i agent is idle, i.e. the
//    unassigned level i callers fill k_i minus agents serving level i-1
//    (printed as b - b1 >= k2 and c - c1 >= k3);
//  - a freed level i+1 agent looks for level i callers only after its own
//    level is empty, counting level i+1 callers held by level i+2 agents
//    (printed as c = k3 - n3 - b1 and b - b1 > k2 in places).
std::vector<Transition> transitions(const State &state, const Params &p,
                                    const Reservation &n) {
    if (!in_state_space(state, p, n))
        throw DomainError("state " + state.to_string() + " is not in the state space");
    const Counts x(state);
    const Occupancy occ = occupancy_of(x, p);
    std::vector<Transition> out;
    auto emit = [&](const Counts &target, double rate, double cost, Event event, int level) {
        if (rate > 0.0)
            out.push_back({target.to_state(), rate, cost, event, level});
    };

    if (state.customers() < p.ell) {
        for (int i = 0; i < kLevels; ++i) {
            Counts next = x;
            ++next.callers[i];
            if (occ.free_agents[i] == 0 && i + 1 < kLevels &&
                occ.free_agents[i + 1] > n.at(i + 1))
                ++next.up[i];
            emit(next, p.lambda[i], 0.0, Event::Arrival, i);
        }
    }

    for (int i = 0; i < kLevels; ++i) {
        // Completion by a level i agent of one of its own callers. If no level
        // i caller waits, the agent may take level i-1 overflow.
        {
            Counts next = x;
            --next.callers[i];
            if (occ.waiting[i] == 0 && i > 0 && occ.waiting[i - 1] > 0 &&
                occ.free_agents[i] + 1 > n.at(i))
                ++next.up[i - 1];
            emit(next, occ.own_served[i] * p.mu[i], 0.0, Event::OwnService, i);
        }
        // Completion of a level i caller held by a level i+1 agent. The agent
        // returns to its own queue first, then to more level i overflow.
        if (i + 1 < kLevels) {
            Counts next = x;
            --next.callers[i];
            const bool keeps_overflow = occ.waiting[i + 1] == 0 && occ.waiting[i] > 0 &&
                                        occ.free_agents[i + 1] + 1 > n.at(i + 1);
            if (!keeps_overflow)
                --next.up[i];
            emit(next, x.up[i] * p.mu_up[i], 0.0, Event::UpService, i);
        }
    }

    for (int i = 0; i < kLevels; ++i) {
        Counts next = x;
        --next.callers[i];
        emit(next, occ.waiting[i] * p.theta[i], p.gamma[i], Event::Abandonment, i);
    }
    return out;
}

MeasureSpec MeasureSpec::cost(const Params &params) {
    return {MeasureKind::CostOfAbandonmentsAndLosses, params.gamma, params.beta};
}

MeasureSpec MeasureSpec::abandonments() {
    return {MeasureKind::CostOfAbandonmentsAndLosses, {1.0, 1.0, 1.0, 1.0}, 0.0};
}

MeasureSpec MeasureSpec::weighted_abandonments(const Params &params) {
    return {MeasureKind::CostOfAbandonmentsAndLosses, params.gamma, 0.0};
}

MeasureSpec MeasureSpec::blocked() {
    return {MeasureKind::CostOfAbandonmentsAndLosses, {0.0, 0.0, 0.0, 0.0}, 1.0};
}

MeasureSpec MeasureSpec::waiting_time() {
    return {MeasureKind::TotalWaitingTime, {1.0, 1.0, 1.0, 1.0}, 0.0};
}

MeasureSpec MeasureSpec::services() {
    return {MeasureKind::Services, {1.0, 1.0, 1.0, 1.0}, 0.0};
}

void MeasureSpec::validate() const {
    for (double w : weights)
        if (!nonnegative(w))
            throw DomainError("measure weights must be finite and >= 0");
    if (!nonnegative(beta))
        throw DomainError("measure blocking weight must be finite and >= 0");
}

double source_rate(const State &state, const Params &p, const MeasureSpec &spec) {
    const Counts x(state);
    const Occupancy occ = occupancy_of(x, p);
    double total = 0.0;
    switch (spec.kind) {
    case MeasureKind::CostOfAbandonmentsAndLosses:
        for (int i = 0; i < kLevels; ++i)
            total += occ.waiting[i] * p.theta[i] * spec.weights[i];
        if (state.customers() == p.ell)
            total += p.total_arrival_rate() * spec.beta;
        break;
    case MeasureKind::TotalWaitingTime:
        for (int i = 0; i < kLevels; ++i)
            total += spec.weights[i] * occ.waiting[i];
        break;
    case MeasureKind::Services:
        for (int i = 0; i < kLevels; ++i) {
            double rate = occ.own_served[i] * p.mu[i];
            if (i + 1 < kLevels)
                rate += x.up[i] * p.mu_up[i];
            total += spec.weights[i] * rate;
        }
        break;
    }
    return total;
}

TransformModel::TransformModel(const Params &params, const Reservation &n)
    : m_params(params), m_reservation(n), m_space(enumerate_states(params, n)) {
    m_outflow.assign(m_space.size(), 0.0);
    m_links.resize(m_space.size());
    for (std::size_t row = 0; row < m_space.size(); ++row) {
        auto &links = m_links[row];
        for (const auto &tr : transitions(m_space[row], params, n)) {
            m_outflow[row] += tr.rate;
            // Targets outside the space occur only from states the policy
            // never reaches; their transform value is taken as zero.
            if (const auto col = m_space.index_of(tr.target))
                links.push_back({*col, tr.rate});
        }
        std::sort(links.begin(), links.end(),
                  [](const Link &l, const Link &r) { return l.col < r.col; });
        // Distinct events may share a target (service and abandonment both
        // decrement a level); merge them into one coefficient.
        std::vector<Link> merged;
        for (const Link &l : links) {
            if (!merged.empty() && merged.back().col == l.col)
                merged.back().rate += l.rate;
            else
                merged.push_back(l);
        }
        links = std::move(merged);
    }
}

std::vector<double> TransformModel::sources(const MeasureSpec &spec) const {
    spec.validate();
    std::vector<double> out(m_space.size());
    for (std::size_t i = 0; i < m_space.size(); ++i)
        out[i] = source_rate(m_space[i], m_params, spec);
    return out;
}

std::vector<SparseEntry> TransformModel::matrix_entries(Complex s, bool transposed) const {
    std::vector<SparseEntry> entries;
    for (std::size_t row = 0; row < m_space.size(); ++row) {
        entries.push_back({row, row, m_outflow[row] + s});
        for (const Link &l : m_links[row]) {
            if (l.col == row)
                entries.back().value -= l.rate;
            else if (transposed)
                entries.push_back({l.col, row, Complex(-l.rate)});
            else
                entries.push_back({row, l.col, Complex(-l.rate)});
        }
    }
    return entries;
}

SparseSystem assemble_transform_system(const Params &params, const Reservation &n,
                                       const MeasureSpec &spec, Complex s) {
    const TransformModel model(params, n);
    SparseSystem sys;
    sys.dimension = model.space().size();
    sys.entries = model.matrix_entries(s);
    const auto src = model.sources(spec);
    sys.rhs.resize(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
        sys.rhs[i] = src[i] / s;
    return sys;
}

std::vector<double> expected_measures(const TransformModel &model,
                                      std::span<const MeasureSpec> specs,
                                      const State &state, double t,
                                      const EulerParams &euler) {
    const std::size_t start = require_start(model, state);
    if (!(t >= 0.0) || !std::isfinite(t))
        throw DomainError("time must be finite and >= 0");
    if (t == 0.0 || specs.empty())
        return std::vector<double>(specs.size(), 0.0);
    std::vector<std::vector<double>> sources;
    for (const auto &spec : specs)
        sources.push_back(model.sources(spec));
    const std::size_t dim = model.space().size();
    auto transform = [&](Complex s) {
        const auto entries = model.matrix_entries(s);
        const SparseSolver solver(dim, entries);
        std::vector<Complex> out;
        ComplexVector rhs(dim);
        for (const auto &src : sources) {
            for (std::size_t i = 0; i < dim; ++i)
                rhs[i] = src[i] / s;
            out.push_back(solver.solve(rhs)[start]);
        }
        return out;
    };
    return invert_vector(transform, t, euler);
}

double expected_measure(const Params &params, const Reservation &n, const MeasureSpec &spec,
                        const State &state, double t, const EulerParams &euler) {
    const TransformModel model(params, n);
    return expected_measures(model, std::span(&spec, 1), state, t, euler).front();
}

double abandonment_proportion(const TransformModel &model, const State &state, double t,
                              bool weighted, const EulerParams &euler) {
    const double offered = model.params().total_arrival_rate() * t;
    if (!(offered > 0.0))
        throw DomainError("abandonment proportion needs total arrival rate * t > 0");
    const MeasureSpec spec = weighted ? MeasureSpec::weighted_abandonments(model.params())
                                      : MeasureSpec::abandonments();
    return expected_measures(model, std::span(&spec, 1), state, t, euler).front() / offered;
}

double abandonment_proportion(const Params &params, const Reservation &n, const State &state,
                              double t, bool weighted, const EulerParams &euler) {
    const TransformModel model(params, n);
    return abandonment_proportion(model, state, t, weighted, euler);
}

std::vector<double> transition_distribution(const TransformModel &model, const State &state,
                                            double t, const EulerParams &euler) {
    const std::size_t start = require_start(model, state);
    if (!(t >= 0.0) || !std::isfinite(t))
        throw DomainError("time must be finite and >= 0");
    const std::size_t dim = model.space().size();
    if (t == 0.0) {
        std::vector<double> row(dim, 0.0);
        row[start] = 1.0;
        return row;
    }
    // Forward equations: (sI - Q)^T p~ = e_start.
    auto transform = [&](Complex s) {
        const auto entries = model.matrix_entries(s, true);
        const SparseSolver solver(dim, entries);
        ComplexVector rhs(dim, 0.0);
        rhs[start] = 1.0;
        return solver.solve(rhs);
    };
    return clip_and_normalize(invert_vector(transform, t, euler));
}

std::vector<double> transition_distribution(const Params &params, const Reservation &n,
                                            const State &state, double t,
                                            const EulerParams &euler) {
    const TransformModel model(params, n);
    return transition_distribution(model, state, t, euler);
}

} // namespace sbr::multi
