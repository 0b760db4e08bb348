#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace oracle {

using sbr::multi::Params;
using sbr::multi::Reservation;
using sbr::multi::State;

std::vector<Complex> dense_solve(DenseMatrix a, std::vector<Complex> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col]))
                pivot = r;
        if (std::abs(a[pivot][col]) == 0.0)
            throw std::runtime_error("dense_solve: singular matrix");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const Complex f = a[r][col] / a[col][col];
            if (f == Complex(0.0))
                continue;
            for (std::size_t c = col; c < n; ++c)
                a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<Complex> x(n);
    for (std::size_t i = n; i-- > 0;) {
        Complex acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c)
            acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

void Generator::add_rate(std::size_t from, std::size_t to, double rate) {
    if (rate == 0.0 || from == to)
        return;
    at(from, to) += rate;
    at(from, from) -= rate;
}

namespace {

double uniform_rate(const Generator &g) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
        r = std::max(r, -g.at(i, i));
    return r > 0.0 ? r * 1.01 : 1.0;
}

// Poisson(m) probabilities for 0..N, with N far enough in the tail.
std::vector<double> poisson_weights(double m) {
    const auto last = static_cast<std::size_t>(m + 12.0 * std::sqrt(m) + 60.0);
    std::vector<double> w(last + 1);
    for (std::size_t k = 0; k <= last; ++k)
        w[k] = std::exp(-m + static_cast<double>(k) * std::log(m) -
                        std::lgamma(static_cast<double>(k) + 1.0));
    return w;
}

// Uniformized DTMC P = I + Q/rate.
std::vector<double> jump_matrix(const Generator &g, double rate) {
    std::vector<double> p(g.q.size());
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < g.n; ++j)
            p[i * g.n + j] = (i == j ? 1.0 : 0.0) + g.at(i, j) / rate;
    return p;
}

} // namespace

std::vector<double> transient(const Generator &g, const std::vector<double> &p0, double t) {
    if (t == 0.0)
        return p0;
    const double rate = uniform_rate(g);
    const auto weights = poisson_weights(rate * t);
    const auto p = jump_matrix(g, rate);
    std::vector<double> v = p0, out(g.n, 0.0), next(g.n);
    for (double w : weights) {
        for (std::size_t j = 0; j < g.n; ++j)
            out[j] += w * v[j];
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < g.n; ++i)
            if (v[i] != 0.0)
                for (std::size_t j = 0; j < g.n; ++j)
                    next[j] += v[i] * p[i * g.n + j];
        v.swap(next);
    }
    return out;
}

std::vector<double> cumulative_reward(const Generator &g, const std::vector<double> &reward,
                                      double t) {
    if (t == 0.0)
        return std::vector<double>(g.n, 0.0);
    const double rate = uniform_rate(g);
    const auto weights = poisson_weights(rate * t);
    // integral_0^t Poisson pmf(k; rate u) du = P(N(rate t) > k) / rate.
    std::vector<double> tail(weights.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = weights.size(); k-- > 0;) {
        tail[k] = acc;
        acc += weights[k];
    }
    const auto p = jump_matrix(g, rate);
    std::vector<double> v = reward, out(g.n, 0.0), next(g.n);
    for (std::size_t k = 0; k < weights.size(); ++k) {
        for (std::size_t i = 0; i < g.n; ++i)
            out[i] += tail[k] / rate * v[i];
        for (std::size_t i = 0; i < g.n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < g.n; ++j)
                s += p[i * g.n + j] * v[j];
            next[i] = s;
        }
        v.swap(next);
    }
    return out;
}

std::vector<double> birth_death_stationary(const std::vector<double> &up,
                                           const std::vector<double> &down) {
    std::vector<double> pi(up.size(), 1.0);
    for (std::size_t j = 1; j < pi.size(); ++j)
        pi[j] = pi[j - 1] * up[j - 1] / down[j];
    double total = 0.0;
    for (double x : pi)
        total += x;
    for (double &x : pi)
        x /= total;
    return pi;
}

SingleChain single_chain(double lambda, double mu, double theta, int k, int ell, double beta,
                         double gamma) {
    const auto n = static_cast<std::size_t>(ell) + 1;
    SingleChain c{Generator(n), std::vector<double>(n), std::vector<double>(n),
                  std::vector<double>(n)};
    for (int a = 0; a <= ell; ++a) {
        const int busy = a < k ? a : k;
        const int queue = a - busy;
        if (a < ell)
            c.generator.add_rate(a, a + 1, lambda);
        if (a > 0)
            c.generator.add_rate(a, a - 1, busy * mu + queue * theta);
        c.abandonment_cost[a] = queue * theta * gamma + (a == ell ? lambda * beta : 0.0);
        c.waiting[a] = queue;
        c.services[a] = busy * mu;
    }
    return c;
}

namespace {

struct Pools {
    std::array<int, 4> own{};
    std::array<int, 3> up{};
    std::array<int, 4> queue{};

    auto operator<=>(const Pools &) const = default;

    State state() const {
        return {own[0] + up[0] + queue[0], up[0], own[1] + up[1] + queue[1], up[1],
                own[2] + up[2] + queue[2], up[2], own[3] + queue[3]};
    }
    int total() const {
        int t = 0;
        for (int i = 0; i < 4; ++i)
            t += own[i] + queue[i] + (i < 3 ? up[i] : 0);
        return t;
    }
};

struct Move {
    Pools to;
    double rate;
};

int idle(const Pools &x, const Params &p, int level) {
    return p.k[level] - x.own[level] - (level > 0 ? x.up[level - 1] : 0);
}

int reserved(const Reservation &n, int level) {
    return level == 1 ? n.n2 : level == 2 ? n.n3 : level == 3 ? n.n4 : 0;
}

// An agent at `level` has just finished a call.
void agent_free(Pools &x, const Params &p, const Reservation &n, int level) {
    if (x.queue[level] > 0) {
        --x.queue[level];
        ++x.own[level];
    } else if (level > 0 && x.queue[level - 1] > 0 && idle(x, p, level) > reserved(n, level)) {
        --x.queue[level - 1];
        ++x.up[level - 1];
    }
}

std::vector<Move> moves(const Pools &x, const Params &p, const Reservation &n) {
    std::vector<Move> out;
    for (int i = 0; i < 4; ++i) {
        if (x.total() < p.ell) {
            Pools y = x;
            if (idle(x, p, i) > 0)
                ++y.own[i];
            else if (i < 3 && idle(x, p, i + 1) > reserved(n, i + 1))
                ++y.up[i];
            else
                ++y.queue[i];
            out.push_back({y, p.lambda[i]});
        }
        if (x.own[i] > 0) {
            Pools y = x;
            --y.own[i];
            agent_free(y, p, n, i);
            out.push_back({y, x.own[i] * p.mu[i]});
        }
        if (i < 3 && x.up[i] > 0) {
            Pools y = x;
            --y.up[i];
            agent_free(y, p, n, i + 1);
            out.push_back({y, x.up[i] * p.mu_up[i]});
        }
        if (x.queue[i] > 0) {
            Pools y = x;
            --y.queue[i];
            out.push_back({y, x.queue[i] * p.theta[i]});
        }
    }
    return out;
}

} // namespace

std::size_t AgentChain::index(const State &s) const {
    const auto it = std::lower_bound(states.begin(), states.end(), s);
    if (it == states.end() || *it != s)
        throw std::out_of_range("state not in agent chain: " + s.to_string());
    return static_cast<std::size_t>(it - states.begin());
}

AgentChain agent_chain(const Params &p, const Reservation &n) {
    std::map<State, Pools> seen;
    std::deque<Pools> frontier{Pools{}};
    seen.emplace(Pools{}.state(), Pools{});
    while (!frontier.empty()) {
        const Pools x = frontier.front();
        frontier.pop_front();
        for (const Move &m : moves(x, p, n)) {
            if (m.rate == 0.0)
                continue;
            const auto [it, fresh] = seen.emplace(m.to.state(), m.to);
            if (!fresh && it->second != m.to)
                throw std::logic_error("two agent configurations share a state");
            if (fresh)
                frontier.push_back(m.to);
        }
    }
    AgentChain c;
    for (const auto &entry : seen)
        c.states.push_back(entry.first);
    const std::size_t size = c.states.size();
    c.generator = Generator(size);
    for (auto *v : {&c.weighted_abandonment, &c.abandonment, &c.blocked, &c.waiting,
                    &c.services, &c.customers})
        v->assign(size, 0.0);
    double lambda_total = 0.0;
    for (double l : p.lambda)
        lambda_total += l;
    for (const auto &[state, x] : seen) {
        const std::size_t row = c.index(state);
        for (const Move &m : moves(x, p, n))
            if (m.rate != 0.0)
                c.generator.add_rate(row, c.index(m.to.state()), m.rate);
        for (int i = 0; i < 4; ++i) {
            c.weighted_abandonment[row] += x.queue[i] * p.theta[i] * p.gamma[i];
            c.abandonment[row] += x.queue[i] * p.theta[i];
            c.waiting[row] += x.queue[i];
            c.services[row] += x.own[i] * p.mu[i] + (i < 3 ? x.up[i] * p.mu_up[i] : 0.0);
        }
        c.blocked[row] = x.total() == p.ell ? lambda_total : 0.0;
        c.customers[row] = x.total();
    }
    return c;
}

bool omega_bullets(const State &s, const Params &p, const Reservation &n) {
    const auto &k = p.k;
    if (s.a < 0 || s.a1 < 0 || s.b < 0 || s.b1 < 0 || s.c < 0 || s.c1 < 0 || s.d < 0)
        return false;
    if (s.a + s.b + s.c + s.d > p.ell)
        return false;
    const auto within = [](int x, int lo, int hi) { return lo <= x && x <= hi; };
    const int a1_lo = (s.a > k[0] && s.b < k[1] - n.n2) ? std::min(s.a - k[0], k[1] - s.b - n.n2) : 0;
    const int b1_lo = (s.b > k[1] && s.c < k[2] - n.n3) ? std::min(s.b - k[1], k[2] - s.c - n.n3) : 0;
    const int c1_lo = (s.c > k[2] && s.d < k[3] - n.n4) ? std::min(s.c - k[2], k[3] - s.d - n.n4) : 0;
    return within(s.a1, a1_lo, std::min(k[1] - n.n2, s.a)) &&
           within(s.b1, b1_lo, std::min(k[2] - n.n3, s.b)) &&
           within(s.c1, c1_lo, std::min(k[3] - n.n4, s.c));
}

std::vector<State> box_filter(const Params &p, const Reservation &n) {
    std::vector<State> out;
    const int l = p.ell;
    for (int a = 0; a <= l; ++a)
        for (int a1 = 0; a1 <= l; ++a1)
            for (int b = 0; b <= l; ++b)
                for (int b1 = 0; b1 <= l; ++b1)
                    for (int c = 0; c <= l; ++c)
                        for (int c1 = 0; c1 <= l; ++c1)
                            for (int d = 0; d <= l; ++d) {
                                const State s{a, a1, b, b1, c, c1, d};
                                if (omega_bullets(s, p, n))
                                    out.push_back(s);
                            }
    return out;
}

double closed_form_outflow(const State &s, const Params &p) {
    const auto &k = p.k;
    const double arrivals = s.a + s.b + s.c + s.d < p.ell
                                ? p.lambda[0] + p.lambda[1] + p.lambda[2] + p.lambda[3]
                                : 0.0;
    return arrivals + std::min(k[0], s.a - s.a1) * p.mu[0] + s.a1 * p.mu_up[0] +
           std::min(s.b - s.b1, k[1] - s.a1) * p.mu[1] + s.b1 * p.mu_up[1] +
           std::min(s.c - s.c1, k[2] - s.b1) * p.mu[2] + s.c1 * p.mu_up[2] +
           std::min(s.d, k[3] - s.c1) * p.mu[3] +
           std::max(0, s.a - (k[0] + s.a1)) * p.theta[0] +
           std::max(0, s.b - (k[1] - s.a1 + s.b1)) * p.theta[1] +
           std::max(0, s.c - (k[2] - s.b1 + s.c1)) * p.theta[2] +
           std::max(0, s.d - (k[3] - s.c1)) * p.theta[3];
}

std::map<State, double> closed_form_targets(const State &s, const Params &p, const Reservation &n) {
    const auto &k = p.k;
    const int a = s.a, a1 = s.a1, b = s.b, b1 = s.b1, c = s.c, c1 = s.c1, d = s.d;
    const auto ind = [](bool x) { return x ? 1 : 0; };
    std::map<State, double> out;
    const auto add = [&](State t, double rate) {
        if (rate > 0.0)
            out[t] += rate;
    };
    if (a + b + c + d < p.ell) {
        add({a + 1, a1 + ind(a - a1 >= k[0] && b - b1 < k[1] - n.n2 - a1), b, b1, c, c1, d},
            p.lambda[0]);
        add({a, a1, b + 1, b1 + ind(b - b1 >= k[1] - a1 && c - c1 < k[2] - n.n3 - b1), c, c1, d},
            p.lambda[1]);
        add({a, a1, b, b1, c + 1, c1 + ind(c - c1 >= k[2] - b1 && d < k[3] - n.n4 - c1), d},
            p.lambda[2]);
        add({a, a1, b, b1, c, c1, d + 1}, p.lambda[3]);
    }
    add({a - 1, a1, b, b1, c, c1, d}, std::min(k[0], a - a1) * p.mu[0]);
    add({a - 1, a1 - (1 - ind(a - a1 > k[0] && b - b1 == k[1] - n.n2 - a1)), b, b1, c, c1, d},
        a1 * p.mu_up[0]);
    add({a, a1 + ind(a - a1 > k[0] && b - b1 == k[1] - n.n2 - a1), b - 1, b1, c, c1, d},
        std::min(b - b1, k[1] - a1) * p.mu[1]);
    add({a, a1, b - 1, b1 - (1 - ind(b - b1 > k[1] - a1 && c - c1 == k[2] - n.n3 - b1)), c, c1, d},
        b1 * p.mu_up[1]);
    add({a, a1, b, b1 + ind(b - b1 > k[1] - a1 && c - c1 == k[2] - n.n3 - b1), c - 1, c1, d},
        std::min(c - c1, k[2] - b1) * p.mu[2]);
    add({a, a1, b, b1, c - 1, c1 - (1 - ind(c - c1 > k[2] - b1 && d == k[3] - n.n4 - c1)), d},
        c1 * p.mu_up[2]);
    add({a, a1, b, b1, c, c1 + ind(c - c1 > k[2] - b1 && d == k[3] - n.n4 - c1), d - 1},
        std::min(d, k[3] - c1) * p.mu[3]);
    add({a - 1, a1, b, b1, c, c1, d}, std::max(0, a - (k[0] + a1)) * p.theta[0]);
    add({a, a1, b - 1, b1, c, c1, d}, std::max(0, b - (k[1] - a1 + b1)) * p.theta[1]);
    add({a, a1, b, b1, c - 1, c1, d}, std::max(0, c - (k[2] - b1 + c1)) * p.theta[2]);
    add({a, a1, b, b1, c, c1, d - 1}, std::max(0, d - (k[3] - c1)) * p.theta[3]);
    return out;
}

} // namespace oracle
