#include "sbr/inversion.hpp"

#include "sbr/errors.hpp"
#include "sbr/parallel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace sbr {

namespace {

void check_finite(Complex value, Complex s) {
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
        std::ostringstream msg;
        msg << "transform evaluation is not finite at s=(" << s.real() << ","
            << s.imag() << ")";
        throw EvaluationError(s, msg.str());
    }
}

void check_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError("inversion time must be finite and > 0, got " +
                          std::to_string(t));
}

} // namespace

void EulerParams::validate() const {
    if (!(a_disc > 0.0))
        throw DomainError("euler a_disc must be > 0");
    if (n_terms < 1)
        throw DomainError("euler n_terms must be >= 1");
    if (m_euler < 0)
        throw DomainError("euler m_euler must be >= 0");
}

std::vector<EulerNode> euler_nodes(double t, const EulerParams &params) {
    params.validate();
    check_time(t);
    const int n = params.n_terms;
    const int m = params.m_euler;
    const double scale = std::exp(params.a_disc / 2.0) / t;

    // Term k enters partial sum s_j for every j >= k; averaging s_n..s_{n+m}
    // with binomial(m, j)/2^m gives term k the tail mass of those weights.
    std::vector<double> binom(m + 1);
    binom[0] = std::ldexp(1.0, -m);
    for (int j = 1; j <= m; ++j)
        binom[j] = binom[j - 1] * static_cast<double>(m - j + 1) / j;
    std::vector<double> tail(m + 2, 0.0);
    for (int j = m; j >= 0; --j)
        tail[j] = tail[j + 1] + binom[j];

    std::vector<EulerNode> nodes;
    nodes.reserve(n + m + 1);
    for (int k = 0; k <= n + m; ++k) {
        const double mass = k <= n ? 1.0 : tail[k - n];
        double w = scale * mass * (k % 2 == 0 ? 1.0 : -1.0);
        if (k == 0)
            w *= 0.5;
        const Complex s(params.a_disc / (2.0 * t),
                        static_cast<double>(k) * std::numbers::pi / t);
        nodes.push_back({s, w});
    }
    return nodes;
}

double invert(const Transform &transform, double t, const EulerParams &params) {
    double sum = 0.0;
    for (const auto &node : euler_nodes(t, params)) {
        const Complex value = transform(node.s);
        check_finite(value, node.s);
        sum += node.weight * value.real();
    }
    return sum;
}

std::vector<double> invert_many(const Transform &transform,
                                std::span<const double> ts,
                                const EulerParams &params) {
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (!(ts[i] > ts[i - 1]))
            throw DomainError("inversion times must be strictly increasing");
    std::vector<double> out;
    out.reserve(ts.size());
    for (double t : ts)
        out.push_back(invert(transform, t, params));
    return out;
}

std::vector<double> invert_vector(const VectorTransform &transform, double t,
                                  const EulerParams &params) {
    const auto nodes = euler_nodes(t, params);
    std::vector<std::vector<Complex>> values(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t k) {
        values[k] = transform(nodes[k].s);
        for (const Complex &v : values[k])
            check_finite(v, nodes[k].s);
    });
    const std::size_t dim = values.front().size();
    std::vector<double> out(dim, 0.0);
    // Accumulate in node order so the result does not depend on scheduling.
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (values[k].size() != dim)
            throw NumericalError("vector transform changed dimension");
        for (std::size_t i = 0; i < dim; ++i)
            out[i] += nodes[k].weight * values[k][i].real();
    }
    return out;
}

} // namespace sbr
