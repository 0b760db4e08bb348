#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "sbr/errors.hpp"
#include "sbr/single_level.hpp"

#include <cmath>
#include <numeric>

using namespace sbr;
using single::Params;

namespace {

const Params kTable1Level1{1.0, 2.0 / 3.0, 2.0, 3, 10, 0.0, 1.0};
const Params kTiny{1.0, 1.0, 1.0, 1, 2, 0.0, 1.0};

oracle::SingleChain chain_of(const Params &p) {
    return oracle::single_chain(p.lambda, p.mu, p.theta, p.k, p.ell, p.beta, p.gamma);
}

std::vector<double> unit(int n, int i) {
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    v[static_cast<std::size_t>(i)] = 1.0;
    return v;
}

} // namespace

TEST_CASE("transition rates") {
    const auto r0 = single::transition_rates(kTable1Level1, 0);
    CHECK(r0.up == 1.0);
    CHECK(r0.down == 0.0);
    const auto r10 = single::transition_rates(kTable1Level1, 10);
    CHECK(r10.up == 0.0);
    CHECK(r10.down == doctest::Approx(16.0));
    const auto r2 = single::transition_rates(kTable1Level1, 2);
    CHECK(r2.up == 1.0);
    CHECK(r2.down == doctest::Approx(4.0 / 3.0));
    CHECK_THROWS_AS(single::transition_rates(kTable1Level1, 11), DomainError);
    CHECK_THROWS_AS(single::transition_rates(kTable1Level1, -1), DomainError);
}

TEST_CASE("parameter validation") {
    Params p = kTiny;
    p.k = 3;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = kTiny;
    p.theta = -1.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = kTiny;
    p.k = 0;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("measure transform special cases") {
    Params p = kTable1Level1;
    p.theta = 0.0;
    for (Complex z : single::measure_transform(p, MeasureKind::CostOfAbandonmentsAndLosses,
                                                Complex(0.7, 0.4)))
        CHECK(z == Complex(0.0));

    p = kTable1Level1;
    p.lambda = 0.0;
    CHECK(single::measure_transform(p, MeasureKind::Services, 1.0)[0] == Complex(0.0));

    // 3-state instance at s=1 solved densely.
    const auto x = single::measure_transform(kTiny, MeasureKind::CostOfAbandonmentsAndLosses, 1.0);
    oracle::DenseMatrix a{{2.0, -1.0, 0.0}, {-1.0, 3.0, -1.0}, {0.0, -2.0, 3.0}};
    const auto y = oracle::dense_solve(a, {0.0, 0.0, 1.0});
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(x[i] - y[i]) < 1e-14);
}

TEST_CASE("expected measures at t=0") {
    for (auto kind : {MeasureKind::CostOfAbandonmentsAndLosses, MeasureKind::TotalWaitingTime,
                      MeasureKind::Services})
        CHECK(single::expected_measure(kTable1Level1, kind, 4, 0.0) == 0.0);
    CHECK_THROWS_AS(single::expected_measure(kTiny, MeasureKind::Services, 0, -1.0),
                    DomainError);
}

TEST_CASE("abandonments and blocking match the uniformization oracle") {
    const auto c = chain_of(kTiny);
    const auto ab = oracle::cumulative_reward(c.generator, c.abandonment_cost, 1.0);
    CHECK(std::abs(single::expected_measure(kTiny, MeasureKind::CostOfAbandonmentsAndLosses, 0,
                                            1.0) - ab[0]) < 1e-5);

    Params blocking = kTiny;
    blocking.gamma = 0.0;
    blocking.beta = 1.0;
    const auto cb = chain_of(blocking);
    const auto bl = oracle::cumulative_reward(cb.generator, cb.abandonment_cost, 1.0);
    CHECK(std::abs(single::expected_measure(blocking, MeasureKind::CostOfAbandonmentsAndLosses,
                                            2, 1.0) - bl[2]) < 1e-5);
}

TEST_CASE("every measure on every state of small instances matches the oracle") {
    const std::vector<Params> instances{
        kTiny,
        {0.8, 0.5, 1.5, 2, 4, 0.3, 2.0},
        {2.0, 1.0, 0.25, 1, 4, 1.0, 1.0},
        {1.0, 0.7, 0.5, 0, 3, 0.5, 1.0},
    };
    for (const auto &p : instances)
        for (double t : {0.5, 3.0, 12.0}) {
            const auto c = chain_of(p);
            const auto cost = oracle::cumulative_reward(c.generator, c.abandonment_cost, t);
            const auto wait = oracle::cumulative_reward(c.generator, c.waiting, t);
            const auto serv = oracle::cumulative_reward(c.generator, c.services, t);
            const auto lc = single::expected_measure_all(p, MeasureKind::CostOfAbandonmentsAndLosses, t);
            const auto lw = single::expected_measure_all(p, MeasureKind::TotalWaitingTime, t);
            const auto ls = single::expected_measure_all(p, MeasureKind::Services, t);
            for (int a = 0; a <= p.ell; ++a) {
                CAPTURE(a);
                CAPTURE(t);
                CHECK(std::abs(lc[a] - cost[a]) < 1e-5);
                CHECK(std::abs(lw[a] - wait[a]) < 1e-5);
                CHECK(std::abs(ls[a] - serv[a]) < 1e-5);
                const auto row = single::transition_probabilities(p, a, t);
                const auto ref = oracle::transient(c.generator, unit(p.ell + 1, a), t);
                for (int j = 0; j <= p.ell; ++j)
                    CHECK(std::abs(row[j] - ref[j]) < 1e-5);
            }
        }
}

TEST_CASE("transition probabilities") {
    const auto e3 = single::transition_probabilities(kTable1Level1, 3, 0.0);
    CHECK(e3 == unit(11, 3));

    Params death{0.0, 0.8, 0.0, 2, 4, 0.0, 1.0};
    for (double t : {0.2, 1.0, 5.0}) {
        const auto row = single::transition_probabilities(death, 1, t);
        CHECK(std::abs(row[0] - (1.0 - std::exp(-0.8 * t))) < 1e-6);
        CHECK(std::abs(row[1] - std::exp(-0.8 * t)) < 1e-6);
    }

    std::vector<double> up, down;
    for (int j = 0; j <= kTiny.ell; ++j) {
        const auto r = single::transition_rates(kTiny, j);
        up.push_back(r.up);
        down.push_back(r.down);
    }
    const auto pi = oracle::birth_death_stationary(up, down);
    for (int i = 0; i <= kTiny.ell; ++i) {
        const auto row = single::transition_probabilities(kTiny, i, 50.0);
        for (int j = 0; j <= kTiny.ell; ++j)
            CHECK(std::abs(row[j] - pi[j]) < 1e-4);
    }
}

TEST_CASE("probability rows are distributions") {
    for (int i = 0; i <= kTable1Level1.ell; i += 3)
        for (double t : {0.01, 0.5, 5.0, 60.0}) {
            const auto row = single::transition_probabilities(kTable1Level1, i, t);
            double total = 0.0;
            for (double v : row) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                total += v;
            }
            CHECK(std::abs(total - 1.0) <= 1e-6);
        }
}

TEST_CASE("abandonments are proportional to waiting time") {
    Params p = kTable1Level1;
    p.beta = 0.0;
    p.gamma = 1.0;
    for (double t : {1.0, 10.0, 60.0}) {
        const auto ab = single::expected_measure_all(p, MeasureKind::CostOfAbandonmentsAndLosses, t);
        const auto w = single::expected_measure_all(p, MeasureKind::TotalWaitingTime, t);
        for (int a = 0; a <= p.ell; ++a)
            CHECK(std::abs(ab[a] - p.theta * w[a]) <= 1e-6 * std::max(1e-12, std::abs(ab[a])));
    }
}

TEST_CASE("conservation of callers") {
    Params abandon = kTable1Level1;
    abandon.gamma = 1.0;
    abandon.beta = 0.0;
    Params block = kTable1Level1;
    block.gamma = 0.0;
    block.beta = 1.0;
    for (double t : {0.5, 5.0, 30.0}) {
        const auto ab = single::expected_measure_all(abandon, MeasureKind::CostOfAbandonmentsAndLosses, t);
        const auto bl = single::expected_measure_all(block, MeasureKind::CostOfAbandonmentsAndLosses, t);
        const auto sv = single::expected_measure_all(abandon, MeasureKind::Services, t);
        for (int a = 0; a <= abandon.ell; ++a) {
            const auto row = single::transition_probabilities(abandon, a, t);
            double mean = 0.0;
            for (int j = 0; j <= abandon.ell; ++j)
                mean += j * row[j];
            const double lhs = a + abandon.lambda * t - bl[a];
            CHECK(std::abs(lhs - (mean + sv[a] + ab[a])) <= 1e-5);
        }
    }
}

TEST_CASE("measures are nondecreasing in t") {
    for (auto kind : {MeasureKind::CostOfAbandonmentsAndLosses, MeasureKind::TotalWaitingTime,
                      MeasureKind::Services}) {
        std::vector<double> prev(11, 0.0);
        for (double t : {0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 60.0}) {
            const auto v = single::expected_measure_all(kTable1Level1, kind, t);
            for (int a = 0; a <= 10; ++a)
                CHECK(v[a] >= prev[a] - 1e-9);
            prev = v;
        }
    }
}

TEST_CASE("schedules") {
    const auto kind = MeasureKind::CostOfAbandonmentsAndLosses;
    const single::Schedule one{{kTable1Level1, 20.0}};
    const auto r1 = single::project_schedule(one, unit(11, 4), kind);
    CHECK(std::abs(r1.total - single::expected_measure(kTable1Level1, kind, 4, 20.0)) < 1e-12);

    const single::Schedule halves{{kTable1Level1, 10.0}, {kTable1Level1, 10.0}};
    const auto r2 = single::project_schedule(halves, unit(11, 4), kind);
    CHECK(std::abs(r2.total - r1.total) < 1e-5);
    for (int j = 0; j <= 10; ++j)
        CHECK(std::abs(r2.final_distribution[j] - r1.final_distribution[j]) < 1e-5);

    Params quiet = kTable1Level1;
    quiet.lambda = 0.0;
    quiet.theta = 0.0;
    const single::Schedule mixed{{kTable1Level1, 5.0}, {quiet, 7.0}};
    const auto r3 = single::project_schedule(mixed, unit(11, 6), kind);
    const auto r4 = single::project_schedule({{kTable1Level1, 5.0}}, unit(11, 6), kind);
    CHECK(std::abs(r3.total - r4.total) < 1e-9);

    CHECK_THROWS_AS(single::project_schedule({}, unit(11, 0), kind), DomainError);
    CHECK_THROWS_AS(single::project_schedule(one, unit(5, 0), kind), DomainError);
    Params other = kTable1Level1;
    other.ell = 12;
    CHECK_THROWS_AS(single::project_schedule({{kTable1Level1, 1.0}, {other, 1.0}}, unit(11, 0), kind),
                    DomainError);
    CHECK_THROWS_AS(single::project_schedule(one, std::vector<double>(11, 0.5), kind),
                    DomainError);
}

TEST_CASE("tagged caller wait") {
    const Params p{1.0, 1.0, 0.5, 2, 10, 0.0, 1.0};
    CHECK(single::tagged_wait(p, 1) == 0.0);
    CHECK(single::tagged_wait(p, 0) == 0.0);
    CHECK(single::tagged_wait(p, 3) == doctest::Approx(2.0 / 3.0));
    const Params no_patience{1.0, 1.0, 0.0, 1, 10, 0.0, 1.0};
    CHECK(single::tagged_wait(no_patience, 4) == doctest::Approx(4.0));

    for (int k = 0; k <= 4; ++k)
        for (double theta : {0.0, 0.3, 2.0})
            for (int a = 0; a <= 12; ++a) {
                const Params q{1.0, 0.7, theta, k, 12, 0.0, 1.0};
                if (k == 0 && theta == 0.0)
                    continue;
                const double closed = single::tagged_wait(q, a);
                const double stepped = single::tagged_wait_recursive(q, a);
                CHECK(std::abs(closed - stepped) <= 1e-12 * std::max(1.0, closed));
            }

    const Params degenerate{1.0, 1.0, 0.0, 0, 5, 0.0, 1.0};
    CHECK_THROWS_AS(single::tagged_wait(degenerate, 2), DomainError);
    CHECK_THROWS_AS(single::tagged_wait(p, -1), DomainError);
}
