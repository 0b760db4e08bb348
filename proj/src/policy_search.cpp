#include "sbr/policy_search.hpp"

#include "sbr/errors.hpp"
#include "sbr/parallel.hpp"

#include <array>

namespace sbr::policy {

Table evaluate_all(const multi::Params &params, const multi::State &state, double t,
                   const SearchSpec &spec, const EulerParams &euler) {
    params.validate();
    euler.validate();
    if (!(t > 0.0))
        throw DomainError("time must be > 0");
    if (spec.objective == Objective::ExpectedCost)
        spec.measure.validate();

    Table table;
    for (int n2 = 0; n2 <= params.k[1]; ++n2)
        for (int n3 = 0; n3 <= params.k[2]; ++n3)
            for (int n4 = 0; n4 <= params.k[3]; ++n4)
                table.push_back({{n2, n3, n4}, 0.0});

    parallel_for(table.size(), [&](std::size_t i) {
        const multi::TransformModel model(params, table[i].n);
        switch (spec.objective) {
        case Objective::WeightedProportion:
        case Objective::RawProportion:
            table[i].value = multi::abandonment_proportion(
                model, state, t, spec.objective == Objective::WeightedProportion, euler);
            break;
        case Objective::ExpectedCost: {
            const std::array specs{spec.measure};
            table[i].value = multi::expected_measures(model, specs, state, t, euler).front();
            break;
        }
        }
    });
    return table;
}

Row best(const Table &table) {
    if (table.empty())
        throw DomainError("cannot pick the best row of an empty table");
    const Row *winner = &table.front();
    for (const Row &row : table)
        if (row.value < winner->value || (row.value == winner->value && row.n < winner->n))
            winner = &row;
    return *winner;
}

} // namespace sbr::policy
