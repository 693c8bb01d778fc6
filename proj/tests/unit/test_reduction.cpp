#include "doctest.h"

#include <cmath>
#include <vector>

#include "modred/errors.hpp"
#include "modred/freqresp.hpp"
#include "modred/reduction.hpp"
#include "test_support.hpp"

using namespace modred;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

std::vector<Vector> constant_budgets(std::size_t n, Eigen::Index len, double value) {
    return std::vector<Vector>(n, Vector::Constant(len, value));
}

double worst_scaled_error(const StateSpaceModel& g, const StateSpaceModel& r, const FrequencyGrid& grid,
                          const std::vector<Vector>& v, const std::vector<Vector>& w) {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const CMatrix e = freq_response(r, grid[i]) - freq_response(g, grid[i]);
        const CMatrix s = w[i].cwiseInverse().cast<Complex>().asDiagonal() * e *
                          v[i].cwiseInverse().cast<Complex>().asDiagonal();
        worst = std::max(worst, sigma_max(s));
    }
    return worst;
}

}  // namespace

TEST_CASE("reduction method names round-trip") {
    for (auto m : {ReductionMethod::fwbt, ReductionMethod::bt, ReductionMethod::none}) {
        CHECK(parse_reduction_method(to_string(m)) == m);
    }
    CHECK_THROWS_AS((void)parse_reduction_method("svd"), DomainError);
}

TEST_CASE("truncation names round-trip") {
    for (auto t : {Truncation::direct, Truncation::residualize}) CHECK(parse_truncation(to_string(t)) == t);
    CHECK_THROWS_AS((void)parse_truncation("spa"), DomainError);
}

TEST_CASE("residualized reductions keep the DC gain") {
    testing::Rng rng(31);
    const auto grid = make_log_grid(0.01, 100.0, 40);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = testing::random_stable(rng, 7, 2, 2);
        const auto v = constant_budgets(grid.size(), 2, 1.0);
        const CMatrix dc = freq_response(g, 0.0);
        for (auto m : {ReductionMethod::bt, ReductionMethod::fwbt}) {
            ReductionOptions opt;
            opt.method = m;
            opt.order_override = 3;
            const auto r = reduce_to_requirement(g, grid, v, v, opt);
            CHECK((freq_response(r.reduced, 0.0) - dc).norm() <= 1e-8 * (1.0 + dc.norm()));
        }
    }
}

TEST_CASE("residualized balanced reduction obeys the tail bound") {
    testing::Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const auto n = static_cast<Eigen::Index>(2 + trial % 9);
        const auto g = testing::random_stable(rng, n, 2, 1);
        const auto grid = make_log_grid(1e-3, 1e3, 30);
        const auto v = constant_budgets(grid.size(), g.inputs(), 1.0);
        const auto w = constant_budgets(grid.size(), g.outputs(), 1.0);
        ReductionOptions opt;
        opt.method = ReductionMethod::bt;
        opt.order_override = n / 2;
        const auto r = reduce_to_requirement(g, grid, v, w, opt);
        const double tail = r.hankel_values.tail(n - n / 2).sum();
        const auto err = parallel_sum(r.reduced, StateSpaceModel(g.a(), g.b(), -g.c(), -g.d()));
        CHECK(hinf_norm_estimate(err, make_log_grid(1e-4, 1e4, 400)) <= 2.0 * tail + 1e-6);
    }
}

TEST_CASE("loose budgets reduce to a tiny model") {
    const StateSpaceModel g(m1(-1), m1(1), m1(1), m1(0));
    const auto grid = make_log_grid(0.1, 10.0, 50);
    // |G| <= 1 everywhere, so budgets of 2 allow dropping the state.
    const auto v = constant_budgets(grid.size(), 1, std::sqrt(2.0));
    const auto w = v;
    for (auto m : {ReductionMethod::fwbt, ReductionMethod::bt}) {
        ReductionOptions opt;
        opt.method = m;
        const auto r = reduce_to_requirement(g, grid, v, w, opt);
        CHECK(r.reduced_order == 0);
        CHECK(r.all_pass());
        CHECK(r.margins.size() == grid.size());
    }
}

TEST_CASE("reduced model always meets the budgets") {
    testing::Rng rng(404);
    const auto grid = make_log_grid(0.01, 100.0, 80);
    for (int trial = 0; trial < 8; ++trial) {
        const auto n = testing::uniform_int(rng, 3, 12);
        const auto g = testing::random_stable(rng, n, 2, 2);
        std::vector<Vector> v(grid.size()), w(grid.size());
        const double level = std::pow(10.0, testing::uniform(rng, -3.0, -1.0));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            v[i] = Vector::Constant(2, std::sqrt(level) * (1.0 + 0.5 * std::sin(std::log(grid[i]))));
            w[i] = Vector::Constant(2, std::sqrt(level));
        }
        for (auto search : {OrderSearch::bisect, OrderSearch::ascending}) {
            ReductionOptions opt;
            opt.search = search;
            opt.fit_order = 2;
            const auto r = reduce_to_requirement(g, grid, v, w, opt);
            CHECK(r.reduced_order <= n);
            CHECK(r.all_pass());
            CHECK(stability_check(r.reduced).stable);
            CHECK(worst_scaled_error(g, r.reduced, grid, v, w) <= 1.0 + 1e-9);
            CHECK(r.input_weights.size() == 2);
            CHECK(r.output_weights.size() == 2);
        }
    }
}

TEST_CASE("ascending search finds the smallest passing order") {
    testing::Rng rng(77);
    const auto grid = make_log_grid(0.01, 100.0, 60);
    const auto g = testing::random_stable(rng, 8, 1, 1);
    const auto v = constant_budgets(grid.size(), 1, 0.03);
    ReductionOptions opt;
    opt.method = ReductionMethod::bt;
    opt.search = OrderSearch::ascending;
    const auto r = reduce_to_requirement(g, grid, v, v, opt);
    for (Eigen::Index k = 0; k < r.reduced_order; ++k) {
        ReductionOptions fixed = opt;
        fixed.order_override = k;
        CHECK_FALSE(reduce_to_requirement(g, grid, v, v, fixed).all_pass());
    }
}

TEST_CASE("marginal poles are kept exactly") {
    // Double integrator in parallel with a fast lag.
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = 1.0;
    a(2, 2) = -100.0;
    Matrix b(3, 1);
    b << 0, 1, 100;
    Matrix c(1, 3);
    c << 1, 0, 1e-4;
    const StateSpaceModel g(a, b, c, m1(0));
    const auto grid = make_log_grid(0.1, 10.0, 40);
    const auto v = constant_budgets(grid.size(), 1, 0.1);
    const auto r = reduce_to_requirement(g, grid, v, v);
    CHECK(r.reduced_order == 2);
    CHECK(r.all_pass());
    CHECK(std::abs(freq_response(r.reduced, 1.0)(0, 0) - Complex(-1.0, 0.0)) < 1e-4);
}

TEST_CASE("order override and method none") {
    testing::Rng rng(8);
    const auto g = testing::random_stable(rng, 6, 1, 2);
    const auto grid = make_log_grid(0.1, 10.0, 30);
    const auto v = constant_budgets(grid.size(), 1, 1e-6);
    const auto w = constant_budgets(grid.size(), 2, 1e-6);
    ReductionOptions opt;
    opt.order_override = 1;
    const auto r = reduce_to_requirement(g, grid, v, w, opt);
    CHECK(r.reduced_order == 1);
    CHECK_FALSE(r.all_pass());

    ReductionOptions none;
    none.method = ReductionMethod::none;
    const auto same = reduce_to_requirement(g, grid, v, w, none);
    CHECK(same.reduced_order == 6);
    CHECK(same.all_pass());

    // Tight budgets: only the exact model passes.
    const auto exact = reduce_to_requirement(g, grid, v, w);
    CHECK(exact.reduced_order == 6);
}

TEST_CASE("unattainable requirement is reported") {
    testing::Rng rng(12);
    const auto g = testing::random_stable(rng, 4, 1, 1);
    const auto grid = make_log_grid(0.1, 10.0, 20);
    const auto v = constant_budgets(grid.size(), 1, 1.0);
    ReductionOptions opt;
    opt.slack = -2.0;  // demands a negative error norm
    CHECK_THROWS_AS((void)reduce_to_requirement(g, grid, v, v, opt), ReductionUnattainable);
}

TEST_CASE("budget validation") {
    const StateSpaceModel g(m1(-1), m1(1), m1(1), m1(0));
    const auto grid = make_log_grid(0.1, 10.0, 10);
    const auto good = constant_budgets(grid.size(), 1, 1.0);
    CHECK_THROWS_AS((void)reduce_to_requirement(g, grid, constant_budgets(3, 1, 1.0), good), DomainError);
    CHECK_THROWS_AS((void)reduce_to_requirement(g, grid, constant_budgets(grid.size(), 2, 1.0), good),
                    DomainError);
    CHECK_THROWS_AS((void)reduce_to_requirement(g, grid, constant_budgets(grid.size(), 1, 0.0), good),
                    DomainError);
}
