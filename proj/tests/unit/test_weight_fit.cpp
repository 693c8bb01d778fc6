#include "doctest.h"

#include <cmath>
#include <vector>

#include "modred/errors.hpp"
#include "modred/freqresp.hpp"
#include "modred/reduction.hpp"

using namespace modred;

namespace {

double max_rel_error(const FittedWeight& f, const FrequencyGrid& grid, const std::vector<double>& s) {
    double e = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        e = std::max(e, std::abs(std::abs(freq_response(f.model, grid[i])(0, 0)) / s[i] - 1.0));
    }
    return e;
}

void check_left_half_plane(const FittedWeight& f) {
    for (const auto& p : f.poles()) CHECK(p.real() < 0.0);
    for (const auto& z : f.zeros()) CHECK(z.real() < 0.0);
}

}  // namespace

TEST_CASE("constant samples give a static gain") {
    const auto grid = make_log_grid(1.0, 100.0, 50);
    const std::vector<double> s(grid.size(), 3.5);
    const auto f = fit_weight(grid, s, 0);
    CHECK(f.order() == 0);
    CHECK(f.model.d()(0, 0) == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(f.fit_error < 1e-12);
}

TEST_CASE("first-order lag is recovered") {
    const auto grid = make_log_grid(0.01, 100.0, 120);
    std::vector<double> s(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) s[i] = 1.0 / std::hypot(1.0, grid[i]);
    const auto f = fit_weight(grid, s, 1);
    CHECK(f.order() == 1);
    CHECK(f.fit_error <= 1e-3);
    CHECK(max_rel_error(f, grid, s) == doctest::Approx(f.fit_error).epsilon(1e-6));
    check_left_half_plane(f);
}

TEST_CASE("lead-lag step is recovered at second order") {
    // |(s + 1)(s + 2) / ((s + 20)(s + 40))| * 400
    const auto grid = make_log_grid(0.1, 1000.0, 150);
    std::vector<double> s(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid[i];
        s[i] = 400.0 * std::hypot(1.0, w) * std::hypot(2.0, w) / (std::hypot(20.0, w) * std::hypot(40.0, w));
    }
    const auto f = fit_weight(grid, s, 2);
    CHECK(f.order() == 2);
    CHECK(f.fit_error <= 1e-2);
    check_left_half_plane(f);
}

TEST_CASE("resonant peak fitted and self-consistent") {
    const auto grid = make_log_grid(1.0, 1000.0, 200);
    std::vector<double> s(grid.size());
    const double wn = 50.0, zeta = 0.05;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid[i];
        // Biproper: (s^2 + 2 wn s + wn^2) / (s^2 + 2 zeta wn s + wn^2)
        s[i] = std::hypot(wn * wn - w * w, 2.0 * wn * w) / std::hypot(wn * wn - w * w, 2.0 * zeta * wn * w);
    }
    const auto f = fit_weight(grid, s, 2);
    CHECK(f.fit_error <= 1e-2);
    CHECK(max_rel_error(f, grid, s) == doctest::Approx(f.fit_error).epsilon(1e-6));
    check_left_half_plane(f);
}

TEST_CASE("higher orders do not fit worse") {
    const auto grid = make_log_grid(1.0, 1e4, 200);
    std::vector<double> s(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid[i];
        s[i] = 1.0 + 30.0 * std::exp(-std::pow(std::log10(w / 300.0), 2) * 8.0);
    }
    // Shaped log-magnitude objective, recomputed from the realized model.
    auto objective = [&](const FittedWeight& f) {
        double acc = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double r = std::log(std::abs(freq_response(f.model, grid[i])(0, 0)) / s[i]);
            if (r < 0.0) r *= kUnderfitPenalty;
            acc += r * r;
        }
        return acc;
    };
    // Even orders extend the same greedy path.
    double prev = INFINITY;
    for (int order : {0, 2, 4}) {
        const auto f = fit_weight(grid, s, order);
        CHECK(f.order() == order);
        const double obj = objective(f);
        CHECK(obj <= prev * (1.0 + 1e-6));
        prev = obj;
        check_left_half_plane(f);
    }
}

TEST_CASE("weight fitting rejects bad samples") {
    const auto grid = make_log_grid(1.0, 10.0, 5);
    CHECK_THROWS_AS((void)fit_weight(grid, std::vector<double>{1, 1, 0, 1, 1}, 1), DomainError);
    CHECK_THROWS_AS((void)fit_weight(grid, std::vector<double>{1, 1, -2, 1, 1}, 1), DomainError);
    CHECK_THROWS_AS((void)fit_weight(grid, std::vector<double>{1, 1, 1}, 1), DomainError);
    CHECK_THROWS_AS((void)fit_weight(grid, std::vector<double>{1, 1, 1, 1, 1}, -1), DomainError);
    CHECK_THROWS_AS((void)fit_weight(grid, std::vector<double>{1, 1, NAN, 1, 1}, 1), DomainError);
}

TEST_CASE("diagonal weight stacks channels") {
    const auto grid = make_log_grid(0.1, 10.0, 40);
    std::vector<double> a(grid.size(), 2.0), b(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) b[i] = 1.0 / std::hypot(1.0, grid[i]);
    const std::vector<FittedWeight> ch{fit_weight(grid, a, 0), fit_weight(grid, b, 1)};
    const auto w = diagonal_weight(ch);
    CHECK(w.inputs() == 2);
    CHECK(w.outputs() == 2);
    CHECK(w.states() == 1);
    const CMatrix h = freq_response(w, 1.0);
    CHECK(std::abs(h(0, 1)) == 0.0);
    CHECK(std::abs(h(0, 0)) == doctest::Approx(2.0));
    CHECK_THROWS_AS((void)diagonal_weight({}), DomainError);
}
