#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "modred/errors.hpp"
#include "modred/freqresp.hpp"
#include "test_support.hpp"

using namespace modred;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

StateSpaceModel resonance() {
    // w_n = 10, zeta = 0.01, unit DC gain numerator w_n^2.
    Matrix a(2, 2);
    a << 0, 1, -100, -0.2;
    Matrix b(2, 1);
    b << 0, 100;
    Matrix c(1, 2);
    c << 1, 0;
    return {a, b, c, Matrix::Zero(1, 1)};
}

}  // namespace

TEST_CASE("FrequencyGrid validation") {
    CHECK_NOTHROW(FrequencyGrid({1.0, 2.0, 3.0}));
    CHECK_THROWS_AS(FrequencyGrid({}), DomainError);
    CHECK_THROWS_AS(FrequencyGrid({1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(FrequencyGrid({2.0, 1.0}), DomainError);
    CHECK_THROWS_AS(FrequencyGrid({0.0, 1.0}), DomainError);
    CHECK_THROWS_AS(FrequencyGrid({1.0, INFINITY}), DomainError);

    const auto g = make_log_grid(std::pow(10.0, 2.5), 1e5, 1000);
    CHECK(g.size() == 1000);
    CHECK(g.front() == std::pow(10.0, 2.5));
    CHECK(g.back() == 1e5);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK_THROWS_AS((void)make_log_grid(10.0, 1.0, 5), DomainError);
}

TEST_CASE("compute_N examples") {
    // Single scalar subsystem G = 1/(s+1), K11 = 0: N11 = 0, N12 = K12, N21 = K21.
    const StateSpaceModel g(m1(-1), m1(1), m1(1), m1(0));
    const InterconnectedSystem open({g}, m1(0), m1(2), m1(3), m1(0));
    const auto n = compute_N(open, 1.0);
    CHECK(std::abs(n.n11(0, 0)) == 0.0);
    CHECK(std::abs(n.n12(0, 0) - 2.0) < 1e-15);
    CHECK(std::abs(n.n21(0, 0) - 3.0) < 1e-15);
    CHECK(n.full().rows() == 2);
    CHECK(n.full().cols() == 2);
    CHECK(std::abs(n.full()(1, 1)) == 0.0);

    // K11 = -1: N11 = -1 / (1 + G) = -(s+1)/(s+2); at w = 0 that is -1/2.
    const InterconnectedSystem fb({g}, m1(-1), m1(1), m1(1), m1(0));
    const auto nf = compute_N(fb, 0.0);
    CHECK(std::abs(nf.n11(0, 0) - Complex(-0.5, 0.0)) < 1e-15);
    CHECK(std::abs(nf.n12(0, 0) - Complex(0.5, 0.0)) < 1e-15);
    CHECK(std::abs(nf.n21(0, 0) - Complex(0.5, 0.0)) < 1e-15);
}

TEST_CASE("compute_N closes the loop exactly for any subsystem perturbation") {
    // For G_b + Delta, the closed loop changes by N21 Delta (I - N11 Delta)^{-1} N12.
    testing::Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const std::vector<StateSpaceModel> subs{testing::random_stable(rng, 3, 2, 1),
                                                testing::random_stable(rng, 2, 1, 2)};
        const InterconnectedSystem sys(subs, testing::random_matrix(rng, 3, 3, 0.3),
                                       testing::random_matrix(rng, 3, 2),
                                       testing::random_matrix(rng, 1, 3), Matrix::Constant(1, 2, 0.2));
        const double w = testing::uniform(rng, 0.05, 20.0);
        std::vector<CMatrix> blocks;
        for (const auto& s : subs) blocks.push_back(freq_response(s, w));
        const CMatrix gb = block_diag(blocks);
        const auto n = compute_N(sys, gb, w);
        CMatrix delta = CMatrix::Zero(3, 3);
        delta.block(0, 0, 1, 2) = testing::random_contraction(rng, 1, 2, 0.1);
        delta.block(1, 2, 2, 1) = testing::random_contraction(rng, 2, 1, 0.1);
        const CMatrix gc = lft_response(sys, gb);
        const CMatrix gchat = lft_response(sys, gb + delta);
        const CMatrix loop = CMatrix::Identity(3, 3) - n.n11 * delta;
        const CMatrix predicted = n.n21 * delta * loop.inverse() * n.n12;
        CHECK(sigma_max((gchat - gc) - predicted) <= 1e-11 * std::max(1.0, sigma_max(predicted)));
    }
}

TEST_CASE("sigma_max and hinf_norm_estimate examples") {
    Matrix d(2, 2);
    d << 3, 0, 0, 4;
    CHECK(sigma_max(d.cast<Complex>()) == doctest::Approx(4.0));

    const auto grid = make_log_grid(1e-2, 1e2, 200);
    const StateSpaceModel g(m1(-1), m1(1), m1(1), m1(0));
    CHECK(hinf_norm_estimate(g, grid) == doctest::Approx(1.0).epsilon(1e-12));

    const double peak = hinf_norm_estimate(resonance(), make_log_grid(1.0, 100.0, 400));
    CHECK(std::abs(peak - 50.0025) / 50.0025 <= 1e-3);

    Matrix osc(2, 2);
    osc << 0, 1, -1, 0;
    const StateSpaceModel undamped(osc, Matrix::Identity(2, 1), Matrix::Identity(1, 2),
                                   Matrix::Zero(1, 1));
    CHECK_THROWS_AS((void)hinf_norm_estimate(undamped, grid), DomainError);

    const auto s = StateSpaceModel::static_gain(d);
    CHECK(hinf_norm_estimate(s, grid) == doctest::Approx(4.0));
}

TEST_CASE("hinf_norm_estimate is a lower bound of every sampled gain") {
    testing::Rng rng(17);
    const auto grid = make_log_grid(1e-2, 1e2, 60);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = testing::random_stable(rng, 5, 2, 2);
        const double est = hinf_norm_estimate(g, grid);
        for (int t = 0; t < 20; ++t) {
            const double w = std::pow(10.0, testing::uniform(rng, -2.0, 2.0));
            CHECK(sigma_max(freq_response(g, w)) <= est * (1.0 + 1e-6) + 1e-12);
        }
    }
}

TEST_CASE("ResponseSweep agrees with the dense solve") {
    testing::Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = testing::uniform_int(rng, 1, 12);
        const auto g = testing::random_stable(rng, n, 3, 2);
        const ResponseSweep sweep(g);
        for (double w : {0.0, 0.01, 0.7, 3.0, 250.0}) {
            const CMatrix dense = freq_response(g, w);
            CHECK(sigma_max(sweep(w) - dense) <= 1e-10 * std::max(1.0, sigma_max(dense)));
        }
    }
    const auto grid = make_log_grid(0.1, 10.0, 7);
    const auto g = testing::random_stable(rng, 6, 2, 2);
    const auto serial = sweep_response(g, grid, 1);
    const auto threaded = sweep_response(g, grid, 3);
    REQUIRE(serial.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(serial[i] == threaded[i]);

    const auto s = StateSpaceModel::static_gain(Matrix::Ones(2, 2));
    CHECK(ResponseSweep(s)(5.0) == Matrix::Ones(2, 2).cast<Complex>());
}

TEST_CASE("CSV formatting round-trips") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-300) == "1e-300");
    testing::Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const double v = std::ldexp(testing::uniform(rng, -1.0, 1.0), testing::uniform_int(rng, -60, 60));
        CHECK(std::stod(format_double(v)) == v);
    }
    std::ostringstream out;
    write_csv(out, {"omega", "a"}, {{1.0, 2.5}, {2.0, -3.0}});
    CHECK(out.str() == "omega,a\n1,2.5\n2,-3\n");

    std::ostringstream out2;
    const std::vector<double> vals{7.0, 8.0};
    write_csv(out2, FrequencyGrid({1.0, 10.0}), vals, "gain");
    CHECK(out2.str() == "omega,gain\n1,7\n10,8\n");
}
