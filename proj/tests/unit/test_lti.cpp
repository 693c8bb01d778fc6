#include "doctest.h"

#include <vector>

#include <Eigen/LU>

#include "modred/errors.hpp"
#include "modred/freqresp.hpp"
#include "modred/lti.hpp"
#include "test_support.hpp"

using namespace modred;

namespace {

StateSpaceModel first_order() {
    return {Matrix::Constant(1, 1, -1.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
            Matrix::Zero(1, 1)};
}

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

// Closed-loop response from the subsystem responses alone; never touches the
// closed-loop realization.
CMatrix lft_oracle(const InterconnectedSystem& sys, double omega) {
    std::vector<CMatrix> blocks;
    for (const auto& g : sys.subsystems()) blocks.push_back(freq_response(g, omega));
    const CMatrix gb = block_diag(blocks);
    const CMatrix k11 = sys.k11().cast<Complex>();
    const CMatrix loop = CMatrix::Identity(sys.mb(), sys.mb()) - k11 * gb;
    return sys.k21().cast<Complex>() * gb * loop.inverse() * sys.k12().cast<Complex>() +
           sys.k22().cast<Complex>();
}

}  // namespace

TEST_CASE("StateSpaceModel validates dimensions") {
    CHECK_NOTHROW(first_order());
    CHECK_THROWS_AS(StateSpaceModel(Matrix::Zero(2, 2), Matrix::Zero(1, 1), Matrix::Zero(1, 2),
                                    Matrix::Zero(1, 1)),
                    DomainError);
    CHECK_THROWS_AS(StateSpaceModel(m1(std::nan("")), m1(1), m1(1), m1(0)), DomainError);
    const auto g = StateSpaceModel::static_gain(Matrix::Ones(2, 3));
    CHECK(g.states() == 0);
    CHECK(g.inputs() == 3);
    CHECK(g.outputs() == 2);
}

TEST_CASE("freq_response examples") {
    const auto g = first_order();
    CHECK(std::abs(freq_response(g, 0.0)(0, 0) - Complex(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(freq_response(g, 1.0)(0, 0) - Complex(0.5, -0.5)) < 1e-15);

    Matrix d(2, 2);
    d << 1, 2, 3, 4;
    const auto s = StateSpaceModel::static_gain(d);
    CHECK((freq_response(s, 17.0) - d.cast<Complex>()).norm() == 0.0);

    Matrix osc(2, 2);
    osc << 0, 1, -1, 0;
    const StateSpaceModel undamped(osc, Matrix::Identity(2, 1), Matrix::Identity(1, 2),
                                   Matrix::Zero(1, 1));
    CHECK_THROWS_AS((void)freq_response(undamped, 1.0), NumericalError);
}

TEST_CASE("block_diag examples") {
    const auto g = first_order();
    const std::vector<StateSpaceModel> one{g};
    const auto same = block_diag(one);
    CHECK(same.a() == g.a());
    CHECK(same.d() == g.d());

    const StateSpaceModel g2(m1(-2), m1(3), m1(1), m1(0));
    const std::vector<StateSpaceModel> two{g, g2};
    const auto both = block_diag(two);
    CHECK(both.inputs() == 2);
    CHECK(both.outputs() == 2);
    const CMatrix dc = freq_response(both, 0.0);
    CHECK(std::abs(dc(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(dc(1, 1) - 1.5) < 1e-15);
    CHECK(std::abs(dc(0, 1)) == 0.0);
    CHECK(std::abs(dc(1, 0)) == 0.0);

    testing::Rng rng(7);
    const std::vector<StateSpaceModel> sized{testing::random_stable(rng, 2, 1, 1),
                                             testing::random_stable(rng, 3, 1, 1)};
    const auto big = block_diag(sized);
    CHECK(big.states() == 5);
    CHECK(big.a().block(0, 2, 2, 3).isZero(0.0));
    CHECK(big.a().block(2, 0, 3, 2).isZero(0.0));

    CHECK_THROWS_AS((void)block_diag(std::span<const StateSpaceModel>{}), DomainError);
}

TEST_CASE("lft_close examples") {
    testing::Rng rng(11);
    const auto g = testing::random_stable(rng, 3, 2, 2);
    const InterconnectedSystem pass({g}, Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                                    Matrix::Identity(2, 2), Matrix::Zero(2, 2));
    const auto gc = lft_close(pass);
    CHECK(gc.states() == 3);
    for (double w : {0.0, 0.3, 5.0}) {
        CHECK((freq_response(gc, w) - freq_response(g, w)).norm() < 1e-13);
    }

    // 1/s under unit negative feedback is 1/(s+1).
    const StateSpaceModel integrator(m1(0), m1(1), m1(1), m1(0));
    const InterconnectedSystem fb({integrator}, m1(-1), m1(1), m1(1), m1(0));
    const auto closed = lft_close(fb);
    CHECK(closed.a()(0, 0) == doctest::Approx(-1.0));
    CHECK(std::abs(freq_response(closed, 1.0)(0, 0) - Complex(0.5, -0.5)) < 1e-15);

    const auto unit_d = StateSpaceModel::static_gain(m1(1));
    CHECK_THROWS_WITH_AS(InterconnectedSystem({unit_d}, m1(1), m1(1), m1(1), m1(0)),
                         doctest::Contains("ill-posed interconnection"), NumericalError);
}

TEST_CASE("lft_close matches the transfer-function formula on random interconnections") {
    testing::Rng rng(2024);
    int instances = 0;
    while (instances < 25) {
        const int k = testing::uniform_int(rng, 1, 3);
        std::vector<StateSpaceModel> subs;
        Eigen::Index mb = 0, pb = 0;
        for (int j = 0; j < k; ++j) {
            const int n = testing::uniform_int(rng, 1, 4);
            const int m = testing::uniform_int(rng, 1, 2);
            const int p = testing::uniform_int(rng, 1, 2);
            subs.push_back(testing::random_stable(rng, n, m, p));
            mb += m;
            pb += p;
        }
        const int mc = testing::uniform_int(rng, 1, 2);
        const int pc = testing::uniform_int(rng, 1, 2);
        const InterconnectedSystem sys(subs, testing::random_matrix(rng, mb, pb, 0.4),
                                       testing::random_matrix(rng, mb, mc),
                                       testing::random_matrix(rng, pc, pb),
                                       testing::random_matrix(rng, pc, mc));
        const auto gc = lft_close(sys);
        CHECK(gc.states() == [&] {
            Eigen::Index n = 0;
            for (const auto& s : subs) n += s.states();
            return n;
        }());
        for (int t = 0; t < 20; ++t) {
            const double w = std::pow(10.0, testing::uniform(rng, -2.0, 2.0));
            CMatrix oracle;
            try {
                oracle = lft_oracle(sys, w);
            } catch (const NumericalError&) {
                continue;
            }
            const CMatrix got = freq_response(gc, w);
            CHECK(sigma_max(got - oracle) <= 1e-10 * std::max(1.0, sigma_max(oracle)));
            CHECK(sigma_max(lft_response(sys, [&] {
                      std::vector<CMatrix> b;
                      for (const auto& s : subs) b.push_back(freq_response(s, w));
                      return block_diag(b);
                  }()) - oracle) <= 1e-10 * std::max(1.0, sigma_max(oracle)));
        }
        ++instances;
    }
}

TEST_CASE("lft_close with K11 = 0 is the open-loop product") {
    testing::Rng rng(5);
    const std::vector<StateSpaceModel> subs{testing::random_stable(rng, 2, 1, 2),
                                            testing::random_stable(rng, 3, 2, 1)};
    const Matrix k12 = testing::random_matrix(rng, 3, 2);
    const Matrix k21 = testing::random_matrix(rng, 2, 3);
    const Matrix k22 = testing::random_matrix(rng, 2, 2);
    const InterconnectedSystem sys(subs, Matrix::Zero(3, 3), k12, k21, k22);
    const auto gc = lft_close(sys);
    const auto gb = block_diag(subs);
    CHECK(gc.a() == gb.a());
    for (double w : {0.1, 1.0, 10.0}) {
        const CMatrix expect =
            k21.cast<Complex>() * freq_response(gb, w) * k12.cast<Complex>() + k22.cast<Complex>();
        CHECK((freq_response(gc, w) - expect).norm() < 1e-12);
    }
}

TEST_CASE("error_system examples and property") {
    const auto g = first_order();
    const auto e = error_system(g, g);
    CHECK(e.states() == 2);
    for (double w : {0.0, 0.5, 3.0, 100.0}) CHECK(std::abs(freq_response(e, w)(0, 0)) < 1e-15);

    const StateSpaceModel ghat(m1(-1), m1(1.1), m1(1), m1(0));
    CHECK(freq_response(error_system(g, ghat), 0.0)(0, 0).real() == doctest::Approx(0.1));

    const StateSpaceModel two_out(m1(-1), m1(1), Matrix::Ones(2, 1), Matrix::Zero(2, 1));
    CHECK_THROWS_AS((void)error_system(g, two_out), DomainError);

    testing::Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = testing::random_stable(rng, 4, 2, 3);
        const auto b = testing::random_stable(rng, 2, 2, 3);
        const auto eab = error_system(a, b);
        const double w = testing::uniform(rng, 0.01, 50.0);
        const CMatrix diff = freq_response(b, w) - freq_response(a, w);
        CHECK((freq_response(eab, w) - diff).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("stability_check examples") {
    auto s1 = stability_check(first_order());
    CHECK(s1.stable);
    CHECK(s1.spectral_abscissa == doctest::Approx(-1.0));

    Matrix osc(2, 2);
    osc << 0, 1, -1, 0;
    const auto s2 = stability_check(StateSpaceModel(osc, Matrix::Zero(2, 1), Matrix::Zero(1, 2),
                                                    Matrix::Zero(1, 1)));
    CHECK_FALSE(s2.stable);
    CHECK(s2.spectral_abscissa == doctest::Approx(0.0));

    Matrix diag = Matrix::Zero(2, 2);
    diag.diagonal() << -1, -2;
    const auto s3 = stability_check(StateSpaceModel(diag, Matrix::Zero(2, 1), Matrix::Zero(1, 2),
                                                    Matrix::Zero(1, 1)));
    CHECK(s3.stable);
    CHECK(s3.spectral_abscissa == doctest::Approx(-1.0));
}
