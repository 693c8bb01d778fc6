#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "modred/errors.hpp"
#include "modred/lmi.hpp"
#include "test_support.hpp"

using namespace modred;
using namespace modred::lmi;

namespace {

CMatrix c1(double v) { return CMatrix::Constant(1, 1, Complex(v, 0.0)); }

// Re-check a returned point against every block independently of the solver.
void verify_point(const LmiProblem& p, const LmiSolution& s, double feas_tol) {
    for (std::size_t b = 0; b < p.num_blocks(); ++b) {
        const CMatrix f = p.block_value(b, s.x);
        CHECK(check_pd(f - p.margin() * CMatrix::Identity(f.rows(), f.cols()), -feas_tol));
    }
}

}  // namespace

TEST_CASE("analytic one-dimensional programs") {
    for (auto emb : {Embedding::real, Embedding::complex}) {
        LmiOptions opt;
        opt.embedding = emb;

        LmiProblem lower(1);  // min x s.t. x - 1 >= 0
        lower.add_block(c1(-1.0));
        lower.set_coefficient(0, 0, c1(1.0));
        lower.set_objective(Vector::Ones(1));
        const auto s1 = solve_sdp(lower, opt);
        CHECK(s1.status == LmiStatus::optimal);
        CHECK(std::abs(s1.x(0) - 1.0) <= 1e-6);
        CHECK(std::abs(s1.objective_value - 1.0) <= 1e-6);
        verify_point(lower, s1, opt.feas_tol);

        LmiProblem gamma(1);  // max g s.t. 2 - g >= 0
        gamma.add_block(c1(2.0));
        gamma.set_coefficient(0, 0, c1(-1.0));
        gamma.set_objective(-Vector::Ones(1));
        const auto s2 = solve_sdp(gamma, opt);
        CHECK(s2.status == LmiStatus::optimal);
        CHECK(std::abs(s2.x(0) - 2.0) <= 1e-6);
        verify_point(gamma, s2, opt.feas_tol);

        LmiProblem never(1);  // [-1] >= 0
        never.add_block(c1(-1.0));
        never.set_coefficient(0, 0, c1(0.0));
        CHECK(solve_sdp(never, opt).status == LmiStatus::infeasible);
    }
}

TEST_CASE("bounds and margins") {
    LmiProblem p(1);  // min x, x >= 0.25 from a bound, x - 0.1 >= margin 0.05 from a block
    p.add_block(c1(-0.1));
    p.set_coefficient(0, 0, c1(1.0));
    p.set_objective(Vector::Ones(1));
    p.set_margin(0.05);
    p.set_lower_bound(0, 0.25);
    const auto s = solve_sdp(p);
    CHECK(s.status == LmiStatus::optimal);
    CHECK(s.x(0) == doctest::Approx(0.25).epsilon(1e-6));

    LmiProblem q(1);
    q.add_block(c1(-0.1));
    q.set_coefficient(0, 0, c1(1.0));
    q.set_objective(Vector::Ones(1));
    q.set_margin(0.05);
    const auto sq = solve_sdp(q);
    CHECK(sq.x(0) == doctest::Approx(0.15).epsilon(1e-6));

    LmiProblem crossed(1);
    crossed.add_block(c1(1.0));
    crossed.set_coefficient(0, 0, c1(0.0));
    crossed.set_lower_bound(0, 2.0);
    crossed.set_upper_bound(0, 1.0);
    CHECK_THROWS_AS((void)solve_sdp(crossed), DomainError);
}

TEST_CASE("largest eigenvalue of a Hermitian matrix") {
    // min t s.t. t I - A >= 0 has optimum lambda_max(A).
    testing::Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = testing::uniform_int(rng, 2, 5);
        const CMatrix r = testing::random_cmatrix(rng, n, n);
        const CMatrix a = (r + r.adjoint()) / 2.0;
        const double lmax = Eigen::SelfAdjointEigenSolver<CMatrix>(a).eigenvalues().maxCoeff();
        for (auto emb : {Embedding::real, Embedding::complex}) {
            LmiProblem p(1);
            p.add_block(-a);
            p.set_coefficient(0, 0, CMatrix::Identity(n, n));
            p.set_objective(Vector::Ones(1));
            LmiOptions opt;
            opt.embedding = emb;
            const auto s = solve_sdp(p, opt);
            CHECK(s.status == LmiStatus::optimal);
            CHECK(std::abs(s.x(0) - lmax) <= 1e-6 * std::max(1.0, std::abs(lmax)));
            verify_point(p, s, opt.feas_tol);
        }
    }
}

TEST_CASE("diagonal scaling bound of a random matrix") {
    // min t s.t. [[t I, M^H],[M, t I]] >= 0 gives sigma_max(M).
    testing::Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const CMatrix m = testing::random_cmatrix(rng, 3, 2);
        CMatrix f0 = CMatrix::Zero(5, 5);
        f0.block(0, 2, 2, 3) = m.adjoint();
        f0.block(2, 0, 3, 2) = m;
        LmiProblem p(1);
        p.add_block(f0);
        p.set_coefficient(0, 0, CMatrix::Identity(5, 5));
        p.set_objective(Vector::Ones(1));
        const auto s = solve_sdp(p);
        const double sv = Eigen::JacobiSVD<CMatrix>(m).singularValues()(0);
        CHECK(s.status == LmiStatus::optimal);
        CHECK(std::abs(s.x(0) - sv) <= 1e-6 * sv);
    }
}

TEST_CASE("initial point skips phase I and reaches the same optimum") {
    LmiProblem p(2);  // min x + y s.t. [[x, 1],[1, y]] >= 0  -> x = y = 1
    CMatrix f0 = CMatrix::Zero(2, 2);
    f0(0, 1) = f0(1, 0) = 1.0;
    p.add_block(f0);
    CMatrix e1 = CMatrix::Zero(2, 2), e2 = CMatrix::Zero(2, 2);
    e1(0, 0) = 1.0;
    e2(1, 1) = 1.0;
    p.set_coefficient(0, 0, e1);
    p.set_coefficient(0, 1, e2);
    p.set_objective(Vector::Ones(2));
    const auto cold = solve_sdp(p);
    LmiOptions warm_opt;
    warm_opt.initial_point = Vector::Constant(2, 3.0);
    const auto warm = solve_sdp(p, warm_opt);
    CHECK(cold.status == LmiStatus::optimal);
    CHECK(warm.status == LmiStatus::optimal);
    CHECK(cold.objective_value == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(warm.objective_value == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(warm.iterations <= cold.iterations);
}

TEST_CASE("iteration budget is reported") {
    LmiProblem p(1);
    p.add_block(c1(-1.0));
    p.set_coefficient(0, 0, c1(1.0));
    p.set_objective(Vector::Ones(1));
    LmiOptions opt;
    opt.max_iter = 2;
    CHECK(solve_sdp(p, opt).status == LmiStatus::max_iter);
}

TEST_CASE("helpers") {
    CMatrix h(2, 2);
    h << Complex(2, 0), Complex(0, 1), Complex(0, -1), Complex(2, 0);
    CHECK(min_eigenvalue(h) == doctest::Approx(1.0));
    CHECK(check_pd(h));
    CHECK(check_pd(h, 0.99));
    CHECK_FALSE(check_pd(h, 1.01));
    CMatrix bad = h;
    bad(0, 1) = Complex(0, 2);
    CHECK_THROWS_AS((void)check_pd(bad), DomainError);
    CHECK_THROWS_AS((void)min_eigenvalue(CMatrix::Zero(2, 3)), DomainError);

    const Matrix emb = real_embedding(h);
    CHECK(emb.rows() == 4);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(emb).eigenvalues();
    CHECK(ev(0) == doctest::Approx(1.0));
    CHECK(ev(1) == doctest::Approx(1.0));
    CHECK(ev(2) == doctest::Approx(3.0));
    CHECK(ev(3) == doctest::Approx(3.0));

    LmiProblem p(1);
    CHECK_THROWS_AS(p.add_block(bad), DomainError);
    p.add_block(h);
    CHECK_THROWS_AS(p.set_coefficient(0, 0, CMatrix::Identity(3, 3)), DomainError);
    CHECK_THROWS_AS(p.set_coefficient(0, 1, CMatrix::Identity(2, 2)), DomainError);
    CHECK_THROWS_AS(p.set_objective(Vector::Ones(2)), DomainError);
}
