#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "modred/io.hpp"
#include "modred/synthesis.hpp"
#include "test_support.hpp"

using namespace modred;
namespace fs = std::filesystem;

namespace {

bool same(const StateSpaceModel& a, const StateSpaceModel& b) {
    return a.a() == b.a() && a.b() == b.b() && a.c() == b.c() && a.d() == b.d();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("modred_io_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("model JSON round-trips bit for bit") {
    testing::Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = testing::random_stable(rng, testing::uniform_int(rng, 1, 6), 2, 3);
        const auto back = io::parse_model_json(io::model_json(g));
        CHECK(same(back.model, g));
        CHECK(back.input_labels.empty());
    }
    const auto g = testing::random_stable(rng, 2, 1, 2);
    const auto labelled = io::parse_model_json(io::model_json(g, {"F"}, {"w", "theta"}));
    CHECK(labelled.input_labels == std::vector<std::string>{"F"});
    CHECK(labelled.output_labels == std::vector<std::string>{"w", "theta"});
    CHECK_THROWS_AS((void)io::model_json(g, {"a", "b"}), DomainError);
}

TEST_CASE("static models use empty state matrices") {
    const auto g = StateSpaceModel::static_gain(Matrix::Constant(2, 3, 1.5));
    const auto back = io::parse_model_json(io::model_json(g));
    CHECK(same(back.model, g));
    const auto m = io::parse_model_json(R"({"A":[],"B":[],"C":[],"D":[[2]]})").model;
    CHECK(m.states() == 0);
    CHECK(m.d()(0, 0) == 2.0);
}

TEST_CASE("malformed model files are rejected") {
    CHECK_THROWS_AS((void)io::parse_model_json("{"), DomainError);
    CHECK_THROWS_AS((void)io::parse_model_json("[1, 2]"), DomainError);
    CHECK_THROWS_AS((void)io::parse_model_json(R"({"A":[[1]],"B":[[1]],"C":[[1]]})"), DomainError);
    CHECK_THROWS_AS((void)io::parse_model_json(R"({"A":[[1,2]],"B":[[1]],"C":[[1]],"D":[[0]]})"), DomainError);
    CHECK_THROWS_AS((void)io::parse_model_json(R"({"A":[[1],[2,3]],"B":[[1]],"C":[[1]],"D":[[0]]})"),
                    DomainError);
    CHECK_THROWS_AS((void)io::parse_model_json(R"({"A":[["x"]],"B":[[1]],"C":[[1]],"D":[[0]]})"), DomainError);
    CHECK_THROWS_AS((void)io::parse_model_json(R"({"A":[[1]],"B":[[1],[2]],"C":[[1]],"D":[[0]]})"),
                    DomainError);
    CHECK_THROWS_AS((void)io::parse_model_json(R"({"A":[[-1]],"B":[[1]],"C":[[1]],"D":[[0]],
                                                  "labels":{"inputs":["a","b"]}})"),
                    DomainError);
}

TEST_CASE("interconnection files round-trip through the filesystem") {
    TempDir dir("ic");
    testing::Rng rng(9);
    std::vector<StateSpaceModel> subs{testing::random_stable(rng, 3, 2, 1), testing::random_stable(rng, 2, 1, 2)};
    const InterconnectedSystem sys(subs, testing::random_matrix(rng, 3, 3), testing::random_matrix(rng, 3, 1),
                                   testing::random_matrix(rng, 2, 3), Matrix::Zero(2, 1));
    io::write_model(dir.path / "g1.json", subs[0]);
    io::write_model(dir.path / "g2.json", subs[1]);
    io::write_interconnection(dir.path / "ic.json", sys, {"g1.json", "g2.json"});
    const auto back = io::read_interconnection(dir.path / "ic.json");
    REQUIRE(back.count() == 2);
    CHECK(same(back.subsystems()[0], subs[0]));
    CHECK(same(back.subsystems()[1], subs[1]));
    CHECK(back.k11() == sys.k11());
    CHECK(back.k12() == sys.k12());
    CHECK(back.k21() == sys.k21());
    CHECK(back.k22() == sys.k22());

    CHECK_THROWS_AS((void)io::read_model(dir.path / "missing.json"), io::IoError);
    io::write_text(dir.path / "bad.json", R"({"K11":[[1]],"K12":[],"K21":[],"K22":[],"mc":0,"pc":0,
                                              "subsystems":["g1.json","g2.json"]})");
    CHECK_THROWS_AS((void)io::read_interconnection(dir.path / "bad.json"), DomainError);
    CHECK_THROWS_AS(io::write_text(dir.path / "no" / "such" / "dir.json", "x"), io::IoError);
}

TEST_CASE("CSV reader") {
    std::istringstream ok("a,b\n1,2.5\n\n-3e2,nan\n");
    const auto t = io::read_csv(ok);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.number(1, 0) == -300.0);
    CHECK(std::isnan(t.number(1, 1)));
    CHECK(t.column("b") == 1);
    CHECK_THROWS_AS((void)t.column("c"), DomainError);

    std::istringstream ragged("a,b\n1\n");
    CHECK_THROWS_AS((void)io::read_csv(ragged), DomainError);
    std::istringstream text("a\n1x\n");
    const auto tt = io::read_csv(text);
    CHECK_THROWS_AS((void)tt.number(0, 0), DomainError);
    std::istringstream empty("");
    CHECK_THROWS_AS((void)io::read_csv(empty), DomainError);
}

TEST_CASE("requirement and scaling files round-trip") {
    testing::Rng rng(21);
    std::vector<StateSpaceModel> subs{testing::random_stable(rng, 4, 2, 2), testing::random_stable(rng, 3, 1, 1)};
    const InterconnectedSystem sys(subs, testing::random_matrix(rng, 3, 3, 0.1), testing::random_matrix(rng, 3, 1),
                                   testing::random_matrix(rng, 1, 3), Matrix::Zero(1, 1));
    const auto req = build_interconnected_requirement(lft_close(sys), make_log_grid(0.1, 10.0, 12), 0.05, 1e-3);
    std::ostringstream rq;
    io::write_requirement_csv(rq, req);
    std::istringstream rq_in(rq.str());
    const auto req2 = io::read_requirement_csv(rq_in);
    REQUIRE(req2.grid.size() == req.grid.size());
    for (std::size_t i = 0; i < req.grid.size(); ++i) {
        CHECK(req2.grid[i] == req.grid[i]);
        CHECK(req2.v_c[i] == req.v_c[i]);
        CHECK(req2.w_c[i] == req.w_c[i]);
    }

    auto sol = synthesize_requirements(sys, req);
    sol.points[4].status = PointStatus::infeasible;
    std::ostringstream d, s1, s2;
    write_d_csv(d, sol);
    write_scalings_csv(s1, sol, 0);
    write_scalings_csv(s2, sol, 1);
    std::istringstream d_in(d.str()), s1_in(s1.str()), s2_in(s2.str());
    const auto back = io::read_scalings(d_in, {&s1_in, &s2_in}, req2, sol.blocks);
    REQUIRE(back.points.size() == sol.points.size());
    for (std::size_t i = 0; i < sol.points.size(); ++i) {
        const auto& a = sol.points[i];
        const auto& b = back.points[i];
        CHECK(a.status == b.status);
        CHECK(a.d.d == b.d.d);
        if (a.status != PointStatus::feasible) continue;
        CHECK(a.cost == b.cost);
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(a.scalings.v[j] == b.scalings.v[j]);
            CHECK(a.scalings.w[j] == b.scalings.w[j]);
        }
        CHECK(b.scalings.v_c == req.v_c[i]);
    }
    std::istringstream d_again(d.str()), s1_again(s1.str());
    CHECK_THROWS_AS((void)io::read_scalings(d_again, {&s1_again}, req2, sol.blocks), DomainError);
}

TEST_CASE("Hankel value and margin CSV layout") {
    std::ostringstream h;
    io::write_hsv_csv(h, (Vector(3) << 3.0, 2.0, 0.5).finished());
    CHECK(h.str() == "index,sigma\n1,3\n2,2\n3,0.5\n");
    std::ostringstream m;
    io::write_margins_csv(m, make_log_grid(1.0, 100.0, 3), {0.25, -0.5, 0.0});
    CHECK(m.str() == "omega,sigma_weighted,pass\n1,0.75,1\n10,1.5,0\n100,1,1\n");
    CHECK_THROWS_AS(io::write_margins_csv(m, make_log_grid(1.0, 100.0, 3), {0.1}), DomainError);
}
