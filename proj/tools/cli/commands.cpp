#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "modred/beam.hpp"
#include "modred/io.hpp"
#include "modred/validation.hpp"

namespace modred::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io::IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
    std::ostringstream s;
    fill(s);
    io::write_text(path, s.str());
    spdlog::debug("wrote {}", path.string());
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io::IoError("cannot open " + path.string());
    return in;
}

std::string numbered(const std::string& stem, std::size_t j, const std::string& ext) {
    return stem + "_" + std::to_string(j + 1) + ext;
}

RequirementSpec build_requirement(const RunConfig& cfg, const InterconnectedSystem& sys) {
    const BeamRequirement defaults;
    const GridSpec g = cfg.grid.value_or(GridSpec{defaults.omega_lo, defaults.omega_hi, defaults.points});
    return build_interconnected_requirement(lft_close(sys), make_log_grid(g.lo, g.hi, g.n),
                                            cfg.beta1.value_or(defaults.beta1),
                                            cfg.beta2.value_or(defaults.beta2), cfg.workers);
}

RequirementSpec load_requirement(const RunConfig& cfg) {
    auto in = open_in(cfg.requirement_path());
    return io::read_requirement_csv(in);
}

ScalingSolution load_scalings(const RunConfig& cfg, const InterconnectedSystem& sys,
                              const RequirementSpec& req) {
    auto d = open_in(cfg.out / "d.csv");
    std::vector<std::ifstream> files;
    files.reserve(sys.count());
    for (std::size_t j = 0; j < sys.count(); ++j) files.push_back(open_in(cfg.out / numbered("scalings", j, ".csv")));
    std::vector<std::istream*> ptrs;
    for (auto& f : files) ptrs.push_back(&f);
    return io::read_scalings(d, ptrs, req, BlockStructure::of(sys));
}

std::string channel_label(const Channel& c, bool input) {
    const char* name = c.kind == DofKind::translation ? (input ? "F" : "w") : (input ? "M" : "theta");
    return std::string(name) + "_n" + std::to_string(c.node);
}

std::vector<std::string> labels(const std::vector<Channel>& channels, bool input) {
    std::vector<std::string> out;
    for (const auto& c : channels) out.push_back(channel_label(c, input));
    return out;
}

json orders_json(const std::vector<Eigen::Index>& v) {
    json a = json::array();
    for (auto x : v) a.push_back(x);
    return a;
}

std::string join(const std::vector<Eigen::Index>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

int run_demo_beams(const RunConfig& cfg) {
    ensure_dir(cfg.out);
    const auto specs = three_beam_specs(cfg.elements);
    const auto io_maps = three_beam_io(specs);
    const auto sys = build_three_beam_system(specs);
    std::vector<std::string> names;
    std::vector<Eigen::Index> orders;
    for (std::size_t j = 0; j < sys.count(); ++j) {
        names.push_back("g" + std::to_string(j + 1) + ".json");
        io::write_model(cfg.out / names.back(), sys.subsystems()[j], labels(io_maps[j].inputs, true),
                        labels(io_maps[j].outputs, false));
        orders.push_back(sys.subsystems()[j].states());
    }
    io::write_interconnection(cfg.out / "interconnection.json", sys, names);
    const auto req = build_requirement(cfg, sys);
    write_file(cfg.out / "requirement.csv", [&](std::ostream& o) { io::write_requirement_csv(o, req); });
    Eigen::Index total = 0;
    for (auto n : orders) total += n;
    std::cout << "orders " << join(orders) << " total " << total << "\n";
    spdlog::info("wrote beam models, interconnection and a {}-point requirement to {}", req.grid.size(),
                 cfg.out.string());
    return kOk;
}

int run_synth(const RunConfig& cfg) {
    ensure_dir(cfg.out);
    const Stopwatch clock;
    const auto sys = io::read_interconnection(cfg.system_path());
    RequirementSpec req = [&] {
        if (!cfg.requirement_overridden() && fs::exists(cfg.requirement_path())) return load_requirement(cfg);
        auto built = build_requirement(cfg, sys);
        write_file(cfg.out / "requirement.csv", [&](std::ostream& o) { io::write_requirement_csv(o, built); });
        return built;
    }();
    if (!cfg.alpha.empty() && cfg.alpha.size() != sys.count()) {
        throw DomainError("--alpha needs one weight per subsystem (" + std::to_string(sys.count()) + ")");
    }
    spdlog::info("synthesizing scalings at {} frequencies with {} worker(s)", req.grid.size(), cfg.workers);

    ScalingSolution sol = [&] {
        try {
            return synthesize_requirements(sys, req, cfg.alpha, cfg.synthesis_options());
        } catch (const SynthesisError& e) {
            return e.partial();
        }
    }();

    for (std::size_t j = 0; j < sys.count(); ++j) {
        write_file(cfg.out / numbered("scalings", j, ".csv"), [&](std::ostream& o) { write_scalings_csv(o, sol, j); });
    }
    write_file(cfg.out / "d.csv", [&](std::ostream& o) { write_d_csv(o, sol); });
    write_file(cfg.out / "cost_trace.csv", [&](std::ostream& o) { write_cost_trace_csv(o, sol); });

    const auto bad = sol.infeasible_omegas();
    std::size_t max_iter = 0;
    for (const auto& p : sol.points) max_iter = std::max(max_iter, p.cost_trace.size());
    json summary{{"points", sol.points.size()},
                 {"feasible", sol.points.size() - bad.size()},
                 {"infeasible_omegas", bad},
                 {"max_trace_length", max_iter}};
    write_file(cfg.out / "synth_summary.json", [&](std::ostream& o) { o << summary.dump(2) << "\n"; });

    std::cout << "feasible " << sol.points.size() - bad.size() << " of " << sol.points.size() << "\n";
    spdlog::info("synthesis took {:.1f} s", clock.seconds());
    if (!bad.empty()) {
        spdlog::error("no admissible scalings at {} frequencies (first at {:g} rad/s)", bad.size(), bad.front());
        for (const auto& p : sol.points) {
            if (p.status != PointStatus::feasible) {
                spdlog::info("{}", p.message);
                break;
            }
        }
        return kInfeasible;
    }
    return kOk;
}

int run_reduce(const RunConfig& cfg) {
    const Stopwatch clock;
    const auto sys = io::read_interconnection(cfg.system_path());
    const auto req = load_requirement(cfg);
    const auto sol = load_scalings(cfg, sys, req);
    if (!sol.all_feasible()) {
        spdlog::error("the stored scalings have infeasible frequencies; rerun synth");
        return kInfeasible;
    }
    for (const auto& [j, r] : cfg.order_override) {
        if (j > sys.count()) throw DomainError("order override names subsystem " + std::to_string(j));
    }

    std::vector<StateSpaceModel> reduced;
    std::vector<std::string> names;
    std::vector<Eigen::Index> full, orders;
    bool unattainable = false;
    for (std::size_t j = 0; j < sys.count(); ++j) {
        const auto& g = sys.subsystems()[j];
        full.push_back(g.states());
        try {
            const auto res = reduce_to_requirement(g, sol, j, cfg.reduction_options(j));
            names.push_back(numbered("reduced", j, ".json"));
            io::write_model(cfg.out / names.back(), res.reduced);
            write_file(cfg.out / numbered("hsv", j, ".csv"),
                       [&](std::ostream& o) { io::write_hsv_csv(o, res.hankel_values); });
            write_file(cfg.out / numbered("margins", j, ".csv"),
                       [&](std::ostream& o) { io::write_margins_csv(o, sol.grid, res.margins); });
            if (!res.all_pass()) spdlog::warn("subsystem {} at order {} misses its budget", j + 1, res.reduced_order);
            spdlog::info("subsystem {}: {} -> {} states", j + 1, res.original_order, res.reduced_order);
            reduced.push_back(res.reduced);
            orders.push_back(res.reduced_order);
        } catch (const ReductionUnattainable& e) {
            spdlog::error("subsystem {}: {}", j + 1, e.what());
            unattainable = true;
            orders.push_back(-1);
        }
    }

    Eigen::Index n_total = 0, r_total = 0;
    for (std::size_t j = 0; j < full.size(); ++j) {
        n_total += full[j];
        r_total += orders[j];
    }
    json summary{{"method", std::string(to_string(cfg.method))},
                 {"truncation", std::string(to_string(cfg.truncation))},
                 {"fit_order", cfg.fit_order},
                 {"full_orders", orders_json(full)},
                 {"reduced_orders", orders_json(orders)},
                 {"unattainable", unattainable}};
    if (!unattainable) {
        summary["sum_n"] = n_total;
        summary["sum_r"] = r_total;
        summary["reduction_percent"] = 100.0 * (1.0 - static_cast<double>(r_total) / static_cast<double>(n_total));
        const auto red_sys = sys.with_subsystems(reduced);
        io::write_interconnection(cfg.out / "reduced_interconnection.json", red_sys, names);
    }
    write_file(cfg.out / "reduce_summary.json", [&](std::ostream& o) { o << summary.dump(2) << "\n"; });
    spdlog::info("reduction took {:.1f} s", clock.seconds());
    if (unattainable) return kUnattainable;
    std::cout << "orders " << join(full) << " -> " << join(orders) << " total " << n_total << " -> " << r_total
              << "\n";
    return kOk;
}

int run_validate(const RunConfig& cfg) {
    const auto sys = io::read_interconnection(cfg.system_path());
    const auto red = io::read_interconnection(cfg.out / "reduced_interconnection.json");
    const auto req = load_requirement(cfg);
    const auto sol = load_scalings(cfg, sys, req);
    if (!sol.all_feasible()) {
        spdlog::error("the stored scalings have infeasible frequencies; rerun synth");
        return kInfeasible;
    }
    const auto rep = validate_pipeline(sys, red.subsystems(), sol, cfg.workers);
    write_file(cfg.out / "report.json", [&](std::ostream& o) { write_report_json(o, rep); });
    write_file(cfg.out / "report.csv", [&](std::ostream& o) { write_report_csv(o, rep); });

    std::cout << "total " << rep.full_total() << " -> " << rep.reduced_total() << " ("
              << rep.reduction_percent() << "% reduction), subsystems "
              << (rep.subsystems_pass() ? "pass" : "FAIL") << ", interconnected "
              << (rep.interconnected_pass() ? "pass" : "FAIL") << "\n";
    if (rep.implication_violations() > 0) {
        spdlog::error("{} frequencies pass every subsystem check but fail the interconnected one",
                      rep.implication_violations());
    }
    if (!rep.all_pass()) {
        const auto bad = rep.failing_omegas();
        spdlog::error("requirement violated at {} frequencies (first at {:g} rad/s)", bad.size(),
                      bad.empty() ? 0.0 : bad.front());
        return kValidationFailed;
    }
    return kOk;
}

int run_bode(const RunConfig& cfg) {
    const auto sys = io::read_interconnection(cfg.system_path());
    const auto red = io::read_interconnection(cfg.out / "reduced_interconnection.json");
    const auto req = load_requirement(cfg);
    const auto gc = lft_close(sys);
    const auto gc_hat = lft_close(red);
    write_file(cfg.out / "bode.csv", [&](std::ostream& o) { emit_bode_data(o, gc, gc_hat, req, cfg.workers); });
    spdlog::info("wrote {} frequency points to {}", req.grid.size(), (cfg.out / "bode.csv").string());
    return kOk;
}

}  // namespace modred::cli
