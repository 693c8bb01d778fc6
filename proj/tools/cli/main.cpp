#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "modred/io.hpp"

namespace {

using namespace modred;
using namespace modred::cli;

void setup_logging() {
    auto logger = spdlog::stderr_color_st("modred");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    const char* env = std::getenv("MODRED_LOG");
    if (env == nullptr) return;
    const std::string level(env);
    if (level == "error" || level == "info" || level == "debug") {
        spdlog::set_level(spdlog::level::from_str(level));
    } else {
        spdlog::warn("MODRED_LOG={} is not one of error, info, debug; using info", level);
    }
}

// Raw flag values; applied on top of the config file after parsing.
struct Flags {
    std::string config, out, system, requirement, grid, alpha, elements, method, truncation;
    double beta1 = 0.0, beta2 = 0.0, feas_tol = 0.0, conv_tol = 0.0;
    int max_outer = 0, fit_order = 0, workers = 0;
    std::vector<std::string> overrides;
};

RunConfig resolve(const CLI::App& app, const Flags& f) {
    RunConfig cfg;
    auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };
    if (given("--config")) apply_config_file(cfg, f.config);
    if (given("--out")) cfg.out = f.out;
    if (given("--system")) cfg.system = f.system;
    if (given("--requirement")) cfg.requirement = f.requirement;
    if (given("--grid")) cfg.grid = parse_grid(f.grid);
    if (given("--beta1")) cfg.beta1 = f.beta1;
    if (given("--beta2")) cfg.beta2 = f.beta2;
    if (given("--alpha")) cfg.alpha = parse_list(f.alpha);
    if (given("--feas-tol")) cfg.feas_tol = f.feas_tol;
    if (given("--conv-tol")) cfg.conv_tol = f.conv_tol;
    if (given("--max-outer")) cfg.max_outer = f.max_outer;
    if (given("--fit-order")) cfg.fit_order = f.fit_order;
    if (given("--method")) cfg.method = parse_reduction_method(f.method);
    if (given("--truncation")) cfg.truncation = parse_truncation(f.truncation);
    if (given("--workers")) {
        if (f.workers < 1) throw DomainError("--workers must be at least 1");
        cfg.workers = static_cast<unsigned>(f.workers);
    }
    if (given("--elements")) cfg.elements = parse_elements(f.elements);
    if (given("--order-override")) {
        cfg.order_override.clear();
        for (const auto& o : f.overrides) cfg.order_override.insert(parse_override(o));
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Modular reduction of interconnected LTI systems"};
    app.require_subcommand(1);
    Flags f;
    app.add_option("--config", f.config, "JSON file with the same keys as the flags (snake_case)");
    app.add_option("--out", f.out, "Working directory for inputs and outputs (default .)");
    app.add_option("--system", f.system, "Interconnection file (default OUT/interconnection.json)");
    app.add_option("--requirement", f.requirement, "Requirement CSV (default OUT/requirement.csv)");
    app.add_option("--grid", f.grid, "Log frequency grid lo,hi,n in rad/s");
    app.add_option("--beta1", f.beta1, "Relative error level of the interconnected requirement");
    app.add_option("--beta2", f.beta2, "Absolute error floor of the interconnected requirement");
    app.add_option("--alpha", f.alpha, "Subsystem cost weights a1,a2,..");
    app.add_option("--feas-tol", f.feas_tol, "LMI feasibility tolerance");
    app.add_option("--conv-tol", f.conv_tol, "Relative cost change that stops the alternation");
    app.add_option("--max-outer", f.max_outer, "Maximum alternations per frequency");
    app.add_option("--fit-order", f.fit_order, "Order of each fitted frequency weight");
    app.add_option("--method", f.method, "Reduction method")->check(CLI::IsMember({"fwbt", "bt", "none"}));
    app.add_option("--truncation", f.truncation, "Removal of discarded states")
        ->check(CLI::IsMember({"residualize", "direct"}));
    app.add_option("--workers", f.workers, "Worker threads for frequency sweeps");
    app.add_option("--elements", f.elements, "Beam mesh e1,e2,e3 for demo-beams");
    app.add_option("--order-override", f.overrides, "Force subsystem j to order r (j:r, repeatable)");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"demo-beams", "Write the three-beam models, interconnection and requirement"},
        {"synth", "Synthesize subsystem error budgets on the frequency grid"},
        {"reduce", "Reduce each subsystem to its budget"},
        {"validate", "Check reduced subsystems and the reduced interconnection"},
        {"bode", "Write |Gc|, |Gc_hat| and the requirement band"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        const RunConfig cfg = resolve(app, f);
        const std::string cmd = app.get_subcommands().front()->get_name();
        spdlog::debug("command {} in {}", cmd, cfg.out.string());
        if (cmd == "demo-beams") return run_demo_beams(cfg);
        if (cmd == "synth") return run_synth(cfg);
        if (cmd == "reduce") return run_reduce(cfg);
        if (cmd == "validate") return run_validate(cfg);
        return run_bode(cfg);
    } catch (const io::IoError& e) {
        spdlog::error("{}", e.what());
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return kIo;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    }
}
