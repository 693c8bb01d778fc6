#include "modred/validation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "json.hpp"
#include "modred/parallel.hpp"

namespace modred {

Eigen::Index RequirementReport::full_total() const {
    Eigen::Index s = 0;
    for (auto n : full_orders) s += n;
    return s;
}

Eigen::Index RequirementReport::reduced_total() const {
    Eigen::Index s = 0;
    for (auto r : reduced_orders) s += r;
    return s;
}

double RequirementReport::reduction_percent() const {
    const auto n = full_total();
    if (n == 0) return 0.0;
    return 100.0 * (1.0 - static_cast<double>(reduced_total()) / static_cast<double>(n));
}

bool RequirementReport::subsystems_pass() const {
    return std::all_of(points.begin(), points.end(), [](const ReportPoint& p) {
        return std::all_of(p.sub_pass.begin(), p.sub_pass.end(), [](bool b) { return b; });
    });
}

bool RequirementReport::interconnected_pass() const {
    return std::all_of(points.begin(), points.end(), [](const ReportPoint& p) { return p.interconnected_pass; });
}

std::size_t RequirementReport::implication_violations() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const ReportPoint& p) {
        const bool subs = std::all_of(p.sub_pass.begin(), p.sub_pass.end(), [](bool b) { return b; });
        return subs && p.theorem1 && !p.interconnected_pass;
    }));
}

std::vector<double> RequirementReport::failing_omegas() const {
    std::vector<double> out;
    for (const auto& p : points) {
        const bool subs = std::all_of(p.sub_pass.begin(), p.sub_pass.end(), [](bool b) { return b; });
        if (!subs || !p.interconnected_pass) out.push_back(p.omega);
    }
    return out;
}

RequirementReport validate_pipeline(const InterconnectedSystem& sys, std::span<const StateSpaceModel> reduced,
                                    const ScalingSolution& scalings, unsigned workers) {
    const auto k = sys.count();
    if (reduced.size() != k) throw DomainError("one reduced model per subsystem is required");
    for (std::size_t j = 0; j < k; ++j) {
        const auto& g = sys.subsystems()[j];
        if (reduced[j].inputs() != g.inputs() || reduced[j].outputs() != g.outputs()) {
            throw DomainError("reduced model " + std::to_string(j + 1) + " has different input/output counts");
        }
    }
    if (scalings.blocks.count() != k) throw DomainError("scalings were computed for a different system");
    for (const auto& p : scalings.points) {
        if (p.status != PointStatus::feasible) {
            throw DomainError("no feasible scalings at omega=" + format_double(p.omega));
        }
    }
    const InterconnectedSystem sys_hat = sys.with_subsystems({reduced.begin(), reduced.end()});
    const BlockStructure& blocks = scalings.blocks;

    std::vector<ResponseSweep> full, red;
    for (std::size_t j = 0; j < k; ++j) {
        full.emplace_back(sys.subsystems()[j]);
        red.emplace_back(reduced[j]);
    }

    RequirementReport rep;
    for (std::size_t j = 0; j < k; ++j) {
        rep.full_orders.push_back(sys.subsystems()[j].states());
        rep.reduced_orders.push_back(reduced[j].states());
    }
    rep.points.resize(scalings.points.size());
    parallel_for(scalings.points.size(), workers, [&](std::size_t i) {
        const auto& sp = scalings.points[i];
        const double w = sp.omega;
        std::vector<CMatrix> gb(k), gh(k);
        ReportPoint& out = rep.points[i];
        out.omega = w;
        for (std::size_t j = 0; j < k; ++j) {
            gb[j] = full[j](w);
            gh[j] = red[j](w);
            const auto c = check_subsystem_requirement(gh[j] - gb[j], sp.scalings.v[j], sp.scalings.w[j]);
            out.sub.push_back(c.margin);
            out.sub_pass.push_back(c.pass);
        }
        const CMatrix gbd = block_diag(gb);
        const CMatrix gc = lft_response(sys, gbd);
        const CMatrix gc_hat = lft_response(sys_hat, block_diag(gh));
        const auto ic = check_interconnected_requirement(gc_hat - gc, sp.scalings.v_c, sp.scalings.w_c);
        out.interconnected = ic.margin;
        out.interconnected_pass = ic.pass;
        out.theorem1 = theorem1_check(compute_N(sys, gbd, w), blocks, sp.scalings, sp.d).pass;
    });
    return rep;
}

void emit_bode_data(std::ostream& out, const StateSpaceModel& gc, const StateSpaceModel& gc_hat,
                    const RequirementSpec& req, unsigned workers) {
    if (gc.inputs() != 1 || gc.outputs() != 1 || gc_hat.inputs() != 1 || gc_hat.outputs() != 1) {
        throw DomainError("Bode data needs single-input single-output interconnected models");
    }
    const auto a = sweep_response(gc, req.grid, workers);
    const auto b = sweep_response(gc_hat, req.grid, workers);
    std::vector<std::vector<double>> rows;
    rows.reserve(req.grid.size());
    for (std::size_t i = 0; i < req.grid.size(); ++i) {
        const double mag = std::abs(a[i](0, 0));
        const double half = 1.0 / (req.v_c[i](0) * req.w_c[i](0));
        rows.push_back({req.grid[i], mag, std::abs(b[i](0, 0)), mag - half, mag + half});
    }
    write_csv(out, {"omega", "mag_Gc", "mag_Gc_hat", "bound_lo", "bound_hi"}, rows);
}

void write_report_json(std::ostream& out, const RequirementReport& report) {
    using nlohmann::json;
    json per = json::array();
    for (const auto& p : report.points) {
        const bool subs = std::all_of(p.sub_pass.begin(), p.sub_pass.end(), [](bool b) { return b; });
        per.push_back({{"omega", p.omega},
                       {"sub", p.sub},
                       {"interconnected", p.interconnected},
                       {"theorem1", p.theorem1},
                       {"pass", subs && p.interconnected_pass}});
    }
    json totals = {{"n", report.full_orders},
                   {"r", report.reduced_orders},
                   {"sum_n", report.full_total()},
                   {"sum_r", report.reduced_total()},
                   {"reduction_percent", report.reduction_percent()},
                   {"subsystems_pass", report.subsystems_pass()},
                   {"interconnected_pass", report.interconnected_pass()},
                   {"implication_violations", report.implication_violations()}};
    out << json{{"per_omega", per}, {"totals", totals}}.dump(2) << '\n';
}

void write_report_csv(std::ostream& out, const RequirementReport& report) {
    const std::size_t k = report.full_orders.size();
    std::vector<std::string> header{"omega"};
    for (std::size_t j = 0; j < k; ++j) header.push_back("sub_" + std::to_string(j + 1));
    header.emplace_back("interconnected");
    header.emplace_back("theorem1");
    std::vector<std::vector<double>> rows;
    rows.reserve(report.points.size());
    for (const auto& p : report.points) {
        std::vector<double> row{p.omega};
        row.insert(row.end(), p.sub.begin(), p.sub.end());
        row.push_back(p.interconnected);
        row.push_back(p.theorem1 ? 1.0 : 0.0);
        rows.push_back(std::move(row));
    }
    write_csv(out, header, rows);
}

}  // namespace modred
