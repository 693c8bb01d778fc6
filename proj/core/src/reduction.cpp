#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "balancing.hpp"
#include "modred/reduction.hpp"
#include "modred/synthesis.hpp"

namespace modred {

std::string_view to_string(ReductionMethod m) noexcept {
    switch (m) {
        case ReductionMethod::fwbt: return "fwbt";
        case ReductionMethod::bt: return "bt";
        case ReductionMethod::none: return "none";
    }
    return "fwbt";
}

ReductionMethod parse_reduction_method(std::string_view s) {
    if (s == "fwbt") return ReductionMethod::fwbt;
    if (s == "bt") return ReductionMethod::bt;
    if (s == "none") return ReductionMethod::none;
    throw DomainError("unknown reduction method '" + std::string(s) + "' (expected fwbt, bt or none)");
}

std::string_view to_string(Truncation t) noexcept {
    return t == Truncation::direct ? "direct" : "residualize";
}

Truncation parse_truncation(std::string_view s) {
    if (s == "direct") return Truncation::direct;
    if (s == "residualize") return Truncation::residualize;
    throw DomainError("unknown truncation '" + std::string(s) + "' (expected direct or residualize)");
}

namespace {

constexpr int verify_window = 5;

struct Evaluation {
    bool pass = false;
    bool stable = true;
    StateSpaceModel stable_part;
    std::vector<double> margins;
};

class Evaluator {
public:
    Evaluator(const StableSplit& split, const FrequencyGrid& grid, std::span<const Vector> v,
              std::span<const Vector> w, double slack)
        : split_(split), grid_(grid), v_(v), w_(w), slack_(slack) {
        const ResponseSweep sweep(split.stable);
        full_.reserve(grid.size());
        for (double om : grid.omegas()) full_.push_back(sweep(om));
    }

    Evaluation operator()(const StateSpaceModel& reduced_stable) const {
        Evaluation ev{false, true, reduced_stable, {}};
        if (reduced_stable.states() > 0 && !stability_check(reduced_stable).stable) {
            ev.stable = false;
            return ev;
        }
        const ResponseSweep sweep(reduced_stable);
        ev.margins.resize(grid_.size());
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            const CMatrix e = sweep(grid_[i]) - full_[i];
            const CMatrix scaled = w_[i].cwiseInverse().cast<Complex>().asDiagonal() * e *
                                   v_[i].cwiseInverse().cast<Complex>().asDiagonal();
            const double s = sigma_max(scaled);
            ev.margins[i] = std::isfinite(s) ? 1.0 - s : -std::numeric_limits<double>::infinity();
            worst = std::min(worst, ev.margins[i]);
        }
        ev.pass = worst >= -slack_;
        return ev;
    }

private:
    const StableSplit& split_;
    const FrequencyGrid& grid_;
    std::span<const Vector> v_;
    std::span<const Vector> w_;
    double slack_;
    std::vector<CMatrix> full_;
};

void check_budgets(const StateSpaceModel& model, const FrequencyGrid& grid, std::span<const Vector> v,
                   std::span<const Vector> w) {
    if (v.size() != grid.size() || w.size() != grid.size()) {
        throw DomainError("one set of budgets per grid frequency is required");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (v[i].size() != model.inputs() || w[i].size() != model.outputs()) {
            throw DomainError("budget lengths must match the model inputs and outputs");
        }
        if (!(v[i].array() > 0.0).all() || !(w[i].array() > 0.0).all() || !v[i].allFinite() ||
            !w[i].allFinite()) {
            throw DomainError("budgets must be positive and finite");
        }
    }
}

std::vector<FittedWeight> fit_channels(const FrequencyGrid& grid, std::span<const Vector> budget,
                                       Eigen::Index channels, int order) {
    std::vector<FittedWeight> out;
    out.reserve(static_cast<std::size_t>(channels));
    std::vector<double> samples(grid.size());
    for (Eigen::Index c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < grid.size(); ++i) samples[i] = 1.0 / budget[i](c);
        out.push_back(fit_weight(grid, samples, order));
    }
    return out;
}

}  // namespace

ReductionResult reduce_to_requirement(const StateSpaceModel& model, const FrequencyGrid& grid,
                                      std::span<const Vector> v, std::span<const Vector> w,
                                      const ReductionOptions& options) {
    check_budgets(model, grid, v, w);
    if (options.fit_order < 0) throw DomainError("fit order must be nonnegative");

    const StableSplit split = split_stable(model);
    const StateSpaceModel& gs = split.stable;
    const auto ns = gs.states();
    const Evaluator evaluate(split, grid, v, w, options.slack);

    ReductionResult out{model, model.states(), model.states(), Vector(0), {}, {}, {}};
    auto finish = [&](const Evaluation& ev) {
        out.reduced = split.marginal.states() > 0 ? parallel_sum(ev.stable_part, split.marginal)
                                                  : ev.stable_part;
        out.reduced_order = out.reduced.states();
        out.margins = ev.margins;
        return out;
    };

    if (options.method == ReductionMethod::none || ns == 0) {
        if (options.order_override && *options.order_override != model.states()) {
            throw DomainError("order override requires a reducing method");
        }
        return finish(evaluate(gs));
    }

    std::optional<detail::Balancer> bal;
    if (options.method == ReductionMethod::fwbt) {
        out.input_weights = fit_channels(grid, v, model.inputs(), options.fit_order);
        out.output_weights = fit_channels(grid, w, model.outputs(), options.fit_order);
        const StateSpaceModel wo = diagonal_weight(out.output_weights);
        const StateSpaceModel wi = diagonal_weight(out.input_weights);
        const auto g = detail::weighted_gramians(gs, &wo, &wi);
        bal.emplace(g.p, g.q);
    } else {
        const auto g = gramians(gs);
        bal.emplace(g.p, g.q);
    }
    out.hankel_values = bal->hankel_values();

    // Orders the balancing transformation supports, plus the unreduced stable part.
    const auto marginal_order = split.marginal.states();
    std::vector<Eigen::Index> candidates;
    for (Eigen::Index r = 0; r <= std::min(bal->max_order(), ns - 1); ++r) candidates.push_back(r);
    candidates.push_back(ns);

    std::map<Eigen::Index, Evaluation> cache;
    auto eval_at = [&](Eigen::Index r) -> const Evaluation& {
        auto it = cache.find(r);
        if (it == cache.end()) {
            StateSpaceModel cand = gs;
            if (r != ns) {
                try {
                    cand = options.truncation == Truncation::residualize ? bal->residualize(gs, r)
                                                                         : bal->truncate(gs, r);
                } catch (const NumericalError&) {
                    cand = bal->truncate(gs, r);
                }
            }
            it = cache.emplace(r, evaluate(cand)).first;
        }
        return it->second;
    };

    if (options.order_override) {
        const Eigen::Index r = *options.order_override - marginal_order;
        if (r < 0 || r > ns) {
            throw DomainError("order override must lie between the retained marginal order " +
                              std::to_string(marginal_order) + " and " + std::to_string(model.states()));
        }
        if (r != ns && r > bal->max_order()) {
            throw DomainError("order override exceeds the numerical rank of the Gramians");
        }
        return finish(eval_at(r));
    }

    std::optional<std::size_t> found;
    const auto count = candidates.size();
    switch (options.search) {
        case OrderSearch::ascending:
            for (std::size_t i = 0; i < count && !found; ++i) {
                if (eval_at(candidates[i]).pass) found = i;
            }
            break;
        case OrderSearch::descending:
            for (std::size_t i = count; i-- > 0;) {
                if (!eval_at(candidates[i]).pass) break;
                found = i;
            }
            break;
        case OrderSearch::bisect: {
            // Smallest passing index assuming monotonicity, then look a few orders
            // below the answer in case the error is not monotone in r.
            std::size_t lo = 0, hi = count;
            while (lo < hi) {
                const std::size_t mid = lo + (hi - lo) / 2;
                if (eval_at(candidates[mid]).pass) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            if (lo < count) {
                found = lo;
                for (bool improved = true; improved;) {
                    improved = false;
                    const std::size_t stop = *found > verify_window ? *found - verify_window : 0;
                    for (std::size_t i = stop; i < *found; ++i) {
                        if (eval_at(candidates[i]).pass) {
                            found = i;
                            improved = true;
                            break;
                        }
                    }
                }
            }
            break;
        }
    }

    if (!found) {
        throw ReductionUnattainable("requirement unattainable by " + std::string(to_string(options.method)) +
                                    ": no order up to " + std::to_string(model.states()) +
                                    " meets the subsystem budgets");
    }
    return finish(eval_at(candidates[*found]));
}

ReductionResult reduce_to_requirement(const StateSpaceModel& model, const ScalingSolution& sol,
                                      std::size_t j, const ReductionOptions& options) {
    if (j >= sol.blocks.count()) throw DomainError("subsystem index out of range");
    if (!sol.all_feasible()) {
        throw DomainError("budgets are missing at infeasible frequencies; synthesis must succeed first");
    }
    std::vector<Vector> v, w;
    v.reserve(sol.points.size());
    w.reserve(sol.points.size());
    for (const auto& p : sol.points) {
        v.push_back(p.scalings.v[j]);
        w.push_back(p.scalings.w[j]);
    }
    return reduce_to_requirement(model, sol.grid, v, w, options);
}

}  // namespace modred
