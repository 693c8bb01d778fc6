#include "run_config.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "modred/io.hpp"

namespace modred::cli {

namespace {

double to_number(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) {
        throw DomainError("cannot read " + what + " from \"" + s + "\"");
    }
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) out.push_back(item);
    return out;
}

int to_int(double v, const std::string& what) {
    if (v != std::floor(v) || std::abs(v) > 1e9) throw DomainError(what + " must be an integer");
    return static_cast<int>(v);
}

}  // namespace

std::filesystem::path RunConfig::system_path() const { return system ? *system : out / "interconnection.json"; }

std::filesystem::path RunConfig::requirement_path() const {
    return requirement ? *requirement : out / "requirement.csv";
}

SynthesisOptions RunConfig::synthesis_options() const {
    SynthesisOptions o;
    o.conv_tol = conv_tol;
    o.max_outer = max_outer;
    o.lmi.feas_tol = feas_tol;
    o.workers = workers;
    return o;
}

ReductionOptions RunConfig::reduction_options(std::size_t j) const {
    ReductionOptions o;
    o.method = method;
    o.fit_order = fit_order;
    o.truncation = truncation;
    if (const auto it = order_override.find(j + 1); it != order_override.end()) o.order_override = it->second;
    return o;
}

void RunConfig::validate() const {
    if (!(feas_tol > 0.0)) throw DomainError("--feas-tol must be positive");
    if (!(conv_tol > 0.0)) throw DomainError("--conv-tol must be positive");
    if (max_outer < 1) throw DomainError("--max-outer must be at least 1");
    if (fit_order < 0) throw DomainError("--fit-order must be nonnegative");
    if (workers < 1) throw DomainError("--workers must be at least 1");
    if (beta1 && !(*beta1 >= 0.0)) throw DomainError("--beta1 must be nonnegative");
    if (beta2 && !(*beta2 >= 0.0)) throw DomainError("--beta2 must be nonnegative");
    for (double a : alpha) {
        if (!(a > 0.0)) throw DomainError("--alpha weights must be positive");
    }
    for (int e : elements) {
        if (e < 1) throw DomainError("--elements must be positive");
    }
}

GridSpec parse_grid(const std::string& text) {
    const auto parts = split(text, ',');
    if (parts.size() != 3) throw DomainError("--grid expects lo,hi,n");
    const double n = to_number(parts[2], "grid size");
    if (n < 2 || n != std::floor(n)) throw DomainError("grid size must be an integer of at least 2");
    return {to_number(parts[0], "grid start"), to_number(parts[1], "grid end"), static_cast<std::size_t>(n)};
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& p : split(text, ',')) out.push_back(to_number(p, "list entry"));
    if (out.empty()) throw DomainError("empty list");
    return out;
}

std::array<int, 3> parse_elements(const std::string& text) {
    const auto v = parse_list(text);
    if (v.size() != 3) throw DomainError("--elements expects three counts e1,e2,e3");
    return {to_int(v[0], "element count"), to_int(v[1], "element count"), to_int(v[2], "element count")};
}

std::pair<std::size_t, Eigen::Index> parse_override(const std::string& text) {
    const auto sep = text.find_first_of(":=");
    if (sep == std::string::npos) throw DomainError("--order-override expects j:r");
    const int j = to_int(to_number(text.substr(0, sep), "subsystem index"), "subsystem index");
    const int r = to_int(to_number(text.substr(sep + 1), "order"), "order");
    if (j < 1 || r < 0) throw DomainError("--order-override needs j >= 1 and r >= 0");
    return {static_cast<std::size_t>(j), r};
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw DomainError(path.string() + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw DomainError(path.string() + ": config must be a JSON object");
    auto num = [&](const json& v, const std::string& key) {
        if (!v.is_number()) throw DomainError(path.string() + ": \"" + key + "\" must be a number");
        return v.get<double>();
    };
    auto str = [&](const json& v, const std::string& key) {
        if (!v.is_string()) throw DomainError(path.string() + ": \"" + key + "\" must be a string");
        return v.get<std::string>();
    };
    auto nums = [&](const json& v, const std::string& key) {
        if (!v.is_array()) throw DomainError(path.string() + ": \"" + key + "\" must be an array");
        std::vector<double> out;
        for (const auto& x : v) out.push_back(num(x, key));
        return out;
    };
    for (const auto& [key, v] : j.items()) {
        if (key == "out") {
            cfg.out = str(v, key);
        } else if (key == "system") {
            cfg.system = str(v, key);
        } else if (key == "requirement") {
            cfg.requirement = str(v, key);
        } else if (key == "grid") {
            const auto g = nums(v, key);
            if (g.size() != 3) throw DomainError(path.string() + ": \"grid\" must be [lo, hi, n]");
            std::ostringstream s;
            s.precision(17);
            s << g[0] << ',' << g[1] << ',' << g[2];
            cfg.grid = parse_grid(s.str());
        } else if (key == "beta1") {
            cfg.beta1 = num(v, key);
        } else if (key == "beta2") {
            cfg.beta2 = num(v, key);
        } else if (key == "alpha") {
            cfg.alpha = nums(v, key);
        } else if (key == "feas_tol") {
            cfg.feas_tol = num(v, key);
        } else if (key == "conv_tol") {
            cfg.conv_tol = num(v, key);
        } else if (key == "max_outer") {
            cfg.max_outer = to_int(num(v, key), key);
        } else if (key == "fit_order") {
            cfg.fit_order = to_int(num(v, key), key);
        } else if (key == "method") {
            cfg.method = parse_reduction_method(str(v, key));
        } else if (key == "truncation") {
            cfg.truncation = parse_truncation(str(v, key));
        } else if (key == "workers") {
            cfg.workers = static_cast<unsigned>(std::max(0, to_int(num(v, key), key)));
        } else if (key == "elements") {
            const auto e = nums(v, key);
            if (e.size() != 3) throw DomainError(path.string() + ": \"elements\" must hold three counts");
            cfg.elements = {to_int(e[0], key), to_int(e[1], key), to_int(e[2], key)};
        } else if (key == "order_override") {
            if (!v.is_object()) throw DomainError(path.string() + ": \"order_override\" must map j to r");
            for (const auto& [sub, r] : v.items()) {
                const auto [jj, rr] = parse_override(sub + ":" + std::to_string(to_int(num(r, key), key)));
                cfg.order_override[jj] = rr;
            }
        } else {
            throw DomainError(path.string() + ": unknown config key \"" + key + "\"");
        }
    }
}

}  // namespace modred::cli
