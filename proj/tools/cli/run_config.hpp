#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modred/reduction.hpp"
#include "modred/synthesis.hpp"

namespace modred::cli {

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;
};

/// Everything a command needs. Values come from the defaults, then the
/// optional JSON config file, then command-line flags.
struct RunConfig {
    std::filesystem::path out = ".";
    std::optional<std::filesystem::path> system;       ///< interconnection file
    std::optional<std::filesystem::path> requirement;  ///< requirement CSV
    std::optional<GridSpec> grid;
    std::optional<double> beta1;
    std::optional<double> beta2;
    std::vector<double> alpha;
    double feas_tol = 1e-8;
    double conv_tol = 1e-3;
    int max_outer = 20;
    int fit_order = 4;
    ReductionMethod method = ReductionMethod::fwbt;
    Truncation truncation = Truncation::residualize;
    unsigned workers = 1;
    std::array<int, 3> elements{50, 20, 30};
    std::map<std::size_t, Eigen::Index> order_override;  ///< 1-based subsystem -> order

    [[nodiscard]] std::filesystem::path system_path() const;
    [[nodiscard]] std::filesystem::path requirement_path() const;
    /// True when the grid or either beta was given explicitly.
    [[nodiscard]] bool requirement_overridden() const { return grid || beta1 || beta2; }
    [[nodiscard]] SynthesisOptions synthesis_options() const;
    [[nodiscard]] ReductionOptions reduction_options(std::size_t j) const;
    void validate() const;
};

[[nodiscard]] GridSpec parse_grid(const std::string& text);
[[nodiscard]] std::vector<double> parse_list(const std::string& text);
[[nodiscard]] std::array<int, 3> parse_elements(const std::string& text);
/// "j:r" or "j=r" with a 1-based subsystem index.
[[nodiscard]] std::pair<std::size_t, Eigen::Index> parse_override(const std::string& text);

/// Applies the keys of a JSON config file to `cfg`. Unknown keys are errors.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

}  // namespace modred::cli
