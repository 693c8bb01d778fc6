#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "modred/errors.hpp"
#include "modred/lti.hpp"
#include "modred/reduction.hpp"
#include "modred/synthesis.hpp"

namespace modred::io {

/// File missing, unreadable or unwritable. Malformed content is a DomainError.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model file: {"A": [[..]], "B": .., "C": .., "D": ..} as row-major nested
/// arrays, plus optional "labels": {"inputs": [..], "outputs": [..]}.
/// An empty matrix is written as [] and its shape follows from the others.
struct ModelFile {
    StateSpaceModel model;
    std::vector<std::string> input_labels;
    std::vector<std::string> output_labels;
};

[[nodiscard]] ModelFile parse_model_json(const std::string& text);
[[nodiscard]] std::string model_json(const StateSpaceModel& model,
                                     const std::vector<std::string>& input_labels = {},
                                     const std::vector<std::string>& output_labels = {});
[[nodiscard]] ModelFile read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const StateSpaceModel& model,
                 const std::vector<std::string>& input_labels = {},
                 const std::vector<std::string>& output_labels = {});

/// Interconnection file: {"K11", "K12", "K21", "K22", "mc", "pc",
/// "subsystems": [paths]}. Relative subsystem paths are resolved against the
/// directory holding the interconnection file.
[[nodiscard]] InterconnectedSystem read_interconnection(const std::filesystem::path& path);
void write_interconnection(const std::filesystem::path& path, const InterconnectedSystem& sys,
                           const std::vector<std::string>& subsystem_paths);

/// `omega,vc_1..vc_pc,wc_1..wc_mc`.
void write_requirement_csv(std::ostream& out, const RequirementSpec& req);
[[nodiscard]] RequirementSpec read_requirement_csv(std::istream& in);

/// Rebuilds a synthesis result from `d.csv` (all frequencies and their status)
/// and the per-subsystem `omega,v_..,w_..` files (feasible rows only), with
/// v_c, w_c taken from the requirement.
[[nodiscard]] ScalingSolution read_scalings(std::istream& d_csv, std::vector<std::istream*> subsystem_csvs,
                                            const RequirementSpec& req, const BlockStructure& blocks);

/// `index,sigma` (1-based index).
void write_hsv_csv(std::ostream& out, const Vector& hankel_values);
/// `omega,sigma_weighted,pass` with sigma_weighted = 1 - margin.
void write_margins_csv(std::ostream& out, const FrequencyGrid& grid, const std::vector<double>& margins);

/// CSV with a header row, cells kept as text. Throws DomainError on ragged rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Cell as a double ("nan" allowed); DomainError if it is not a number.
    [[nodiscard]] double number(std::size_t row, std::size_t col) const;
    [[nodiscard]] std::size_t column(const std::string& name) const;
};
[[nodiscard]] CsvTable read_csv(std::istream& in);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace modred::io
