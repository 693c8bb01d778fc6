#include "modred/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace modred::io {

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

// Rows of a nested array; cols < 0 means "take it from the data".
Matrix matrix_from(const json& j, const std::string& key, Eigen::Index rows, Eigen::Index cols) {
    if (!j.contains(key)) throw DomainError("missing key \"" + key + "\"");
    const json& a = j.at(key);
    if (!a.is_array()) throw DomainError("\"" + key + "\" must be an array of rows");
    if (a.empty()) {
        if (rows < 0) rows = 0;
        if (cols < 0) cols = 0;
        if (rows != 0 && cols != 0) throw DomainError("\"" + key + "\" is empty but should not be");
        return Matrix(rows, cols);
    }
    const auto n = static_cast<Eigen::Index>(a.size());
    const auto m = a.front().is_array() ? static_cast<Eigen::Index>(a.front().size()) : -1;
    if (m < 0) throw DomainError("\"" + key + "\" must be an array of rows");
    Matrix out(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const json& r = a[static_cast<std::size_t>(i)];
        if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != m) {
            throw DomainError("\"" + key + "\" has ragged rows");
        }
        for (Eigen::Index c = 0; c < m; ++c) {
            const json& x = r[static_cast<std::size_t>(c)];
            if (!x.is_number()) throw DomainError("\"" + key + "\" holds a non-numeric entry");
            out(i, c) = x.get<double>();
            if (!std::isfinite(out(i, c))) throw DomainError("\"" + key + "\" holds a non-finite entry");
        }
    }
    if ((rows >= 0 && n != rows) || (cols >= 0 && m != cols)) {
        throw DomainError("\"" + key + "\" has the wrong shape");
    }
    return out;
}

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("malformed JSON: ") + e.what());
    }
}

std::vector<std::string> labels(const json& j, const char* key, Eigen::Index expected) {
    if (!j.contains("labels") || !j.at("labels").contains(key)) return {};
    const json& a = j.at("labels").at(key);
    if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != expected) {
        throw DomainError(std::string("labels.") + key + " must list one name per channel");
    }
    std::vector<std::string> out;
    for (const auto& s : a) {
        if (!s.is_string()) throw DomainError(std::string("labels.") + key + " must hold strings");
        out.push_back(s.get<std::string>());
    }
    return out;
}

Eigen::Index count_key(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() < 0) {
        throw DomainError(std::string("\"") + key + "\" must be a nonnegative integer");
    }
    return static_cast<Eigen::Index>(j.at(key).get<long long>());
}

}  // namespace

ModelFile parse_model_json(const std::string& text) {
    const json j = parse(text);
    if (!j.is_object()) throw DomainError("a model file must hold a JSON object");
    const Matrix d = matrix_from(j, "D", -1, -1);
    const Matrix a = matrix_from(j, "A", -1, -1);
    if (a.rows() != a.cols()) throw DomainError("\"A\" must be square");
    const auto n = a.rows();
    // With no states B and C are [] and the channel counts come from D.
    const Matrix b = matrix_from(j, "B", n, n == 0 ? d.cols() : -1);
    const Matrix c = matrix_from(j, "C", n == 0 ? d.rows() : -1, n);
    Matrix dd = d;
    if (d.size() == 0) dd = Matrix::Zero(c.rows(), b.cols());
    StateSpaceModel model(a, b, c, dd);
    return {model, labels(j, "inputs", model.inputs()), labels(j, "outputs", model.outputs())};
}

std::string model_json(const StateSpaceModel& model, const std::vector<std::string>& input_labels,
                       const std::vector<std::string>& output_labels) {
    json j = {{"A", matrix_json(model.a())},
              {"B", matrix_json(model.b())},
              {"C", matrix_json(model.c())},
              {"D", matrix_json(model.d())}};
    if (!input_labels.empty() || !output_labels.empty()) {
        if ((!input_labels.empty() && static_cast<Eigen::Index>(input_labels.size()) != model.inputs()) ||
            (!output_labels.empty() && static_cast<Eigen::Index>(output_labels.size()) != model.outputs())) {
            throw DomainError("one label per channel is required");
        }
        j["labels"] = {{"inputs", input_labels}, {"outputs", output_labels}};
        if (input_labels.empty()) j["labels"].erase("inputs");
        if (output_labels.empty()) j["labels"].erase("outputs");
    }
    return j.dump() + "\n";
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    if (in.bad()) throw IoError("error while reading " + path.string());
    return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("error while writing " + path.string());
}

ModelFile read_model(const std::filesystem::path& path) {
    try {
        return parse_model_json(read_text(path));
    } catch (const DomainError& e) {
        throw DomainError(path.string() + ": " + e.what());
    }
}

void write_model(const std::filesystem::path& path, const StateSpaceModel& model,
                 const std::vector<std::string>& input_labels, const std::vector<std::string>& output_labels) {
    write_text(path, model_json(model, input_labels, output_labels));
}

InterconnectedSystem read_interconnection(const std::filesystem::path& path) {
    json j;
    try {
        j = parse(read_text(path));
    } catch (const DomainError& e) {
        throw DomainError(path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw DomainError(path.string() + ": an interconnection file must hold a JSON object");
    if (!j.contains("subsystems") || !j.at("subsystems").is_array() || j.at("subsystems").empty()) {
        throw DomainError(path.string() + ": \"subsystems\" must list at least one model file");
    }
    std::vector<StateSpaceModel> subs;
    Eigen::Index mb = 0, pb = 0;
    for (const auto& p : j.at("subsystems")) {
        if (!p.is_string()) throw DomainError(path.string() + ": subsystem entries must be paths");
        std::filesystem::path sp(p.get<std::string>());
        if (sp.is_relative()) sp = path.parent_path() / sp;
        subs.push_back(read_model(sp).model);
        mb += subs.back().inputs();
        pb += subs.back().outputs();
    }
    try {
        const Eigen::Index mc = count_key(j, "mc"), pc = count_key(j, "pc");
        Matrix k11 = matrix_from(j, "K11", mb, pb);
        Matrix k12 = matrix_from(j, "K12", mb, mc);
        Matrix k21 = matrix_from(j, "K21", pc, pb);
        Matrix k22 = matrix_from(j, "K22", pc, mc);
        return {std::move(subs), k11, k12, k21, k22};
    } catch (const DomainError& e) {
        throw DomainError(path.string() + ": " + e.what());
    }
}

void write_interconnection(const std::filesystem::path& path, const InterconnectedSystem& sys,
                           const std::vector<std::string>& subsystem_paths) {
    if (subsystem_paths.size() != sys.count()) throw DomainError("one model path per subsystem is required");
    const json j = {{"K11", matrix_json(sys.k11())}, {"K12", matrix_json(sys.k12())},
                    {"K21", matrix_json(sys.k21())}, {"K22", matrix_json(sys.k22())},
                    {"mc", sys.mc()},                {"pc", sys.pc()},
                    {"subsystems", subsystem_paths}};
    write_text(path, j.dump(2) + "\n");
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(in, line)) throw DomainError("CSV input is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw DomainError("CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& c = rows.at(row).at(col);
    if (c == "nan") return std::nan("");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(c, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != c.size()) {
        throw DomainError("CSV row " + std::to_string(row + 1) + ": cannot parse \"" + c + "\"");
    }
    return v;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw DomainError("CSV has no column \"" + name + "\"");
}

void write_requirement_csv(std::ostream& out, const RequirementSpec& req) {
    if (req.grid.size() == 0) throw DomainError("empty requirement");
    const auto pc = req.v_c.front().size(), mc = req.w_c.front().size();
    std::vector<std::string> header{"omega"};
    for (Eigen::Index i = 0; i < pc; ++i) header.push_back("vc_" + std::to_string(i + 1));
    for (Eigen::Index i = 0; i < mc; ++i) header.push_back("wc_" + std::to_string(i + 1));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < req.grid.size(); ++i) {
        std::vector<double> row{req.grid[i]};
        for (double x : req.v_c[i]) row.push_back(x);
        for (double x : req.w_c[i]) row.push_back(x);
        rows.push_back(std::move(row));
    }
    write_csv(out, header, rows);
}

RequirementSpec read_requirement_csv(std::istream& in) {
    const auto t = read_csv(in);
    if (t.header.empty() || t.header.front() != "omega") throw DomainError("requirement CSV must start with omega");
    Eigen::Index pc = 0, mc = 0;
    for (std::size_t i = 1; i < t.header.size(); ++i) {
        if (t.header[i].rfind("vc_", 0) == 0 && mc == 0) {
            ++pc;
        } else if (t.header[i].rfind("wc_", 0) == 0) {
            ++mc;
        } else {
            throw DomainError("unexpected requirement column \"" + t.header[i] + "\"");
        }
    }
    if (pc == 0 || mc == 0) throw DomainError("requirement CSV needs vc_ and wc_ columns");
    std::vector<double> om;
    std::vector<Vector> vc, wc;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        om.push_back(t.number(r, 0));
        Vector v(pc), w(mc);
        for (Eigen::Index i = 0; i < pc; ++i) v(i) = t.number(r, static_cast<std::size_t>(1 + i));
        for (Eigen::Index i = 0; i < mc; ++i) w(i) = t.number(r, static_cast<std::size_t>(1 + pc + i));
        vc.push_back(std::move(v));
        wc.push_back(std::move(w));
    }
    return {FrequencyGrid(std::move(om)), std::move(vc), std::move(wc)};
}

ScalingSolution read_scalings(std::istream& d_csv, std::vector<std::istream*> subsystem_csvs,
                              const RequirementSpec& req, const BlockStructure& blocks) {
    const auto k = blocks.count();
    if (subsystem_csvs.size() != k) throw DomainError("one scaling file per subsystem is required");
    const auto dt = read_csv(d_csv);
    if (dt.header.size() != k + 3 || dt.header.front() != "omega" || dt.header[k + 1] != "cost" ||
        dt.header[k + 2] != "status") {
        throw DomainError("d.csv does not match the subsystem count");
    }
    if (dt.rows.size() != req.grid.size()) throw DomainError("d.csv and the requirement have different grids");

    // Subsystem files hold feasible rows only; index them by frequency.
    std::vector<std::map<double, std::vector<double>>> rows(k);
    for (std::size_t j = 0; j < k; ++j) {
        if (!subsystem_csvs[j]) throw DomainError("missing scaling stream");
        const auto t = read_csv(*subsystem_csvs[j]);
        const auto width = static_cast<std::size_t>(1 + blocks.inputs[j] + blocks.outputs[j]);
        if (t.header.size() != width || t.header.front() != "omega") {
            throw DomainError("scalings of subsystem " + std::to_string(j + 1) + " have the wrong columns");
        }
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            std::vector<double> vals;
            for (std::size_t c = 1; c < width; ++c) vals.push_back(t.number(r, c));
            rows[j][t.number(r, 0)] = std::move(vals);
        }
    }

    std::vector<PointResult> points;
    for (std::size_t r = 0; r < dt.rows.size(); ++r) {
        PointResult p;
        p.omega = dt.number(r, 0);
        if (p.omega != req.grid[r]) throw DomainError("d.csv and the requirement have different grids");
        const std::string& status = dt.rows[r][k + 2];
        if (status != "feasible" && status != "infeasible") {
            throw DomainError("unknown status \"" + status + "\" in d.csv");
        }
        p.status = status == "feasible" ? PointStatus::feasible : PointStatus::infeasible;
        p.d.d.resize(static_cast<Eigen::Index>(k));
        for (std::size_t j = 0; j < k; ++j) p.d.d(static_cast<Eigen::Index>(j)) = dt.number(r, j + 1);
        p.cost = dt.number(r, k + 1);
        if (p.status == PointStatus::feasible) {
            p.scalings.v_c = req.v_c[r];
            p.scalings.w_c = req.w_c[r];
            for (std::size_t j = 0; j < k; ++j) {
                const auto it = rows[j].find(p.omega);
                if (it == rows[j].end()) {
                    throw DomainError("subsystem " + std::to_string(j + 1) + " has no scalings at omega=" +
                                      format_double(p.omega));
                }
                const auto m = blocks.inputs[j];
                p.scalings.v.push_back(Eigen::Map<const Vector>(it->second.data(), m));
                p.scalings.w.push_back(Eigen::Map<const Vector>(it->second.data() + m, blocks.outputs[j]));
            }
        } else {
            p.message = "infeasible in the stored run";
        }
        points.push_back(std::move(p));
    }
    return {req.grid, blocks, std::move(points)};
}

void write_hsv_csv(std::ostream& out, const Vector& hankel_values) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < hankel_values.size(); ++i) {
        rows.push_back({static_cast<double>(i + 1), hankel_values(i)});
    }
    write_csv(out, {"index", "sigma"}, rows);
}

void write_margins_csv(std::ostream& out, const FrequencyGrid& grid, const std::vector<double>& margins) {
    if (margins.size() != grid.size()) throw DomainError("one margin per grid point is required");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rows.push_back({grid[i], 1.0 - margins[i], margins[i] >= 0.0 ? 1.0 : 0.0});
    }
    write_csv(out, {"omega", "sigma_weighted", "pass"}, rows);
}

}  // namespace modred::io
