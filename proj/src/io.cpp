#include "specbool/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace specbool {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t next = line.find(sep, pos);
        if (next == std::string::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    double v;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad number '" + s + "' in " + context);
    return v;
}

long parse_long(const std::string& s, const std::string& context) {
    long v;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad integer '" + s + "' in " + context);
    return v;
}

// Read non-empty lines, tolerating a trailing newline and CRLF.
std::vector<std::string> read_lines(const std::string& path) {
    std::string text = read_text_file(path);
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t next = text.find('\n', pos);
        if (next == std::string::npos)
            next = text.size();
        std::string line = text.substr(pos, next - pos);
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!line.empty())
            lines.push_back(std::move(line));
        pos = next + 1;
    }
    return lines;
}

json parse_json_file(const std::string& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded())
        throw std::invalid_argument("invalid JSON: " + path);
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace

void write_function_table_csv(const std::string& path, const FunctionTable& table) {
    check_dim(table.d);
    if (table.values.size() != size_t(1) << table.d)
        throw std::invalid_argument("function table size does not match dimension");
    std::string out = "index,value\n";
    for (size_t i = 0; i < table.values.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(table.values[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

FunctionTable read_function_table_csv(const std::string& path) {
    auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "index,value")
        throw std::invalid_argument("function table CSV must start with 'index,value': " + path);
    const size_t n = lines.size() - 1;
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("function table row count must be a power of two: " + path);
    int d = 0;
    while (size_t(1) << d < n)
        ++d;
    check_dim(d);
    FunctionTable table;
    table.d = d;
    table.values.resize(n);
    for (size_t i = 0; i < n; ++i) {
        auto cells = split(lines[i + 1], ',');
        if (cells.size() != 2)
            throw std::invalid_argument("bad row in " + path);
        if (size_t(parse_long(cells[0], path)) != i)
            throw std::invalid_argument("rows must be in index order in " + path);
        table.values[i] = parse_double(cells[1], path);
    }
    return table;
}

void write_spectrum_json(const std::string& path, const Spectrum& spectrum) {
    check_spectrum(spectrum);
    json entries = json::array();
    for (const auto& e : spectrum.entries)
        entries.push_back({{"mask", e.mask}, {"coeff", e.coeff}});
    write_json_file(path, json{{"d", spectrum.d}, {"entries", entries}});
}

Spectrum read_spectrum_json(const std::string& path) {
    json j = parse_json_file(path);
    if (!j.is_object() || !j.contains("d") || !j.contains("entries") ||
        !j["d"].is_number_integer() || !j["entries"].is_array())
        throw std::invalid_argument("spectrum JSON needs integer 'd' and array 'entries': " + path);
    Spectrum s;
    s.d = j["d"].get<int>();
    for (const auto& e : j["entries"]) {
        if (!e.is_object() || !e.contains("mask") || !e.contains("coeff") ||
            !e["mask"].is_number_integer() || !e["coeff"].is_number())
            throw std::invalid_argument("bad spectrum entry in " + path);
        s.entries.push_back({e["mask"].get<uint32_t>(), e["coeff"].get<double>()});
    }
    check_spectrum(s);
    return s;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    check_dataset(data);
    std::string out;
    for (int j = 1; j <= data.d; ++j) {
        out += "x_" + std::to_string(j);
        out += ',';
    }
    out += "y\n";
    for (size_t i = 0; i < data.size(); ++i) {
        const double* row = data.X.data() + i * size_t(data.d);
        for (int j = 0; j < data.d; ++j)
            out += row[j] > 0 ? "1," : "-1,";
        out += format_double(data.y[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

Dataset read_dataset_csv(const std::string& path) {
    auto lines = read_lines(path);
    if (lines.empty())
        throw std::invalid_argument("empty dataset file: " + path);
    auto header = split(lines[0], ',');
    if (header.size() < 2 || header.back() != "y")
        throw std::invalid_argument("dataset header must be x_1,...,x_d,y: " + path);
    const int d = int(header.size()) - 1;
    check_dim(d);
    for (int j = 0; j < d; ++j)
        if (header[size_t(j)] != "x_" + std::to_string(j + 1))
            throw std::invalid_argument("dataset header must be x_1,...,x_d,y: " + path);
    if (lines.size() < 2)
        throw std::invalid_argument("dataset has no rows: " + path);
    Dataset data;
    data.d = d;
    for (size_t i = 1; i < lines.size(); ++i) {
        auto cells = split(lines[i], ',');
        if (cells.size() != size_t(d) + 1)
            throw std::invalid_argument("bad dataset row in " + path);
        for (int j = 0; j < d; ++j) {
            const std::string& c = cells[size_t(j)];
            if (c == "1" || c == "+1")
                data.X.push_back(1.0);
            else if (c == "-1")
                data.X.push_back(-1.0);
            else
                throw std::invalid_argument("dataset inputs must be +-1, got '" + c + "' in " + path);
        }
        data.y.push_back(parse_double(cells[size_t(d)], path));
    }
    return data;
}

void save_checkpoint(const std::string& path, const Model& model) {
    json spec;
    const std::string kind = model.kind();
    if (kind == "linear") {
        spec = {{"d", model.dim()}};
    } else if (kind == "polynomial") {
        const auto& poly = dynamic_cast<const PolynomialModel&>(model);
        spec = {{"d", model.dim()}};
        if (poly.support().size() != size_t(1) << model.dim())
            spec["support"] = poly.support();
    } else if (kind == "mlp") {
        const auto& mlp = dynamic_cast<const MlpModel&>(model);
        spec = {{"widths", mlp.widths()}, {"activation", "tanh"}};
    } else {
        throw std::invalid_argument("unknown model kind: " + kind);
    }
    write_json_file(path, json{{"kind", kind}, {"spec", spec}, {"theta", model.params()}});
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
    json j = parse_json_file(path);
    if (!j.is_object() || !j.contains("kind") || !j.contains("spec") || !j.contains("theta") ||
        !j["theta"].is_array())
        throw std::invalid_argument("checkpoint needs 'kind', 'spec', 'theta': " + path);
    const std::string kind = j["kind"].get<std::string>();
    const json& spec = j["spec"];
    std::unique_ptr<Model> model;
    if (kind == "linear") {
        model = std::make_unique<LinearModel>(spec.at("d").get<int>());
    } else if (kind == "polynomial") {
        const int d = spec.at("d").get<int>();
        if (spec.contains("support"))
            model = std::make_unique<PolynomialModel>(
                d, spec["support"].get<std::vector<uint32_t>>());
        else
            model = std::make_unique<PolynomialModel>(PolynomialModel::full_support(d));
    } else if (kind == "mlp") {
        if (spec.contains("activation") && spec["activation"].get<std::string>() != "tanh")
            throw std::invalid_argument("unsupported mlp activation in " + path);
        model = std::make_unique<MlpModel>(spec.at("widths").get<std::vector<int>>());
    } else {
        throw std::invalid_argument("unknown checkpoint kind '" + kind + "' in " + path);
    }
    auto theta = j["theta"].get<std::vector<double>>();
    if (theta.size() != model->params().size())
        throw std::invalid_argument("checkpoint theta length mismatch in " + path);
    model->params() = std::move(theta);
    return model;
}

void write_train_report_json(const std::string& path, const TrainReport& report) {
    json j{{"lambda", report.lambda},
           {"final_mse", report.final_mse},
           {"final_reg", report.final_reg},
           {"final_total", report.final_total},
           {"stationarity_residual", report.stationarity_residual},
           {"is_stationary", report.is_stationary},
           {"is_interpolator", report.is_interpolator},
           {"interpolation_delta", report.interpolation_delta},
           {"diverged", report.diverged},
           {"diverged_epoch", report.diverged_epoch},
           {"epochs_run", report.epochs_run},
           {"final_learning_rate", report.final_learning_rate}};
    write_json_file(path, j);
}

void write_trajectory_csv(const std::string& path, const std::vector<TrainStep>& trajectory) {
    std::string out = "epoch,mse,reg,total\n";
    for (const auto& step : trajectory) {
        out += std::to_string(step.epoch);
        out += ',';
        out += format_double(step.mse);
        out += ',';
        out += format_double(step.reg);
        out += ',';
        out += format_double(step.total);
        out += '\n';
    }
    write_text_file(path, out);
}

void write_qg_csv(const std::string& path, const std::vector<QGRow>& rows) {
    std::string out = "sigma,min_ratio,min_ratio_per_param,K,M\n";
    for (const auto& r : rows) {
        out += format_double(r.sigma) + ',' + format_double(r.min_ratio) + ',' +
               format_double(r.min_ratio_per_param) + ',' + std::to_string(r.K) + ',' +
               std::to_string(r.M) + '\n';
    }
    write_text_file(path, out);
}

void write_rsi_csv(const std::string& path, const std::vector<RsiRow>& rows) {
    std::string out = "sigma,min_ratio,K,M\n";
    for (const auto& r : rows) {
        out += format_double(r.sigma) + ',' + format_double(r.min_ratio) + ',' +
               std::to_string(r.K) + ',' + std::to_string(r.M) + '\n';
    }
    write_text_file(path, out);
}

void write_phase_csv(const std::string& path, const std::vector<PhaseRow>& rows) {
    std::string out = "param,n,frac_sp,frac_nosp,T,tau\n";
    for (const auto& r : rows) {
        out += format_double(r.param) + ',' + std::to_string(r.n) + ',' +
               format_double(r.frac_sp) + ',' + format_double(r.frac_nosp) + ',' +
               std::to_string(r.T) + ',' + format_double(r.tau) + '\n';
    }
    write_text_file(path, out);
}

void write_rate_csv(const std::string& path, const std::vector<RateRow>& rows) {
    std::string out = "n,median_err\n";
    for (const auto& r : rows)
        out += std::to_string(r.n) + ',' + format_double(r.median_err) + '\n';
    write_text_file(path, out);
}

} // namespace specbool
