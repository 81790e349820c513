#include "basslv/io.hpp"

#include "basslv/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace basslv::io {

using nlohmann::json;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash(const json& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

CsvTable::CsvTable(std::string hash, std::vector<std::string> columns)
    : hash_(std::move(hash)), columns_(std::move(columns)) {}

CsvTable& CsvTable::row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    return row(cells);
}

CsvTable& CsvTable::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) {
        throw Error(ErrorCode::InvalidInput, "row width does not match the header");
    }
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    lines_.push_back(std::move(line));
    return *this;
}

std::string CsvTable::str() const {
    std::string out = "# config_hash=" + hash_ + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) out += ',';
        out += columns_[i];
    }
    out += '\n';
    for (const auto& l : lines_) {
        out += l;
        out += '\n';
    }
    return out;
}

namespace {

json grid_json(const interp::GridFunction& f) {
    return json{{"grid", f.grid()}, {"values", f.values()}};
}

interp::GridFunction grid_from(const json& j, interp::Extrapolation ex) {
    return interp::GridFunction(j.at("grid").get<std::vector<double>>(),
                                j.at("values").get<std::vector<double>>(), ex);
}

std::vector<double> numbers(const json& j) {
    std::vector<double> out;
    for (const auto& v : j) {
        out.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
    }
    return out;
}

json scheme_json(const quad::QuadratureScheme& s) {
    json j{{"kind", quad::to_string(s.kind)}, {"n", s.n}, {"m", s.m}};
    j["epsilon"] = s.epsilon ? json(*s.epsilon) : json(nullptr);
    return j;
}

quad::QuadratureScheme scheme_from(const json& j) {
    quad::QuadratureScheme s;
    s.kind = quad::scheme_from_string(j.at("kind").get<std::string>());
    s.n = j.at("n").get<int>();
    s.m = j.at("m").get<int>();
    if (j.contains("epsilon") && !j["epsilon"].is_null()) s.epsilon = j["epsilon"].get<double>();
    return s;
}

} // namespace

json to_json(const ModelFile& file) {
    const auto& m = file.model;
    json j;
    j["config_hash"] = file.config_hash;
    j["format"] = "basslv-model/1";
    j["spot"] = file.spot;
    j["maturities"] = m.maturities;
    j["scheme"] = scheme_json(m.scheme);
    j["first_map"] = grid_json(m.first_map);
    j["intervals"] = json::array();
    for (const auto& iv : m.intervals) {
        json e;
        e["t_start"] = iv.t_start;
        e["t_end"] = iv.t_end;
        e["iterations"] = iv.iterations;
        e["error_history"] = iv.error_history;
        e["scheme"] = scheme_json(iv.scheme);
        e["grid"] = iv.F_W.grid();
        e["F_W"] = iv.F_W.values();
        e["inner"] = iv.inner.values();
        e["terminal_map"] = iv.terminal_map.values();
        e["start_map"] = iv.start_map.values();
        j["intervals"].push_back(std::move(e));
    }
    j["reference"] = json::array();
    for (const auto& r : file.reference) {
        j["reference"].push_back({{"maturity", r.maturity}, {"strikes", r.strikes}, {"ivs", r.ivs}});
    }
    return j;
}

ModelFile model_from_json(const json& j) {
    try {
        if (j.value("format", std::string()) != "basslv-model/1") {
            throw Error(ErrorCode::Config, "not a model file");
        }
        ModelFile f;
        f.spot = j.at("spot").get<double>();
        f.config_hash = j.value("config_hash", std::string());
        auto& m = f.model;
        m.maturities = j.at("maturities").get<std::vector<double>>();
        m.scheme = scheme_from(j.at("scheme"));
        m.first_map = grid_from(j.at("first_map"), interp::Extrapolation::Linear);
        for (const auto& e : j.at("intervals")) {
            bass::BassInterval iv;
            iv.t_start = e.at("t_start").get<double>();
            iv.t_end = e.at("t_end").get<double>();
            iv.iterations = e.at("iterations").get<int>();
            iv.error_history = e.at("error_history").get<std::vector<double>>();
            iv.scheme = scheme_from(e.at("scheme"));
            const auto grid = e.at("grid").get<std::vector<double>>();
            using interp::Extrapolation;
            iv.F_W = interp::GridFunction(grid, e.at("F_W").get<std::vector<double>>(),
                                          Extrapolation::Constant);
            iv.inner = interp::GridFunction(grid, e.at("inner").get<std::vector<double>>(),
                                            Extrapolation::Constant);
            iv.terminal_map = interp::GridFunction(
                grid, e.at("terminal_map").get<std::vector<double>>(), Extrapolation::Linear);
            iv.start_map = interp::GridFunction(grid, e.at("start_map").get<std::vector<double>>(),
                                                Extrapolation::Linear);
            m.intervals.push_back(std::move(iv));
        }
        if (m.maturities.empty() || m.intervals.size() + 1 != m.maturities.size()) {
            throw Error(ErrorCode::Config, "model file needs one interval per maturity gap");
        }
        for (const auto& r : j.at("reference")) {
            f.reference.push_back({r.at("maturity").get<double>(), numbers(r.at("strikes")),
                                   numbers(r.at("ivs"))});
        }
        return f;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("bad model file: ") + e.what());
    }
}

void save_model(const std::string& path, const ModelFile& file) {
    write_file(path, dump(to_json(file)));
}

ModelFile load_model(const std::string& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, path + ": " + e.what());
    }
    return model_from_json(j);
}

json to_json(const mc::CalibrationReport& report, const std::string& hash) {
    json j;
    j["config_hash"] = hash;
    j["maturities"] = json::array();
    for (const auto& r : report.maturities) {
        j["maturities"].push_back({{"maturity", r.maturity},
                                   {"err_cab", r.err_cab},
                                   {"dropped", r.dropped},
                                   {"strikes", r.strikes},
                                   {"model_prices", r.model_prices},
                                   {"model_ivs", r.model_ivs},
                                   {"reference_ivs", r.reference_ivs}});
    }
    return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

} // namespace basslv::io
