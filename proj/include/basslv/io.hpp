#pragma once

#include "basslv/bass.hpp"
#include "basslv/mc.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace basslv::io {

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Hash of the canonical (key-sorted, compact) dump of a config object, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Comma-separated table with a leading "# config_hash=<hash>" line.
class CsvTable {
public:
    CsvTable(std::string hash, std::vector<std::string> columns);

    CsvTable& row(const std::vector<double>& values);
    /// Mixed row: text cells are written verbatim.
    CsvTable& row(const std::vector<std::string>& cells);

    std::string str() const;
    void save(const std::string& path) const { write_file(path, str()); }

private:
    std::string hash_;
    std::vector<std::string> columns_;
    std::vector<std::string> lines_;
};

/// Reference implied vols the model should reproduce at one maturity.
struct ReferenceSmile {
    double maturity = 0.0;
    std::vector<double> strikes;
    std::vector<double> ivs;
};

/// Calibrated maps plus what is needed to price and score them later.
struct ModelFile {
    double spot = 100.0;
    std::string config_hash;
    bass::BassModel model;
    std::vector<ReferenceSmile> reference;
};

nlohmann::json to_json(const ModelFile& file);
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

nlohmann::json to_json(const mc::CalibrationReport& report, const std::string& hash);

/// Pretty JSON with non-finite numbers written as null.
std::string dump(const nlohmann::json& j);

} // namespace basslv::io
