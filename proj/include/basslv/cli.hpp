#pragma once

#include "basslv/mc.hpp"
#include "basslv/quad.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace basslv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
    std::string input;  // chain CSV
    std::string preset; // "bs" or "ssvi" instead of a chain
    std::string model;  // model JSON for price and report
    double spot = 100.0;
    double rate = 0.0;
    quad::QuadratureScheme scheme;
    double tol = 1e-4;
    int max_iter = 1000;
    int window_count = 8;
    bool shrink_domain = false;
    bool bimodal_left = false;
    mc::SimulationSpec mc;
    std::vector<double> strikes; // empty: 21 strikes in [0.5, 1.5] S0
    double noise = 0.0;
    std::uint64_t noise_seed = 7;
    std::vector<int> bench_n{9, 17, 33, 65, 129};
    std::string output_dir = ".";

    nlohmann::json to_json() const;
    /// Keys absent from j keep their current values.
    void merge(const nlohmann::json& j);
    /// Throws Error(Config) on out-of-range values.
    void validate() const;
};

/// A failure inside one pipeline stage.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, int exit_code, const std::string& what)
        : std::runtime_error(what), stage_(std::move(stage)), exit_code_(exit_code) {}
    const std::string& stage() const { return stage_; }
    int exit_code() const { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

/// Each command writes its artifacts under output_dir and returns an exit code.
/// Stage failures surface as StageError.
int cmd_synth(const RunConfig& cfg);
int cmd_rnd(const RunConfig& cfg);
int cmd_calibrate(const RunConfig& cfg);
int cmd_price(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);
int cmd_benchmark(const RunConfig& cfg);

/// Parses argv, runs the subcommand and maps failures to exit codes.
int run(int argc, const char* const* argv);

} // namespace basslv::cli
