#include "basslv/cli.hpp"

#include "basslv/bass.hpp"
#include "basslv/density.hpp"
#include "basslv/error.hpp"
#include "basslv/io.hpp"
#include "basslv/marketdata.hpp"
#include "basslv/math.hpp"
#include "basslv/synth.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>

namespace basslv::cli {

using nlohmann::json;

namespace {

const std::vector<double> kBsMaturities{1.0, 1.2, 1.5};
constexpr double kBsSigma = 1.0;
const std::vector<double> kSsviMaturities{0.5, 1.0, 2.0};

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io:
    case ErrorCode::Config:
    case ErrorCode::MalformedRow:
    case ErrorCode::DuplicateQuote:
    case ErrorCode::NoQuotes:
        return kExitUsage;
    default:
        return kExitNumerical;
    }
}

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw StageError(name, exit_code_for(e.code()), e.what());
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, kExitNumerical, e.what());
    }
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

void ensure_output_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + cfg.output_dir + ": " + ec.message());
}

std::string hash_for(const RunConfig& cfg, const std::string& command) {
    json j = cfg.to_json();
    // where artifacts land does not change what they contain
    j.erase("output_dir");
    j["command"] = command;
    return io::config_hash(j);
}

std::vector<double> strikes_for(const RunConfig& cfg) {
    return cfg.strikes.empty() ? mc::default_strikes(cfg.spot) : cfg.strikes;
}

double reference_iv(const density::MarginalDistribution& mu, double spot, double K, double T) {
    try {
        return marketdata::implied_vol(mu.call(K), spot, K, 0.0, T, marketdata::Side::Call);
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

struct Inputs {
    std::vector<double> maturities;
    std::vector<density::MarginalPtr> marginals;
    std::vector<density::DensityBuild> builds; // empty for closed-form presets
    std::vector<std::vector<std::pair<double, double>>> call_quotes;
};

marketdata::OptionChain read_chain(const RunConfig& cfg) {
    if (cfg.input.empty()) throw Error(ErrorCode::Config, "no input chain given");
    if (!std::filesystem::exists(cfg.input)) {
        throw Error(ErrorCode::Io, "input file not found: " + cfg.input);
    }
    return marketdata::normalize_chain(
        marketdata::parse_chain(io::read_file(cfg.input), cfg.spot, cfg.rate));
}

std::vector<double> ssvi_strikes() { return synth::ssvi_strike_grid(); }

std::vector<std::vector<std::pair<double, double>>> ssvi_iv_sets(const RunConfig& cfg) {
    const auto p = synth::ssvi_preset();
    std::vector<std::vector<std::pair<double, double>>> out;
    for (std::size_t i = 0; i < kSsviMaturities.size(); ++i) {
        out.push_back(synth::add_noise(synth::ssvi_quotes(p, kSsviMaturities[i], ssvi_strikes()),
                                       cfg.noise, cfg.noise_seed + i));
    }
    return out;
}

Inputs densities_from_iv(const RunConfig& cfg, const std::vector<double>& maturities,
                         const std::vector<std::vector<std::pair<double, double>>>& iv_sets) {
    density::DensityOptions opt;
    opt.window_count = cfg.window_count;
    opt.shrink_domain = cfg.shrink_domain;
    opt.tails.left.bimodal = cfg.bimodal_left;
    Inputs in;
    in.maturities = maturities;
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        auto build = density::build_density(iv_sets[i], cfg.spot, maturities[i], opt);
        in.marginals.push_back(density::to_marginal(build.density));
        std::vector<std::pair<double, double>> calls;
        for (const auto& [K, iv] : iv_sets[i]) {
            calls.emplace_back(K, marketdata::bs_price(cfg.spot, K, 0.0, maturities[i], iv,
                                                       marketdata::Side::Call));
        }
        in.call_quotes.push_back(std::move(calls));
        in.builds.push_back(std::move(build));
    }
    return in;
}

Inputs load_inputs(const RunConfig& cfg) {
    if (cfg.preset == "bs") {
        Inputs in;
        in.maturities = kBsMaturities;
        in.marginals = synth::bs_marginals(cfg.spot, kBsSigma, kBsMaturities);
        return in;
    }
    if (cfg.preset == "ssvi") {
        return stage("density", [&] { return densities_from_iv(cfg, kSsviMaturities, ssvi_iv_sets(cfg)); });
    }
    const auto chain = stage("input", [&] { return read_chain(cfg); });
    return stage("density", [&] {
        std::vector<std::vector<std::pair<double, double>>> sets;
        for (std::size_t i = 0; i < chain.maturities.size(); ++i) {
            sets.push_back(marketdata::iv_points(chain, i));
        }
        return densities_from_iv(cfg, chain.maturities, sets);
    });
}

void write_density_csvs(const RunConfig& cfg, const Inputs& in, const std::string& hash) {
    for (std::size_t i = 0; i < in.maturities.size(); ++i) {
        const auto& mu = *in.marginals[i];
        io::CsvTable t(hash, {"strike", "density", "cdf"});
        const double lo = mu.quantile(1e-4);
        const double hi = mu.quantile(1.0 - 1e-4);
        for (double K : math::linspace(lo, hi, 401)) t.row({K, mu.pdf(K), mu.cdf(K)});
        t.save(out_path(cfg, "density_" + std::to_string(i) + ".csv"));
    }
}

json tail_json(const density::TailParams& p) {
    return {{"K", p.K}, {"lambda", p.lambda}, {"v1", p.v1}, {"v2", p.v2},
            {"eta1", p.eta1}, {"eta2", p.eta2}};
}

std::vector<io::ReferenceSmile> reference_smiles(const RunConfig& cfg, const Inputs& in) {
    const auto K = strikes_for(cfg);
    std::vector<io::ReferenceSmile> out;
    for (std::size_t i = 0; i < in.maturities.size(); ++i) {
        io::ReferenceSmile r{in.maturities[i], K, {}};
        for (double k : K) r.ivs.push_back(reference_iv(*in.marginals[i], cfg.spot, k, in.maturities[i]));
        out.push_back(std::move(r));
    }
    return out;
}

mc::CalibrationReport score(const io::ModelFile& file, const mc::SimulationSpec& spec) {
    mc::CalibrationReport report;
    std::vector<std::vector<mc::PriceEstimate>> rows;
    const std::vector<double>* priced = nullptr;
    for (std::size_t i = 0; i < file.reference.size(); ++i) {
        const auto& ref = file.reference[i];
        // one simulation serves every maturity that shares the strike list
        if (!priced || *priced != ref.strikes) {
            rows = mc::price_calls_streaming(file.model, spec, ref.strikes);
            priced = &ref.strikes;
        }
        std::vector<double> prices;
        for (const auto& r : rows[i]) prices.push_back(r.price);
        report.maturities.push_back(
            mc::calibration_error(ref.maturity, ref.strikes, prices, ref.ivs, file.spot, 0.0));
    }
    return report;
}

} // namespace

json RunConfig::to_json() const {
    json j;
    j["input"] = input;
    j["preset"] = preset;
    j["model"] = model;
    j["spot"] = spot;
    j["rate"] = rate;
    j["scheme"] = quad::to_string(scheme.kind);
    j["points"] = scheme.n;
    j["smoothness"] = scheme.m;
    j["epsilon"] = scheme.epsilon ? json(*scheme.epsilon) : json(nullptr);
    j["tol"] = tol;
    j["max_iter"] = max_iter;
    j["window_count"] = window_count;
    j["shrink_domain"] = shrink_domain;
    j["bimodal_left"] = bimodal_left;
    j["paths"] = mc.n_paths;
    j["seed"] = mc.seed;
    j["antithetic"] = mc.antithetic;
    j["construction"] = mc.construction == mc::PathConstruction::Remap ? "remap" : "brownian";
    j["strikes"] = strikes;
    j["noise"] = noise;
    j["noise_seed"] = noise_seed;
    j["bench_n"] = bench_n;
    j["output_dir"] = output_dir;
    return j;
}

void RunConfig::merge(const json& j) {
    try {
        input = j.value("input", input);
        preset = j.value("preset", preset);
        model = j.value("model", model);
        spot = j.value("spot", spot);
        rate = j.value("rate", rate);
        if (j.contains("scheme")) scheme.kind = quad::scheme_from_string(j["scheme"].get<std::string>());
        scheme.n = j.value("points", scheme.n);
        scheme.m = j.value("smoothness", scheme.m);
        if (j.contains("epsilon") && !j["epsilon"].is_null()) scheme.epsilon = j["epsilon"].get<double>();
        tol = j.value("tol", tol);
        max_iter = j.value("max_iter", max_iter);
        window_count = j.value("window_count", window_count);
        shrink_domain = j.value("shrink_domain", shrink_domain);
        bimodal_left = j.value("bimodal_left", bimodal_left);
        mc.n_paths = j.value("paths", mc.n_paths);
        mc.seed = j.value("seed", mc.seed);
        mc.antithetic = j.value("antithetic", mc.antithetic);
        mc.threads = j.value("threads", mc.threads);
        if (j.contains("construction")) {
            const auto c = j["construction"].get<std::string>();
            if (c != "remap" && c != "brownian") throw Error(ErrorCode::Config, "construction must be remap or brownian");
            mc.construction = c == "remap" ? mc::PathConstruction::Remap : mc::PathConstruction::Brownian;
        }
        strikes = j.value("strikes", strikes);
        noise = j.value("noise", noise);
        noise_seed = j.value("noise_seed", noise_seed);
        bench_n = j.value("bench_n", bench_n);
        output_dir = j.value("output_dir", output_dir);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("bad config value: ") + e.what());
    }
}

void RunConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::Config, m); };
    if (!(tol > 0.0 && tol < 1.0)) fail("tol must lie in (0, 1)");
    if (max_iter < 1) fail("max_iter must be >= 1");
    if (!(spot > 0.0)) fail("spot must be positive");
    if (!std::isfinite(rate)) fail("rate must be finite");
    if (scheme.n < 1) fail("points must be >= 1");
    if (scheme.kind == quad::SchemeKind::Trapezoid && scheme.n % 2 == 0) fail("trapezoid points must be odd (2N + 1)");
    if (scheme.m < 1) fail("smoothness must be >= 1");
    if (window_count < 5) fail("window_count must be >= 5");
    if (mc.n_paths < 1) fail("paths must be >= 1");
    if (mc.threads < 1) fail("threads must be >= 1");
    if (noise < 0.0) fail("noise must be >= 0");
    if (!preset.empty() && preset != "bs" && preset != "ssvi") fail("preset must be bs or ssvi");
    for (double k : strikes) {
        if (!(k > 0.0)) fail("strikes must be positive");
    }
    for (int n : bench_n) {
        if (n < 1) fail("bench_n entries must be >= 1");
    }
}

int cmd_synth(const RunConfig& cfg) {
    if (cfg.preset.empty()) throw StageError("config", kExitUsage, "synth needs --preset");
    const std::string hash = hash_for(cfg, "synth");
    stage("output", [&] { ensure_output_dir(cfg); });
    io::CsvTable chain(hash, {"maturity", "strike", "side", "price", "iv"});
    io::CsvTable truth(hash, {"maturity", "strike", "iv", "density"});
    using io::format_double;
    if (cfg.preset == "bs") {
        const auto mus = synth::bs_marginals(cfg.spot, kBsSigma, kBsMaturities);
        const auto K = math::linspace(0.1 * cfg.spot, 4.0 * cfg.spot, 40);
        for (std::size_t i = 0; i < kBsMaturities.size(); ++i) {
            const double T = kBsMaturities[i];
            for (double k : K) {
                const double price = marketdata::bs_price(cfg.spot, k, 0.0, T, kBsSigma, marketdata::Side::Call);
                chain.row(std::vector<std::string>{format_double(T), format_double(k), "call",
                                                   format_double(price), format_double(kBsSigma)});
                truth.row({T, k, kBsSigma, mus[i]->pdf(k)});
            }
        }
    } else {
        const auto p = synth::ssvi_preset();
        const auto sets = ssvi_iv_sets(cfg);
        for (std::size_t i = 0; i < kSsviMaturities.size(); ++i) {
            const double T = kSsviMaturities[i];
            for (const auto& [k, iv] : sets[i]) {
                const double price = marketdata::bs_price(p.spot, k, 0.0, T, iv, marketdata::Side::Call);
                chain.row(std::vector<std::string>{format_double(T), format_double(k), "call",
                                                   format_double(price), format_double(iv)});
                truth.row({T, k, synth::ssvi_iv(p, std::log(k / p.spot), T), synth::ssvi_rnd(p, k, T)});
            }
        }
    }
    stage("output", [&] {
        chain.save(out_path(cfg, "chain.csv"));
        truth.save(out_path(cfg, "truth.csv"));
    });
    return kExitOk;
}

int cmd_rnd(const RunConfig& cfg) {
    const std::string hash = hash_for(cfg, "rnd");
    const Inputs in = load_inputs(cfg);
    stage("output", [&] { ensure_output_dir(cfg); });
    json report;
    report["config_hash"] = hash;
    report["maturities"] = json::array();
    stage("report", [&] {
        for (std::size_t i = 0; i < in.maturities.size(); ++i) {
            const auto& mu = *in.marginals[i];
            json m;
            m["maturity"] = in.maturities[i];
            m["mass"] = mu.cdf(std::numeric_limits<double>::max());
            m["mean"] = mu.mean();
            if (!in.builds.empty()) {
                const auto& q = in.builds[i].density;
                const auto rep = density::density_report(q, in.call_quotes[i]);
                m["mass"] = rep.mass;
                m["mean"] = rep.mean;
                m["repricing_err"] = rep.max_repricing_error;
                m["tail_params"] = {{"left", tail_json(q.left)}, {"right", tail_json(q.right)}};
            }
            json viol = json::array();
            if (i + 1 < in.maturities.size()) {
                std::vector<double> K;
                for (double p : math::linspace(1e-3, 1.0 - 1e-3, 199)) K.push_back(in.marginals[i + 1]->quantile(p));
                for (const auto& v : density::calendar_check(mu, *in.marginals[i + 1], 0.0,
                                                             in.maturities[i + 1] - in.maturities[i], K)) {
                    viol.push_back({{"strike", v.strike}, {"value", v.value}});
                }
            }
            m["calendar_violations"] = viol;
            report["maturities"].push_back(std::move(m));
        }
    });
    stage("output", [&] {
        write_density_csvs(cfg, in, hash);
        io::write_file(out_path(cfg, "rnd_report.json"), io::dump(report));
    });
    return kExitOk;
}

int cmd_calibrate(const RunConfig& cfg) {
    const std::string hash = hash_for(cfg, "calibrate");
    const Inputs in = load_inputs(cfg);
    stage("output", [&] { ensure_output_dir(cfg); });
    stage("output", [&] { write_density_csvs(cfg, in, hash); });

    io::ModelFile file;
    file.spot = cfg.spot;
    file.config_hash = hash;
    file.model = stage("calibrate", [&] {
        return bass::calibrate(in.marginals, in.maturities, cfg.scheme, cfg.tol, cfg.max_iter);
    });
    file.reference = stage("reference", [&] { return reference_smiles(cfg, in); });

    io::CsvTable conv(hash, {"interval", "iter", "err"});
    for (std::size_t i = 0; i < file.model.intervals.size(); ++i) {
        const auto& h = file.model.intervals[i].error_history;
        for (std::size_t k = 0; k < h.size(); ++k) {
            conv.row({static_cast<double>(i), static_cast<double>(k + 1), h[k]});
        }
    }
    const auto report = stage("price", [&] { return score(file, cfg.mc); });
    stage("output", [&] {
        io::save_model(out_path(cfg, "model.json"), file);
        conv.save(out_path(cfg, "convergence.csv"));
        io::write_file(out_path(cfg, "report.json"), io::dump(io::to_json(report, hash)));
    });
    for (const auto& m : report.maturities) {
        std::cout << "T=" << io::format_double(m.maturity) << " err_cab=" << io::format_double(m.err_cab) << '\n';
    }
    return kExitOk;
}

int cmd_price(const RunConfig& cfg) {
    const std::string hash = hash_for(cfg, "price");
    const auto file = stage("input", [&] { return io::load_model(cfg.model); });
    const auto K = strikes_for(cfg);
    const auto rows = stage("price", [&] { return mc::price_calls_streaming(file.model, cfg.mc, K); });
    io::CsvTable t(hash, {"maturity", "strike", "price", "se", "iv"});
    for (std::size_t j = 0; j < rows.size(); ++j) {
        const double T = file.model.maturities[j];
        for (const auto& r : rows[j]) {
            double iv = std::numeric_limits<double>::quiet_NaN();
            try {
                iv = marketdata::implied_vol(r.price, file.spot, r.strike, 0.0, T, marketdata::Side::Call);
            } catch (const Error&) {
            }
            t.row({T, r.strike, r.price, r.se, iv});
        }
    }
    stage("output", [&] {
        ensure_output_dir(cfg);
        t.save(out_path(cfg, "prices.csv"));
    });
    return kExitOk;
}

int cmd_report(const RunConfig& cfg) {
    const std::string hash = hash_for(cfg, "report");
    const auto file = stage("input", [&] { return io::load_model(cfg.model); });
    const auto report = stage("price", [&] { return score(file, cfg.mc); });
    stage("output", [&] {
        ensure_output_dir(cfg);
        io::write_file(out_path(cfg, "report.json"), io::dump(io::to_json(report, hash)));
    });
    return kExitOk;
}

int cmd_benchmark(const RunConfig& cfg) {
    const std::string hash = hash_for(cfg, "benchmark");
    const auto study = stage("benchmark", [&] { return quad::convergence_study(cfg.bench_n, 1.0, cfg.scheme.m); });
    io::CsvTable t(hash, {"scheme", "n", "abs_error", "slope"});
    for (const auto& r : study.rows) {
        const double slope = r.kind == quad::SchemeKind::Trapezoid ? study.trapezoid_slope : study.gh_slope;
        t.row(std::vector<std::string>{quad::to_string(r.kind), std::to_string(r.n),
                                       io::format_double(r.abs_error), io::format_double(slope)});
    }
    stage("output", [&] {
        ensure_output_dir(cfg);
        t.save(out_path(cfg, "benchmark.csv"));
    });
    return kExitOk;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Bass local volatility calibration"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string config_path;
    std::string scheme_name = "trap";
    std::string construction = "remap";
    bool no_antithetic = false;
    // options whose value should come from the config file when not given
    std::vector<std::pair<CLI::Option*, std::string>> bound;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config; flags override its keys");
        bound.emplace_back(sub->add_option("--out-dir", cfg.output_dir, "output directory"), "output_dir");
        bound.emplace_back(sub->add_option("--spot", cfg.spot, "spot price"), "spot");
        bound.emplace_back(sub->add_option("--rate", cfg.rate, "continuously compounded rate"), "rate");
    };
    auto input_opts = [&](CLI::App* sub) {
        bound.emplace_back(sub->add_option("--input", cfg.input, "option chain CSV"), "input");
        bound.emplace_back(sub->add_option("--preset", cfg.preset, "synthetic input: bs or ssvi"), "preset");
        bound.emplace_back(sub->add_option("--window-count", cfg.window_count, "LQR neighbours"), "window_count");
        bound.emplace_back(sub->add_flag("--shrink-domain", cfg.shrink_domain, "move K_L past a core dip"), "shrink_domain");
        bound.emplace_back(sub->add_flag("--bimodal-left", cfg.bimodal_left, "constrain the left tail"), "bimodal_left");
        bound.emplace_back(sub->add_option("--noise", cfg.noise, "uniform IV noise for presets"), "noise");
        bound.emplace_back(sub->add_option("--noise-seed", cfg.noise_seed, "noise seed"), "noise_seed");
    };
    auto mc_opts = [&](CLI::App* sub) {
        bound.emplace_back(sub->add_option("--paths", cfg.mc.n_paths, "Monte Carlo paths"), "paths");
        bound.emplace_back(sub->add_option("--seed", cfg.mc.seed, "Monte Carlo seed"), "seed");
        bound.emplace_back(sub->add_option("--threads", cfg.mc.threads, "worker threads"), "threads");
        bound.emplace_back(sub->add_flag("--no-antithetic", no_antithetic, "plain sampling"), "antithetic");
        bound.emplace_back(sub->add_option("--construction", construction, "remap or brownian"), "construction");
        bound.emplace_back(sub->add_option("--strikes", cfg.strikes, "strike list")->delimiter(','), "strikes");
    };

    auto* synth = app.add_subcommand("synth", "write a synthetic chain and its ground truth");
    common(synth);
    input_opts(synth);

    auto* rnd = app.add_subcommand("rnd", "build risk-neutral densities from a chain");
    common(rnd);
    input_opts(rnd);

    auto* calibrate = app.add_subcommand("calibrate", "densities, fixed points, pricing report");
    common(calibrate);
    input_opts(calibrate);
    mc_opts(calibrate);
    bound.emplace_back(calibrate->add_option("--scheme", scheme_name, "trap or gh"), "scheme");
    bound.emplace_back(calibrate->add_option("--points", cfg.scheme.n, "quadrature points"), "points");
    bound.emplace_back(calibrate->add_option("--tol", cfg.tol, "fixed-point tolerance"), "tol");
    bound.emplace_back(calibrate->add_option("--max-iter", cfg.max_iter, "iteration cap"), "max_iter");

    auto* price = app.add_subcommand("price", "Monte Carlo call prices from a model file");
    common(price);
    mc_opts(price);
    bound.emplace_back(price->add_option("--model", cfg.model, "model JSON")->required(), "model");

    auto* report = app.add_subcommand("report", "calibration report from a model file");
    common(report);
    mc_opts(report);
    bound.emplace_back(report->add_option("--model", cfg.model, "model JSON")->required(), "model");

    auto* bench = app.add_subcommand("benchmark", "quadrature convergence table");
    common(bench);
    bound.emplace_back(bench->add_option("--n", cfg.bench_n, "rule sizes")->delimiter(','), "bench_n");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        // collect flag values, then let the config file fill the gaps
        RunConfig flags = cfg;
        flags.scheme.kind = quad::scheme_from_string(scheme_name);
        flags.mc.antithetic = !no_antithetic;
        if (construction != "remap" && construction != "brownian") {
            throw Error(ErrorCode::Config, "construction must be remap or brownian");
        }
        flags.mc.construction = construction == "remap" ? mc::PathConstruction::Remap
                                                        : mc::PathConstruction::Brownian;
        RunConfig merged = flags;
        if (!config_path.empty()) {
            if (!std::filesystem::exists(config_path)) {
                throw Error(ErrorCode::Io, "config file not found: " + config_path);
            }
            json file_cfg;
            try {
                file_cfg = json::parse(io::read_file(config_path));
            } catch (const json::exception& e) {
                throw Error(ErrorCode::Config, config_path + ": " + e.what());
            }
            merged = RunConfig{};
            merged.merge(file_cfg);
            json flag_json = flags.to_json();
            flag_json["threads"] = flags.mc.threads; // not part of the hash
            json overrides = json::object();
            for (const auto& [opt, key] : bound) {
                if (opt->count() > 0) overrides[key] = flag_json.at(key);
            }
            merged.merge(overrides);
        }
        merged.validate();
        if (!merged.input.empty() && merged.preset.empty() && !std::filesystem::exists(merged.input)) {
            throw Error(ErrorCode::Io, "input file not found: " + merged.input);
        }
        if (!merged.model.empty() && !std::filesystem::exists(merged.model)) {
            throw Error(ErrorCode::Io, "model file not found: " + merged.model);
        }

        if (*synth) return cmd_synth(merged);
        if (*rnd) return cmd_rnd(merged);
        if (*calibrate) return cmd_calibrate(merged);
        if (*price) return cmd_price(merged);
        if (*report) return cmd_report(merged);
        if (*bench) return cmd_benchmark(merged);
        return kExitUsage;
    } catch (const StageError& e) {
        std::cerr << "basslv: stage " << e.stage() << " failed: " << e.what() << '\n';
        return e.exit_code();
    } catch (const Error& e) {
        std::cerr << "basslv: config: " << e.what() << '\n';
        return exit_code_for(e.code());
    }
}

} // namespace basslv::cli
