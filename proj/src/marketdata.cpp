#include "basslv/marketdata.hpp"

#include "basslv/error.hpp"
#include "basslv/math.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <tuple>

namespace basslv::marketdata {

Side side_from_string(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "call" || lower == "c") return Side::Call;
    if (lower == "put" || lower == "p") return Side::Put;
    throw Error(ErrorCode::InvalidInput, "unknown option side '" + std::string(s) + "'");
}

std::string to_string(Side side) { return side == Side::Call ? "call" : "put"; }

double OptionChain::forward(double tau) const { return spot * std::exp(rate * tau); }

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

std::optional<double> parse_number(std::string_view s, std::size_t line_no) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::MalformedRow,
                    "line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

double intrinsic(double S, double K, double r, double tau, Side side) {
    const double df = std::exp(-r * tau);
    return side == Side::Call ? std::max(S - K * df, 0.0) : std::max(K * df - S, 0.0);
}

} // namespace

OptionChain parse_chain(std::string_view text, double spot, double rate) {
    if (!(spot > 0.0) || !std::isfinite(rate)) {
        throw Error(ErrorCode::InvalidInput, "spot must be positive and rate finite");
    }
    OptionChain chain;
    chain.spot = spot;
    chain.rate = rate;

    int col_mat = -1, col_strike = -1, col_side = -1, col_price = -1, col_iv = -1;
    bool have_header = false;
    std::map<std::tuple<double, double, int>, OptionQuote> rows;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        const auto fields = split(line);
        if (!have_header) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                const auto f = fields[i];
                const int idx = static_cast<int>(i);
                if (f == "maturity") col_mat = idx;
                else if (f == "strike") col_strike = idx;
                else if (f == "side") col_side = idx;
                else if (f == "price") col_price = idx;
                else if (f == "iv") col_iv = idx;
            }
            if (col_mat < 0 || col_strike < 0 || col_side < 0 || (col_price < 0 && col_iv < 0)) {
                throw Error(ErrorCode::MalformedRow,
                            "line " + std::to_string(line_no) +
                                ": header must name maturity, strike, side and price or iv");
            }
            have_header = true;
            if (end == text.size()) break;
            continue;
        }
        auto field = [&](int col) -> std::string_view {
            if (col < 0) return {};
            if (static_cast<std::size_t>(col) >= fields.size()) return {};
            return fields[static_cast<std::size_t>(col)];
        };
        const auto mat = parse_number(field(col_mat), line_no);
        const auto strike = parse_number(field(col_strike), line_no);
        if (!mat || !strike || field(col_side).empty()) {
            throw Error(ErrorCode::MalformedRow,
                        "line " + std::to_string(line_no) + ": missing maturity, strike or side");
        }
        OptionQuote q;
        q.maturity = *mat;
        q.strike = *strike;
        try {
            q.side = side_from_string(field(col_side));
        } catch (const Error&) {
            throw Error(ErrorCode::MalformedRow,
                        "line " + std::to_string(line_no) + ": bad side '" +
                            std::string(field(col_side)) + "'");
        }
        q.price = parse_number(field(col_price), line_no);
        q.iv = parse_number(field(col_iv), line_no);
        if (!q.price && !q.iv) {
            throw Error(ErrorCode::MalformedRow,
                        "line " + std::to_string(line_no) + ": need price or iv");
        }
        if (q.maturity <= 0.0 || q.strike <= 0.0 || (q.price && *q.price < 0.0) ||
            (q.iv && *q.iv <= 0.0)) {
            throw Error(ErrorCode::NegativeValue,
                        "line " + std::to_string(line_no) + ": non-positive value");
        }
        if (q.price && !q.iv &&
            *q.price <= intrinsic(spot, q.strike, rate, q.maturity, q.side) + 1e-10) {
            ++chain.dropped_below_intrinsic;
            if (end == text.size()) break;
            continue;
        }
        const auto key = std::make_tuple(q.maturity, q.strike, static_cast<int>(q.side));
        if (!rows.emplace(key, q).second) {
            throw Error(ErrorCode::DuplicateQuote,
                        "line " + std::to_string(line_no) + ": duplicate quote");
        }
        if (end == text.size()) break;
    }
    if (rows.empty()) {
        throw Error(ErrorCode::NoQuotes, "chain contains no usable quotes");
    }
    for (const auto& [key, q] : rows) {
        if (chain.maturities.empty() || chain.maturities.back() != q.maturity) {
            chain.maturities.push_back(q.maturity);
            chain.quotes.emplace_back();
        }
        chain.quotes.back().push_back(q);
    }
    return chain;
}

double bs_price(double S, double K, double r, double tau, double sigma, Side side) {
    if (!(S > 0.0) || !(K > 0.0) || !(tau > 0.0) || !(sigma > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "bs_price needs positive S, K, tau, sigma");
    }
    const double sd = sigma * std::sqrt(tau);
    const double df = std::exp(-r * tau);
    const double d1 = (std::log(S / K) + r * tau) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    if (side == Side::Call) {
        return S * math::norm_cdf(d1) - K * df * math::norm_cdf(d2);
    }
    return K * df * math::norm_cdf(-d2) - S * math::norm_cdf(-d1);
}

double bs_vega(double S, double K, double r, double tau, double sigma) {
    const double sd = sigma * std::sqrt(tau);
    const double d1 = (std::log(S / K) + r * tau) / sd + 0.5 * sd;
    return S * math::norm_pdf(d1) * std::sqrt(tau);
}

double implied_vol(double price, double S, double K, double r, double tau, Side side) {
    if (!(S > 0.0) || !(K > 0.0) || !(tau > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "implied_vol needs positive S, K, tau");
    }
    const double df = std::exp(-r * tau);
    const double lower = intrinsic(S, K, r, tau, side);
    const double upper = side == Side::Call ? S : K * df;
    if (!(price > lower) || !(price < upper)) {
        throw Error(ErrorCode::PriceOutOfBand, "price outside the no-arbitrage band");
    }
    auto f = [&](double s) { return bs_price(S, K, r, tau, s, side) - price; };
    const double lo = 1e-6, hi = 10.0;
    const double flo = f(lo), fhi = f(hi);
    if (flo > 0.0 || fhi < 0.0) {
        throw Error(ErrorCode::NoConvergence, "implied vol outside [1e-6, 10]");
    }
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    std::uintmax_t iters = 200;
    boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 2);
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    if (iters >= 200) {
        throw Error(ErrorCode::NoConvergence, "implied vol iteration cap reached");
    }
    const double fa = std::abs(f(a));
    const double fb = std::abs(f(b));
    return fa <= fb ? a : b;
}

double IvCurve::operator()(double K) const {
    if (strikes.empty()) {
        throw Error(ErrorCode::DomainMismatch, "empty IV curve");
    }
    if (K <= strikes.front()) return ivs.front();
    if (K >= strikes.back()) return ivs.back();
    auto it = std::upper_bound(strikes.begin(), strikes.end(), K);
    const auto i = static_cast<std::size_t>(it - strikes.begin()) - 1;
    const double w = (K - strikes[i]) / (strikes[i + 1] - strikes[i]);
    return (1.0 - w) * ivs[i] + w * ivs[i + 1];
}

bool IvCurve::covers(double lo, double hi) const {
    return !strikes.empty() && strikes.front() <= lo && strikes.back() >= hi;
}

IvCurve blend_put_call(const IvCurve& iv_call, const IvCurve& iv_put, double k_min, double k_max) {
    if (!(k_min < k_max)) {
        throw Error(ErrorCode::DomainMismatch, "blend band needs k_min < k_max");
    }
    if (!iv_call.covers(k_min, k_max) || !iv_put.covers(k_min, k_max)) {
        throw Error(ErrorCode::DomainMismatch, "both curves must cover [k_min, k_max]");
    }
    std::vector<double> ks;
    for (double k : iv_put.strikes) {
        if (k <= k_max) ks.push_back(k);
    }
    for (double k : iv_call.strikes) {
        if (k >= k_min) ks.push_back(k);
    }
    ks.push_back(k_min);
    ks.push_back(k_max);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    IvCurve out;
    for (double k : ks) {
        double v;
        if (k <= k_min) {
            v = iv_put(k);
        } else if (k >= k_max) {
            v = iv_call(k);
        } else {
            const double w = (k_max - k) / (k_max - k_min);
            v = w * iv_put(k) + (1.0 - w) * iv_call(k);
        }
        out.strikes.push_back(k);
        out.ivs.push_back(v);
    }
    return out;
}

OptionChain normalize_chain(const OptionChain& chain) {
    if (!std::isfinite(chain.rate)) {
        throw Error(ErrorCode::InvalidInput, "rate must be finite");
    }
    OptionChain out = chain;
    out.rate = 0.0;
    for (std::size_t i = 0; i < out.quotes.size(); ++i) {
        const double scale = chain.spot / chain.forward(chain.maturities[i]);
        const double grow = std::exp(chain.rate * chain.maturities[i]);
        for (auto& q : out.quotes[i]) {
            q.strike *= scale;
            if (q.price) {
                q.price = normalized_price(*q.price * grow, chain.forward(q.maturity), chain.spot);
            }
        }
    }
    return out;
}

std::vector<std::pair<double, double>> iv_points(const OptionChain& chain, std::size_t index) {
    const double tau = chain.maturities.at(index);
    const double F = chain.forward(tau);
    std::map<double, double> by_strike;
    for (const auto& q : chain.quotes.at(index)) {
        const bool otm = (q.side == Side::Call) == (q.strike >= F);
        if (by_strike.count(q.strike) && !otm) continue;
        double iv;
        if (q.iv) {
            iv = *q.iv;
        } else {
            iv = implied_vol(*q.price, chain.spot, q.strike, chain.rate, tau, q.side);
        }
        by_strike[q.strike] = iv;
    }
    return {by_strike.begin(), by_strike.end()};
}

} // namespace basslv::marketdata
