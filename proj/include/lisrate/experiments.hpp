#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "asymptotics.hpp"
#include "baseline_mimo.hpp"
#include "channel.hpp"
#include "core.hpp"
#include "geometry.hpp"
#include "mc_engine.hpp"
#include "rng.hpp"

namespace lisrate {

enum class ScenarioKind { grid_plane, uniform_room, mimo_baseline };
enum class InterferenceMode { los_only, nlos_only, probabilistic };

struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::uniform_room;
    int K = 10;  // grid plane: nearest K lattice devices, 0 keeps all
    std::vector<int> m_grid{100, 400, 900, 1600};
    double L = 0.25;
    double carrier_hz = 3.0e9;
    double snr_db = 3.0;
    double tau = 0.5;
    double d_c = 10.0;
    double d_m = 5.0;
    InterferenceMode mode = InterferenceMode::probabilistic;
    int drops = 10;
    int realizations = 1000;
    std::uint64_t seed = 1;
    std::string log_base = "e";

    int paths = 0;  // NLOS paths per LIS link, 0 means M/2
    double path_loss_exponent = 3.7;
    double min_distance = 1.0;
    double plane_half_extent = 10.0;
    double device_height = 1.0;
    Box room{{-2.0, 2.0}, {-2.0, 2.0}, {0.0, 2.0}};
    int target = 0;
    SumMode sum_mode = SumMode::asymptotic;
    int workers = 1;

    double wavelength() const { return wavelength_from_carrier(carrier_hz); }
};

inline std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::grid_plane: return "grid-plane";
        case ScenarioKind::uniform_room: return "uniform-room";
        case ScenarioKind::mimo_baseline: return "mimo-baseline";
    }
    return "?";
}

inline std::string to_string(InterferenceMode m) {
    switch (m) {
        case InterferenceMode::los_only: return "los-only";
        case InterferenceMode::nlos_only: return "nlos-only";
        case InterferenceMode::probabilistic: return "probabilistic";
    }
    return "?";
}

// ---- config parsing -------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const char* first = v.data();
    const char* last = v.data() + v.size();
    auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc() || res.ptr != last) throw ConfigError("bad value '" + v + "' for " + key);
    return out;
}

inline Interval parse_interval(const std::string& key, const std::string& v) {
    auto c = v.find(':');
    if (c == std::string::npos) throw ConfigError(key + " expects lo:hi");
    return {parse_number<double>(key, trim(v.substr(0, c))), parse_number<double>(key, trim(v.substr(c + 1)))};
}

}  // namespace detail

inline std::vector<int> parse_m_grid(const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = detail::trim(tok);
        if (tok.empty()) continue;
        out.push_back(detail::parse_number<int>("m-grid", tok));
    }
    if (out.empty()) throw ConfigError("m-grid is empty");
    return out;
}

// one key=value setting; keys match the long CLI flag names
inline void apply_setting(ScenarioConfig& c, const std::string& key_in, const std::string& value_in) {
    std::string key = detail::trim(key_in);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
    const std::string v = detail::trim(value_in);
    using detail::parse_number;
    if (key == "scenario") {
        if (v == "grid-plane") c.scenario = ScenarioKind::grid_plane;
        else if (v == "uniform-room") c.scenario = ScenarioKind::uniform_room;
        else if (v == "mimo-baseline") c.scenario = ScenarioKind::mimo_baseline;
        else throw ConfigError("unknown scenario '" + v + "'");
    } else if (key == "mode") {
        if (v == "los-only") c.mode = InterferenceMode::los_only;
        else if (v == "nlos-only") c.mode = InterferenceMode::nlos_only;
        else if (v == "probabilistic") c.mode = InterferenceMode::probabilistic;
        else throw ConfigError("unknown interference mode '" + v + "'");
    } else if (key == "k" || key == "devices") {
        c.K = parse_number<int>(key, v);
    } else if (key == "m-grid") {
        c.m_grid = parse_m_grid(v);
    } else if (key == "half-length" || key == "l") {
        c.L = parse_number<double>(key, v);
    } else if (key == "carrier-frequency") {
        c.carrier_hz = parse_number<double>(key, v);
    } else if (key == "snr-db") {
        c.snr_db = parse_number<double>(key, v);
    } else if (key == "tau") {
        c.tau = parse_number<double>(key, v);
    } else if (key == "d-c") {
        c.d_c = parse_number<double>(key, v);
    } else if (key == "d-m") {
        c.d_m = parse_number<double>(key, v);
    } else if (key == "drops") {
        c.drops = parse_number<int>(key, v);
    } else if (key == "realizations") {
        c.realizations = parse_number<int>(key, v);
    } else if (key == "seed") {
        c.seed = parse_number<std::uint64_t>(key, v);
    } else if (key == "log-base") {
        c.log_base = v;
    } else if (key == "paths") {
        c.paths = parse_number<int>(key, v);
    } else if (key == "path-loss-exponent") {
        c.path_loss_exponent = parse_number<double>(key, v);
    } else if (key == "min-distance") {
        c.min_distance = parse_number<double>(key, v);
    } else if (key == "plane-half-extent") {
        c.plane_half_extent = parse_number<double>(key, v);
    } else if (key == "device-height") {
        c.device_height = parse_number<double>(key, v);
    } else if (key == "room-x") {
        c.room.x = detail::parse_interval(key, v);
    } else if (key == "room-y") {
        c.room.y = detail::parse_interval(key, v);
    } else if (key == "room-z") {
        c.room.z = detail::parse_interval(key, v);
    } else if (key == "target") {
        c.target = parse_number<int>(key, v);
    } else if (key == "sum-mode") {
        if (v == "asymptotic") c.sum_mode = SumMode::asymptotic;
        else if (v == "finite") c.sum_mode = SumMode::finite;
        else throw ConfigError("sum-mode must be asymptotic or finite");
    } else if (key == "workers") {
        c.workers = parse_number<int>(key, v);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

inline void parse_config_text(ScenarioConfig& c, std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(c, line.substr(0, eq), line.substr(eq + 1));
    }
}

inline void load_config_file(ScenarioConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    parse_config_text(c, in);
}

inline double log_base_factor(const std::string& base) {
    if (base == "e") return 1.0;
    if (base == "2") return std::log(2.0);
    if (base == "10") return std::log(10.0);
    throw ConfigError("log-base must be e, 2 or 10");
}

inline void validate_config(const ScenarioConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (c.drops < 1) fail("drops must be at least 1");
    if (c.realizations < 2) fail("realizations must be at least 2");
    if (c.K < 0 || (c.K == 0 && c.scenario != ScenarioKind::grid_plane)) fail("K must be positive");
    if (c.m_grid.empty()) fail("m-grid is empty");
    for (int m : c.m_grid) {
        if (c.scenario == ScenarioKind::mimo_baseline) {
            if (m < 2 || m % 2 != 0) fail("mimo-baseline needs even antenna counts");
        } else if (!is_perfect_square(m)) {
            fail("m-grid entry " + std::to_string(m) + " is not a perfect square");
        }
    }
    if (!(c.L > 0.0)) fail("half-length must be positive");
    if (!(c.carrier_hz > 0.0)) fail("carrier-frequency must be positive");
    if (!(c.tau >= 0.0 && c.tau < 1.0)) fail("tau must lie in [0, 1)");
    if (!(c.d_c > 0.0)) fail("d-c must be positive");
    if (!(c.d_m > 0.0)) fail("d-m must be positive");
    if (c.paths < 0) fail("paths must be nonnegative");
    if (!(c.min_distance > 0.0)) fail("min-distance must be positive");
    if (!(c.device_height > 0.0)) fail("device-height must be positive");
    if (c.scenario == ScenarioKind::grid_plane && c.device_height < c.min_distance)
        fail("device-height is below the minimum distance");
    if (c.scenario != ScenarioKind::grid_plane && c.room.z.hi < c.min_distance)
        fail("room is too low for the minimum distance");
    if (c.target < 0) fail("target must be nonnegative");
    if (c.workers < 1) fail("workers must be at least 1");
    log_base_factor(c.log_base);
}

// ---- channel parameter models ---------------------------------------------

inline double los_probability(double d, double d_c) { return std::max(0.0, (d_c - d) / d_c); }

// LOS-bearing links only; NLOS links carry kappa = 0
inline double rician_factor(double d) { return db_to_linear(13.0 - 0.03 * d); }

// ---- drops ----------------------------------------------------------------

inline std::uint64_t drop_seed(std::uint64_t master, std::uint64_t drop_index) {
    return splitmix64(splitmix64(master) ^ (drop_index * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL));
}

inline std::vector<Device> deploy_devices(const ScenarioConfig& c, std::uint64_t drop_index) {
    if (c.scenario == ScenarioKind::grid_plane) {
        const double e = c.plane_half_extent;
        auto devs = place_devices_grid(c.d_m, {-e, e}, {-e, e}, c.device_height);
        if (c.K > static_cast<int>(devs.size()))
            throw ConfigError("grid holds " + std::to_string(devs.size()) + " devices, fewer than K");
        if (c.K > 0) {
            // keep the K devices nearest to the target; the target itself comes first
            std::stable_sort(devs.begin() + 1, devs.end(), [](const Device& a, const Device& b) {
                double da = a.position.x * a.position.x + a.position.y * a.position.y;
                double db = b.position.x * b.position.x + b.position.y * b.position.y;
                return da < db;
            });
            devs.resize(static_cast<std::size_t>(c.K));
        }
        for (std::size_t i = 0; i < devs.size(); ++i) devs[i].index = static_cast<int>(i);
        return devs;
    }
    return place_devices_uniform(c.K, c.room, drop_seed(c.seed, drop_index), c.min_distance);
}

// transmit SNR that puts the per-antenna LOS SNR at the unit center on target
inline double power_control(const Device& dev, double snr_linear) {
    double b = los_gain(dev, {dev.position.x, dev.position.y, 0.0});
    return snr_linear / (b * b);
}

inline Cell make_lis_cell(const ScenarioConfig& c, const std::vector<Device>& devs, int k, int M,
                          std::uint64_t drop_index) {
    const double lambda = c.wavelength();
    const Device& dk = devs[static_cast<std::size_t>(k)];
    Cell cell;
    cell.k = k;
    cell.grid = build_grid({dk.position.x, dk.position.y}, c.L, M, lambda);
    const AntennaGrid& grid = *cell.grid;
    cell.desired.los = los_channel(dk, grid);
    cell.desired.error_amplitude = cell.desired.los.cwiseAbs();
    const int P = c.paths > 0 ? c.paths : M / 2;

    for (const Device& dj : devs) {
        if (dj.index == k) continue;
        InterferenceLink il;
        il.source = dj.index;
        il.link.h_los = los_channel(dj, grid);
        const double d = distance(dj.position, {dk.position.x, dk.position.y, 0.0});
        bool los = false, nlos_branch = true;
        switch (c.mode) {
            case InterferenceMode::los_only: los = true; nlos_branch = false; break;
            case InterferenceMode::nlos_only: los = false; break;
            case InterferenceMode::probabilistic: {
                auto gen = make_stream(c.seed, StreamTag::los_state,
                                       {drop_index, static_cast<std::uint64_t>(dj.index), static_cast<std::uint64_t>(k)});
                los = std::uniform_real_distribution<double>(0.0, 1.0)(gen) < los_probability(d, c.d_c);
                break;
            }
        }
        il.link.kappa = los ? rician_factor(d) : 0.0;
        if (nlos_branch) {
            auto gen = make_stream(c.seed, StreamTag::path_angles,
                                   {drop_index, static_cast<std::uint64_t>(dj.index), static_cast<std::uint64_t>(k)});
            il.link.R = correlation_factor(dj, grid, draw_path_set(P, gen), c.path_loss_exponent, c.min_distance);
        } else {
            il.link.R = CorrelationFactor::none(M);
            il.link.R.source = dj.index;
        }
        il.link.R.target = k;
        cell.interferers.push_back(std::move(il));
    }
    return cell;
}

inline Drop make_drop(const ScenarioConfig& c, std::uint64_t drop_index, int M) {
    std::vector<Device> devs = deploy_devices(c, drop_index);
    if (c.target >= static_cast<int>(devs.size())) throw ConfigError("target device index out of range");
    const double snr = db_to_linear(c.snr_db);
    if (c.scenario == ScenarioKind::mimo_baseline) {
        MimoParams prm;
        prm.snr_linear = snr;
        prm.tau = c.tau;
        prm.path_loss_exponent = c.path_loss_exponent;
        prm.min_distance = c.min_distance;
        prm.drop_id = drop_index;
        prm.targets = {c.target};
        return build_mimo_drop(devs, M, c.wavelength(), c.seed, prm);
    }
    Drop drop;
    drop.id = drop_index;
    drop.devices = devs;
    drop.tau.assign(devs.size(), c.tau);
    for (const Device& d : devs) drop.rho.push_back(power_control(d, snr));
    drop.cells.resize(devs.size());
    drop.cells[static_cast<std::size_t>(c.target)] = make_lis_cell(c, devs, c.target, M, drop_index);
    return drop;
}

// ---- reports --------------------------------------------------------------

struct RateReport {
    std::string scenario;
    int M = 0;
    int K = 0;
    double L = 0.0;
    double tau = 0.0;
    double mc_mean = 0.0;
    double mc_mean_se = 0.0;
    double mc_var = 0.0;
    double mc_var_se = 0.0;
    double asym_mean = std::numeric_limits<double>::quiet_NaN();
    double asym_var = std::numeric_limits<double>::quiet_NaN();
    RateBound bound;
    std::string log_base = "e";
    std::uint64_t seed = 0;
    double runtime_s = 0.0;
    int clamped_drops = 0;
};

struct ScenarioOptions {
    bool monte_carlo = true;
};

inline std::vector<RateReport> run_scenario(const ScenarioConfig& c, const ScenarioOptions& opt = {}) {
    validate_config(c);
    const double lf = log_base_factor(c.log_base);
    const bool lis = c.scenario != ScenarioKind::mimo_baseline;
    std::vector<RateReport> out;
    for (int M : c.m_grid) {
        auto t0 = std::chrono::steady_clock::now();
        RateReport r;
        r.scenario = to_string(c.scenario);
        r.M = M;
        r.L = c.L;
        r.tau = c.tau;
        r.log_base = c.log_base;
        r.seed = c.seed;
        const double D = static_cast<double>(c.drops);
        double se2 = 0.0, vse2 = 0.0, am = 0.0, av = 0.0, bsum = 0.0;
        bool unbounded = false;
        for (int d = 0; d < c.drops; ++d) {
            Drop drop = make_drop(c, static_cast<std::uint64_t>(d), M);
            r.K = drop.size();
            if (opt.monte_carlo) {
                McOptions mo;
                mo.workers = c.workers;
                McReport mc = run_monte_carlo(drop, c.target, static_cast<std::size_t>(c.realizations), c.seed, mo);
                r.mc_mean += mc.rate.mean / D;
                r.mc_var += mc.rate.variance / D;
                se2 += mc.rate.mean_se * mc.rate.mean_se;
                vse2 += mc.rate.variance_se * mc.rate.variance_se;
            }
            if (lis) {
                Theorem1Result t = theorem1(drop, c.target, c.sum_mode);
                if (!std::isfinite(t.rate.mean) || !std::isfinite(t.rate.variance))
                    throw NumericalError("non-finite closed-form rate moments");
                am += t.rate.mean / D;
                av += t.rate.variance / D;
                r.clamped_drops += t.rate.clamped ? 1 : 0;
            }
            RateBound b = theorem2_bound(drop, c.target);
            if (b.is_unbounded()) unbounded = true;
            else bsum += b.nats / D;
        }
        r.mc_mean_se = std::sqrt(se2) / D;
        r.mc_var_se = std::sqrt(vse2) / D;
        if (lis) {
            r.asym_mean = am;
            r.asym_var = av;
        }
        r.bound = unbounded ? RateBound::unbounded() : RateBound{bsum};
        // convert nats to the requested base
        r.mc_mean /= lf;
        r.mc_mean_se /= lf;
        r.mc_var /= lf * lf;
        r.mc_var_se /= lf * lf;
        r.asym_mean /= lf;
        r.asym_var /= lf * lf;
        if (!r.bound.is_unbounded()) r.bound.nats /= lf;
        r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(r);
    }
    return out;
}

struct LSearchResult {
    double L_star = 0.0;
    std::vector<double> L_grid;
    std::vector<double> rates;  // drop-averaged closed-form mean rate per L
};

// closed-form rate over a grid of unit sizes at the first M of the config
inline LSearchResult optimal_L_search(const ScenarioConfig& c_in, const std::vector<double>& L_grid) {
    if (L_grid.empty()) throw std::invalid_argument("empty L grid");
    if (c_in.scenario == ScenarioKind::mimo_baseline) throw ConfigError("L search needs an LIS scenario");
    ScenarioConfig c = c_in;
    validate_config(c);
    const int M = c.m_grid.front();
    LSearchResult res;
    res.L_grid = L_grid;
    res.rates.assign(L_grid.size(), 0.0);
    const double D = static_cast<double>(c.drops);
    for (std::size_t i = 0; i < L_grid.size(); ++i) {
        c.L = L_grid[i];
        if (!(c.L > 0.0)) throw ConfigError("L grid entries must be positive");
        for (int d = 0; d < c.drops; ++d) {
            Drop drop = make_drop(c, static_cast<std::uint64_t>(d), M);
            res.rates[i] += theorem1(drop, c.target, c.sum_mode).rate.mean / D;
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < L_grid.size(); ++i) {
        double a = res.rates[i], b = res.rates[best];
        if (a > b || (a == b && L_grid[i] < L_grid[best])) best = i;
    }
    res.L_star = L_grid[best];
    return res;
}

// ---- CSV ------------------------------------------------------------------

inline const char* kCsvHeader = "scenario,M,K,L,tau,mc_mean,mc_mean_se,mc_var,mc_var_se,asym_mean,asym_var,bound,log_base,seed";

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string csv_row(const RateReport& r) {
    std::ostringstream os;
    os << r.scenario << ',' << r.M << ',' << r.K << ',' << format_double(r.L) << ',' << format_double(r.tau) << ','
       << format_double(r.mc_mean) << ',' << format_double(r.mc_mean_se) << ',' << format_double(r.mc_var) << ','
       << format_double(r.mc_var_se) << ',' << format_double(r.asym_mean) << ',' << format_double(r.asym_var) << ','
       << (r.bound.is_unbounded() ? std::string("inf") : format_double(r.bound.nats)) << ',' << r.log_base << ','
       << r.seed;
    return os.str();
}

inline void write_csv(std::ostream& os, const std::vector<RateReport>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) os << csv_row(r) << '\n';
}

inline void write_csv_file(const std::string& path, const std::vector<RateReport>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_csv(out, rows);
    out.flush();
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace lisrate
