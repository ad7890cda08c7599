#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lisrate/lisrate.hpp"

namespace {

enum ExitCode { kOk = 0, kCheckFailed = 1, kConfigError = 2, kNumericalError = 3, kIoError = 4 };

// every config key doubles as a long flag
const char* kSettingKeys[] = {
    "scenario", "k",          "m-grid",        "half-length", "carrier-frequency", "snr-db",   "tau",
    "d-c",      "d-m",        "mode",          "drops",       "realizations",      "seed",     "log-base",
    "paths",    "path-loss-exponent",          "min-distance", "plane-half-extent", "device-height",
    "room-x",   "room-y",     "room-z",        "target",      "sum-mode",          "workers",
};

struct ScenarioFlags {
    std::string config_path;
    std::map<std::string, std::string> values;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "flat key=value config file");
        for (const char* key : kSettingKeys) {
            std::string k = key;
            app->add_option("--" + k, values[k], "override '" + k + "'");
        }
    }

    lisrate::ScenarioConfig build() const {
        lisrate::ScenarioConfig c;
        c.workers = lisrate::default_workers();
        if (!config_path.empty()) lisrate::load_config_file(c, config_path);
        for (const auto& [k, v] : values)
            if (!v.empty()) lisrate::apply_setting(c, k, v);
        lisrate::validate_config(c);
        return c;
    }
};

void print_checks(const std::vector<lisrate::validation::CheckResult>& checks, bool& all_ok) {
    for (const auto& r : checks) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
        all_ok = all_ok && r.passed;
    }
    std::cout.flush();
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw lisrate::ConfigError("bad list entry '" + tok + "'");
        }
    }
    if (out.empty()) throw lisrate::ConfigError("empty list");
    return out;
}

int cmd_run(const ScenarioFlags& flags, const std::string& out_path) {
    lisrate::ScenarioConfig c = flags.build();
    auto rows = lisrate::run_scenario(c);
    for (const auto& r : rows) {
        std::fprintf(stderr, "M=%d K=%d mc_mean=%.6g asym_mean=%.6g (%.2fs%s)\n", r.M, r.K, r.mc_mean, r.asym_mean,
                     r.runtime_s, r.clamped_drops ? ", variance clamped" : "");
    }
    if (out_path.empty())
        lisrate::write_csv(std::cout, rows);
    else
        lisrate::write_csv_file(out_path, rows);
    return kOk;
}

int cmd_sweep(const ScenarioFlags& flags, const std::string& out_path, const std::string& l_grid) {
    lisrate::ScenarioConfig c = flags.build();
    auto res = lisrate::optimal_L_search(c, parse_list(l_grid));
    std::ostringstream os;
    os << "L,asym_mean\n";
    for (std::size_t i = 0; i < res.L_grid.size(); ++i)
        os << lisrate::format_double(res.L_grid[i]) << ',' << lisrate::format_double(res.rates[i]) << '\n';
    if (out_path.empty()) {
        std::cout << os.str();
    } else {
        std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
        if (!f) throw lisrate::IoError("cannot open " + out_path + " for writing");
        f << os.str();
        if (!f) throw lisrate::IoError("failed writing " + out_path);
    }
    std::fprintf(stderr, "L* = %g\n", res.L_star);
    return kOk;
}

int cmd_validate(int M, std::size_t n_real, std::size_t n_cov, int clt_m, std::uint64_t seed, int workers) {
    using namespace lisrate::validation;
    bool ok = true;
    print_checks(check_dual_path(1000, seed), ok);
    print_checks(check_lemmas(M, 0.5, n_real, seed, 5, workers), ok);
    print_checks(check_covariance(M, n_cov, seed, 5, workers), ok);
    print_checks(check_clt(clt_m, n_real, seed), ok);
    return ok ? kOk : kCheckFailed;
}

int cmd_selftest() {
    using namespace lisrate;
    std::vector<validation::CheckResult> checks;
    auto add = [&](const std::string& name, bool ok) { checks.push_back({name, ok, ""}); };

    AntennaGrid g = build_grid({0, 0}, 0.25, 4, 0.1);
    add("grid M=4 spacing", std::abs(g.spacing - 0.25) < 1e-15);
    add("grid M=4 corner", std::abs(g.antenna_positions[0].x + 0.125) < 1e-15);
    bool threw = false;
    try {
        build_grid({0, 0}, 0.25, 5, 0.1);
    } catch (const std::invalid_argument&) {
        threw = true;
    }
    add("non-square M rejected", threw);
    add("los gain at d=1", std::abs(los_gain({{0, 0, 1}, 0}, {0, 0, 0}) - 1.0 / std::sqrt(4 * kPi)) < 1e-15);
    CVector d = upa_steering(0.3, -0.7, 64, 0.05, 0.1);
    add("UPA steering unit norm", std::abs(d.norm() - 1.0) < 1e-12);
    add("ULA steering unit norm", std::abs(ula_steering(0.4, 10, 0.05, 0.1).norm() - 1.0) < 1e-12);
    add("LOS probability at d_C/2", std::abs(los_probability(5, 10) - 0.5) < 1e-15);
    add("Rician factor at 100 m", std::abs(rician_factor(100) - 10.0) < 1e-12);
    add("rate of gamma=1", std::abs(rate_sample(1.0) - std::log(2.0)) < 1e-15);
    std::vector<double> two{0.0, 2.0};
    MomentStats m = estimate_moments(two);
    add("moments of {0,2}", m.mean == 1.0 && m.variance == 2.0);
    add("p limit z->0", std::abs(p_k(1e-9, 1.0) - kPi / 2) < 1e-6);
    add("bound unbounded without LOS", [] {
        ScenarioConfig c;
        c.mode = InterferenceMode::nlos_only;
        c.K = 3;
        c.m_grid = {16};
        return theorem2_bound(make_drop(c, 0, 16), 0).is_unbounded();
    }());
    bool ok = true;
    print_checks(checks, ok);
    return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uplink rate laboratory for LIS units: Monte-Carlo and closed-form engines"};
    app.require_subcommand(1);

    ScenarioFlags run_flags, sweep_flags;
    std::string run_out, sweep_out, l_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8";
    auto* run = app.add_subcommand("run", "run a scenario over the M grid and write CSV");
    run_flags.attach(run);
    run->add_option("--out", run_out, "CSV output path (stdout when omitted)");

    auto* sweep = app.add_subcommand("sweep-L", "closed-form rate versus unit half-length L");
    sweep_flags.attach(sweep);
    sweep->add_option("--out", sweep_out, "CSV output path (stdout when omitted)");
    sweep->add_option("--l-grid", l_grid, "comma separated L values");

    int v_m = 400, v_clt_m = 1024, v_workers = lisrate::default_workers();
    std::size_t v_real = 10000, v_cov = 100000;
    std::uint64_t v_seed = 1;
    auto* validate = app.add_subcommand("validate", "lemma-level Monte-Carlo oracle suite");
    validate->add_option("--m", v_m, "antennas for the lemma checks");
    validate->add_option("--realizations", v_real, "realizations for the moment checks");
    validate->add_option("--cov-realizations", v_cov, "realizations for the covariance check");
    validate->add_option("--clt-m", v_clt_m, "antennas for the CLT shape check");
    validate->add_option("--seed", v_seed, "master seed");
    validate->add_option("--workers", v_workers, "worker threads");

    auto* selftest = app.add_subcommand("selftest", "quick invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(run_flags, run_out);
        if (*sweep) return cmd_sweep(sweep_flags, sweep_out, l_grid);
        if (*validate) return cmd_validate(v_m, v_real, v_cov, v_clt_m, v_seed, v_workers);
        if (*selftest) return cmd_selftest();
    } catch (const lisrate::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const lisrate::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    }
    return kOk;
}
