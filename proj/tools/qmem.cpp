// qmem: scenario runner for the atomic-ensemble quantum-memory simulator.
//
// Subcommands map to the workflows the toolkit supports: generic
// simulate/analyze/oracle-check/calibrate plus one figure-style sweep per
// headline result (Stokes flux, retrieval shaping, storage decay, conditional
// statistics). All outputs are written atomically and every run echoes the
// fully resolved configuration to stderr as JSON.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmem/calibrate.hpp"
#include "qmem/config.hpp"
#include "qmem/io.hpp"
#include "qmem/oracle.hpp"
#include "qmem/retrieval.hpp"
#include "qmem/sampler.hpp"
#include "qmem/stats.hpp"
#include "qmem/write.hpp"

namespace {

using namespace qmem;

struct CommonOpts {
    std::string config_path;
    std::uint64_t trials = 0;
    std::int64_t seed = -1;
    int workers = 0;
    std::string out;
};

ExperimentConfig resolve_config(const CommonOpts& c) {
    ExperimentConfig cfg =
        c.config_path.empty() ? ExperimentConfig{} : load_config_file(c.config_path);
    if (c.seed >= 0) cfg.rng_seed = static_cast<std::uint64_t>(c.seed);
    return cfg;
}

void echo_config(const ExperimentConfig& cfg) {
    std::fputs(config_to_json(cfg).c_str(), stderr);
}

std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

/// "a,b,c" -> doubles
std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ValidationError({"empty list: " + text});
    return out;
}

/// inserts a suffix before the extension: out.csv + "_k0.4" -> out_k0.4.csv
std::string suffixed(const std::string& path, const std::string& suffix) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

std::string pulse_csv(const PulseProfile& p) {
    std::ostringstream out;
    out << "t_us,flux_per_us\n";
    for (std::size_t i = 0; i < p.flux.size(); ++i)
        out << format_double(p.t0 + (static_cast<double>(i) + 0.5) * p.dt) << ','
            << format_double(p.flux[i]) << '\n';
    return out.str();
}

/// single_atom_rate that stores n_spin excitations across all modes
double rate_for_total_spin(const ExperimentConfig& cfg, double n_spin) {
    const double per_mode = n_spin / cfg.mode_count;
    return std::log1p(per_mode) / (cfg.write_duration * cfg.optical_depth);
}

int cmd_simulate(const CommonOpts& c, bool debug_latent) {
    ExperimentConfig cfg = resolve_config(c);
    echo_config(cfg);
    const ValidatedConfig v = validate(cfg);
    TrialBatch batch = run_batch(v, c.trials, c.workers);
    atomic_write(c.out, batch_to_csv(batch, debug_latent));
    std::fprintf(stderr, "wrote %zu trials to %s\n", batch.records.size(),
                 c.out.c_str());
    return 0;
}

int cmd_analyze(const std::string& counts_path, const CommonOpts& c) {
    std::optional<ExperimentConfig> cfg;
    if (!c.config_path.empty()) {
        cfg = load_config_file(c.config_path);
        echo_config(*cfg);
        validate(*cfg);
    }
    const std::vector<CountRecord> records =
        records_from_csv(read_file(counts_path));
    const StatsSummary summary = analyze(records, cfg);
    atomic_write(c.out, summary_to_json(summary));
    std::fprintf(stderr, "analyzed %zu trials -> %s\n", records.size(),
                 c.out.c_str());
    return 0;
}

int cmd_figure2a(const CommonOpts& c, const std::string& rates_text) {
    ExperimentConfig cfg = resolve_config(c);
    echo_config(cfg);
    for (double rate : parse_list(rates_text)) {
        ExperimentConfig swept = cfg;
        swept.single_atom_rate = rate;
        const PulseProfile p = stokes_flux(validate(swept));
        const std::string path = suffixed(c.out, "_r" + format_double(rate));
        atomic_write(path, pulse_csv(p));
        std::fprintf(stderr, "rate %g -> %s (total %g photons)\n", rate,
                     path.c_str(), p.total());
    }
    return 0;
}

int cmd_figure2b(const CommonOpts& c, const std::string& couplings_text,
                 double n_spin) {
    ExperimentConfig cfg = resolve_config(c);
    cfg.single_atom_rate = rate_for_total_spin(cfg, n_spin);
    echo_config(cfg);
    const ValidatedConfig v = validate(cfg);
    const SpinWaveProfile prof = spin_profile(v);
    for (double k : parse_list(couplings_text)) {
        const RetrievalResult r =
            retrieve_finite_depth(prof, v, CouplingSchedule::constant(k));
        const std::string path = suffixed(c.out, "_k" + format_double(k));
        atomic_write(path, pulse_csv(r.antistokes_flux));
        std::fprintf(stderr,
                     "coupling %g -> %s (efficiency %.4f, fwhm %.4f us)\n", k,
                     path.c_str(), r.efficiency, r.fwhm);
    }
    return 0;
}

int cmd_figure2c(const CommonOpts& c, const std::string& couplings_text,
                 double n_spin) {
    ExperimentConfig cfg = resolve_config(c);
    cfg.single_atom_rate = rate_for_total_spin(cfg, n_spin);
    echo_config(cfg);
    const ValidatedConfig v = validate(cfg);
    const SpinWaveProfile prof = spin_profile(v);
    std::ostringstream out;
    out << "coupling,fwhm_us,total_photons\n";
    for (double k : parse_list(couplings_text)) {
        const RetrievalResult r =
            retrieve_finite_depth(prof, v, CouplingSchedule::constant(k));
        out << format_double(k) << ',' << format_double(r.fwhm) << ','
            << format_double(r.antistokes_flux.total()) << '\n';
    }
    atomic_write(c.out, out.str());
    return 0;
}

int cmd_figure3(const CommonOpts& c, const std::string& taus_text) {
    ExperimentConfig cfg = resolve_config(c);
    echo_config(cfg);
    const ValidatedConfig v = validate(cfg);
    TrialModel model = build_trial_model(v);
    std::ostringstream out;
    out << "tau_d_us,V,V_err,mean_as\n";
    const std::vector<double> taus = parse_list(taus_text);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        model.storage_survival = std::exp(-cfg.decoherence_rate * taus[i]);
        const TrialBatch batch = run_batch(
            model, c.trials, c.workers, cfg.rng_seed + 1000003ull * i);
        const Estimate vn = normalized_variance(batch.records);
        double mean_as = 0.0;
        for (const CountRecord& r : batch.records)
            mean_as += r.antistokes_total();
        mean_as /= static_cast<double>(batch.records.size());
        out << format_double(taus[i]) << ',' << format_double(vn.value) << ','
            << format_double(vn.stderr) << ',' << format_double(mean_as) << '\n';
    }
    atomic_write(c.out, out.str());
    return 0;
}

int cmd_figure4(const CommonOpts& c) {
    ExperimentConfig cfg = resolve_config(c);
    echo_config(cfg);
    const ValidatedConfig v = validate(cfg);
    const TrialBatch batch = run_batch(v, c.trials, c.workers);
    std::ostringstream out;
    out << "n_s,g2,g2_err,mean_as,Q\n";
    for (int ns = 0; ns <= 4; ++ns) {
        Estimate g2, mean, q;
        try {
            g2 = conditional_g2(batch.records, ns);
            mean = conditional_mean(batch.records, ns);
            q = mandel_q(batch.records, ns);
        } catch (const ValidationError&) {
            continue;  // empty subsample
        }
        out << ns << ',' << format_double(g2.value) << ','
            << format_double(g2.stderr) << ',' << format_double(mean.value)
            << ',' << format_double(q.value) << '\n';
    }
    atomic_write(c.out, out.str());
    const Estimate slope = conditional_mean_slope(batch.records);
    std::fprintf(stderr, "conditional mean slope: %.5f +- %.5f\n", slope.value,
                 slope.stderr);
    return 0;
}

int cmd_oracle_check(const CommonOpts& c, int n_max) {
    ExperimentConfig cfg = resolve_config(c);
    echo_config(cfg);
    const ValidatedConfig v = validate(cfg);
    const TrialModel model = build_trial_model(v);
    const TrialBatch batch = run_batch(model, c.trials, c.workers, cfg.rng_seed);
    const OracleCheck check = oracle_check(model, batch.records, n_max);
    std::printf("tv_distance %.6f\n", check.tv);
    for (const auto& [name, z] : check.z_scores)
        std::printf("z %-12s %+.3f\n", name.c_str(), z);
    if (!check.pass()) {
        std::fprintf(stderr, "oracle check FAILED\n");
        return 2;
    }
    std::fprintf(stderr, "oracle check passed\n");
    return 0;
}

int cmd_calibrate(const CommonOpts& c, const std::string& targets_text,
                  double efficiency_target, bool keep_coupling) {
    ExperimentConfig cfg = resolve_config(c);
    CalibrationTargets targets;
    if (!targets_text.empty()) {
        std::stringstream ss(targets_text);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw ValidationError({"bad target (want key=value): " + tok});
            const std::string key = tok.substr(0, eq);
            const double val = std::stod(tok.substr(eq + 1));
            if (key == "ns") targets.mean_s = val;
            else if (key == "nas") targets.mean_as = val;
            else if (key == "V") targets.v_norm = val;
            else if (key == "zeta") targets.zeta = val;
            else throw ValidationError({"unknown calibration target: " + key});
        }
    }
    ValidatedConfig v = validate(cfg);
    if (!keep_coupling) {
        cfg.retrieve_coupling = calibrate_coupling(v, efficiency_target);
        v = validate(cfg);
        std::fprintf(stderr, "coupling -> %.6f for efficiency %.3f\n",
                     cfg.retrieve_coupling, efficiency_target);
    }
    const SpinWaveProfile prof = spin_profile(v);
    const double eps = retrieve_finite_depth(prof, v).efficiency;
    const CalibrationOutcome outcome = calibrate(v, targets, eps);
    echo_config(outcome.config);
    atomic_write(c.out, config_to_json(outcome.config));
    const ForwardObservables f = predict_observables(outcome.config, eps);
    std::fprintf(stderr,
                 "calibrated (residual %.3g, %d evals): ns=%.4f nas=%.4f "
                 "V=%.4f zeta=%.4f, retrieval efficiency %.4f\n",
                 outcome.residual, outcome.evaluations, f.mean_s, f.mean_as,
                 f.v_norm, f.zeta, eps);
    return outcome.residual < 1e-6 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"atomic-ensemble quantum memory: simulation and statistics"};
    app.require_subcommand(1);

    CommonOpts c;
    bool debug_latent = false;
    std::string counts_path, rates = "0.0025,0.005,0.01,0.02";
    std::string couplings = "0.1,0.2,0.4,0.8,1.6,3.2";
    std::string taus = "0,1,2,4,6", targets_text;
    double n_spin = 3.0, efficiency_target = 0.30;
    bool keep_coupling = false;
    int n_max = 30;

    auto add_common = [&](CLI::App* sub, std::uint64_t default_trials) {
        sub->add_option("--config", c.config_path, "config JSON path");
        sub->add_option("--trials", c.trials, "number of trials")
            ->default_val(default_trials);
        sub->add_option("--seed", c.seed, "rng seed override (>= 0)");
        sub->add_option("--workers", c.workers, "worker threads (0 = all)");
        return sub;
    };

    auto* simulate = add_common(app.add_subcommand("simulate",
        "sample trials to counts.csv"), 100000);
    simulate->add_option("--out", c.out, "output CSV")->default_val("counts.csv");
    simulate->add_flag("--debug-latent", debug_latent,
                       "include latent true photon numbers");

    auto* analyze_cmd = app.add_subcommand("analyze", "estimators from counts.csv");
    analyze_cmd->add_option("counts", counts_path, "counts CSV")->required();
    analyze_cmd->add_option("--config", c.config_path,
                            "config JSON (enables zeta)");
    analyze_cmd->add_option("--out", c.out, "output JSON")->default_val("stats.json");

    auto* f2a = app.add_subcommand("figure2a", "Stokes flux vs time sweep");
    f2a->add_option("--config", c.config_path, "config JSON path");
    f2a->add_option("--rates", rates, "single_atom_rate sweep list");
    f2a->add_option("--out", c.out, "output CSV base")->default_val("figure2a.csv");

    auto* f2b = app.add_subcommand("figure2b", "anti-Stokes pulse shapes");
    f2b->add_option("--config", c.config_path, "config JSON path");
    f2b->add_option("--couplings", couplings, "retrieve coupling sweep");
    f2b->add_option("--nspin", n_spin, "stored excitations")->default_val(3.0);
    f2b->add_option("--out", c.out, "output CSV base")->default_val("figure2b.csv");

    auto* f2c = app.add_subcommand("figure2c", "pulse width and total vs coupling");
    f2c->add_option("--config", c.config_path, "config JSON path");
    f2c->add_option("--couplings", couplings, "retrieve coupling sweep");
    f2c->add_option("--nspin", n_spin, "stored excitations")->default_val(3.0);
    f2c->add_option("--out", c.out, "output CSV")->default_val("figure2c.csv");

    auto* f3 = add_common(app.add_subcommand("figure3",
        "normalized variance and retrieval decay vs delay"), 200000);
    f3->add_option("--taus", taus, "delay list, us");
    f3->add_option("--out", c.out, "output CSV")->default_val("figure3.csv");

    auto* f4 = add_common(app.add_subcommand("figure4",
        "conditional statistics vs detected Stokes number"), 1000000);
    f4->add_option("--out", c.out, "output CSV")->default_val("figure4.csv");

    auto* oc = add_common(app.add_subcommand("oracle-check",
        "Monte Carlo vs exact distribution"), 1000000);
    oc->add_option("--nmax", n_max, "oracle truncation")->default_val(30);

    auto* cal = app.add_subcommand("calibrate", "fit instrument parameters");
    cal->add_option("--config", c.config_path, "base config JSON");
    cal->add_option("--targets", targets_text,
                    "comma list: ns=..,nas=..,V=..,zeta=..");
    cal->add_option("--efficiency-target", efficiency_target,
                    "retrieval efficiency for the coupling fit");
    cal->add_flag("--keep-coupling", keep_coupling,
                  "skip the retrieve_coupling fit");
    cal->add_option("--out", c.out, "output config JSON")
        ->default_val("calibrated.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(c, debug_latent);
        if (analyze_cmd->parsed()) return cmd_analyze(counts_path, c);
        if (f2a->parsed()) return cmd_figure2a(c, rates);
        if (f2b->parsed()) return cmd_figure2b(c, couplings, n_spin);
        if (f2c->parsed()) return cmd_figure2c(c, couplings, n_spin);
        if (f3->parsed()) return cmd_figure3(c, taus);
        if (f4->parsed()) return cmd_figure4(c);
        if (oc->parsed()) return cmd_oracle_check(c, n_max);
        if (cal->parsed()) return cmd_calibrate(c, targets_text,
                                                efficiency_target, keep_coupling);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return 2;
    }
    return 0;
}
