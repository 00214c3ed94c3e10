#pragma once

// Command line front end: one subcommand per experiment, each writing a JSON
// report and CSV tables into the output directory.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "hillkdv/actions.hpp"
#include "hillkdv/analysis.hpp"
#include "hillkdv/discriminant.hpp"
#include "hillkdv/errors.hpp"
#include "hillkdv/hill_spectrum.hpp"
#include "hillkdv/io.hpp"
#include "hillkdv/reduction.hpp"

namespace hillkdv {

enum ExitCode : int { ExitOk = 0, ExitValidation = 2, ExitNumerical = 3 };

struct CliRun {
    ExperimentConfig cfg;
    std::filesystem::path out;
    json report;
};

namespace detail {

inline json config_echo(const ExperimentConfig& cfg, const FourierPotential& pot) {
    json w = json::array();
    for (const auto& x : cfg.weights) w.push_back({{"s", x.s}, {"p", x.p}});
    return json{{"potential", potential_to_json(pot)},
                {"galerkin_n", cfg.galerkin_n},
                {"product_m", cfg.product_m},
                {"n_cut", cfg.n_cut},
                {"ode_steps", cfg.ode_steps},
                {"contour_nodes", cfg.contour_nodes},
                {"residual_tol", cfg.residual_tol},
                {"weights", w},
                {"ladder", cfg.ladder},
                {"probe_mode", cfg.probe_mode}};
}

inline DiscriminantModel model_for(const ExperimentConfig& cfg, const FourierPotential& pot) {
    if (!cfg.spectra_file.empty()) {
        return build_model(pot, load_spectra(cfg.spectra_file), cfg.product_m, cfg.ode_steps, cfg.threads);
    }
    return build_model(pot, cfg.galerkin(), cfg.product_m, cfg.ode_steps, cfg.threads);
}

inline HamiltonianReport run_hamiltonian(const ExperimentConfig& cfg, const FourierPotential& pot,
                                         const DiscriminantModel& dm) {
    HamiltonianOptions opt;
    opt.threads = cfg.threads;
    opt.nodes = cfg.contour_nodes;
    opt.gap_forms = pot.real();
    return hamiltonian_report(pot, dm, cfg.effective_n_cut(dm.spectra().n_max), opt);
}

inline void cmd_spectrum(CliRun& run) {
    const FourierPotential pot = run.cfg.potential.build();
    const DiscriminantModel dm = build_model(pot, run.cfg.galerkin(), run.cfg.product_m, run.cfg.ode_steps,
                                             run.cfg.threads);
    const HillSpectra& sp = dm.spectra();
    run.report["config"] = config_echo(run.cfg, pot);
    run.report["spectra"] = spectra_to_json(sp);
    run.report["product_cutoff"] = dm.cutoff();
    write_text(run.out / "spectra.csv", spectra_csv(sp));
}

inline void cmd_actions(CliRun& run) {
    const FourierPotential pot = run.cfg.potential.build();
    const DiscriminantModel dm = model_for(run.cfg, pot);
    const HillSpectra& sp = dm.spectra();
    const HamiltonianReport rep = run_hamiltonian(run.cfg, pot, dm);
    json gaps = json::array();
    for (const auto& g : rep.gaps) gaps.push_back(gap_to_json(g));
    run.report["config"] = config_echo(run.cfg, pot);
    run.report["I"] = to_json(rep.I);
    run.report["R"] = to_json(rep.R);
    run.report["gaps"] = gaps;
    if (pot.real()) {
        json rows = json::array();
        for (const auto& b : birkhoff_magnitudes(rep, sp)) {
            rows.push_back({{"n", b.n}, {"magnitude", b.magnitude}, {"ratio", b.ratio}});
        }
        run.report["birkhoff"] = rows;
    }
    write_text(run.out / "actions.csv", actions_csv(rep, sp));
    write_text(run.out / "spectra.csv", spectra_csv(sp));
}

inline void cmd_hamiltonian(CliRun& run) {
    const FourierPotential pot = run.cfg.potential.build();
    const DiscriminantModel dm = model_for(run.cfg, pot);
    const HamiltonianReport rep = run_hamiltonian(run.cfg, pot, dm);
    run.report["config"] = config_echo(run.cfg, pot);
    run.report["hamiltonian"] = hamiltonian_to_json(rep);
    run.report["residual"] = rep.residual;
    if (pot.real() && !pot.zero()) run.report["f4_fit"] = f4_to_json(f4_asymptotics(dm, default_f4_samples(dm), run.cfg.threads));
    write_text(run.out / "actions.csv", actions_csv(rep, dm.spectra()));
}

inline void cmd_reduce(CliRun& run) {
    const FourierPotential pot = run.cfg.potential.build();
    const HillSpectra sp = hill_spectra(pot, run.cfg.galerkin());
    const int top = std::min(run.cfg.reduce_modes, sp.n_max);
    struct Row {
        ReductionBlock blk;
        RootPair roots;
        double bound_rhs = 0.0;
    };
    std::vector<Row> rows(top);
    parallel_for(top, run.cfg.threads, [&](int i) {
        const int n = i + 1;
        const int window = default_window(pot, n);
        Row& r = rows[i];
        r.roots = locate_roots(pot, n, window, sp.gap(n));
        r.blk = reduction_block(pot, n, 0.5 * (r.roots.xi1 + r.roots.xi2), window);
        r.bound_rhs = std::sqrt(6.0) * xi_bound_sample_max(pot, n, window, r.roots.radius);
    });
    CsvTable t({"n", "a_n_re", "a_n_im", "b_n_re", "b_n_im", "b_minus_n_re", "b_minus_n_im", "xi1_re", "xi1_im",
                "xi2_re", "xi2_im", "lambda_minus_re", "lambda_minus_im", "lambda_plus_re", "lambda_plus_im",
                "bound_rhs"});
    json jr = json::array();
    for (int n = 1; n <= top; ++n) {
        const Row& r = rows[n - 1];
        t.row().add(n).add(r.blk.a_n).add(r.blk.b_plus).add(r.blk.b_minus).add(r.roots.xi1).add(r.roots.xi2).add(
            sp.minus(n)).add(sp.plus(n)).add(r.bound_rhs);
        const double err = std::max(std::abs(r.roots.xi1 - sp.minus(n)), std::abs(r.roots.xi2 - sp.plus(n)));
        jr.push_back({{"n", n},
                      {"winding", r.roots.winding},
                      {"disc_radius", r.roots.radius},
                      {"root_error", err},
                      {"gamma_abs", std::abs(sp.gap(n))},
                      {"bound_rhs", r.bound_rhs},
                      {"bound_holds", std::abs(sp.gap(n)) <= r.bound_rhs}});
    }
    json thr = json::array();
    for (const auto& w : run.cfg.weights) {
        thr.push_back({{"s", w.s}, {"p", w.p}, {"threshold", contraction_threshold(pot, w, top)}});
    }
    run.report["config"] = config_echo(run.cfg, pot);
    run.report["rows"] = jr;
    run.report["contraction_threshold"] = thr;
    write_text(run.out / "reduction.csv", t.str());
}

inline void cmd_decay(CliRun& run) {
    const FourierPotential pot = run.cfg.potential.build();
    const HillSpectra sp = hill_spectra(pot, run.cfg.galerkin());
    const DecayReport rep = decay_check(pot, sp, run.cfg.weights);
    run.report["config"] = config_echo(run.cfg, pot);
    run.report["decay"] = decay_to_json(rep);
    write_text(run.out / "decay.csv", decay_csv(rep));
}

inline void cmd_concavity(CliRun& run) {
    const FourierPotential pot = run.cfg.potential.build();
    const ConcavityReport rep = concavity_probe(run.cfg, true);
    run.report["config"] = config_echo(run.cfg, pot);
    run.report["concavity"] = concavity_to_json(rep);
    if (pot.real() && run.cfg.frequency_modes > 0) run.report["frequencies"] = frequency_to_json(frequency_check(run.cfg));
    write_text(run.out / "ladder.csv", ladder_csv(rep));
}

} // namespace detail

/// Parses argv, runs one subcommand and maps failures to exit codes:
/// 2 for invalid input, 3 for numerical failures.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Spectral invariants of Hill operators and KdV actions", "hillkdv"};
    app.require_subcommand(1);
    std::string config, outdir = ".";
    int threads = 0;
    std::optional<std::uint64_t> seed;

    const std::map<std::string, std::pair<std::string, std::function<void(CliRun&)>>> commands{
        {"spectrum", {"periodic and Dirichlet spectra", detail::cmd_spectrum}},
        {"actions", {"action variables I_n and functionals R_n", detail::cmd_actions}},
        {"hamiltonian", {"spectral against direct Hamiltonian", detail::cmd_hamiltonian}},
        {"reduce", {"Lyapunov-Schmidt reduction and root location", detail::cmd_reduce}},
        {"decay", {"gap and Dirichlet decay checks", detail::cmd_decay}},
        {"concavity", {"concavity probe of H* near I = 0", detail::cmd_concavity}},
    };
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", config, "config file (.json or .toml)")->required();
        sub->add_option("--out", outdir, "output directory");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "seed for a random potential");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitOk : ExitValidation;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        CliRun run;
        json raw = load_structured(config);
        if (seed) {
            json& target = raw.contains("potential") ? raw["potential"] : raw;
            if (!target.contains("random")) throw Error(ErrorKind::InvalidConfig, "--seed needs a random potential");
            target["random"]["seed"] = *seed;
        }
        run.cfg = parse_config(raw, std::filesystem::path(config).parent_path());
        if (threads > 0) run.cfg.threads = threads;
        run.out = outdir;
        std::filesystem::create_directories(run.out);
        run.report["command"] = name;
        commands.at(name).second(run);
        write_text(run.out / "report.json", run.report.dump(2) + "\n");
        out << name << ": wrote " << (run.out / "report.json").string() << "\n";
        return ExitOk;
    } catch (const Error& e) {
        err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return e.validation() ? ExitValidation : ExitNumerical;
    } catch (const json::exception& e) {
        err << "error [InvalidConfig]: " << e.what() << "\n";
        return ExitValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error [InvalidConfig]: " << e.what() << "\n";
        return ExitValidation;
    }
}

} // namespace hillkdv
