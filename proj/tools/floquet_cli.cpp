// floquet: Floquet multipliers, Riccati certificates and seasonal cholera DFE
// stability from JSON configs. Exit codes: 0 ok, 2 config error, 3 numeric failure.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "floquet/app.hpp"

namespace fa = floquet::app;

namespace {

int emit(const fa::CommandResult& r, const std::optional<std::string>& report_path) {
    if (!r.error.empty()) std::cerr << r.error << (r.error.back() == '\n' ? "" : "\n");
    if (!r.report.is_null() && !report_path) std::cout << fa::serialize(r.report);
    return r.exit_code;
}

int write_report(const fa::CommandResult& r, const std::optional<std::string>& path) {
    if (path && !r.report.is_null()) {
        std::ofstream f(*path, std::ios::binary);
        if (!f) {
            std::cerr << "cannot write " << *path << "\n";
            return 3;
        }
        f << fa::serialize(r.report);
    }
    return emit(r, path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Floquet multipliers via monodromy, Riccati certificates and explicit formulas"};
    app.set_version_flag("--version", std::string(fa::tool_name) + " " + fa::tool_version);
    app.require_subcommand(1);

    fa::RunOptions opts;
    std::string config;
    std::vector<std::string> sweep;
    std::optional<std::string> report;
    std::optional<std::string> csv;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--report", report, "write the JSON report here (default: stdout)");
        sub->add_option("--csv", csv, "write the trajectory CSV here");
        sub->add_flag("--gnuplot-script", opts.gnuplot_script, "also write a gnuplot script next to the CSV");
        sub->add_flag("--reproducible", opts.reproducible, "omit timestamp and wall-clock so reports are byte-identical");
    };

    auto* analyze = app.add_subcommand("analyze", "run the analysis described by a config file");
    auto* cfg_opt = analyze->add_option("--config", config, "config JSON");
    auto* sweep_opt = analyze->add_option("--sweep", sweep, "several config files, run concurrently");
    cfg_opt->excludes(sweep_opt);
    analyze->add_flag("--simulate", opts.simulate, "cholera configs: also run the nonlinear simulation");
    common(analyze);

    auto* cholera = app.add_subcommand("cholera", "DFE stability of the seasonal cholera model");
    cholera->add_option("--config", config, "cholera config JSON")->required();
    cholera->add_flag("--simulate", opts.simulate, "simulate from a 1% perturbation of the DFE");
    common(cholera);

    fa::Example41Params ex;
    std::optional<std::string> emit_path;
    auto* ex41 = app.add_subcommand("example41", "build (and by default run) the example41 planar family");
    ex41->add_option("-A", ex.A, "A")->capture_default_str();
    ex41->add_option("-B", ex.B, "B")->capture_default_str();
    ex41->add_option("--alpha", ex.alpha, "alpha")->capture_default_str();
    ex41->add_option("--beta", ex.beta, "beta (> 1)")->capture_default_str();
    ex41->add_option("--m", ex.m, "m(t) expression")->capture_default_str();
    ex41->add_option("--emit", emit_path, "only write the generated config to this path ('-' for stdout)");
    common(ex41);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage errors are configuration errors
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (csv) opts.csv_path = csv;

    if (*analyze && !sweep.empty()) {
        if (csv) {
            std::cerr << "--csv does not apply to --sweep; use output.trajectory in each config\n";
            return 2;
        }
        std::vector<std::filesystem::path> paths(sweep.begin(), sweep.end());
        return write_report(fa::run_sweep(paths, opts), report);
    }
    if (*analyze || *cholera) {
        if (config.empty()) {
            std::cerr << "--config or --sweep is required\n";
            return 2;
        }
        if (*cholera) {
            try {
                if (fa::load_config(config).kind != fa::Kind::cholera) {
                    std::cerr << "config error: the cholera subcommand needs kind \"cholera\"\n";
                    return 2;
                }
            } catch (const fa::ConfigError& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return 2;
            }
        }
        return emit(fa::run_config_file(config, opts, report), report);
    }

    // example41
    fa::AnalysisConfig cfg;
    try {
        cfg = fa::emit_example41(ex.A, ex.B, ex.alpha, ex.beta, ex.m);
    } catch (const fa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (emit_path) {
        const std::string text = fa::serialize(cfg.source);
        if (*emit_path == "-") {
            std::cout << text;
        } else {
            std::ofstream(*emit_path, std::ios::binary) << text;
        }
        return 0;
    }
    fa::CommandResult r;
    try {
        fa::RunOutcome out = fa::run_analysis(cfg, opts);
        r.report = std::move(out.report);
        if (opts.csv_path && !out.rows.empty()) {
            fa::write_csv(*opts.csv_path, out.columns, out.rows);
            if (opts.gnuplot_script) fa::write_gnuplot_script(*opts.csv_path, out.columns);
        }
    } catch (const std::exception& e) {
        r.exit_code = 3;
        r.error = std::string("numeric failure: ") + e.what();
    }
    return write_report(r, report);
}
