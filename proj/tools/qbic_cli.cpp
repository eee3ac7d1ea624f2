// qbic: simulate paths, fit candidates, run selections and Monte Carlo experiments.
//
// Exit codes: 0 success, 2 config/input error, 3 numerical non-convergence, 4 internal error.
// All randomness flows from --seed (default 0).

#include "qbic/config.hpp"
#include "qbic/io.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace qbic;

namespace {

enum Exit { kOk = 0, kInput = 2, kNonConvergence = 3, kInternal = 4 };

struct Options {
    std::string config;
    std::string data;
    std::string out;
    std::uint64_t seed = 0;
    int workers = 1;
};

/// Output-independent failure of the input: bad file, bad columns.
class InputError : public Error {
  public:
    using Error::Error;
};

PathGrid read_data(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open data file '" + path + "'");
    try {
        return read_path_csv(f);
    } catch (const Error& e) {
        throw InputError("data file '" + path + "': " + e.what());
    }
}

/// Data from --data, or drawn from the configured scenario with --seed.
Observations load_observations(const RunConfig& cfg, const Options& opt) {
    if (!opt.data.empty()) {
        const PathGrid data = read_data(opt.data);
        return observations_from(data, cfg.regression_data(data));
    }
    if (cfg.scenario && cfg.n > 0) return cfg.scenario->generate(cfg.n, opt.seed, cfg.substeps);
    throw InputError("no data: pass --data or configure a scenario with n");
}

fs::path manifest_path(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

class Run {
  public:
    Run(std::string command, const Options& opt) : opt_(opt), start_(std::chrono::steady_clock::now()) {
        manifest_.command = std::move(command);
        manifest_.master_seed = opt.seed;
    }

    void output(const fs::path& p, const std::string& text) {
        write_text(p, text);
        manifest_.outputs.push_back(p.string());
    }

    RunManifest& manifest() { return manifest_; }

    void finish(const fs::path& where) {
        manifest_.timestamp = utc_timestamp();
        manifest_.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_text(where, manifest_.to_json());
    }

  private:
    const Options& opt_;
    std::chrono::steady_clock::time_point start_;
    RunManifest manifest_;
};

void require_out(const Options& opt) {
    if (opt.out.empty()) throw InputError("--out is required");
}

int cmd_simulate(const RunConfig& cfg, const Options& opt) {
    require_out(opt);
    Run run("simulate", opt);
    run.manifest().config_echo = cfg.raw;
    const PathGrid path = cfg.scenario->simulate(cfg.n, opt.seed, cfg.substeps);
    run.output(opt.out, path_to_csv(path));
    run.finish(manifest_path(opt.out));
    return kOk;
}

int cmd_fit(const RunConfig& cfg, const Options& opt) {
    require_out(opt);
    Run run("fit", opt);
    run.manifest().config_echo = cfg.raw;
    const Observations obs = load_observations(cfg, opt);
    OptimizerConfig oc = cfg.optimizer;
    oc.seed = opt.seed;
    int code = kOk;
    FitResult fit;
    try {
        fit = cfg.strategy == FitStrategy::TwoStep ? qmle_two_step(obs, *cfg.model, oc) : qmle_joint(obs, *cfg.model, oc);
    } catch (const NonConvergence& e) {
        std::cerr << "qbic: " << e.what() << "\n";
        fit = e.best_effort();
        run.manifest().status = "non_converged";
        run.manifest().non_convergences = 1;
        code = kNonConvergence;
    }
    run.output(opt.out, fit_json(fit));
    run.finish(manifest_path(opt.out));
    return code;
}

int cmd_select(const RunConfig& cfg, const Options& opt) {
    require_out(opt);
    Run run("select", opt);
    run.manifest().config_echo = cfg.raw;
    const Observations obs = load_observations(cfg, opt);
    OptimizerConfig oc = cfg.optimizer;
    oc.seed = opt.seed;
    SelectionOutcome out;
    if (cfg.strategy == FitStrategy::TwoStep) {
        out = two_step_select(obs, *cfg.decomposed, cfg.criterion, oc);
    } else if (cfg.decomposed) {
        out = joint_select(obs, *cfg.decomposed, cfg.criterion, oc);
    } else {
        out = joint_select(obs, std::span<const CandidateModel>(cfg.family), cfg.criterion, oc);
    }
    long failed = 0;
    for (const auto& r : out.report.rows) failed += r.converged ? 0 : 1;
    run.manifest().non_convergences = failed;
    run.output(opt.out, selection_json(out));
    fs::path csv = opt.out;
    csv.replace_extension(".csv");
    if (csv == fs::path(opt.out)) csv += ".report.csv";
    run.output(csv, report_csv(out.report));
    run.finish(manifest_path(opt.out));
    return kOk;
}

int cmd_experiment(const RunConfig& cfg, const Options& opt) {
    require_out(opt);
    ExperimentConfig ec = *cfg.experiment;
    ec.master_seed = opt.seed;
    ec.workers = opt.workers;
    ec.validate();
    const fs::path dir = opt.out;
    fs::create_directories(dir);
    Run run("experiment", opt);
    run.manifest().config_echo = cfg.raw;
    try {
        const ExperimentResult res = run_experiment(ec, [](const std::string& msg) { std::cerr << msg << "\n"; });
        for (const auto& p : write_experiment_tables(dir, res)) run.manifest().outputs.push_back(p.string());
        const Summary s = summarize(res.freq, res.est);
        run.output(dir / ("summary_" + res.scenario_name + ".txt"), s.text);
        for (long b : res.freq.blowups) run.manifest().blowups += b;
        for (long b : res.freq.non_convergences) run.manifest().non_convergences += b;
        for (const auto& per_sel : res.freq.excluded) {
            for (long e : per_sel) run.manifest().excluded += e;
        }
    } catch (const std::exception& e) {
        run.manifest().partial = true;
        run.manifest().status = std::string("failed: ") + e.what();
        run.finish(dir / "manifest.json");
        throw;
    }
    run.finish(dir / "manifest.json");
    return kOk;
}

int dispatch(const std::string& command, const Options& opt) {
    if (opt.config.empty()) throw ConfigError("--config", "a configuration file is required");
    if (opt.workers < 1) throw ConfigError("--workers", "must be >= 1");
    const RunConfig cfg = load_config(opt.config);
    if (to_string(cfg.kind) != command) {
        throw ConfigError("kind", "config is for '" + to_string(cfg.kind) + "' but the command is '" + command + "'");
    }
    switch (cfg.kind) {
        case CommandKind::Simulate: return cmd_simulate(cfg, opt);
        case CommandKind::Fit: return cmd_fit(cfg, opt);
        case CommandKind::Select: return cmd_select(cfg, opt);
        case CommandKind::Experiment: return cmd_experiment(cfg, opt);
    }
    return kInternal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-likelihood model selection for diffusion and volatility models"};
    app.set_version_flag("--version", std::string(kLibraryVersion));
    app.require_subcommand(1);
    Options opt;
    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "Simulate a scenario path and write it as CSV"},
        {"fit", "Fit one candidate model and write a FitResult JSON"},
        {"select", "Select among candidates and write the outcome JSON and a CSV report"},
        {"experiment", "Run a Monte Carlo selection experiment"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "JSON configuration file")->required();
        sub->add_option("--out", opt.out, "Output file (directory for experiment)");
        sub->add_option("--seed", opt.seed, "Master seed (default 0)");
        if (std::string(name) == "fit" || std::string(name) == "select") {
            sub->add_option("--data", opt.data, "Path CSV (t,x1,...,xd); defaults to simulating the scenario");
        }
        if (std::string(name) == "experiment") sub->add_option("--workers", opt.workers, "Worker threads");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInput;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, opt);
    } catch (const ConfigError& e) {
        std::cerr << "qbic: config error: " << e.what() << "\n";
        return kInput;
    } catch (const InputError& e) {
        std::cerr << "qbic: input error: " << e.what() << "\n";
        return kInput;
    } catch (const SpecificationError& e) {
        std::cerr << "qbic: input error: " << e.what() << "\n";
        return kInput;
    } catch (const SelectionError& e) {
        std::cerr << "qbic: " << e.what() << "\n";
        return kNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "qbic: internal error: " << e.what() << "\n";
        return kInternal;
    }
}
