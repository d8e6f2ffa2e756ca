// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <iomanip>
#include <iostream>
#include <optional>

#include "reneg/error.hpp"
#include "reneg/harness/experiments.hpp"

namespace reneg::cli {
namespace {

using harness::Workspace;

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    std::string quoted;
    for (char c : s) {
        if (c == '"' || c == '\\') quoted += '\\';
        quoted += c;
    }
    return quoted;
}

void report_error(std::ostream& err, const char* kind, const std::string& field, const std::string& message) {
    err << "reneg: error kind=" << kind;
    if (!field.empty()) err << " field=" << field;
    err << " message=\"" << one_line(message) << "\"\n";
}

void print_rows(std::ostream& out, const std::vector<harness::NamedEval>& rows) {
    for (const auto& r : rows) {
        out << std::left << std::setw(12) << r.name << " mean_reward=" << r.report.overall_mean << '\n';
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Negative-embedding experiments on a synthetic conditional diffusion world.", "reneg"};
    app.require_subcommand(1);
    app.set_version_flag("--version", harness::kToolVersion);

    std::string config_path, out_dir = "out", solver;
    std::optional<std::uint64_t> seed;
    bool compat = false;
    app.add_option("--config", config_path, "INI configuration file (defaults to the reference configuration)");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", seed, "Override experiment.master_seed");
    app.add_flag("--compat-paper-alg1", compat, "Per-sample tuning starts from a best reward of 0");
    app.add_option("--solver", solver, "Evaluation solver")->check(CLI::IsMember({"ddim", "ddpm"}));

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"gen-world", "Generate the synthetic world and reward models"},
        {"pretrain", "Pretrain the base diffusion model"},
        {"train-neg", "Train the global negative embedding"},
        {"tune-per-sample", "Tune one negative embedding per prompt and seed"},
        {"eval", "Compare null, handcrafted, global and per-sample negatives"},
        {"efficiency", "Parameter-efficiency probe of the sampling map"},
        {"x0-similarity", "Similarity of early x0 predictions to final samples"},
        {"transfer", "Evaluate the learned negative on a second model"},
        {"report", "Aggregate reports in the output directory"},
        {"schema", "Print the configuration schema"},
    };
    for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << harness::kToolVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage", "", e.what());
        return kUsage;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        if (sub == "schema") {
            out << harness::schema_markdown();
            return kOk;
        }
        if (sub == "report") {
            const auto summary = harness::run_report(out_dir);
            out << "config_hash " << summary.at("config_hash").get<std::string>() << '\n';
            return kOk;
        }
        harness::ExperimentConfig config = config_path.empty() ? harness::reference_config()
                                                               : harness::load_config(config_path);
        if (seed) {
            config.master_seed = *seed;
            config.derive_seeds();
        }
        if (compat) config.per_sample.compat_paper = true;
        if (!solver.empty()) config.eval.solver = sampling::parse_solver(solver);
        config.validate();

        const auto start = std::chrono::steady_clock::now();
        Workspace ws(config, out_dir);
        if (sub == "gen-world") {
            harness::run_gen_world(ws);
        } else if (sub == "pretrain") {
            harness::run_pretrain(ws);
        } else if (sub == "train-neg") {
            const auto r = harness::run_train_neg(ws);
            out << "skipped_steps " << r.skipped_steps.size() << '\n';
        } else if (sub == "tune-per-sample") {
            harness::run_tune_per_sample(ws);
        } else if (sub == "eval") {
            print_rows(out, harness::run_eval(ws).rows);
        } else if (sub == "efficiency") {
            const auto r = harness::run_efficiency(ws);
            for (const auto& g : r.comparison.reports) out << g.group << " efficiency=" << g.efficiency << '\n';
        } else if (sub == "x0-similarity") {
            harness::run_x0_similarity(ws);
        } else if (sub == "transfer") {
            const auto r = harness::run_transfer(ws);
            print_rows(out, r.rows);
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        ws.write_manifest(sub, seconds);
        out << "config_hash " << ws.hash() << '\n';
        return kOk;
    } catch (const ConfigError& e) {
        report_error(err, "config", e.field(), e.what());
        return kConfig;
    } catch (const std::exception& e) {
        report_error(err, "runtime", "", e.what());
        return kFailure;
    }
}

}  // namespace reneg::cli
