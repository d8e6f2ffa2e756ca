// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite on the reference configuration. Prints one PASS/FAIL line
// per criterion and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "reneg/autodiff/grad_check.hpp"
#include "reneg/autodiff/ops.hpp"
#include "reneg/autodiff/tape.hpp"
#include "reneg/common/hashing.hpp"
#include "reneg/common/parallel.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"
#include "reneg/harness/experiments.hpp"

namespace fs = std::filesystem;
using namespace reneg;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double standard_error(std::span<const double> v) {
    const double m = mean_of(v);
    double sq = 0.0;
    for (double x : v) sq += (x - m) * (x - m);
    return std::sqrt(sq / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::vector<double> flatten_means(const trainer::EvalReport& r) { return r.per_prompt_mean; }

class Suite {
public:
    explicit Suite(fs::path work) : work_(std::move(work)), ws_(harness::reference_config(), work_ / "reference") {}

    harness::Workspace& ws() { return ws_; }
    const harness::ExperimentConfig& config() { return ws_.config(); }
    const harness::World& world() { return ws_.world(); }
    sampling::DiffusionModel model() { return ws_.model_a(); }
    const reward::RewardModel& reward() {
        if (!reward_) reward_ = ws_.reward();
        return *reward_;
    }

    /// Global embeddings for training seeds 0..4; seed 0 is the workspace one.
    const std::vector<trainer::NegativeEmbedding>& globals() {
        if (globals_.empty()) {
            globals_.push_back(ws_.global_embedding());
            for (std::uint64_t k = 1; k < 5; ++k) {
                auto cfg = config().global;
                cfg.seed = derive_seed(cfg.seed, k);
                globals_.push_back(trainer::train_global(model(), reward(), world().prompt_set,
                                                         trainer::null_negative(world().encoder), cfg)
                                       .embedding);
            }
        }
        return globals_;
    }

    const trainer::EvalReport& eval_of(const std::string& key, const trainer::NegativeEmbedding& n) {
        auto it = evals_.find(key);
        if (it == evals_.end()) {
            it = evals_.emplace(key, trainer::evaluate(model(), reward(), n, world().prompt_set, config().eval)).first;
        }
        return it->second;
    }
    const trainer::EvalReport& eval_null() { return eval_of("null", trainer::null_negative(world().encoder)); }
    const trainer::EvalReport& eval_handcrafted() {
        return eval_of("handcrafted", trainer::handcrafted_negative(world().encoder, config().world.degraded_class));
    }
    const trainer::EvalReport& eval_global(std::size_t k) { return eval_of("global" + std::to_string(k), globals()[k]); }

    const fs::path& work() const { return work_; }

private:
    fs::path work_;
    harness::Workspace ws_;
    std::shared_ptr<reward::RewardModel> reward_;
    std::vector<trainer::NegativeEmbedding> globals_;
    std::map<std::string, trainer::EvalReport> evals_;
};

Outcome gradient_integrity(Suite& s) {
    const auto model = s.model();
    const auto& enc = model.encoder;
    Rng rng(derive_seed(s.config().master_seed, 101));
    double worst = 0.0, worst_full = 0.0;
    for (int state = 0; state < 50; ++state) {
        const int prompt = s.world().prompt_set[static_cast<std::size_t>(rng.uniform_int(0, 6))];
        const int t_stop = static_cast<int>(rng.uniform_int(0, 10));
        const auto solver = state % 2 == 0 ? sampling::Solver::ddim : sampling::Solver::ddpm;
        const std::vector<int> prompts = {prompt};
        const std::vector<std::uint64_t> seeds = {derive_seed(7777, static_cast<std::uint64_t>(state))};
        std::vector<double> n(enc.null_embedding().values());
        for (double& v : n) v += 0.3 * rng.normal();
        const ad::Tensor point = ad::Tensor::vector(n);
        // Training objective: the severed prefix stays at the check point.
        const auto truncated = [&](std::span<const ad::Tensor> p) {
            sampling::GuidanceConfig g{7.5, p[0], solver, 30, std::nullopt};
            const auto x0 = sampling::sample_to_t_then_x0hat(model, prompts, g, t_stop, seeds, &point);
            return reward::batch_reward(s.reward(), prompts, x0).mean;
        };
        // Whole chain differentiated end to end.
        const auto full = [&](std::span<const ad::Tensor> p) {
            sampling::GuidanceConfig g{7.5, p[0], solver, 30, std::nullopt};
            return reward::batch_reward(s.reward(), prompts, sampling::sample(model, prompts, g, seeds, false).x0).mean;
        };
        const std::vector<ad::Tensor> at = {point};
        worst = std::max(worst, ad::grad_check(truncated, at).max_relative_error);
        worst_full = std::max(worst_full, ad::grad_check(full, at).max_relative_error);
    }
    return {worst < 1e-4 && worst_full < 1e-4, "max relative error " + fmt(worst, 3) + " for the training objective, " +
                                                   fmt(worst_full, 3) + " through the whole chain, over 50 states (limit 1e-4)"};
}

Outcome round_trip(Suite& s) {
    const auto model = s.model();
    double worst = 0.0;
    Rng rng(5);
    const auto x0 = rng.normal_tensor({64, 2}, 2.0);
    const auto eps = rng.normal_tensor({64, 2});
    for (const auto& schedule : {model.schedule, model.schedule.resample(s.config().eval.steps)}) {
        for (int t = 1; t <= schedule.steps(); ++t) {
            const auto xt = sampling::add_noise(x0, eps, t, schedule);
            worst = std::max(worst, ad::max_abs_diff(sampling::predict_x0(xt, eps, t, schedule), x0));
        }
    }
    return {worst <= 1e-12, "max |x0 - predict_x0(add_noise(x0))| = " + fmt(worst, 3) + " over T=100 and T=30"};
}

Outcome cfg_identities(Suite& s) {
    const auto model = s.model();
    const auto& enc = model.encoder;
    std::vector<int> prompts;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < 64; ++i) {
        prompts.push_back(s.world().prompt_set[i % s.world().prompt_set.size()]);
        seeds.push_back(derive_seed(99, i));
    }
    const auto inference = model.schedule.resample(30);
    const std::vector<ad::Tensor> negatives = {enc.null_embedding(), enc.encode(s.config().world.degraded_class),
                                               Rng(3).normal_tensor({enc.dim()})};
    int checked = 0, exact = 0;
    for (auto solver : {sampling::Solver::ddim, sampling::Solver::ddpm}) {
        for (const auto& n : negatives) {
            const sampling::GuidanceConfig one{1.0, n, solver, 30, std::nullopt};
            exact += ad::bit_equal(sampling::sample(model, prompts, one, seeds, false).x0,
                                   sampling::sample_conditional(model, prompts, solver, 30, seeds).x0);
            const sampling::GuidanceConfig zero{0.0, n, solver, 30, std::nullopt};
            const auto negative_only =
                sampling::sample_chain_unguided(sampling::network_predictor(model.network, inference), inference,
                                                ad::broadcast_rows(n, prompts.size()), solver, seeds, 2, false);
            exact += ad::bit_equal(sampling::sample(model, prompts, zero, seeds, false).x0, negative_only.x0);
            checked += 2;
        }
    }
    return {exact == checked, std::to_string(exact) + "/" + std::to_string(checked) +
                                  " bit-exact comparisons (gamma 1 and 0, 3 negatives, 2 solvers, 64 seeds)"};
}

Outcome global_improves(Suite& s) {
    const auto& null = s.eval_null();
    const std::size_t P = null.prompts.size(), S = null.rewards[0].size();
    std::vector<double> diffs, seed_means;
    for (std::size_t k = 0; k < 5; ++k) {
        const auto& g = s.eval_global(k);
        std::vector<double> dk;
        for (std::size_t j = 0; j < S; ++j) {
            double d = 0.0;
            for (std::size_t p = 0; p < P; ++p) d += g.rewards[p][j] - null.rewards[p][j];
            dk.push_back(d / static_cast<double>(P));
        }
        seed_means.push_back(mean_of(dk));
        diffs.insert(diffs.end(), dk.begin(), dk.end());
    }
    const double margin = mean_of(diffs);
    const double se_seeds = standard_error(seed_means);
    const double se_pooled = standard_error(diffs);
    const double se = std::max(se_seeds, se_pooled);
    std::string per_seed;
    for (double m : seed_means) per_seed += (per_seed.empty() ? "" : " ") + fmt(m, 3);
    return {margin > 3.0 * se, "mean gain " + fmt(margin) + " (null " + fmt(null.overall_mean) + "), SE across training seeds " +
                                   fmt(se_seeds, 3) + ", pooled SE " + fmt(se_pooled, 3) + ", per-seed gains [" +
                                   per_seed + "]"};
}

Outcome handcrafted_comparison(Suite& s) {
    const auto& hc = s.eval_handcrafted();
    std::vector<double> a, b;
    for (std::size_t k = 0; k < 5; ++k) {
        const auto g = flatten_means(s.eval_global(k));
        a.insert(a.end(), g.begin(), g.end());
        b.insert(b.end(), hc.per_prompt_mean.begin(), hc.per_prompt_mean.end());
    }
    const double w = trainer::win_rate(a, b);
    return {w > 0.6, "win rate " + fmt(w) + " over " + std::to_string(a.size()) +
                         " (training seed, prompt) pairs; handcrafted mean " + fmt(hc.overall_mean)};
}

Outcome per_sample_dominance(Suite& s) {
    const auto model = s.model();
    const auto& global = s.globals()[0];
    const auto& ge = s.eval_global(0);
    auto cfg = s.config().per_sample;
    cfg.fixed_noise = true;
    const std::size_t S = 64, P = s.world().prompt_set.size();
    std::vector<std::vector<trainer::PerSampleResult>> res(P, std::vector<trainer::PerSampleResult>(S));
    parallel_for(P * S, [&](std::size_t k) {
        const std::size_t p = k / S, j = k % S;
        res[p][j] = trainer::train_per_sample(model, s.reward(), s.world().prompt_set[p],
                                              trainer::eval_seed(s.config().eval, j), global, cfg);
    });
    std::size_t prompts_ok = 0, pairs_ok = 0;
    double best_sum = 0.0, global_sum = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        bool all = true;
        for (std::size_t j = 0; j < S; ++j) {
            const double best = res[p][j].state.best_reward, base = ge.rewards[p][j];
            const bool ok = best >= base;
            all = all && ok;
            pairs_ok += ok;
            best_sum += best;
            global_sum += base;
        }
        prompts_ok += all;
    }
    const double n = static_cast<double>(P * S);
    const bool pass = prompts_ok == P && best_sum / n > global_sum / n;
    return {pass, std::to_string(prompts_ok) + "/" + std::to_string(P) + " prompts dominate on every seed (" +
                      std::to_string(pairs_ok) + "/" + std::to_string(P * S) + " pairs); mean " + fmt(best_sum / n) +
                      " vs global " + fmt(global_sum / n)};
}

Outcome efficiency_ordering(Suite& s) {
    const auto run = harness::run_efficiency(s.ws());
    const auto& v = run.comparison.verdict;
    double worst = 0.0;
    std::size_t checks = 0;
    for (const auto& [group, list] : run.spot_checks) {
        for (const auto& c : list) worst = std::max(worst, c.relative_error);
        checks += list.size();
    }
    const bool pass = v.negative_over_theta >= 2.0 && v.small_rank_over_large_rank >= 2.0 && worst < 1e-3;
    return {pass, "E(n)/E(theta) = " + fmt(v.negative_over_theta) + ", E(r=2)/E(r=4) = " +
                      fmt(v.small_rank_over_large_rank) + " (mean over " +
                      std::to_string(s.config().probe.adapter_inits) + " adapter inits), max FD error " +
                      fmt(worst, 3) + " over " + std::to_string(checks) + " checks"};
}

Outcome solver_study(Suite& s) {
    const auto rows = harness::run_x0_similarity(s.ws());
    std::map<int, std::map<sampling::Solver, double>> mse;
    for (const auto& r : rows) mse[r.t][r.solver] = r.mean_mse;
    std::size_t ok = 0;
    for (auto& [t, m] : mse) ok += m[sampling::Solver::ddim] <= m[sampling::Solver::ddpm];
    const double frac = static_cast<double>(ok) / static_cast<double>(mse.size());
    return {frac >= 0.8, "DDIM MSE <= DDPM MSE at " + std::to_string(ok) + "/" + std::to_string(mse.size()) +
                             " timesteps (" + std::to_string(s.config().x0_similarity.seeds) + " seeds)"};
}

Outcome transfer(Suite& s) {
    const auto a = s.model();
    const auto b = s.ws().model_b();
    const auto r = harness::transfer_report(a, b, s.reward(), s.globals()[0], s.config().world.degraded_class,
                                            s.world().prompt_set, s.config().eval);
    const double gain = r.rows[2].report.overall_mean - r.rows[0].report.overall_mean;
    bool mismatch_rejected = false;
    try {
        auto foreign = b;
        foreign.encoder = diffusion::ConditionEncoder::random(b.encoder.names(), b.encoder.dim(), 31337);
        harness::transfer_report(a, foreign, s.reward(), s.globals()[0], s.config().world.degraded_class,
                                 s.world().prompt_set, s.config().eval);
    } catch (const InvalidArgument&) {
        mismatch_rejected = true;
    }
    return {gain > 0.0 && mismatch_rejected,
            "on model B (width " + std::to_string(b.network.shape().width) + "): learned " +
                fmt(r.rows[2].report.overall_mean) + " vs null " + fmt(r.rows[0].report.overall_mean) +
                ", win rate vs null " + fmt(r.win_global_vs_null) + "; encoder mismatch " +
                (mismatch_rejected ? "rejected" : "NOT rejected")};
}

const char* kCheapConfig = R"([pretrain]
steps = 300
[global]
total_steps = 40
batch_size = 16
[eval]
n_seeds = 8
[per_sample]
max_steps = 3
[probe]
prompts = 2
adapter_inits = 2
fd_checks = 3
[x0_similarity]
seeds = 8
[transfer]
width_b = 32
)";

std::map<std::string, std::string> tree_hashes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root).string();
        if (rel.rfind("manifests/", 0) == 0) {
            std::ifstream in(e.path());
            out[rel] = sha256_hex(json::parse(in).at("files").dump());
        } else {
            out[rel] = sha256_file(e.path().string());
        }
    }
    return out;
}

Outcome determinism(Suite& s) {
    const fs::path root = s.work() / "determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path ini = root / "cheap.ini";
    std::ofstream(ini) << kCheapConfig;
    const std::vector<std::string> subs = {"gen-world", "pretrain",      "train-neg", "tune-per-sample", "eval",
                                           "efficiency", "x0-similarity", "transfer",  "report"};
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* name : {"run1", "run2"}) {
        for (const auto& sub : subs) {
            const std::string cmd = std::string("\"") + RENEG_CLI_PATH + "\" " + sub + " --config \"" + ini.string() +
                                    "\" --out \"" + (root / name).string() + "\" >> \"" +
                                    (root / (std::string(name) + ".log")).string() + "\" 2>&1";
            if (std::system(cmd.c_str()) != 0) return {false, sub + " exited with an error in " + name};
        }
        runs.push_back(tree_hashes(root / name));
    }
    std::size_t differing = 0;
    std::string first;
    for (const auto& [path, h] : runs[0]) {
        const auto it = runs[1].find(path);
        if (it == runs[1].end() || it->second != h) {
            ++differing;
            if (first.empty()) first = path;
        }
    }
    differing += runs[1].size() > runs[0].size() ? runs[1].size() - runs[0].size() : 0;
    return {differing == 0 && runs[0].size() == runs[1].size(),
            std::to_string(runs[0].size()) + " artifacts over " + std::to_string(subs.size()) + " subcommands, " +
                std::to_string(differing) + " differ" + (first.empty() ? "" : " (first: " + first + ")")};
}

void learned_scale_note(Suite& s) {
    auto cfg = s.config().global;
    cfg.total_steps = 1000;
    const auto model = s.model();
    const auto null = trainer::null_negative(s.world().encoder);
    const auto fixed = trainer::train_global(model, s.reward(), s.world().prompt_set, null, cfg);
    cfg.learn_gamma = true;
    const auto learned = trainer::train_global(model, s.reward(), s.world().prompt_set, null, cfg);
    auto eval = s.config().eval;
    eval.n_seeds = 64;
    const double r_fixed = trainer::evaluate(model, s.reward(), fixed.embedding, s.world().prompt_set, eval).overall_mean;
    eval.gamma = learned.gamma;
    const double r_learned =
        trainer::evaluate(model, s.reward(), learned.embedding, s.world().prompt_set, eval).overall_mean;
    std::cout << "[INFO] learned guidance scale (1000 steps each): constant 7.5 -> " << fmt(r_fixed)
              << ", learned gamma " << fmt(learned.gamma) << " -> " << fmt(r_learned) << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    fs::path work = fs::temp_directory_path() / "reneg_acceptance";
    bool keep = false;
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--work" && i + 1 < argc) {
            work = argv[++i];
        } else if (a == "--keep") {
            keep = true;
        } else if (a == "--only" && i + 1 < argc) {
            only.push_back(std::atoi(argv[++i]));
        } else {
            std::cerr << "usage: reneg_acceptance [--work DIR] [--keep] [--only N]...\n";
            return 2;
        }
    }
    // Start from scratch unless asked to reuse cached models and embeddings.
    if (!keep) fs::remove_all(work);
    fs::create_directories(work);

    Suite suite(work);
    const auto t0 = std::chrono::steady_clock::now();
    (void)suite.model();
    std::cout << "[INFO] reference model ready in "
              << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 3) << " s, config "
              << suite.ws().hash().substr(0, 12) << std::endl;

    const std::vector<Criterion> criteria = {
        {1, "gradient integrity", 60, [&] { return gradient_integrity(suite); }},
        {2, "round-trip identity", 10, [&] { return round_trip(suite); }},
        {3, "guidance identities", 10, [&] { return cfg_identities(suite); }},
        {4, "global negative improves reward", 1200, [&] { return global_improves(suite); }},
        {5, "handcrafted comparison", 1200, [&] { return handcrafted_comparison(suite); }},
        {6, "per-sample dominance", 300, [&] { return per_sample_dominance(suite); }},
        {7, "efficiency ordering", 600, [&] { return efficiency_ordering(suite); }},
        {8, "solver study", 300, [&] { return solver_study(suite); }},
        {9, "transfer", 900, [&] { return transfer(suite); }},
        {10, "determinism", 600, [&] { return determinism(suite); }},
    };

    int failed = 0;
    json results = json::array();
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.budget_seconds;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << ": " << o.detail << " ["
                  << fmt(secs, 3) << " s, budget " << c.budget_seconds << " s" << (in_time ? "" : ", over budget")
                  << "]" << std::endl;
        results.push_back({{"id", c.id}, {"name", c.name}, {"pass", pass}, {"detail", o.detail}, {"seconds", secs}});
    }
    if (only.empty()) {
        try {
            learned_scale_note(suite);
        } catch (const std::exception& e) {
            std::cout << "[INFO] learned guidance scale run failed: " << e.what() << std::endl;
        }
    }
    std::ofstream(work / "acceptance_results.json") << results.dump(1) << '\n';
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
