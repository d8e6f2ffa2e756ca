// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/harness/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "reneg/common/hashing.hpp"
#include "reneg/common/parallel.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/diffusion/checkpoint.hpp"
#include "reneg/error.hpp"

namespace reneg::harness {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

class Csv {
public:
    Csv(const fs::path& path, const std::string& hash, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw Error("cannot write " + path.string());
        out_ << "# config_hash: " << hash << '\n';
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    return json::parse(in);
}

bool has_hash(const fs::path& path, const std::string& hash) {
    return fs::is_regular_file(path) && artifact_hash(path) == hash;
}

std::vector<double> per_prompt(const trainer::EvalReport& r) { return r.per_prompt_mean; }

json eval_json(const NamedEval& e) {
    return json{{"name", e.name}, {"mean_reward", e.report.overall_mean}, {"per_prompt", e.report.per_prompt_mean}};
}

int handcrafted_class(const ExperimentConfig& c) {
    if (c.world.degraded_class < 0) {
        throw ConfigError("world.degraded_class", "the handcrafted negative needs a degraded class");
    }
    return c.world.degraded_class;
}

void write_per_prompt(Workspace& ws, const std::string& relative, const std::vector<NamedEval>& rows) {
    Csv csv(ws.path(relative), ws.hash(), {"embedding", "prompt", "mean_reward"});
    for (const auto& r : rows)
        for (std::size_t p = 0; p < r.report.prompts.size(); ++p)
            csv.row({r.name, std::to_string(r.report.prompts[p]), num(r.report.per_prompt_mean[p])});
    ws.record(relative);
}

}  // namespace

std::string artifact_hash(const fs::path& file) {
    if (file.extension() == ".json") {
        try {
            const json j = read_json(file);
            return j.is_object() ? j.value("config_hash", std::string{}) : std::string{};
        } catch (const json::exception&) {
            return {};
        }
    }
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);
    const std::string prefix = "# config_hash: ";
    return line.rfind(prefix, 0) == 0 ? line.substr(prefix.size()) : std::string{};
}

Workspace::Workspace(ExperimentConfig config, fs::path out)
    : config_(std::move(config)), hash_(config_hash(config_)), out_(std::move(out)) {
    config_.validate();
    fs::create_directories(out_);
    std::ofstream cfg(path("config.ini"));
    cfg << "# config_hash: " << hash_ << '\n' << canonical_config(config_);
    if (!cfg) throw Error("cannot write " + (out_ / "config.ini").string());
    record("config.ini");
}

fs::path Workspace::path(const std::string& relative) {
    const fs::path p = out_ / relative;
    fs::create_directories(p.parent_path());
    return p;
}

void Workspace::record(const std::string& relative) {
    if (std::find(recorded_.begin(), recorded_.end(), relative) == recorded_.end()) recorded_.push_back(relative);
}

void Workspace::write_manifest(const std::string& subcommand, double seconds) {
    std::vector<std::string> files = recorded_;
    std::sort(files.begin(), files.end());
    json list = json::array();
    for (const auto& f : files) {
        list.push_back({{"path", f}, {"sha256", sha256_file((out_ / f).string())}, {"bytes", fs::file_size(out_ / f)}});
    }
    write_json(path("manifests/" + subcommand + ".json"), json{{"subcommand", subcommand},
                                                               {"tool_version", kToolVersion},
                                                               {"config_hash", hash_},
                                                               {"files", list},
                                                               {"timings_seconds", {{"total", seconds}}}});
}

const World& Workspace::world() {
    if (!world_) world_ = generate_world(config_.world);
    return *world_;
}

std::shared_ptr<reward::RewardModel> Workspace::reward() {
    if (reward_) return reward_;
    const World& w = world();
    if (config_.reward == RewardChoice::analytic) {
        reward_ = std::make_shared<reward::MixtureReward>(w.mixtures);
        return reward_;
    }
    const std::string rel = "world/reward_discriminator.json";
    if (has_hash(out_ / rel, hash_)) {
        reward_ = reward::reward_from_json(read_json(out_ / rel));
    } else {
        const auto trained = reward::train_discriminator(w.clean_subset(), w.corrupted_subset(), w.spec.classes,
                                                         config_.discriminator);
        json j = trained.model->to_json();
        j["config_hash"] = hash_;
        write_json(path(rel), j);
        write_json(path("world/discriminator_report.json"),
                   json{{"config_hash", hash_}, {"heldout_accuracy", trained.heldout_accuracy}});
        reward_ = trained.model;
    }
    record(rel);
    if (fs::exists(out_ / "world/discriminator_report.json")) record("world/discriminator_report.json");
    return reward_;
}

sampling::DiffusionModel Workspace::load_or_pretrain(const std::string& relative, std::size_t width,
                                                     std::uint64_t init_seed, std::uint64_t pretrain_seed) {
    const World& w = world();
    const fs::path file = out_ / relative;
    const std::string curve = fs::path(relative).replace_extension().string() + "_loss.csv";
    if (has_hash(file, hash_)) {
        const auto ckpt = diffusion::load_checkpoint(file.string());
        if (ckpt.encoder.fingerprint() != w.encoder.fingerprint()) {
            throw Error(relative + " was trained with a different encoder");
        }
        record(relative);
        if (fs::exists(out_ / curve)) record(curve);
        return {ckpt.network, ckpt.encoder, ckpt.schedule};
    }
    const auto& d = config_.diffusion;
    const auto schedule = diffusion::build_schedule(d.train_steps, d.beta_min, d.beta_max);
    const diffusion::NetworkShape shape{w.spec.data_dim, w.spec.cond_dim, d.time_features, width};
    diffusion::PretrainConfig pc = config_.pretrain;
    pc.seed = pretrain_seed;
    const auto result =
        diffusion::pretrain(diffusion::ScoreNetwork::create(shape, init_seed), w.encoder, schedule, w.training, pc);
    diffusion::save_checkpoint({schedule, w.encoder, result.network, pc, init_seed, hash_}, path(relative).string());
    record(relative);
    Csv csv(path(curve), hash_, {"step", "loss"});
    for (std::size_t i = 0; i < result.loss_curve.size(); ++i) csv.row({std::to_string(i), num(result.loss_curve[i])});
    record(curve);
    return {result.network, w.encoder, schedule};
}

sampling::DiffusionModel Workspace::model_a() {
    if (!model_a_) {
        model_a_ = load_or_pretrain("models/model_a.json", config_.diffusion.width, model_a_init_seed(config_),
                                    config_.pretrain.seed);
    }
    return *model_a_;
}

sampling::DiffusionModel Workspace::model_b() {
    if (!model_b_) {
        if (!config_.transfer.model_b.empty()) {
            const auto ckpt = diffusion::load_checkpoint(config_.transfer.model_b);
            model_b_ = sampling::DiffusionModel{ckpt.network, ckpt.encoder, ckpt.schedule};
        } else {
            model_b_ = load_or_pretrain("models/model_b.json", config_.transfer.width_b, model_b_init_seed(config_),
                                        model_b_pretrain_seed(config_));
        }
    }
    return *model_b_;
}

trainer::NegativeEmbedding Workspace::global_embedding() {
    if (!global_) {
        const std::string rel = "embeddings/global.json";
        if (has_hash(out_ / rel, hash_)) {
            global_ = trainer::load_embedding((out_ / rel).string());
            trainer::require_compatible(*global_, world().encoder);
            record(rel);
            if (fs::exists(out_ / global_->reward_curve_path)) record(global_->reward_curve_path);
        } else {
            global_ = run_train_neg(*this).embedding;
        }
    }
    return *global_;
}

void run_gen_world(Workspace& ws) {
    const World& w = ws.world();
    {
        Csv csv(ws.path("world/samples.csv"), ws.hash(), [&] {
            std::vector<std::string> h = {"prompt", "corrupted"};
            for (std::size_t j = 0; j < w.spec.data_dim; ++j) h.push_back("x" + std::to_string(j));
            return h;
        }());
        for (std::size_t i = 0; i < w.training.size(); ++i) {
            std::vector<std::string> row = {std::to_string(w.training.prompts[i]), w.corrupted[i] ? "1" : "0"};
            for (std::size_t j = 0; j < w.spec.data_dim; ++j) row.push_back(num(w.training.x0.at(i, j)));
            csv.row(row);
        }
    }
    ws.record("world/samples.csv");
    json enc = diffusion::encoder_to_json(w.encoder);
    enc["config_hash"] = ws.hash();
    write_json(ws.path("world/encoder.json"), enc);
    ws.record("world/encoder.json");
    json analytic = reward::MixtureReward(w.mixtures).to_json();
    analytic["config_hash"] = ws.hash();
    write_json(ws.path("world/reward_analytic.json"), analytic);
    ws.record("world/reward_analytic.json");
    (void)ws.reward();
}

void run_pretrain(Workspace& ws) { (void)ws.model_a(); }

trainer::GlobalTrainResult run_train_neg(Workspace& ws) {
    const auto model = ws.model_a();
    const auto reward = ws.reward();
    const World& w = ws.world();
    auto result = trainer::train_global(model, *reward, w.prompt_set, trainer::null_negative(w.encoder),
                                        ws.config().global);
    result.embedding.config_hash = ws.hash();
    result.embedding.reward_curve_path = "curves/global_reward.csv";
    {
        Csv csv(ws.path(result.embedding.reward_curve_path), ws.hash(), {"step", "mean_reward"});
        for (std::size_t i = 0; i < result.reward_curve.size(); ++i) {
            csv.row({std::to_string(i), num(result.reward_curve[i])});
        }
    }
    ws.record(result.embedding.reward_curve_path);
    trainer::save_embedding(result.embedding, ws.path("embeddings/global.json").string());
    ws.record("embeddings/global.json");
    return result;
}

namespace {

PerSampleRun tune_all(Workspace& ws) {
    const auto model = ws.model_a();
    const auto reward = ws.reward();
    const auto global = ws.global_embedding();
    const World& w = ws.world();
    const auto& eval = ws.config().eval;
    PerSampleRun run;
    run.prompts = w.prompt_set;
    const std::size_t P = run.prompts.size(), S = eval.n_seeds;
    run.results.assign(P, std::vector<trainer::PerSampleResult>(S));
    parallel_for(P * S, [&](std::size_t k) {
        const std::size_t p = k / S, s = k % S;
        run.results[p][s] = trainer::train_per_sample(model, *reward, run.prompts[p], trainer::eval_seed(eval, s),
                                                      global, ws.config().per_sample);
    });
    return run;
}

PerSampleRun load_per_sample(Workspace& ws, const json& j) {
    PerSampleRun run;
    run.prompts = j.at("prompts").get<std::vector<int>>();
    const std::size_t S = j.at("n_seeds").get<std::size_t>();
    run.results.assign(run.prompts.size(), std::vector<trainer::PerSampleResult>(S));
    const std::string fp = ws.world().encoder.fingerprint();
    for (const auto& e : j.at("entries")) {
        auto& r = run.results.at(e.at("prompt_index").get<std::size_t>()).at(e.at("seed_index").get<std::size_t>());
        r.embedding = {ad::Tensor::vector(e.at("vector").get<std::vector<double>>()), fp,
                       trainer::Provenance::per_sample, ws.hash(), {}};
        r.initial_reward = e.at("initial_reward").get<double>();
        r.state.best_reward = e.at("best_reward").get<double>();
        r.state.best_snapshot = r.embedding;
    }
    return run;
}

PerSampleRun per_sample_embeddings(Workspace& ws) {
    const std::string rel = "embeddings/per_sample.json";
    if (has_hash(ws.out() / rel, ws.hash())) {
        ws.record(rel);
        if (fs::exists(ws.out() / "curves/per_sample_log.csv")) ws.record("curves/per_sample_log.csv");
        return load_per_sample(ws, read_json(ws.out() / rel));
    }
    return run_tune_per_sample(ws);
}

}  // namespace

PerSampleRun run_tune_per_sample(Workspace& ws) {
    PerSampleRun run = tune_all(ws);
    json entries = json::array();
    {
        Csv log(ws.path("curves/per_sample_log.csv"), ws.hash(),
                {"prompt", "seed_index", "iteration", "reward", "best_reward", "patience_counter", "improved"});
        for (std::size_t p = 0; p < run.prompts.size(); ++p) {
            for (std::size_t s = 0; s < run.results[p].size(); ++s) {
                const auto& r = run.results[p][s];
                entries.push_back({{"prompt_index", p},
                                   {"prompt", run.prompts[p]},
                                   {"seed_index", s},
                                   {"vector", r.embedding.vector.values()},
                                   {"initial_reward", r.initial_reward},
                                   {"best_reward", r.state.best_reward},
                                   {"iterations", r.state.log.size()}});
                for (const auto& step : r.state.log) {
                    log.row({std::to_string(run.prompts[p]), std::to_string(s), std::to_string(step.iteration),
                             num(step.reward), num(step.best_reward), std::to_string(step.patience_counter),
                             step.improved ? "1" : "0"});
                }
            }
        }
    }
    ws.record("curves/per_sample_log.csv");
    write_json(ws.path("embeddings/per_sample.json"),
               json{{"format_version", trainer::kEmbeddingFormatVersion},
                    {"config_hash", ws.hash()},
                    {"encoder_fingerprint", ws.world().encoder.fingerprint()},
                    {"provenance", "per_sample"},
                    {"prompts", run.prompts},
                    {"n_seeds", ws.config().eval.n_seeds},
                    {"entries", entries}});
    ws.record("embeddings/per_sample.json");
    return run;
}

MainReport run_eval(Workspace& ws) {
    const World& w = ws.world();
    const int hc = handcrafted_class(ws.config());
    const auto model = ws.model_a();
    const auto reward = ws.reward();
    const auto global = ws.global_embedding();
    const PerSampleRun tuned = per_sample_embeddings(ws);
    const auto& eval = ws.config().eval;

    MainReport report;
    report.rows.push_back({"null", trainer::evaluate(model, *reward, trainer::null_negative(w.encoder), w.prompt_set, eval)});
    report.rows.push_back(
        {"handcrafted", trainer::evaluate(model, *reward, trainer::handcrafted_negative(w.encoder, hc), w.prompt_set, eval)});
    report.rows.push_back({"global", trainer::evaluate(model, *reward, global, w.prompt_set, eval)});
    std::vector<std::vector<trainer::NegativeEmbedding>> assigned(tuned.prompts.size());
    for (std::size_t p = 0; p < tuned.prompts.size(); ++p)
        for (const auto& r : tuned.results[p]) assigned[p].push_back(r.embedding);
    report.rows.push_back({"per_sample", trainer::evaluate_assigned(model, *reward, assigned, tuned.prompts, eval)});

    const std::size_t n = report.rows.size();
    report.win.assign(n, std::vector<double>(n, 0.5));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            report.win[a][b] = trainer::win_rate(per_prompt(report.rows[a].report), per_prompt(report.rows[b].report));

    write_per_prompt(ws, "reports/main_per_prompt.csv", report.rows);
    {
        Csv csv(ws.path("reports/main_win_rates.csv"), ws.hash(), {"embedding", "against", "win_rate"});
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) csv.row({report.rows[a].name, report.rows[b].name, num(report.win[a][b])});
    }
    ws.record("reports/main_win_rates.csv");
    json rows = json::array(), win = json::object();
    for (std::size_t a = 0; a < n; ++a) {
        rows.push_back(eval_json(report.rows[a]));
        for (std::size_t b = 0; b < n; ++b) win[report.rows[a].name][report.rows[b].name] = report.win[a][b];
    }
    write_json(ws.path("reports/main_summary.json"), json{{"config_hash", ws.hash()},
                                                          {"prompts", w.prompt_set},
                                                          {"n_seeds", eval.n_seeds},
                                                          {"solver", sampling::solver_name(eval.solver)},
                                                          {"embeddings", rows},
                                                          {"win_rate", win}});
    ws.record("reports/main_summary.json");

    // Trajectories of the first few seeds with the global embedding.
    sampling::GuidanceConfig g;
    g.gamma = eval.gamma;
    g.negative = global.vector;
    g.solver = eval.solver;
    g.steps = eval.steps;
    const std::size_t shown = std::min<std::size_t>(4, eval.n_seeds);
    std::vector<std::uint64_t> seeds;
    for (std::size_t s = 0; s < shown; ++s) seeds.push_back(trainer::eval_seed(eval, s));
    for (int prompt : w.prompt_set) {
        const std::vector<int> prompts(shown, prompt);
        const auto res = sampling::sample(model, prompts, g, seeds, true);
        const std::string rel = "trajectories/global_p" + std::to_string(prompt) + ".csv";
        std::vector<std::string> header = {"seed", "step", "t"};
        for (std::size_t j = 0; j < w.spec.data_dim; ++j) header.push_back("x" + std::to_string(j));
        Csv csv(ws.path(rel), ws.hash(), header);
        for (std::size_t s = 0; s < shown; ++s) {
            for (std::size_t k = 0; k < res.trajectory.size(); ++k) {
                const auto& pt = res.trajectory[k];
                std::vector<std::string> row = {std::to_string(s), std::to_string(k), std::to_string(pt.t)};
                for (std::size_t j = 0; j < w.spec.data_dim; ++j) row.push_back(num(pt.x.at(s, j)));
                csv.row(row);
            }
        }
        ws.record(rel);
    }
    return report;
}

EfficiencyRun run_efficiency(Workspace& ws) {
    const auto model = ws.model_a();
    const World& w = ws.world();
    const auto& c = ws.config();
    std::vector<int> prompts;
    for (std::size_t i = 0; i < c.probe.prompts; ++i) prompts.push_back(w.prompt_set[i % w.prompt_set.size()]);
    probe::ProbeConfig pc;
    pc.gamma = c.eval.gamma;
    pc.steps = c.eval.steps;
    pc.seed = derive_seed(c.master_seed, 8);
    pc.adapter_inits = c.probe.adapter_inits;

    EfficiencyRun run;
    run.comparison = probe::compare_groups(model, prompts, c.probe.ranks, pc);
    std::vector<probe::ProbeGroup> groups = {probe::ProbeGroup::negative(), probe::ProbeGroup::theta()};
    for (auto r : c.probe.ranks) groups.push_back(probe::ProbeGroup::adapter(r));
    double worst = 0.0;
    for (const auto& g : groups) {
        const auto J = probe::sampling_jacobian(model, prompts, g, pc);
        auto checks = probe::finite_difference_spot_checks(model, prompts, g, pc, J, c.probe.fd_checks, c.probe.fd_step,
                                                           derive_seed(pc.seed, 0xfd));
        for (const auto& s : checks) worst = std::max(worst, s.relative_error);
        run.spot_checks[g.name()] = std::move(checks);
    }

    {
        Csv csv(ws.path("reports/efficiency.csv"), ws.hash(), {"group", "d_theta", "N", "D", "frobenius", "efficiency"});
        for (const auto& r : run.comparison.reports) {
            csv.row({r.group, std::to_string(r.d_theta), std::to_string(r.prompts), std::to_string(r.output_dim),
                     num(r.frobenius), num(r.efficiency)});
        }
    }
    ws.record("reports/efficiency.csv");
    {
        Csv csv(ws.path("reports/efficiency_spot_checks.csv"), ws.hash(),
                {"group", "param", "column", "analytic", "numeric", "relative_error"});
        for (const auto& g : groups)
            for (const auto& s : run.spot_checks[g.name()])
                csv.row({g.name(), std::to_string(s.param), std::to_string(s.column), num(s.analytic), num(s.numeric),
                         num(s.relative_error)});
    }
    ws.record("reports/efficiency_spot_checks.csv");
    const auto& v = run.comparison.verdict;
    write_json(ws.path("reports/efficiency_verdict.json"),
               json{{"config_hash", ws.hash()},
                    {"negative_over_theta", v.negative_over_theta},
                    {"small_rank_over_large_rank", v.small_rank_over_large_rank},
                    {"negative_beats_theta", v.negative_beats_theta},
                    {"small_rank_beats_large_rank", v.small_rank_beats_large_rank},
                    {"max_spot_check_relative_error", worst}});
    ws.record("reports/efficiency_verdict.json");
    return run;
}

std::vector<X0Row> run_x0_similarity(Workspace& ws) {
    const auto model = ws.model_a();
    const World& w = ws.world();
    const auto& c = ws.config();
    const std::size_t S = c.x0_similarity.seeds;
    std::vector<int> prompts(S);
    std::vector<std::uint64_t> seeds(S);
    const std::uint64_t base = derive_seed(c.master_seed, 9);
    for (std::size_t i = 0; i < S; ++i) {
        prompts[i] = w.prompt_set[i % w.prompt_set.size()];
        seeds[i] = derive_seed(base, i);
    }
    auto guidance = [&](sampling::Solver solver) {
        return sampling::null_guidance(w.encoder, c.eval.gamma, solver, c.eval.steps);
    };
    const ad::Tensor reference = sampling::sample(model, prompts, guidance(sampling::Solver::ddim), seeds, false).x0;
    const int T = c.eval.steps;
    const std::size_t D = reference.dim(1);

    std::vector<X0Row> rows(static_cast<std::size_t>(T + 1) * 2);
    parallel_for(rows.size(), [&](std::size_t k) {
        const int t = static_cast<int>(k / 2);
        const auto solver = k % 2 == 0 ? sampling::Solver::ddim : sampling::Solver::ddpm;
        const auto g = guidance(solver);
        const ad::Tensor x0_hat = t == 0 ? sampling::sample(model, prompts, g, seeds, false).x0
                                         : sampling::sample_to_t_then_x0hat(model, prompts, g, t - 1, seeds);
        double mse = 0.0, cosine = 0.0;
        for (std::size_t i = 0; i < S; ++i) {
            double sq = 0.0, dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t j = 0; j < D; ++j) {
                const double a = x0_hat.at(i, j), b = reference.at(i, j);
                sq += (a - b) * (a - b);
                dot += a * b;
                na += a * a;
                nb += b * b;
            }
            mse += sq / static_cast<double>(D);
            cosine += na > 0.0 && nb > 0.0 ? dot / std::sqrt(na * nb) : 0.0;
        }
        rows[k] = {t, solver, mse / static_cast<double>(S), cosine / static_cast<double>(S)};
    });

    Csv csv(ws.path("reports/x0_similarity.csv"), ws.hash(), {"t", "solver", "mean_mse", "mean_cosine"});
    for (const auto& r : rows) csv.row({std::to_string(r.t), sampling::solver_name(r.solver), num(r.mean_mse), num(r.mean_cosine)});
    ws.record("reports/x0_similarity.csv");
    return rows;
}

TransferReport transfer_report(const sampling::DiffusionModel& a, const sampling::DiffusionModel& b,
                               const reward::RewardModel& reward, const trainer::NegativeEmbedding& trained,
                               int handcrafted, std::span<const int> prompts, const trainer::EvalConfig& eval) {
    if (a.encoder.fingerprint() != b.encoder.fingerprint()) {
        throw InvalidArgument("transfer requires a shared encoder: model A uses " + a.encoder.fingerprint().substr(0, 12) +
                              ", model B uses " + b.encoder.fingerprint().substr(0, 12));
    }
    trainer::require_compatible(trained, b.encoder);
    TransferReport r;
    r.rows.push_back({"null", trainer::evaluate(b, reward, trainer::null_negative(b.encoder), prompts, eval)});
    r.rows.push_back(
        {"handcrafted", trainer::evaluate(b, reward, trainer::handcrafted_negative(b.encoder, handcrafted), prompts, eval)});
    r.rows.push_back({"global", trainer::evaluate(b, reward, trained, prompts, eval)});
    r.win_global_vs_null = trainer::win_rate(per_prompt(r.rows[2].report), per_prompt(r.rows[0].report));
    r.win_global_vs_handcrafted = trainer::win_rate(per_prompt(r.rows[2].report), per_prompt(r.rows[1].report));
    return r;
}

TransferReport run_transfer(Workspace& ws) {
    const auto b = ws.model_b();
    const World& w = ws.world();
    if (b.encoder.fingerprint() != w.encoder.fingerprint()) {
        throw InvalidArgument("transfer requires a shared encoder: model A uses " + w.encoder.fingerprint().substr(0, 12) +
                              ", model B uses " + b.encoder.fingerprint().substr(0, 12));
    }
    const auto a = ws.model_a();
    const auto reward = ws.reward();
    const auto global = ws.global_embedding();
    const TransferReport r =
        transfer_report(a, b, *reward, global, handcrafted_class(ws.config()), w.prompt_set, ws.config().eval);
    write_per_prompt(ws, "reports/transfer_per_prompt.csv", r.rows);
    json rows = json::array();
    for (const auto& e : r.rows) rows.push_back(eval_json(e));
    write_json(ws.path("reports/transfer.json"), json{{"config_hash", ws.hash()},
                                                      {"model_b_fingerprint", b.network.fingerprint()},
                                                      {"embeddings", rows},
                                                      {"win_global_vs_null", r.win_global_vs_null},
                                                      {"win_global_vs_handcrafted", r.win_global_vs_handcrafted}});
    ws.record("reports/transfer.json");
    return r;
}

json run_report(const fs::path& out) {
    if (!fs::is_directory(out)) throw Error("report: no such directory " + out.string());
    std::map<std::string, std::vector<std::string>> by_hash;
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), out);
        if (rel.begin()->string() == "manifests" || rel == fs::path("reports/summary.json")) continue;
        const auto ext = rel.extension();
        if (ext != ".csv" && ext != ".json" && ext != ".ini") continue;
        by_hash[artifact_hash(entry.path())].push_back(rel.string());
    }
    if (by_hash.size() != 1 || by_hash.begin()->first.empty()) {
        std::string detail;
        for (const auto& [h, files] : by_hash) {
            detail += " [" + (h.empty() ? std::string("unstamped") : h.substr(0, 12)) + ": " + files.front() +
                      (files.size() > 1 ? " +" + std::to_string(files.size() - 1) : "") + "]";
        }
        throw Error("report: artifacts carry mismatched config hashes:" + detail);
    }
    const std::string hash = by_hash.begin()->first;
    json summary{{"config_hash", hash}, {"artifacts", by_hash.begin()->second.size()}};
    auto maybe = [&](const std::string& rel, const char* key) {
        if (fs::exists(out / rel)) summary[key] = read_json(out / rel);
    };
    maybe("reports/main_summary.json", "main");
    maybe("reports/transfer.json", "transfer");
    maybe("reports/efficiency_verdict.json", "efficiency");
    if (fs::exists(out / "reports/x0_similarity.csv")) {
        std::ifstream in(out / "reports/x0_similarity.csv");
        std::string line;
        std::map<int, std::map<std::string, double>> mse;
        std::getline(in, line);
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string t, solver, m;
            std::getline(ss, t, ',');
            std::getline(ss, solver, ',');
            std::getline(ss, m, ',');
            mse[std::stoi(t)][solver] = std::stod(m);
        }
        std::size_t ok = 0;
        for (auto& [t, row] : mse) ok += row["ddim"] <= row["ddpm"] ? 1 : 0;
        summary["x0_similarity"] = {{"rows", mse.size()},
                                    {"ddim_not_worse_fraction", mse.empty() ? 0.0 : double(ok) / double(mse.size())}};
    }
    write_json(out / "reports/summary.json", summary);
    return summary;
}

}  // namespace reneg::harness
