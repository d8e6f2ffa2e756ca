// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reneg/harness/config.hpp"
#include "reneg/harness/world.hpp"
#include "reneg/probe/efficiency.hpp"
#include "reneg/sampling/sampling.hpp"
#include "reneg/trainer/trainer.hpp"

namespace reneg::harness {

inline constexpr const char* kToolVersion = "0.1.0";

/// Output directory of one configuration. Artifacts are produced on demand:
/// a prerequisite is loaded when a file with the current config hash exists,
/// otherwise it is computed and written. Every file touched is recorded for
/// the manifest.
class Workspace {
public:
    Workspace(ExperimentConfig config, std::filesystem::path out);

    const ExperimentConfig& config() const noexcept { return config_; }
    const std::string& hash() const noexcept { return hash_; }
    const std::filesystem::path& out() const noexcept { return out_; }

    const World& world();
    std::shared_ptr<reward::RewardModel> reward();
    sampling::DiffusionModel model_a();
    sampling::DiffusionModel model_b();
    trainer::NegativeEmbedding global_embedding();

    /// Absolute path of an artifact, creating its directory.
    std::filesystem::path path(const std::string& relative);
    /// Registers an artifact for the manifest.
    void record(const std::string& relative);
    /// Writes manifests/<subcommand>.json with content hashes and timings.
    void write_manifest(const std::string& subcommand, double seconds);

private:
    sampling::DiffusionModel load_or_pretrain(const std::string& relative, std::size_t width, std::uint64_t init_seed,
                                              std::uint64_t pretrain_seed);

    ExperimentConfig config_;
    std::string hash_;
    std::filesystem::path out_;
    std::optional<World> world_;
    std::shared_ptr<reward::RewardModel> reward_;
    std::optional<sampling::DiffusionModel> model_a_, model_b_;
    std::optional<trainer::NegativeEmbedding> global_;
    std::vector<std::string> recorded_;
};

/// Writes the world files (samples, encoder, reward models).
void run_gen_world(Workspace& ws);
/// Pretrains model A (and writes its loss curve).
void run_pretrain(Workspace& ws);
/// Trains the global negative embedding.
trainer::GlobalTrainResult run_train_neg(Workspace& ws);

struct PerSampleRun {
    std::vector<int> prompts;
    /// results[p][s] for prompt p and evaluation seed s.
    std::vector<std::vector<trainer::PerSampleResult>> results;
};
/// Per-sample tuning for every (prompt, evaluation seed) pair.
PerSampleRun run_tune_per_sample(Workspace& ws);

struct NamedEval {
    std::string name;
    trainer::EvalReport report;
};
struct MainReport {
    std::vector<NamedEval> rows;  // null, handcrafted, global, per_sample
    /// win[a][b]: win rate of row a against row b over per-prompt means.
    std::vector<std::vector<double>> win;
};
/// Evaluates the four embeddings on shared seeds.
MainReport run_eval(Workspace& ws);

struct EfficiencyRun {
    probe::GroupComparison comparison;
    /// Spot checks per group name.
    std::map<std::string, std::vector<probe::SpotCheck>> spot_checks;
};
EfficiencyRun run_efficiency(Workspace& ws);

struct X0Row {
    int t = 0;
    sampling::Solver solver = sampling::Solver::ddim;
    double mean_mse = 0.0;
    double mean_cosine = 0.0;
};
/// One row per (t in [0, T], solver): x_hat_0 predicted at state t against
/// the same-seed full DDIM sample.
std::vector<X0Row> run_x0_similarity(Workspace& ws);

struct TransferReport {
    std::vector<NamedEval> rows;  // null, handcrafted, global (all on model B)
    double win_global_vs_null = 0.0;
    double win_global_vs_handcrafted = 0.0;
};
/// Evaluates the embedding trained on model A on model B. Rejects a model B
/// whose encoder differs from A's before writing anything.
TransferReport run_transfer(Workspace& ws);
/// Same on explicit models.
TransferReport transfer_report(const sampling::DiffusionModel& a, const sampling::DiffusionModel& b,
                               const reward::RewardModel& reward, const trainer::NegativeEmbedding& trained,
                               int handcrafted_class, std::span<const int> prompts,
                               const trainer::EvalConfig& eval);

/// Aggregates the reports in `out` into reports/summary.json. Throws if the
/// data files carry different config hashes.
nlohmann::json run_report(const std::filesystem::path& out);

/// Config hash stamped on an artifact (CSV comment line or JSON field), or
/// empty when the file carries none.
std::string artifact_hash(const std::filesystem::path& file);

}  // namespace reneg::harness
