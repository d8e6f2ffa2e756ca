// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/reward/reward.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>

#include "reneg/autodiff/ops.hpp"
#include "reneg/autodiff/tape.hpp"
#include "reneg/common/optimizer.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::reward {
namespace {

using nlohmann::json;

constexpr int kRewardFormatVersion = 1;

json tensor_to_json(const ad::Tensor& t) { return json{{"shape", t.shape()}, {"data", t.values()}}; }

ad::Tensor tensor_from_json(const json& j) {
    return ad::Tensor(j.at("shape").get<ad::Shape>(), j.at("data").get<std::vector<double>>());
}

ad::Tensor column(std::vector<double> v) {
    const std::size_t n = v.size();
    return ad::Tensor::matrix(n, 1, std::move(v));
}

void require_batch(std::span<const int> prompts, const ad::Tensor& x, std::size_t dim) {
    if (x.rank() != 2 || x.dim(1) != dim) {
        throw InvalidArgument("reward: samples must be [B, " + std::to_string(dim) + "], got " +
                              ad::shape_string(x.shape()));
    }
    if (prompts.size() != x.dim(0)) {
        throw InvalidArgument("reward: " + std::to_string(prompts.size()) + " prompts for " +
                              std::to_string(x.dim(0)) + " samples");
    }
}

}  // namespace

const char* kind_name(RewardKind kind) {
    return kind == RewardKind::analytic_logdensity ? "analytic_logdensity" : "trained_discriminator";
}

void RewardModel::require_prompt(int prompt) const {
    if (prompt < 0 || static_cast<std::size_t>(prompt) >= classes()) {
        throw InvalidArgument("reward: unknown prompt " + std::to_string(prompt));
    }
}

MixtureReward::MixtureReward(std::vector<GaussianMixture> mixtures) : mixtures_(std::move(mixtures)) {
    if (mixtures_.empty()) throw InvalidArgument("reward needs at least one class mixture");
    dim_ = mixtures_.front().dim();
    components_ = mixtures_.front().components.size();
    for (const auto& m : mixtures_) {
        m.validate();
        if (m.dim() != dim_) throw InvalidArgument("class mixtures disagree on dimension");
        if (m.components.size() != components_) {
            throw InvalidArgument("class mixtures must have the same number of components");
        }
        std::vector<Term> terms;
        for (const auto& c : m.components) {
            const double logc = std::log(c.weight) - 0.5 * (static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) +
                                                            spd_log_det(c.covariance, dim_));
            terms.push_back({c.mean, spd_inverse(c.covariance, dim_), logc});
        }
        terms_.push_back(std::move(terms));
    }
}

ad::Tensor MixtureReward::score(std::span<const int> prompts, const ad::Tensor& x) const {
    require_batch(prompts, x, dim_);
    for (int p : prompts) require_prompt(p);
    const std::size_t B = prompts.size(), d = dim_;

    std::vector<ad::Tensor> logits;
    for (std::size_t k = 0; k < components_; ++k) {
        std::vector<double> means(B * d), logc(B);
        for (std::size_t r = 0; r < B; ++r) {
            const Term& term = terms_[static_cast<std::size_t>(prompts[r])][k];
            std::copy(term.mean.begin(), term.mean.end(), means.begin() + static_cast<std::ptrdiff_t>(r * d));
            logc[r] = term.log_constant;
        }
        const ad::Tensor diff = ad::sub(x, ad::Tensor::matrix(B, d, std::move(means)));
        std::vector<ad::Tensor> cols;
        for (std::size_t i = 0; i < d; ++i) cols.push_back(ad::slice(diff, 1, i, i + 1));

        std::optional<ad::Tensor> q;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) {
                std::vector<double> p(B);
                for (std::size_t r = 0; r < B; ++r) {
                    const double v = terms_[static_cast<std::size_t>(prompts[r])][k].precision[i * d + j];
                    p[r] = i == j ? v : 2.0 * v;
                }
                const ad::Tensor term = ad::mul(ad::mul(cols[i], cols[j]), column(std::move(p)));
                q = q ? ad::add(*q, term) : term;
            }
        }
        logits.push_back(ad::add(column(std::move(logc)), ad::scale(*q, -0.5)));
    }
    return ad::logsumexp_rows(ad::concat(logits, 1));
}

json MixtureReward::to_json() const {
    json mixtures = json::array();
    for (const auto& m : mixtures_) {
        json comps = json::array();
        for (const auto& c : m.components) {
            comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"covariance", c.covariance}});
        }
        mixtures.push_back({{"components", comps}});
    }
    return json{{"format_version", kRewardFormatVersion},
                {"kind", kind_name(kind())},
                {"data_dim", dim_},
                {"mixtures", mixtures}};
}

DiscriminatorReward::DiscriminatorReward(std::size_t data_dim, std::size_t classes, std::vector<ad::Tensor> weights)
    : dim_(data_dim), classes_(classes), weights_(std::move(weights)) {
    if (weights_.size() != 6) throw InvalidArgument("discriminator needs six weight tensors");
    const std::size_t h = weights_[0].rank() == 2 ? weights_[0].dim(1) : 0;
    const bool ok = weights_[0].shape() == ad::Shape{dim_ + classes_, h} && weights_[1].shape() == ad::Shape{h} &&
                    weights_[2].shape() == ad::Shape{h, h} && weights_[3].shape() == ad::Shape{h} &&
                    weights_[4].shape() == ad::Shape{h, 1} && weights_[5].shape() == ad::Shape{1};
    if (!ok) throw InvalidArgument("discriminator weight shapes are inconsistent");
}

ad::Tensor DiscriminatorReward::logits(std::span<const int> prompts, const ad::Tensor& x,
                                       std::span<const ad::Tensor> w) const {
    require_batch(prompts, x, dim_);
    const std::size_t B = prompts.size();
    std::vector<double> onehot(B * classes_, 0.0);
    for (std::size_t r = 0; r < B; ++r) {
        require_prompt(prompts[r]);
        onehot[r * classes_ + static_cast<std::size_t>(prompts[r])] = 1.0;
    }
    const ad::Tensor parts[] = {x, ad::Tensor::matrix(B, classes_, std::move(onehot))};
    ad::Tensor h = ad::tanh(ad::add_row(ad::matmul(ad::concat(parts, 1), w[0]), w[1]));
    h = ad::tanh(ad::add_row(ad::matmul(h, w[2]), w[3]));
    return ad::reshape(ad::add_row(ad::matmul(h, w[4]), w[5]), {B});
}

ad::Tensor DiscriminatorReward::score(std::span<const int> prompts, const ad::Tensor& x) const {
    return logits(prompts, x, weights_);
}

json DiscriminatorReward::to_json() const {
    json w = json::array();
    for (const auto& t : weights_) w.push_back(tensor_to_json(t));
    return json{{"format_version", kRewardFormatVersion},
                {"kind", kind_name(kind())},
                {"data_dim", dim_},
                {"classes", classes_},
                {"weights", w}};
}

ad::Tensor reward(const RewardModel& model, int prompt, const ad::Tensor& x) {
    const ad::Tensor row = x.rank() == 1 ? ad::reshape(x, {1, x.numel()}) : x;
    if (row.rank() != 2 || row.dim(0) != 1) throw InvalidArgument("reward: expected a single sample");
    const int prompts[] = {prompt};
    return ad::sum(model.score(prompts, row));
}

BatchReward batch_reward(const RewardModel& model, std::span<const int> prompts, const ad::Tensor& xs) {
    if (prompts.empty()) throw InvalidArgument("batch_reward: empty batch");
    if (xs.rank() != 2 || xs.dim(0) != prompts.size()) {
        throw InvalidArgument("batch_reward: " + std::to_string(prompts.size()) + " prompts but samples of shape " +
                              ad::shape_string(xs.shape()));
    }
    const ad::Tensor scores = model.score(prompts, xs);
    return {ad::mean(scores), scores.values()};
}

DiscriminatorTraining train_discriminator(const diffusion::Dataset& clean, const diffusion::Dataset& corrupted,
                                          std::size_t classes, const DiscriminatorConfig& config) {
    if (clean.size() == 0 || corrupted.size() == 0) throw InvalidArgument("train_discriminator: empty sample set");
    if (clean.x0.dim(1) != corrupted.x0.dim(1)) throw InvalidArgument("train_discriminator: dimension mismatch");
    if (!(config.holdout >= 0.0 && config.holdout < 1.0)) throw InvalidArgument("holdout must lie in [0, 1)");
    if (config.hidden == 0 || config.batch_size == 0) throw InvalidArgument("train_discriminator: zero size");
    const std::size_t d = clean.x0.dim(1), h = config.hidden;

    struct Example {
        int prompt;
        std::size_t row;
        bool is_clean;
    };
    Rng split_rng(derive_seed(config.seed, 1));
    std::vector<Example> train, test;
    auto split = [&](const diffusion::Dataset& set, bool label) {
        for (std::size_t i = 0; i < set.size(); ++i) {
            (split_rng.uniform() < config.holdout ? test : train).push_back({set.prompts[i], i, label});
        }
    };
    split(clean, true);
    split(corrupted, false);
    if (train.empty()) throw InvalidArgument("train_discriminator: no training examples after holdout");

    Rng init(derive_seed(config.seed, 0));
    std::vector<ad::Tensor> w = {init.normal_tensor({d + classes, h}, 1.0 / std::sqrt(double(d + classes))),
                                 ad::Tensor::zeros({h}),
                                 init.normal_tensor({h, h}, 1.0 / std::sqrt(double(h))),
                                 ad::Tensor::zeros({h}),
                                 init.normal_tensor({h, 1}, 1.0 / std::sqrt(double(h))),
                                 ad::Tensor::zeros({1})};
    const DiscriminatorReward shape_check(d, classes, w);

    auto gather = [&](std::span<const Example> items, std::vector<int>& prompts, std::vector<double>& labels) {
        std::vector<double> x(items.size() * d);
        prompts.clear();
        labels.clear();
        for (std::size_t r = 0; r < items.size(); ++r) {
            const auto& set = items[r].is_clean ? clean : corrupted;
            for (std::size_t j = 0; j < d; ++j) x[r * d + j] = set.x0.at(items[r].row, j);
            prompts.push_back(items[r].prompt);
            labels.push_back(items[r].is_clean ? 1.0 : 0.0);
        }
        return ad::Tensor::matrix(items.size(), d, std::move(x));
    };

    AdamW opt({}, w);
    Rng batch_rng(derive_seed(config.seed, 2));
    DiscriminatorTraining out;
    std::vector<Example> batch(std::min(config.batch_size, train.size()));
    std::vector<int> prompts;
    std::vector<double> labels;
    for (std::size_t step = 0; step < config.steps; ++step) {
        for (auto& e : batch) e = train[static_cast<std::size_t>(batch_rng.uniform_int(0, std::int64_t(train.size()) - 1))];
        const ad::Tensor x = gather(batch, prompts, labels);
        ad::Tape tape;
        std::vector<ad::Tensor> leaves;
        for (const auto& t : w) leaves.push_back(tape.leaf(t));
        const ad::Tensor z = shape_check.logits(prompts, x, leaves);
        // Logistic loss: softplus(z) - y z.
        const ad::Tensor loss =
            ad::mean(ad::sub(ad::softplus(z), ad::mul(z, ad::Tensor::vector(labels))));
        out.loss_curve.push_back(loss.item());
        const auto grads = tape.backward(loss);
        std::vector<ad::Tensor> g;
        for (const auto& l : leaves) g.push_back(grads.at(*l.node_id()));
        opt.step(w, g, config.learning_rate);
    }

    out.model = std::make_shared<DiscriminatorReward>(d, classes, w);
    const std::span<const Example> eval = test.empty() ? std::span<const Example>(train) : std::span<const Example>(test);
    const ad::Tensor x = gather(eval, prompts, labels);
    const ad::Tensor z = out.model->score(prompts, x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += (z[i] > 0.0) == (labels[i] > 0.5) ? 1 : 0;
    out.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    return out;
}

std::shared_ptr<RewardModel> reward_from_json(const json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != kRewardFormatVersion) throw Error("reward: unsupported format_version " + std::to_string(version));
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "analytic_logdensity") {
        std::vector<GaussianMixture> mixtures;
        for (const auto& m : j.at("mixtures")) {
            GaussianMixture g;
            for (const auto& c : m.at("components")) {
                g.components.push_back({c.at("weight").get<double>(), c.at("mean").get<std::vector<double>>(),
                                        c.at("covariance").get<std::vector<double>>()});
            }
            mixtures.push_back(std::move(g));
        }
        return std::make_shared<MixtureReward>(std::move(mixtures));
    }
    if (kind == "trained_discriminator") {
        std::vector<ad::Tensor> w;
        for (const auto& t : j.at("weights")) w.push_back(tensor_from_json(t));
        return std::make_shared<DiscriminatorReward>(j.at("data_dim").get<std::size_t>(),
                                                     j.at("classes").get<std::size_t>(), std::move(w));
    }
    throw Error("reward: unknown kind '" + kind + "'");
}

void save_reward(const RewardModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write reward model " + path);
    out << model.to_json().dump(1) << '\n';
}

std::shared_ptr<RewardModel> load_reward(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read reward model " + path);
    return reward_from_json(json::parse(in));
}

}  // namespace reneg::reward
