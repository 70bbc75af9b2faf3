#pragma once

// Deep Q-learning dialogue policy: one ReLU hidden layer, experience replay
// and a periodically synced target network.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affectsim/agent.hpp"
#include "affectsim/rng.hpp"
#include "affectsim/user_simulator.hpp"
#include "json.hpp"

namespace affectsim {

/// Parameters live in one flat buffer laid out as
/// [hidden weights (hidden x input, row-major) | hidden bias | output weights (output x hidden) | output bias].
class QNetwork {
public:
    QNetwork() = default;
    QNetwork(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
    void initialize(Rng& rng);

    std::size_t input_dim() const { return input_; }
    std::size_t hidden_dim() const { return hidden_; }
    std::size_t output_dim() const { return output_; }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    std::span<const double> hidden_weights() const { return {params_.data(), hidden_ * input_}; }
    std::span<const double> hidden_bias() const { return {params_.data() + hidden_ * input_, hidden_}; }
    std::span<const double> output_weights() const {
        return {params_.data() + hidden_ * (input_ + 1), output_ * hidden_};
    }
    std::span<const double> output_bias() const {
        return {params_.data() + hidden_ * (input_ + 1) + output_ * hidden_, output_};
    }

    bool operator==(const QNetwork&) const = default;

private:
    friend struct QNetworkAccess;
    std::size_t input_ = 0;
    std::size_t hidden_ = 0;
    std::size_t output_ = 0;
    std::vector<double> params_;
};

/// Action values for state `s`. Throws ConfigError on a dimension mismatch.
std::vector<double> q_forward(const QNetwork& net, std::span<const double> s);

struct Transition {
    std::vector<double> state;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

/// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10000);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return items_.at(i); }
    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;
    void clear();

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

struct DqnConfig {
    std::size_t hidden = 80;
    double gamma = 0.9;
    double learning_rate = 1e-3;
    std::size_t batch_size = 16;
    double epsilon_start = 0.2;
    double epsilon_end = 0.01;
    std::size_t buffer_capacity = 10000;
    int warm_start_dialogues = 100;
    double clip_norm = 1.0;
    std::size_t train_batches_per_epoch = 100;
    bool double_dqn = false;
    std::string optimizer = "adam";  // "adam" or "sgd"

    void validate() const;
};

void to_json(nlohmann::json& j, const DqnConfig& c);
void from_json(const nlohmann::json& j, DqnConfig& c);

/// Epsilon-greedy choice. One uniform draw decides exploration; exploring
/// draws one more index. Greedy ties go to the lowest index.
std::size_t select_action(const QNetwork& net, std::span<const double> s, double epsilon, Rng& rng);

/// Index of the largest value, lowest index on ties.
std::size_t argmax(std::span<const double> values);

/// TD targets r + gamma * max_a' Q_target(s', a'), or r on terminal transitions.
/// With double_dqn the maximizing action comes from `online` instead.
std::vector<double> td_targets(const QNetwork& target, const QNetwork& online,
                               std::span<const Transition* const> batch, double gamma, bool double_dqn);

/// Mean squared TD error over the batch and its gradient with respect to
/// net.params(), targets held fixed.
struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};
LossAndGradient loss_and_gradient(const QNetwork& net, std::span<const Transition* const> batch,
                                  std::span<const double> targets);
double batch_loss(const QNetwork& net, std::span<const Transition* const> batch, std::span<const double> targets);

/// Adam or plain SGD, both with global-norm gradient clipping.
class Optimizer {
public:
    Optimizer(const DqnConfig& config, std::size_t n_params);
    void apply(QNetwork& net, std::vector<double> gradient);

private:
    std::string kind_;
    double lr_;
    double clip_norm_;
    std::vector<double> m_, v_;
    long step_ = 0;
};

/// One replay update. Returns nullopt (and leaves the network untouched) when
/// the buffer holds fewer than batch_size transitions.
std::optional<double> train_step(QNetwork& net, const QNetwork& target_net, const ReplayBuffer& buffer,
                                 const DqnConfig& config, Optimizer& optimizer, Rng& rng);

void sync_target(const QNetwork& net, QNetwork& target_net);

/// Shaped reward: +2*max_turns on success, -max_turns on failure or early
/// termination, -1 for every non-terminal turn.
double reward(DialogueStatus outcome, int max_turns);

/// DQN agent bound to one domain.
class DqnAgent : public DialogueAgent {
public:
    DqnAgent(const DomainAssets& assets, DqnConfig config, std::uint64_t seed);

    std::size_t act(const AgentView& view) override;

    void remember(Transition t) { buffer_.push(std::move(t)); }
    /// Runs train_batches_per_epoch updates then syncs the target network.
    /// Returns the mean loss of the updates performed (0 if none ran).
    double train_epoch();

    void set_epsilon(double eps) { epsilon_ = eps; }
    double epsilon() const { return epsilon_; }
    /// Linear anneal from epsilon_start (epoch 1) to epsilon_end (last epoch).
    double epsilon_for_epoch(int epoch, int total_epochs) const;

    const QNetwork& network() const { return net_; }
    const QNetwork& target_network() const { return target_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    const Featurizer& featurizer() const { return featurizer_; }
    const AgentActionSet& actions() const { return actions_; }
    const DqnConfig& config() const { return config_; }

    int epoch() const { return epoch_; }
    void set_epoch(int e) { epoch_ = e; }

    void save_checkpoint(const std::filesystem::path& path, const std::string& domain) const;
    /// Restores weights, epoch counter and RNG state; domain and shapes must match.
    void load_checkpoint(const std::filesystem::path& path);

private:
    Featurizer featurizer_;
    AgentActionSet actions_;
    DqnConfig config_;
    std::uint64_t seed_;
    Rng rng_;
    QNetwork net_;
    QNetwork target_;
    ReplayBuffer buffer_;
    Optimizer optimizer_;
    double epsilon_;
    int epoch_ = 0;
};

/// Frozen greedy policy loaded from a checkpoint; safe to share across threads.
struct PolicyCheckpoint {
    std::string domain;
    QNetwork network;
    DqnConfig config;
    std::uint64_t seed = 0;
    int epoch = 0;
    std::string rng_state;
};

nlohmann::json checkpoint_json(const PolicyCheckpoint& ckpt);
PolicyCheckpoint checkpoint_from_json(const nlohmann::json& j);
/// Throws NotFoundError if the file does not exist, ConfigError if malformed.
PolicyCheckpoint load_checkpoint_file(const std::filesystem::path& path);

}  // namespace affectsim
