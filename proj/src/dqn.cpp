#include "affectsim/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "affectsim/errors.hpp"

namespace affectsim {

// ---------------------------------------------------------------------------
// Network

QNetwork::QNetwork(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim)
    : input_(input_dim),
      hidden_(hidden_dim),
      output_(output_dim),
      params_(hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim, 0.0) {
    if (input_ == 0 || hidden_ == 0 || output_ == 0) throw ConfigError("Q-network dimensions must be positive");
}

void QNetwork::initialize(Rng& rng) {
    std::fill(params_.begin(), params_.end(), 0.0);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(input_));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
    double* w1 = params_.data();
    for (std::size_t i = 0; i < hidden_ * input_; ++i) w1[i] = (2.0 * rng.uniform() - 1.0) * r1;
    double* w2 = params_.data() + hidden_ * (input_ + 1);
    for (std::size_t i = 0; i < output_ * hidden_; ++i) w2[i] = (2.0 * rng.uniform() - 1.0) * r2;
}

namespace {

// Forward pass keeping the hidden activations for backprop.
void forward_into(const QNetwork& net, std::span<const double> s, std::vector<double>& hidden,
                  std::vector<double>& out) {
    const std::size_t in = net.input_dim(), h = net.hidden_dim(), o = net.output_dim();
    const auto w1 = net.hidden_weights();
    const auto b1 = net.hidden_bias();
    const auto w2 = net.output_weights();
    const auto b2 = net.output_bias();
    hidden.assign(h, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
        double z = b1[j];
        const double* row = w1.data() + j * in;
        for (std::size_t i = 0; i < in; ++i) z += row[i] * s[i];
        hidden[j] = z > 0.0 ? z : 0.0;
    }
    out.assign(o, 0.0);
    for (std::size_t k = 0; k < o; ++k) {
        double q = b2[k];
        const double* row = w2.data() + k * h;
        for (std::size_t j = 0; j < h; ++j) q += row[j] * hidden[j];
        out[k] = q;
    }
}

void check_dim(const QNetwork& net, std::span<const double> s) {
    if (s.size() != net.input_dim()) {
        throw ConfigError("state dimension " + std::to_string(s.size()) + " does not match network input " +
                          std::to_string(net.input_dim()));
    }
}

}  // namespace

std::vector<double> q_forward(const QNetwork& net, std::span<const double> s) {
    check_dim(net, s);
    std::vector<double> hidden, out;
    forward_into(net, s, hidden, out);
    return out;
}

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw UsageError("sampling from an empty replay buffer");
    std::vector<const Transition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[rng.index(items_.size())]);
    return out;
}

void ReplayBuffer::clear() {
    items_.clear();
    next_ = 0;
}

// ---------------------------------------------------------------------------
// Config

void DqnConfig::validate() const {
    if (hidden == 0) throw ConfigError("hidden size must be positive");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0,1]");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0) {
        throw ConfigError("epsilon must be in [0,1]");
    }
    if (buffer_capacity == 0) throw ConfigError("buffer capacity must be positive");
    if (optimizer != "sgd" && optimizer != "adam") throw ConfigError("optimizer must be 'sgd' or 'adam'");
}

void to_json(nlohmann::json& j, const DqnConfig& c) {
    j = nlohmann::json{{"hidden", c.hidden},
                       {"gamma", c.gamma},
                       {"learning_rate", c.learning_rate},
                       {"batch_size", c.batch_size},
                       {"epsilon_start", c.epsilon_start},
                       {"epsilon_end", c.epsilon_end},
                       {"buffer_capacity", c.buffer_capacity},
                       {"warm_start_dialogues", c.warm_start_dialogues},
                       {"clip_norm", c.clip_norm},
                       {"train_batches_per_epoch", c.train_batches_per_epoch},
                       {"double_dqn", c.double_dqn},
                       {"optimizer", c.optimizer}};
}

void from_json(const nlohmann::json& j, DqnConfig& c) {
    DqnConfig d;
    c.hidden = j.value("hidden", d.hidden);
    c.gamma = j.value("gamma", d.gamma);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.epsilon_start = j.value("epsilon_start", d.epsilon_start);
    c.epsilon_end = j.value("epsilon_end", d.epsilon_end);
    c.buffer_capacity = j.value("buffer_capacity", d.buffer_capacity);
    c.warm_start_dialogues = j.value("warm_start_dialogues", d.warm_start_dialogues);
    c.clip_norm = j.value("clip_norm", d.clip_norm);
    c.train_batches_per_epoch = j.value("train_batches_per_epoch", d.train_batches_per_epoch);
    c.double_dqn = j.value("double_dqn", d.double_dqn);
    c.optimizer = j.value("optimizer", d.optimizer);
    c.validate();
}

// ---------------------------------------------------------------------------
// Action selection and learning

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

std::size_t select_action(const QNetwork& net, std::span<const double> s, double epsilon, Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0) throw UsageError("epsilon must be in [0,1]");
    if (rng.uniform() < epsilon) return rng.index(net.output_dim());
    const auto q = q_forward(net, s);
    return argmax(q);
}

std::vector<double> td_targets(const QNetwork& target, const QNetwork& online,
                               std::span<const Transition* const> batch, double gamma, bool double_dqn) {
    std::vector<double> y;
    y.reserve(batch.size());
    for (const Transition* t : batch) {
        if (t->terminal) {
            y.push_back(t->reward);
            continue;
        }
        const auto q_next = q_forward(target, t->next_state);
        double bootstrap;
        if (double_dqn) {
            bootstrap = q_next[argmax(q_forward(online, t->next_state))];
        } else {
            bootstrap = *std::max_element(q_next.begin(), q_next.end());
        }
        y.push_back(t->reward + gamma * bootstrap);
    }
    return y;
}

double batch_loss(const QNetwork& net, std::span<const Transition* const> batch, std::span<const double> targets) {
    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto q = q_forward(net, batch[b]->state);
        const double delta = q.at(batch[b]->action) - targets[b];
        loss += delta * delta;
    }
    return loss / static_cast<double>(batch.size());
}

LossAndGradient loss_and_gradient(const QNetwork& net, std::span<const Transition* const> batch,
                                  std::span<const double> targets) {
    const std::size_t in = net.input_dim(), h = net.hidden_dim();
    LossAndGradient result;
    result.gradient.assign(net.params().size(), 0.0);
    double* g_w1 = result.gradient.data();
    double* g_b1 = g_w1 + h * in;
    double* g_w2 = g_b1 + h;
    double* g_b2 = g_w2 + net.output_dim() * h;
    const auto w2 = net.output_weights();
    const double scale = 1.0 / static_cast<double>(batch.size());

    std::vector<double> hidden, out;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Transition& t = *batch[b];
        check_dim(net, t.state);
        if (t.action >= net.output_dim()) throw ConfigError("transition action out of range");
        forward_into(net, t.state, hidden, out);
        const double delta = out[t.action] - targets[b];
        result.loss += delta * delta * scale;

        // d(loss)/dQ_a = 2 * delta / B; only the taken action's output carries gradient
        const double dq = 2.0 * delta * scale;
        const std::size_t a = t.action;
        g_b2[a] += dq;
        double* g_row2 = g_w2 + a * h;
        const double* w_row2 = w2.data() + a * h;
        for (std::size_t j = 0; j < h; ++j) {
            g_row2[j] += dq * hidden[j];
            if (hidden[j] <= 0.0) continue;
            const double dz = dq * w_row2[j];
            g_b1[j] += dz;
            double* g_row1 = g_w1 + j * in;
            for (std::size_t i = 0; i < in; ++i) g_row1[i] += dz * t.state[i];
        }
    }
    return result;
}

Optimizer::Optimizer(const DqnConfig& config, std::size_t n_params)
    : kind_(config.optimizer), lr_(config.learning_rate), clip_norm_(config.clip_norm) {
    if (kind_ == "adam") {
        m_.assign(n_params, 0.0);
        v_.assign(n_params, 0.0);
    }
}

void Optimizer::apply(QNetwork& net, std::vector<double> gradient) {
    if (clip_norm_ > 0.0) {
        double norm2 = 0.0;
        for (double g : gradient) norm2 += g * g;
        const double norm = std::sqrt(norm2);
        if (norm > clip_norm_) {
            const double s = clip_norm_ / norm;
            for (double& g : gradient) g *= s;
        }
    }
    auto params = net.params();
    if (kind_ == "adam") {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        ++step_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1 * m_[i] + (1.0 - beta1) * gradient[i];
            v_[i] = beta2 * v_[i] + (1.0 - beta2) * gradient[i] * gradient[i];
            params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
        return;
    }
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * gradient[i];
}

std::optional<double> train_step(QNetwork& net, const QNetwork& target_net, const ReplayBuffer& buffer,
                                 const DqnConfig& config, Optimizer& optimizer, Rng& rng) {
    if (buffer.size() < config.batch_size) return std::nullopt;
    const auto batch = buffer.sample(config.batch_size, rng);
    const auto targets = td_targets(target_net, net, batch, config.gamma, config.double_dqn);
    auto lg = loss_and_gradient(net, batch, targets);
    optimizer.apply(net, std::move(lg.gradient));
    return lg.loss;
}

void sync_target(const QNetwork& net, QNetwork& target_net) {
    if (target_net.params().size() != net.params().size() && target_net.params().size() != 0) {
        throw ConfigError("target network architecture differs");
    }
    target_net = net;
}

double reward(DialogueStatus outcome, int max_turns) {
    switch (outcome) {
        case DialogueStatus::Success: return 2.0 * max_turns;
        case DialogueStatus::Failure:
        case DialogueStatus::Terminated: return -static_cast<double>(max_turns);
        case DialogueStatus::Ongoing: return -1.0;
    }
    return -1.0;
}

// ---------------------------------------------------------------------------
// Agent

DqnAgent::DqnAgent(const DomainAssets& assets, DqnConfig config, std::uint64_t seed)
    : featurizer_(assets.schema, assets.kb),
      actions_(assets.schema),
      config_(std::move(config)),
      seed_(seed),
      rng_(Rng::derive(seed, 7)),
      net_(featurizer_.dimension(), config_.hidden, actions_.size()),
      buffer_(config_.buffer_capacity),
      optimizer_(config_, net_.params().size()),
      epsilon_(config_.epsilon_start) {
    config_.validate();
    net_.initialize(rng_);
    sync_target(net_, target_);
}

std::size_t DqnAgent::act(const AgentView& view) {
    const auto s = featurizer_(view);
    return select_action(net_, s, epsilon_, rng_);
}

double DqnAgent::train_epoch() {
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < config_.train_batches_per_epoch; ++i) {
        auto loss = train_step(net_, target_, buffer_, config_, optimizer_, rng_);
        if (!loss) break;
        total += *loss;
        ++n;
    }
    sync_target(net_, target_);
    ++epoch_;
    return n ? total / static_cast<double>(n) : 0.0;
}

double DqnAgent::epsilon_for_epoch(int epoch, int total_epochs) const {
    if (total_epochs <= 1) return config_.epsilon_start;
    const double frac = std::clamp(static_cast<double>(epoch - 1) / (total_epochs - 1), 0.0, 1.0);
    return config_.epsilon_start + (config_.epsilon_end - config_.epsilon_start) * frac;
}

void DqnAgent::save_checkpoint(const std::filesystem::path& path, const std::string& domain) const {
    PolicyCheckpoint ckpt{domain, net_, config_, seed_, epoch_, rng_.serialize()};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());
    out << checkpoint_json(ckpt).dump() << '\n';
}

void DqnAgent::load_checkpoint(const std::filesystem::path& path) {
    auto ckpt = load_checkpoint_file(path);
    if (ckpt.network.input_dim() != net_.input_dim() || ckpt.network.hidden_dim() != net_.hidden_dim() ||
        ckpt.network.output_dim() != net_.output_dim()) {
        throw ConfigError("checkpoint shape does not match this domain's agent: " + path.string());
    }
    net_ = ckpt.network;
    sync_target(net_, target_);
    epoch_ = ckpt.epoch;
    if (!ckpt.rng_state.empty()) rng_ = Rng::deserialize(ckpt.rng_state);
}

// ---------------------------------------------------------------------------
// Checkpoint files

nlohmann::json checkpoint_json(const PolicyCheckpoint& ckpt) {
    const auto& n = ckpt.network;
    auto layer = [](const char* name, std::size_t rows, std::size_t cols, std::span<const double> w,
                    std::span<const double> b) {
        return nlohmann::json{{"name", name},
                              {"shape", {rows, cols}},
                              {"weights", std::vector<double>(w.begin(), w.end())},
                              {"bias", std::vector<double>(b.begin(), b.end())}};
    };
    return nlohmann::json{
        {"format", "affectsim-dqn/1"},
        {"domain", ckpt.domain},
        {"layers",
         {layer("hidden", n.hidden_dim(), n.input_dim(), n.hidden_weights(), n.hidden_bias()),
          layer("output", n.output_dim(), n.hidden_dim(), n.output_weights(), n.output_bias())}},
        {"activation", "relu"},
        {"hyperparams", ckpt.config},
        {"seed", ckpt.seed},
        {"epoch", ckpt.epoch},
        {"rng_state", ckpt.rng_state}};
}

PolicyCheckpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", "") != "affectsim-dqn/1") throw ConfigError("unrecognized checkpoint format");
        PolicyCheckpoint ckpt;
        ckpt.domain = j.at("domain").get<std::string>();
        ckpt.config = j.at("hyperparams").get<DqnConfig>();
        ckpt.seed = j.value("seed", std::uint64_t{0});
        ckpt.epoch = j.value("epoch", 0);
        ckpt.rng_state = j.value("rng_state", "");
        const auto& layers = j.at("layers");
        if (layers.size() != 2) throw ConfigError("checkpoint must have exactly two layers");
        const auto hs = layers[0].at("shape").get<std::vector<std::size_t>>();
        const auto os = layers[1].at("shape").get<std::vector<std::size_t>>();
        if (hs.size() != 2 || os.size() != 2 || os[1] != hs[0]) throw ConfigError("inconsistent layer shapes");
        QNetwork net(hs[1], hs[0], os[0]);
        auto params = net.params();
        std::size_t offset = 0;
        for (const auto& layer : layers) {
            const auto shape = layer.at("shape").get<std::vector<std::size_t>>();
            const auto w = layer.at("weights").get<std::vector<double>>();
            const auto b = layer.at("bias").get<std::vector<double>>();
            if (w.size() != shape[0] * shape[1] || b.size() != shape[0]) {
                throw ConfigError("layer '" + layer.value("name", "?") + "' size does not match its shape");
            }
            std::copy(w.begin(), w.end(), params.begin() + static_cast<std::ptrdiff_t>(offset));
            offset += w.size();
            std::copy(b.begin(), b.end(), params.begin() + static_cast<std::ptrdiff_t>(offset));
            offset += b.size();
        }
        ckpt.network = std::move(net);
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

PolicyCheckpoint load_checkpoint_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw NotFoundError("checkpoint not found: " + path.string());
    std::ifstream in(path);
    if (!in) throw NotFoundError("checkpoint not readable: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace affectsim
