#pragma once

#include <cstdint>
#include <vector>

#include "ksamp/env.hpp"
#include "ksamp/net.hpp"
#include "ksamp/rng.hpp"

namespace ksamp {

// FIFO ring of transitions for off-policy updates.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 100) : capacity_(capacity) {
        require(capacity >= 1, ErrorKind::Config, "replay capacity must be >= 1");
    }

    void push(Transition t) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[cursor_] = std::move(t);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    const Transition& sample(Rng& rng) const {
        require(!storage_.empty(), ErrorKind::InvalidArgument, "replay: sampling from empty buffer");
        return storage_[std::size_t(rng.uniform_below(storage_.size()))];
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return storage_[i]; }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> storage_;
};

// One score per frequency bin plus the legality pattern (zero bits of the
// mask). Illegal entries never win an argmax and carry zero probability.
struct PolicyOutput {
    std::vector<double> scores;
    std::vector<std::uint8_t> legal;
};

// State encoding: alpha reconstruction magnitude channels (newest first)
// plus one binary mask channel broadcast across rows.
Tensor4 state_to_tensor(const EpisodeState& state, int h, int w);

// Conv + dense policy/Q trunk; h and w must be divisible by 8.
std::vector<LayerSpec> make_policy_layers(int h, int w, int alpha, int conv_channels,
                                          int dense_hidden);

PolicyOutput q_forward(const NetParams& net, const EpisodeState& state, int h, int w);

// Argmax over legal entries, ties toward the lower centered index.
int argmax_legal(const PolicyOutput& out);

// Probabilities over all bins, zero on illegal entries, softmax over the rest.
std::vector<double> masked_softmax(const PolicyOutput& out);

// Shannon entropy of a probability vector (natural log).
double distribution_entropy(const std::vector<double>& probs);

// Bootstrap target r + gamma * max_legal(scores), or r on terminal states.
double ddqn_target_value(double r, const std::vector<double>& next_scores,
                         const std::vector<std::uint8_t>& next_legal, bool terminal, double gamma);
double ddqn_target(double r, const EpisodeState& next, bool terminal, const NetParams& q_eval,
                   double gamma, int h, int w);

enum class ReturnMode { PaperLiteral, TimeShifted };

// G_t = sum_{k=t+1}^{T} gamma^e r_k with e = k-1 (PaperLiteral, the exponent
// fixed to the absolute step) or e = k-t-1 (TimeShifted, the standard decay
// from the current step).
std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma,
                                       ReturnMode mode);

struct DdqnConfig {
    double gamma = 0.8;
    int epochs = 600;
    int batch_size = 3;
    double learning_rate = 1e-5;
    double l2_weight = 0.0;
    int target_sync_period = 20;  // gradient steps between target syncs
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.6;  // of total epochs
    int updates_per_step = 1;
    int replay_capacity = 100;
    // As written, the target both selects and evaluates with the target
    // network; the canonical switch selects with the online network instead.
    bool canonical_double_q = false;
    int conv_channels = 8;
    int dense_hidden = 64;
};

struct ReinforceConfig {
    double gamma = 0.1;
    int epochs = 600;
    int batch_size = 3;  // episodes per epoch
    double learning_rate = 1e-5;
    double l2_weight = 0.0;
    double entropy_weight = 0.01;
    ReturnMode return_mode = ReturnMode::TimeShifted;
    // Train-time action choice: sample from the policy by default, or take
    // the literal argmax (no exploration).
    bool paper_literal_argmax = false;
    int conv_channels = 8;
    int dense_hidden = 64;
};

struct EpochRecord {
    int epoch = 0;
    double mean_nrmse = 0.0;   // mean post-acquisition loss over the epoch's steps
    double mean_reward = 0.0;
    double objective = 0.0;    // TD loss (DDQN) or J (REINFORCE)
    double entropy = 0.0;      // mean policy entropy (REINFORCE)
    double epsilon = 0.0;      // exploration rate (DDQN)
    Mask mask;                 // greedy mask on the first train series
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    NetParams net;
    TrainLog log;
};

// env_cfg.recon must point at a frozen reconstruction operator; episodes are
// rolled over ds.train round-robin.
TrainResult ddqn_train(const EnvConfig& env_cfg, const Dataset& ds, const DdqnConfig& cfg,
                       std::uint64_t seed);
TrainResult reinforce_train(const EnvConfig& env_cfg, const Dataset& ds,
                            const ReinforceConfig& cfg, std::uint64_t seed);

// One argmax episode on the series; returns the final mask.
Mask greedy_mask(const NetParams& net, const EnvConfig& env_cfg, const CineSeries& series);

}  // namespace ksamp
