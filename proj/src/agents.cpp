#include "ksamp/agents.hpp"

#include <algorithm>
#include <cmath>

namespace ksamp {

Tensor4 state_to_tensor(const EpisodeState& state, int h, int w) {
    const int alpha = int(state.recon_history.size());
    Tensor4 t(1, alpha + 1, h, w);
    for (int a = 0; a < alpha; ++a) {
        const auto& img = state.recon_history[std::size_t(a)];
        require(img.size() == std::size_t(h) * std::size_t(w), ErrorKind::InvalidArgument,
                "state_to_tensor: history shape mismatch");
        std::copy(img.begin(), img.end(), t.data.begin() + std::size_t(a) * img.size());
    }
    require(state.mask.size == w, ErrorKind::InvalidArgument,
            "state_to_tensor: mask width mismatch");
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            t.at(0, alpha, y, x) = state.mask.is_set(x) ? 1.0 : 0.0;
    return t;
}

std::vector<LayerSpec> make_policy_layers(int h, int w, int alpha, int conv_channels,
                                          int dense_hidden) {
    require(h % 8 == 0 && w % 8 == 0, ErrorKind::Config,
            "policy net: image dims must be divisible by 8");
    const int c = conv_channels;
    return {
        LayerSpec::conv(alpha + 1, c, 3),
        LayerSpec::relu(),
        LayerSpec::avg_pool2(),
        LayerSpec::conv(c, 2 * c, 3),
        LayerSpec::relu(),
        LayerSpec::avg_pool2(),
        LayerSpec::conv(2 * c, 2 * c, 3),
        LayerSpec::relu(),
        LayerSpec::avg_pool2(),
        LayerSpec::dense(2 * c * (h / 8) * (w / 8), dense_hidden),
        LayerSpec::relu(),
        LayerSpec::dense(dense_hidden, w),
    };
}

namespace {

std::vector<std::uint8_t> legal_bits(const Mask& mask) {
    std::vector<std::uint8_t> legal(std::size_t(mask.size));
    for (int j = 0; j < mask.size; ++j) legal[std::size_t(j)] = mask.is_set(j) ? 0 : 1;
    return legal;
}

PolicyOutput output_from_scores(std::vector<double> scores, const Mask& mask) {
    PolicyOutput out;
    out.scores = std::move(scores);
    out.legal = legal_bits(mask);
    return out;
}

}  // namespace

PolicyOutput q_forward(const NetParams& net, const EpisodeState& state, int h, int w) {
    Tensor4 in = state_to_tensor(state, h, w);
    Tensor4 scores = net_forward(net, in);
    require(scores.c == w && scores.h == 1 && scores.w == 1, ErrorKind::InvalidArgument,
            "q_forward: net output does not cover the frequency bins");
    std::vector<double> s(scores.data.begin(), scores.data.end());
    return output_from_scores(std::move(s), state.mask);
}

int argmax_legal(const PolicyOutput& out) {
    int best = -1;
    double best_score = 0.0;
    for (std::size_t j = 0; j < out.scores.size(); ++j) {
        if (!out.legal[j]) continue;
        if (best < 0 || out.scores[j] > best_score) {
            best = int(j);
            best_score = out.scores[j];
        }
    }
    require(best >= 0, ErrorKind::InvalidArgument, "argmax_legal: no legal action");
    return best;
}

std::vector<double> masked_softmax(const PolicyOutput& out) {
    double top = 0.0;
    bool any = false;
    for (std::size_t j = 0; j < out.scores.size(); ++j) {
        if (!out.legal[j]) continue;
        if (!any || out.scores[j] > top) top = out.scores[j];
        any = true;
    }
    require(any, ErrorKind::InvalidArgument, "masked_softmax: no legal action");
    std::vector<double> p(out.scores.size(), 0.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < out.scores.size(); ++j) {
        if (!out.legal[j]) continue;
        p[j] = std::exp(out.scores[j] - top);
        sum += p[j];
    }
    for (auto& v : p) v /= sum;
    return p;
}

double distribution_entropy(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double ddqn_target_value(double r, const std::vector<double>& next_scores,
                         const std::vector<std::uint8_t>& next_legal, bool terminal,
                         double gamma) {
    if (terminal) return r;
    double best = 0.0;
    bool any = false;
    for (std::size_t j = 0; j < next_scores.size(); ++j) {
        if (!next_legal[j]) continue;
        if (!any || next_scores[j] > best) best = next_scores[j];
        any = true;
    }
    require(any, ErrorKind::InvalidArgument, "ddqn_target: no legal action in next state");
    return r + gamma * best;
}

double ddqn_target(double r, const EpisodeState& next, bool terminal, const NetParams& q_eval,
                   double gamma, int h, int w) {
    if (terminal) return r;
    PolicyOutput out = q_forward(q_eval, next, h, w);
    return ddqn_target_value(r, out.scores, out.legal, terminal, gamma);
}

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma,
                                       ReturnMode mode) {
    require(!rewards.empty(), ErrorKind::InvalidArgument, "discounted_returns: empty rewards");
    const std::size_t T = rewards.size();
    std::vector<double> g(T, 0.0);
    if (mode == ReturnMode::TimeShifted) {
        double acc = 0.0;
        for (std::size_t t = T; t-- > 0;) {
            acc = rewards[t] + gamma * acc;
            g[t] = acc;
        }
    } else {
        // Exponent pinned to the absolute step index: G_t = sum gamma^{k-1} r_k,
        // so G_t = gamma^t r_{t+1} + G_{t+1} (with 0^0 == 1).
        double acc = 0.0;
        for (std::size_t t = T; t-- > 0;) {
            acc += std::pow(gamma, double(t)) * rewards[t];
            g[t] = acc;
        }
    }
    return g;
}

namespace {

double epsilon_at(const DdqnConfig& cfg, int epoch) {
    const double decay_epochs = std::max(1.0, cfg.epsilon_decay_fraction * double(cfg.epochs));
    if (double(epoch) >= decay_epochs) return cfg.epsilon_end;
    return cfg.epsilon_start +
           (cfg.epsilon_end - cfg.epsilon_start) * double(epoch) / decay_epochs;
}

Tensor4 batch_states(const std::vector<const EpisodeState*>& states, int h, int w) {
    const int alpha = int(states.front()->recon_history.size());
    Tensor4 t(int(states.size()), alpha + 1, h, w);
    for (std::size_t i = 0; i < states.size(); ++i) {
        Tensor4 one = state_to_tensor(*states[i], h, w);
        std::copy(one.data.begin(), one.data.end(),
                  t.data.begin() + std::ptrdiff_t(i * one.size()));
    }
    return t;
}

std::vector<double> row_scores(const Tensor4& out, int row) {
    std::vector<double> s(std::size_t(out.c));
    for (int j = 0; j < out.c; ++j) s[std::size_t(j)] = out.at(row, j, 0, 0);
    return s;
}

Mask greedy_mask_impl(const NetParams& net, const EnvConfig& env_cfg, const CineSeries& series) {
    SamplingEnv env(env_cfg, series);
    const int h = env.height(), w = env.width();
    auto policy = [&](const EpisodeState& s) { return argmax_legal(q_forward(net, s, h, w)); };
    auto transitions = env.rollout(policy);
    return transitions.empty() ? env.reset().mask : transitions.back().next_state.mask;
}

struct EpochStats {
    double nrmse_sum = 0.0;
    double reward_sum = 0.0;
    int steps = 0;
};

}  // namespace

TrainResult ddqn_train(const EnvConfig& env_cfg, const Dataset& ds, const DdqnConfig& cfg,
                       std::uint64_t seed) {
    require(!ds.train.empty(), ErrorKind::InvalidArgument, "ddqn_train: empty train split");
    require(cfg.batch_size >= 1 && cfg.epochs >= 0, ErrorKind::Config, "ddqn_train: bad config");
    require(cfg.target_sync_period >= 1, ErrorKind::Config, "ddqn_train: bad sync period");

    std::vector<SamplingEnv> envs;
    envs.reserve(ds.train.size());
    for (const auto& s : ds.train) envs.emplace_back(env_cfg, s);
    const int h = envs.front().height(), w = envs.front().width();
    require(env_cfg.budget_s <= w - env_cfg.base_b, ErrorKind::Config,
            "ddqn_train: budget exceeds the legal action space");

    TrainResult result;
    result.net = make_net(
        make_policy_layers(h, w, env_cfg.alpha, cfg.conv_channels, cfg.dense_hidden), seed);
    NetParams target = result.net;

    ReplayBuffer buffer(std::size_t(cfg.replay_capacity));
    Rng explore_rng(seed ^ 0x6a09e667f3bcc909ull);
    Rng sample_rng(seed ^ 0xbb67ae8584caa73bull);

    AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    adam.weight_decay = cfg.l2_weight;

    long grad_steps = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double eps = epsilon_at(cfg, epoch);
        SamplingEnv& env = envs[std::size_t(epoch) % envs.size()];

        EpochStats stats;
        double td_loss_sum = 0.0;
        int td_updates = 0;

        EpisodeState state = env.reset();
        while (state.step_index < env_cfg.budget_s) {
            int action;
            if (explore_rng.uniform01() < eps) {
                auto legal = legal_actions(state.mask);
                action = legal[std::size_t(explore_rng.uniform_below(legal.size()))];
            } else {
                action = argmax_legal(q_forward(result.net, state, h, w));
            }
            SamplingEnv::StepResult sr = env.step(state, action);

            Transition tr;
            tr.state = state;
            tr.action = action;
            tr.reward = sr.reward;
            tr.next_state = sr.next;
            tr.terminal = sr.terminal;
            tr.loss_before = sr.loss_before;
            tr.loss_after = sr.loss_after;
            buffer.push(std::move(tr));

            stats.nrmse_sum += sr.loss_after;
            stats.reward_sum += sr.reward;
            stats.steps += 1;
            state = std::move(sr.next);

            for (int u = 0; u < cfg.updates_per_step; ++u) {
                if (buffer.size() < std::size_t(cfg.batch_size)) break;  // warm-up

                std::vector<const Transition*> batch;
                batch.reserve(std::size_t(cfg.batch_size));
                for (int i = 0; i < cfg.batch_size; ++i) batch.push_back(&buffer.sample(sample_rng));

                std::vector<const EpisodeState*> cur_states, next_states;
                for (const auto* t : batch) {
                    cur_states.push_back(&t->state);
                    next_states.push_back(&t->next_state);
                }

                Tensor4 next_eval = net_forward(target, batch_states(next_states, h, w));
                Tensor4 next_online;
                if (cfg.canonical_double_q)
                    next_online = net_forward(result.net, batch_states(next_states, h, w));

                std::vector<double> targets(batch.size());
                for (std::size_t i = 0; i < batch.size(); ++i) {
                    const Transition& t = *batch[i];
                    if (t.terminal) {
                        targets[i] = t.reward;
                        continue;
                    }
                    PolicyOutput eval_out = output_from_scores(row_scores(next_eval, int(i)),
                                                               t.next_state.mask);
                    if (cfg.canonical_double_q) {
                        PolicyOutput online_out = output_from_scores(
                            row_scores(next_online, int(i)), t.next_state.mask);
                        const int a_star = argmax_legal(online_out);
                        targets[i] = t.reward + cfg.gamma * eval_out.scores[std::size_t(a_star)];
                    } else {
                        targets[i] = ddqn_target_value(t.reward, eval_out.scores, eval_out.legal,
                                                       false, cfg.gamma);
                    }
                }

                ForwardTrace trace;
                Tensor4 q_out = net_forward(result.net, batch_states(cur_states, h, w), &trace);
                Tensor4 out_grad(int(batch.size()), w, 1, 1);
                double loss = 0.0;
                for (std::size_t i = 0; i < batch.size(); ++i) {
                    const double q = q_out.at(int(i), batch[i]->action, 0, 0);
                    const double delta = targets[i] - q;
                    loss += std::abs(delta);
                    const double sign = delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
                    out_grad.at(int(i), batch[i]->action, 0, 0) = -sign / double(batch.size());
                }
                loss /= double(batch.size());
                require(std::isfinite(loss), ErrorKind::Numeric,
                        "ddqn_train: TD loss diverged at epoch " + std::to_string(epoch));
                td_loss_sum += loss;
                td_updates += 1;

                result.net.zero_grad();
                net_backward(result.net, trace, out_grad);
                adam_step(result.net, adam);
                grad_steps += 1;
                if (grad_steps % cfg.target_sync_period == 0) copy_params(result.net, target);
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_nrmse = stats.steps ? stats.nrmse_sum / stats.steps : 0.0;
        rec.mean_reward = stats.steps ? stats.reward_sum / stats.steps : 0.0;
        rec.objective = td_updates ? td_loss_sum / td_updates : 0.0;
        rec.entropy = 0.0;
        rec.epsilon = eps;
        rec.mask = greedy_mask_impl(result.net, env_cfg, ds.train.front());
        result.log.epochs.push_back(std::move(rec));
    }
    return result;
}

TrainResult reinforce_train(const EnvConfig& env_cfg, const Dataset& ds,
                            const ReinforceConfig& cfg, std::uint64_t seed) {
    require(!ds.train.empty(), ErrorKind::InvalidArgument, "reinforce_train: empty train split");
    require(cfg.batch_size >= 1 && cfg.epochs >= 0, ErrorKind::Config,
            "reinforce_train: bad config");

    std::vector<SamplingEnv> envs;
    envs.reserve(ds.train.size());
    for (const auto& s : ds.train) envs.emplace_back(env_cfg, s);
    const int h = envs.front().height(), w = envs.front().width();
    require(env_cfg.budget_s <= w - env_cfg.base_b, ErrorKind::Config,
            "reinforce_train: budget exceeds the legal action space");

    TrainResult result;
    result.net = make_net(
        make_policy_layers(h, w, env_cfg.alpha, cfg.conv_channels, cfg.dense_hidden), seed);

    Rng action_rng(seed ^ 0x3c6ef372fe94f82bull);

    AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    adam.weight_decay = cfg.l2_weight;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        struct StepSample {
            EpisodeState state;
            int action;
        };
        std::vector<StepSample> samples;
        std::vector<double> returns;
        EpochStats stats;

        for (int e = 0; e < cfg.batch_size; ++e) {
            SamplingEnv& env =
                envs[(std::size_t(epoch) * std::size_t(cfg.batch_size) + std::size_t(e)) %
                     envs.size()];
            auto policy = [&](const EpisodeState& s) {
                PolicyOutput out = q_forward(result.net, s, h, w);
                if (cfg.paper_literal_argmax) return argmax_legal(out);
                std::vector<double> p = masked_softmax(out);
                double u = action_rng.uniform01();
                double acc = 0.0;
                int last_legal = -1;
                for (std::size_t j = 0; j < p.size(); ++j) {
                    if (!out.legal[j]) continue;
                    last_legal = int(j);
                    acc += p[j];
                    if (u < acc) return int(j);
                }
                return last_legal;  // numeric tail
            };
            auto transitions = env.rollout(policy);

            std::vector<double> rewards;
            for (const auto& t : transitions) {
                rewards.push_back(t.reward);
                stats.nrmse_sum += t.loss_after;
                stats.reward_sum += t.reward;
                stats.steps += 1;
            }
            if (rewards.empty()) continue;
            std::vector<double> g = discounted_returns(rewards, cfg.gamma, cfg.return_mode);
            for (std::size_t t = 0; t < transitions.size(); ++t) {
                samples.push_back({transitions[t].state, transitions[t].action});
                returns.push_back(g[t]);
            }
        }

        double j_value = 0.0;
        double entropy_sum = 0.0;
        if (!samples.empty()) {
            std::vector<const EpisodeState*> states;
            states.reserve(samples.size());
            for (const auto& s : samples) states.push_back(&s.state);

            ForwardTrace trace;
            Tensor4 logits = net_forward(result.net, batch_states(states, h, w), &trace);
            Tensor4 out_grad(int(samples.size()), w, 1, 1);
            const double inv_batch = 1.0 / double(cfg.batch_size);

            for (std::size_t i = 0; i < samples.size(); ++i) {
                PolicyOutput out =
                    output_from_scores(row_scores(logits, int(i)), samples[i].state.mask);
                std::vector<double> p = masked_softmax(out);
                const double hh = distribution_entropy(p);
                entropy_sum += hh;
                j_value += std::log(std::max(p[std::size_t(samples[i].action)], 1e-300)) *
                           returns[i];

                // Ascent on J + entropy bonus: d(-objective)/d(logit_j).
                for (std::size_t j = 0; j < p.size(); ++j) {
                    if (!out.legal[j]) continue;
                    const double onehot = (int(j) == samples[i].action) ? 1.0 : 0.0;
                    double grad = (p[j] - onehot) * returns[i];
                    if (cfg.entropy_weight != 0.0 && p[j] > 0.0)
                        grad += cfg.entropy_weight * p[j] * (std::log(p[j]) + hh);
                    out_grad.at(int(i), int(j), 0, 0) = grad * inv_batch;
                }
            }
            j_value *= inv_batch;
            require(std::isfinite(j_value), ErrorKind::Numeric,
                    "reinforce_train: objective diverged at epoch " + std::to_string(epoch));

            result.net.zero_grad();
            net_backward(result.net, trace, out_grad);
            adam_step(result.net, adam);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_nrmse = stats.steps ? stats.nrmse_sum / stats.steps : 0.0;
        rec.mean_reward = stats.steps ? stats.reward_sum / stats.steps : 0.0;
        rec.objective = j_value;
        rec.entropy = samples.empty() ? 0.0 : entropy_sum / double(samples.size());
        rec.epsilon = 0.0;
        rec.mask = greedy_mask_impl(result.net, env_cfg, ds.train.front());
        result.log.epochs.push_back(std::move(rec));
    }
    return result;
}

Mask greedy_mask(const NetParams& net, const EnvConfig& env_cfg, const CineSeries& series) {
    return greedy_mask_impl(net, env_cfg, series);
}

}  // namespace ksamp
