#pragma once

#include <functional>
#include <vector>

#include "ksamp/recon.hpp"

namespace ksamp {

// Episode mechanics over one cine series: the mask starts from the low
// frequency base, one frequency is added per step while the series advances
// one frame, and the reward is the clamped one-step NRMSE change on the
// frame being acquired.
struct EnvConfig {
    int alpha = 8;       // reconstruction history length
    int base_b = 4;      // always-on low frequencies
    int budget_s = 4;    // actions per episode
    const ReconSpec* recon = nullptr;  // frozen reconstruction operator
    // Reward sign convention. Default rewards the loss drop
    // max(L_prev - L_new, 0); the literal flag rewards the increase
    // max(L_new - L_prev, 0) instead.
    bool literal_reward_sign = false;
};

struct EpisodeState {
    std::vector<std::vector<double>> recon_history;  // alpha magnitude images, newest first
    Mask mask;
    int step_index = 0;
    int series_id = -1;
};

struct Transition {
    EpisodeState state;
    int action = -1;
    double reward = 0.0;
    EpisodeState next_state;
    bool terminal = false;
    // Diagnostics for logs: losses on the acquired frame before/after.
    double loss_before = 0.0;
    double loss_after = 0.0;
};

class SamplingEnv {
public:
    SamplingEnv(const EnvConfig& cfg, const CineSeries& series);

    EpisodeState reset();

    struct StepResult {
        EpisodeState next;
        double reward = 0.0;
        bool terminal = false;
        double loss_before = 0.0;
        double loss_after = 0.0;
    };
    // Rejects re-observed bits and stepping past the budget.
    StepResult step(const EpisodeState& state, int action);

    // Runs one full episode; the policy must return a legal (unobserved)
    // action for every state it sees.
    std::vector<Transition> rollout(const std::function<int(const EpisodeState&)>& policy);

    const EnvConfig& config() const { return cfg_; }
    const CineSeries& series() const { return *series_; }
    int height() const { return height_; }
    int width() const { return width_; }

    // NRMSE of the reconstruction of frame `frame_index` under `mask`.
    double frame_loss(const Mask& mask, int frame_index) const;

private:
    std::vector<double> recon_magnitude(const Mask& mask, int frame_index) const;

    EnvConfig cfg_;
    const CineSeries* series_;
    int height_ = 0, width_ = 0;
    std::vector<ComplexImage> spectra_;  // per-frame FFT, computed once
};

// Legal actions are exactly the zero bits of the mask.
std::vector<int> legal_actions(const Mask& mask);

void write_transition_csv(const std::vector<Transition>& transitions, const std::string& path);

}  // namespace ksamp
