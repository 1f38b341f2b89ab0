#include "ksamp/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ksamp/fft.hpp"
#include "ksamp/metrics.hpp"

namespace ksamp {

SamplingEnv::SamplingEnv(const EnvConfig& cfg, const CineSeries& series)
    : cfg_(cfg), series_(&series) {
    require(cfg.recon != nullptr, ErrorKind::Config, "env: no reconstruction operator");
    require(cfg.recon->kind == ReconSpec::Kind::ZeroFill || cfg.recon->frozen,
            ErrorKind::InvalidArgument, "env: reconstruction operator must be frozen");
    require(!series.frames.empty(), ErrorKind::InvalidArgument, "env: empty series");
    require(cfg.alpha >= 1, ErrorKind::Config, "env: alpha must be >= 1");

    height_ = series.frames.front().height;
    width_ = series.frames.front().width;
    require(cfg.base_b >= 0 && cfg.budget_s >= 0 && cfg.base_b + cfg.budget_s <= width_,
            ErrorKind::Config, "env: budget b+s exceeds the mask size");

    spectra_.reserve(series.frames.size());
    for (const auto& f : series.frames) {
        require(f.height == height_ && f.width == width_, ErrorKind::InvalidArgument,
                "env: series frames disagree on shape");
        spectra_.push_back(fft2(f));
    }
}

std::vector<double> SamplingEnv::recon_magnitude(const Mask& mask, int frame_index) const {
    ComplexImage rec = recon(*cfg_.recon, apply_mask(spectra_[std::size_t(frame_index)], mask));
    return magnitude(rec);
}

double SamplingEnv::frame_loss(const Mask& mask, int frame_index) const {
    ComplexImage rec = recon(*cfg_.recon, apply_mask(spectra_[std::size_t(frame_index)], mask));
    return nrmse(rec, series_->frames[std::size_t(frame_index)]);
}

EpisodeState SamplingEnv::reset() {
    EpisodeState s;
    s.mask = make_low_frequency_mask(width_, cfg_.base_b);
    s.mask.base_count = cfg_.base_b;
    s.step_index = 0;
    s.series_id = int(series_->id);
    std::vector<double> first = recon_magnitude(s.mask, 0);
    s.recon_history.assign(std::size_t(cfg_.alpha), first);
    return s;
}

SamplingEnv::StepResult SamplingEnv::step(const EpisodeState& state, int action) {
    require(state.step_index < cfg_.budget_s, ErrorKind::InvalidArgument,
            "env: step after terminal state");
    require(action >= 0 && action < width_, ErrorKind::InvalidArgument,
            "env: action out of range");
    require(!state.mask.is_set(action), ErrorKind::InvalidArgument,
            "env: action re-observes a sampled frequency");

    const int t = state.step_index + 1;
    const int frame = t % int(series_->frames.size());

    Mask new_mask = state.mask;
    new_mask.set(action);

    StepResult r;
    r.loss_before = frame_loss(state.mask, frame);
    std::vector<double> rec_after = recon_magnitude(new_mask, frame);
    {
        ComplexImage rec(height_, width_);
        for (std::size_t i = 0; i < rec.size(); ++i) rec.data[i] = rec_after[i];
        r.loss_after = nrmse(rec, series_->frames[std::size_t(frame)]);
    }
    const double diff =
        cfg_.literal_reward_sign ? r.loss_after - r.loss_before : r.loss_before - r.loss_after;
    r.reward = std::max(diff, 0.0);

    r.next.mask = std::move(new_mask);
    r.next.step_index = t;
    r.next.series_id = state.series_id;
    r.next.recon_history.reserve(std::size_t(cfg_.alpha));
    r.next.recon_history.push_back(std::move(rec_after));
    for (int i = 0; i + 1 < cfg_.alpha; ++i)
        r.next.recon_history.push_back(state.recon_history[std::size_t(i)]);
    r.terminal = (t == cfg_.budget_s);
    return r;
}

std::vector<Transition> SamplingEnv::rollout(
    const std::function<int(const EpisodeState&)>& policy) {
    std::vector<Transition> out;
    EpisodeState state = reset();
    while (state.step_index < cfg_.budget_s) {
        const int action = policy(state);
        require(action >= 0 && action < width_ && !state.mask.is_set(action),
                ErrorKind::InvalidArgument, "rollout: policy returned an observed frequency");
        StepResult r = step(state, action);
        Transition tr;
        tr.state = state;
        tr.action = action;
        tr.reward = r.reward;
        tr.next_state = r.next;
        tr.terminal = r.terminal;
        tr.loss_before = r.loss_before;
        tr.loss_after = r.loss_after;
        out.push_back(std::move(tr));
        state = out.back().next_state;
    }
    return out;
}

std::vector<int> legal_actions(const Mask& mask) {
    std::vector<int> out;
    for (int j = 0; j < mask.size; ++j) {
        if (!mask.is_set(j)) out.push_back(j);
    }
    return out;
}

void write_transition_csv(const std::vector<Transition>& transitions, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), ErrorKind::Io, "cannot open for writing: " + path);
    out << "step,action,reward,loss_before,loss_after\n";
    char line[160];
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const Transition& t = transitions[i];
        std::snprintf(line, sizeof(line), "%zu,%d,%.12g,%.12g,%.12g\n", i, t.action, t.reward,
                      t.loss_before, t.loss_after);
        out << line;
    }
    require(out.good(), ErrorKind::Io, "write failed: " + path);
}

}  // namespace ksamp
