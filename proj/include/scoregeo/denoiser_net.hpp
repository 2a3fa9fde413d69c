#pragma once

#include <string>
#include <vector>

#include "scoregeo/rng.hpp"
#include "scoregeo/schedule.hpp"
#include "scoregeo/score_field.hpp"

namespace scoregeo {

// Small fully-connected noise predictor eps_theta(x, t) with a sinusoidal
// time embedding. tanh activations keep the map C-infinity, which the
// geodesic objective needs (it differentiates the score twice).
class DenoiserNet {
  public:
    struct Arch {
        std::vector<int> hidden = {64, 64};
        int time_emb_dim = 16; // even; sin/cos pairs
    };

    DenoiserNet(int dim, int t_max, Arch arch, uint64_t seed);

    int dim() const { return dim_; }
    int t_max() const { return t_max_; }
    const Arch& arch() const { return arch_; }
    std::vector<int> layer_widths() const; // [D+E, hidden..., D]

    Vec eps(const Vec& x, int t) const;

    // Forward-mode directional derivative (d eps / d x) v.
    Vec eps_jvp(const Vec& x, int t, const Vec& v) const;

    // Reverse mode: grad_x [ w . eps(x, t) ] = (d eps / d x)' w.
    Vec eps_input_grad(const Vec& x, int t, const Vec& w) const;

    // Forward-over-reverse: grad_x [ w . (d eps / d x) v ].
    Vec eps_grad_form(const Vec& x, int t, const Vec& w, const Vec& v) const;

    // Flat parameter access for the optimizer and serialization.
    int num_params() const;
    Vec get_params() const;
    void set_params(const Vec& p);

    // Mean-squared loss on one batch of (x_t, t, eps) triples and its
    // parameter gradient, accumulated in fixed order.
    double loss_and_param_grad(const std::vector<Vec>& x_t, const std::vector<int>& ts,
                               const std::vector<Vec>& eps_target, Vec& grad) const;

  private:
    Vec time_embedding(int t) const;
    template <class S>
    std::vector<S> forward_impl(const std::vector<S>& input) const;
    template <class S>
    std::vector<S> input_grad_impl(const std::vector<S>& input, const Vec& cotangent) const;

    int dim_;
    int t_max_;
    Arch arch_;
    std::vector<Mat> weights_;
    std::vector<Vec> biases_;
};

struct TrainConfig {
    int epochs = 20;
    int steps_per_epoch = 200;
    int batch_size = 64;
    double lr = 1e-3;
    uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> epoch_loss; // mean batch loss per epoch
};

// Minimizes E || eps - eps_theta(x_t, t) ||^2 over random t and eps drawn
// uniformly from [1, T] and N(0, I). Throws numerical_error on divergence.
TrainReport train_denoiser(DenoiserNet& net, const std::vector<Vec>& data, const Schedule& schedule,
                           const TrainConfig& cfg);

// s(x, t) = -eps_theta(x, t) / sqrt(1 - abar_t); undefined at t = 0.
Vec net_score(const DenoiserNet& net, const Vec& x, int t, const Schedule& schedule);
Vec net_jvp(const DenoiserNet& net, const Vec& x, int t, const Vec& v, const Schedule& schedule);

// ScoreField view of a trained denoiser; supported times are [1, T].
class NetScoreField final : public ScoreField {
  public:
    NetScoreField(DenoiserNet net, Schedule schedule);

    int dim() const override { return net_.dim(); }
    int min_time() const override { return 1; }
    int max_time() const override { return schedule_.T; }
    Vec score(const Vec& x, int t) const override;
    Vec jvp(const Vec& x, int t, const Vec& v) const override;
    Vec vjp(const Vec& x, int t, const Vec& w) const override;
    Vec grad_jvp_form(const Vec& x, int t, const Vec& u, const Vec& v) const override;

    const DenoiserNet& net() const { return net_; }
    const Schedule& schedule() const { return schedule_; }

  private:
    double score_scale(int t) const; // -1/sqrt(1-abar_t)
    DenoiserNet net_;
    Schedule schedule_;
};

// Flat binary weight file with a versioned header.
void save_net(const DenoiserNet& net, const std::string& path);
DenoiserNet load_net(const std::string& path);

} // namespace scoregeo
