#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "dsaw/bitset.hpp"
#include "dsaw/matrix.hpp"
#include "dsaw/rng.hpp"

namespace dsaw {

enum class Mode { train, eval };

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(sigmoid(x)) without overflow for large |x|.
inline double log_sigmoid(double x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

/// Logistic(0,1) sample from a uniform variate: log u - log(1-u). `u` is
/// clamped into [eps, 1-eps] so the result stays finite.
double logistic_from_uniform(double u);
double sample_logistic(Rng& rng);

/// sigmoid((logit + noise) / tau). Noise is supplied by the caller so that
/// gradient checks can hold it fixed.
inline double binary_concrete(double logit, double tau, double noise) {
    return sigmoid((logit + noise) / tau);
}

/// The tau -> 0 limit: step(logit + noise), 1 iff strictly positive.
inline double binary_concrete_limit(double logit, double noise) {
    return (logit + noise) > 0.0 ? 1.0 : 0.0;
}

/// Per-dimension BatchNorm parameters and running statistics.
struct BatchNormState {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;
    bool affine = false;

    /// gamma=1, beta=0, running mean 0, running var 1.
    static BatchNormState identity(std::size_t width, bool affine);

    std::size_t width() const { return running_mean.size(); }

    /// Clamps gamma to >= floor. No-op when affine is off.
    void project_gamma(double floor = 1e-3);

    /// Throws IntegrityError on non-positive gamma (affine) or negative
    /// running variance.
    void validate() const;

    double scale(std::size_t j) const { return affine ? gamma[j] : 1.0; }
    double shift(std::size_t j) const { return affine ? beta[j] : 0.0; }

    /// Eval-mode transform of a single value in dimension j.
    double eval(std::size_t j, double x) const {
        return (x - running_mean[j]) / std::sqrt(running_var[j] + epsilon) * scale(j) + shift(j);
    }
};

/// Intermediate values kept by batch_norm_forward for the backward pass.
struct BatchNormCache {
    Mode mode = Mode::eval;
    Matrix xhat;                  // normalized input, before scale/shift
    std::vector<double> inv_std;  // per dimension
    std::vector<double> batch_mean;
    std::vector<double> batch_var;  // biased
};

/// Pure forward pass. Train mode normalizes by batch statistics (requires at
/// least two rows); eval mode uses the running statistics.
Matrix batch_norm_forward(const Matrix& x, const BatchNormState& bn, Mode mode,
                          BatchNormCache* cache = nullptr);

/// Forward pass that also folds the batch statistics into the running
/// statistics in train mode.
Matrix batch_norm(const Matrix& x, BatchNormState& bn, Mode mode);

/// Momentum update of running statistics from one batch. The running variance
/// uses the unbiased batch variance.
void update_running_stats(BatchNormState& bn, const BatchNormCache& cache, std::size_t batch_size);

/// Backward pass. Accumulates into dgamma/dbeta (when affine) and returns dx.
Matrix batch_norm_backward(const Matrix& dy, const BatchNormCache& cache, const BatchNormState& bn,
                           std::span<double> dgamma, std::span<double> dbeta);

/// Back-to-Logit step on one state vector with eval-mode BatchNorm:
/// bc(bn(state) + effect).
std::vector<double> btl_apply(std::span<const double> state, std::span<const double> effect,
                              const BatchNormState& bn, double tau, std::span<const double> noise);

/// The deterministic tau -> 0, zero-noise, eval-mode limit on a binary state.
BitSet btl_apply_limit(const BitSet& state, std::span<const double> effect, const BatchNormState& bn);

/// Batched BTL step: row b of the result is bc(bn(states)_b + effects_b).
/// In train mode BatchNorm uses the statistics of `states`.
Matrix btl_apply_batch(const Matrix& states, const Matrix& effects, const BatchNormState& bn,
                       double tau, const Matrix& noise, Mode mode);

/// Stepped exponential temperature schedule. tau stays at tau_start until
/// anneal_start, then decays in `step`-epoch increments so that it reaches
/// tau_end at total_epochs; the result is clamped to [tau_end, tau_start].
struct AnnealSchedule {
    double tau_start = 5.0;
    double tau_end = 0.7;
    double anneal_start = 1.0;
    double total_epochs = 8.0;
    double step = 0.2;

    double operator()(double t) const;
};

/// The unnormalized stepped form: tau_start * exp(log(tau_end/tau_start) *
/// floor((t-T)/step) * step). Reaches tau_end at t = T + 1.
double temperature_literal(double t, double tau_start, double tau_end, double anneal_start,
                           double step);

enum class InitDistribution { logistic, gaussian, uniform, zeros };

std::string_view to_string(InitDistribution d);
InitDistribution parse_init_distribution(std::string_view s);

/// i.i.d. entries. `uniform` draws from [-0.5/cols, 0.5/cols] as in word2vec.
Matrix init_weights(std::size_t rows, std::size_t cols, InitDistribution dist, Rng& rng);

}  // namespace dsaw
