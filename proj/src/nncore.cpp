#include "dsaw/nncore.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "dsaw/error.hpp"

namespace dsaw {

double logistic_from_uniform(double u) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    u = std::clamp(u, eps, 1.0 - eps);
    return std::log(u) - std::log1p(-u);
}

double sample_logistic(Rng& rng) { return logistic_from_uniform(rng.uniform()); }

// ---------------------------------------------------------------------------

BatchNormState BatchNormState::identity(std::size_t width, bool affine) {
    BatchNormState bn;
    bn.gamma.assign(width, 1.0);
    bn.beta.assign(width, 0.0);
    bn.running_mean.assign(width, 0.0);
    bn.running_var.assign(width, 1.0);
    bn.affine = affine;
    return bn;
}

void BatchNormState::project_gamma(double floor) {
    if (!affine) return;
    for (auto& g : gamma) g = std::max(g, floor);
}

void BatchNormState::validate() const {
    const std::size_t w = width();
    if (gamma.size() != w || beta.size() != w || running_var.size() != w)
        throw IntegrityError("batch norm state has inconsistent widths");
    for (std::size_t j = 0; j < w; ++j) {
        if (affine && !(gamma[j] > 0.0))
            throw IntegrityError("batch norm gamma[" + std::to_string(j) + "] is not positive");
        if (!(running_var[j] >= 0.0))
            throw IntegrityError("batch norm running_var[" + std::to_string(j) + "] is negative");
    }
}

Matrix batch_norm_forward(const Matrix& x, const BatchNormState& bn, Mode mode, BatchNormCache* cache) {
    const std::size_t n = x.rows();
    const std::size_t e = x.cols();
    if (e != bn.width()) throw UsageError("batch norm width mismatch");
    if (mode == Mode::train && n < 2) throw UsageError("batch norm in train mode needs a batch of at least 2");

    std::vector<double> mean(e), var(e), inv_std(e);
    if (mode == Mode::train) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < e; ++j) mean[j] += x(r, j);
        for (auto& m : mean) m /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < e; ++j) {
                double d = x(r, j) - mean[j];
                var[j] += d * d;
            }
        for (auto& v : var) v /= static_cast<double>(n);
    } else {
        mean = bn.running_mean;
        var = bn.running_var;
    }
    for (std::size_t j = 0; j < e; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + bn.epsilon);

    Matrix xhat(n, e), y(n, e);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < e; ++j) {
            double h = (x(r, j) - mean[j]) * inv_std[j];
            xhat(r, j) = h;
            y(r, j) = h * bn.scale(j) + bn.shift(j);
        }
    if (cache) {
        cache->mode = mode;
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
        cache->batch_mean = std::move(mean);
        cache->batch_var = std::move(var);
    }
    return y;
}

void update_running_stats(BatchNormState& bn, const BatchNormCache& cache, std::size_t batch_size) {
    if (cache.mode != Mode::train) return;
    const double m = bn.momentum;
    const double unbias = static_cast<double>(batch_size) / static_cast<double>(batch_size - 1);
    for (std::size_t j = 0; j < bn.width(); ++j) {
        bn.running_mean[j] = (1.0 - m) * bn.running_mean[j] + m * cache.batch_mean[j];
        bn.running_var[j] = (1.0 - m) * bn.running_var[j] + m * cache.batch_var[j] * unbias;
    }
}

Matrix batch_norm(const Matrix& x, BatchNormState& bn, Mode mode) {
    BatchNormCache cache;
    Matrix y = batch_norm_forward(x, bn, mode, &cache);
    update_running_stats(bn, cache, x.rows());
    return y;
}

Matrix batch_norm_backward(const Matrix& dy, const BatchNormCache& cache, const BatchNormState& bn,
                           std::span<double> dgamma, std::span<double> dbeta) {
    const std::size_t n = dy.rows();
    const std::size_t e = dy.cols();
    Matrix dx(n, e);
    for (std::size_t j = 0; j < e; ++j) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            sum_dy += dy(r, j);
            sum_dy_xhat += dy(r, j) * cache.xhat(r, j);
        }
        if (bn.affine) {
            dgamma[j] += sum_dy_xhat;
            dbeta[j] += sum_dy;
        }
        const double g = bn.scale(j);
        const double is = cache.inv_std[j];
        if (cache.mode == Mode::eval) {
            for (std::size_t r = 0; r < n; ++r) dx(r, j) = dy(r, j) * g * is;
        } else {
            // dx = g*is/n * (n*dy - sum(dy) - xhat*sum(dy*xhat))
            const double nn = static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r)
                dx(r, j) = g * is / nn * (nn * dy(r, j) - sum_dy - cache.xhat(r, j) * sum_dy_xhat);
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------

std::vector<double> btl_apply(std::span<const double> state, std::span<const double> effect,
                              const BatchNormState& bn, double tau, std::span<const double> noise) {
    const std::size_t e = state.size();
    if (effect.size() != e || noise.size() != e || bn.width() != e)
        throw UsageError("btl_apply: shape mismatch");
    std::vector<double> out(e);
    for (std::size_t j = 0; j < e; ++j) out[j] = binary_concrete(bn.eval(j, state[j]) + effect[j], tau, noise[j]);
    return out;
}

BitSet btl_apply_limit(const BitSet& state, std::span<const double> effect, const BatchNormState& bn) {
    const std::size_t e = state.size();
    if (effect.size() != e || bn.width() != e) throw UsageError("btl_apply_limit: shape mismatch");
    BitSet out(e);
    for (std::size_t j = 0; j < e; ++j)
        if (binary_concrete_limit(bn.eval(j, state.test(j) ? 1.0 : 0.0) + effect[j], 0.0) > 0.5) out.set(j);
    return out;
}

Matrix btl_apply_batch(const Matrix& states, const Matrix& effects, const BatchNormState& bn, double tau,
                       const Matrix& noise, Mode mode) {
    if (effects.rows() != states.rows() || effects.cols() != states.cols() || noise.rows() != states.rows() ||
        noise.cols() != states.cols())
        throw UsageError("btl_apply_batch: shape mismatch");
    Matrix y = batch_norm_forward(states, bn, mode);
    for (std::size_t r = 0; r < y.rows(); ++r)
        for (std::size_t j = 0; j < y.cols(); ++j) y(r, j) = binary_concrete(y(r, j) + effects(r, j), tau, noise(r, j));
    return y;
}

// ---------------------------------------------------------------------------

namespace {
// floor() of a ratio that should be integral when t lands on a step boundary
double stepped(double t, double anneal_start, double step) {
    return std::floor((t - anneal_start) / step + 1e-9) * step;
}
}  // namespace

double temperature_literal(double t, double tau_start, double tau_end, double anneal_start, double step) {
    if (t < anneal_start) return tau_start;
    return tau_start * std::exp(std::log(tau_end / tau_start) * stepped(t, anneal_start, step));
}

double AnnealSchedule::operator()(double t) const {
    if (t < anneal_start || total_epochs <= anneal_start) return tau_start;
    double span = total_epochs - anneal_start;
    double tau = tau_start * std::exp(std::log(tau_end / tau_start) * stepped(t, anneal_start, step) / span);
    return std::clamp(tau, tau_end, tau_start);
}

// ---------------------------------------------------------------------------

std::string_view to_string(InitDistribution d) {
    switch (d) {
        case InitDistribution::logistic: return "logistic";
        case InitDistribution::gaussian: return "gaussian";
        case InitDistribution::uniform: return "uniform";
        case InitDistribution::zeros: return "zeros";
    }
    return "?";
}

InitDistribution parse_init_distribution(std::string_view s) {
    if (s == "logistic") return InitDistribution::logistic;
    if (s == "gaussian") return InitDistribution::gaussian;
    if (s == "uniform") return InitDistribution::uniform;
    if (s == "zeros") return InitDistribution::zeros;
    throw UsageError("unknown init distribution '" + std::string(s) + "'");
}

Matrix init_weights(std::size_t rows, std::size_t cols, InitDistribution dist, Rng& rng) {
    Matrix m(rows, cols);
    const double half_width = cols ? 0.5 / static_cast<double>(cols) : 0.0;
    for (auto& x : m.data()) {
        switch (dist) {
            case InitDistribution::logistic: x = sample_logistic(rng); break;
            case InitDistribution::gaussian: x = rng.normal(); break;
            case InitDistribution::uniform: x = (rng.uniform() * 2.0 - 1.0) * half_width; break;
            case InitDistribution::zeros: x = 0.0; break;
        }
    }
    return m;
}

}  // namespace dsaw
