#include "dsaw/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

#include "dsaw/kernels.hpp"

namespace dsaw {

void RowGradient::clear() {
    for (WordId r : touched_) {
        auto row = grad_.row(r);
        std::fill(row.begin(), row.end(), 0.0);
        mark_[r] = 0;
    }
    touched_.clear();
}

void RowGradient::scale(double s) {
    for (WordId r : touched_)
        for (double& x : grad_.row(r)) x *= s;
}

Gradients::Gradients(const ModelParameters& model)
    : effect(model.vocab_size(), model.width),
      context(has_context_matrix(model.variant) ? model.vocab_size() : 0, model.width),
      gamma(model.width, 0.0),
      beta(model.width, 0.0) {}

void Gradients::clear() {
    effect.clear();
    context.clear();
    std::fill(gamma.begin(), gamma.end(), 0.0);
    std::fill(beta.begin(), beta.end(), 0.0);
}

void Gradients::scale(double s) {
    effect.scale(s);
    context.scale(s);
    for (double& g : gamma) g *= s;
    for (double& b : beta) b *= s;
}

// ---------------------------------------------------------------------------

DiscreteNoise draw_discrete_noise(std::size_t batch, std::size_t width, std::size_t context_steps,
                                  std::size_t negative_slots, Rng& rng) {
    DiscreteNoise n = zero_discrete_noise(batch, width, context_steps, negative_slots, rng);
    auto fill = [&](Matrix& m) {
        for (double& x : m.data()) x = sample_logistic(rng);
    };
    fill(n.target);
    for (auto& m : n.context) fill(m);
    for (auto& m : n.negative) fill(m);
    return n;
}

DiscreteNoise zero_discrete_noise(std::size_t batch, std::size_t width, std::size_t context_steps,
                                  std::size_t negative_slots, Rng& rng) {
    DiscreteNoise n;
    n.initial = Matrix(batch, width);
    for (double& x : n.initial.data()) x = rng.bernoulli(0.5) ? 1.0 : 0.0;
    n.target = Matrix(batch, width);
    n.context.assign(context_steps, Matrix(batch, width));
    n.negative.assign(negative_slots, Matrix(batch, width));
    return n;
}

double bernoulli_kl_half(double logit) {
    const double q = sigmoid(logit);
    return q * log_sigmoid(logit) + (1.0 - q) * log_sigmoid(-logit) + std::log(2.0);
}

LossBreakdown cbow_loss(const Batch& batch, const ModelParameters& model, Gradients* grad, ExecPolicy policy) {
    if (model.variant != Variant::cbow) throw UsageError("cbow_loss requires a cbow model");
    return policy == ExecPolicy::parallel ? kernels::cbow_parallel(batch, model, grad)
                                          : kernels::cbow_serial(batch, model, grad);
}

LossBreakdown sg_loss(const Batch& batch, const ModelParameters& model, Gradients* grad, ExecPolicy policy) {
    if (model.variant != Variant::sg) throw UsageError("sg_loss requires an sg model");
    return policy == ExecPolicy::parallel ? kernels::sg_parallel(batch, model, grad)
                                          : kernels::sg_serial(batch, model, grad);
}

// ---------------------------------------------------------------------------
// Discrete variants

namespace {

/// One Binary Concrete activation over the batch.
struct BcStep {
    Matrix logit;  // bn(state) + effect row, before noise
    Matrix out;
};

template <typename WordOf>
void bc_forward(const Matrix& bn_out, WordOf word_of, const Matrix& effect, const Matrix& noise, double tau,
                BcStep& st) {
    const std::size_t n = bn_out.rows(), e = bn_out.cols();
    st.logit = Matrix(n, e);
    st.out = Matrix(n, e);
    for (std::size_t b = 0; b < n; ++b) {
        auto w = effect.row(word_of(b));
        for (std::size_t j = 0; j < e; ++j) {
            double l = bn_out(b, j) + w[j];
            st.logit(b, j) = l;
            st.out(b, j) = binary_concrete(l, tau, noise(b, j));
        }
    }
}

/// dObjective/dlogit for one step, given dObjective/dout and the KL weight
/// (beta / B, or 0 when the step carries no KL term).
Matrix bc_backward(const BcStep& st, const Matrix& dout, double tau, double kl_weight) {
    Matrix dl(dout.rows(), dout.cols());
    for (std::size_t b = 0; b < dout.rows(); ++b)
        for (std::size_t j = 0; j < dout.cols(); ++j) {
            double y = st.out(b, j);
            double g = dout(b, j) * y * (1.0 - y) / tau;
            if (kl_weight != 0.0) {
                double l = st.logit(b, j);
                double q = sigmoid(l);
                g -= kl_weight * q * (1.0 - q) * l;
            }
            dl(b, j) = g;
        }
    return dl;
}

template <typename WordOf>
void scatter_rows(RowGradient& g, const Matrix& dl, WordOf word_of) {
    for (std::size_t b = 0; b < dl.rows(); ++b) {
        auto row = g.row(word_of(b));
        auto src = dl.row(b);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += src[j];
    }
}

void add_into(Matrix& acc, const Matrix& x) {
    auto a = acc.data();
    auto s = x.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s[i];
}

double shifted_dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - 0.5) * (b[j] - 0.5);
    return s;
}

double kl_sum(const BcStep& st, std::size_t b) {
    double s = 0.0;
    for (double l : st.logit.row(b)) s += bernoulli_kl_half(l);
    return s;
}

void check_discrete_inputs(const Batch& batch, const ModelParameters& model, const DiscreteNoise& noise,
                           std::size_t context_mats, std::size_t negative_mats) {
    const std::size_t n = batch.size(), e = model.width;
    if (n == 0) throw UsageError("empty batch");
    if (batch.negatives.size() != n) throw UsageError("batch negatives do not match samples");
    auto ok = [&](const Matrix& m) { return m.rows() == n && m.cols() == e; };
    if (!ok(noise.initial) || !ok(noise.target) || noise.context.size() != context_mats ||
        noise.negative.size() != negative_mats)
        throw UsageError("discrete noise does not match the batch shape");
    for (const auto& m : noise.context)
        if (!ok(m)) throw UsageError("discrete noise does not match the batch shape");
    for (const auto& m : noise.negative)
        if (!ok(m)) throw UsageError("discrete noise does not match the batch shape");
}

}  // namespace

LossBreakdown dsaw_loss(const Batch& batch, const ModelParameters& model, const DiscreteNoise& noise,
                        const DiscreteOptions& opt, Gradients* grad, BatchNormTrace* trace) {
    if (model.variant != Variant::dsaw) throw UsageError("dsaw_loss requires a dsaw model");
    const std::size_t n = batch.size();
    const std::size_t steps = n ? batch.samples[0].context.size() : 0;
    const std::size_t k = n ? batch.negatives[0].size() : 0;
    check_discrete_inputs(batch, model, noise, steps, k);
    const std::size_t e = model.width;
    const Matrix& w = model.effect;
    const double tau = opt.tau;

    // s^0 is shared by the target, the negatives and the first recurrent step.
    BatchNormCache cache0;
    Matrix bn0 = batch_norm_forward(noise.initial, model.bn, opt.bn_mode, &cache0);

    BcStep target;
    bc_forward(bn0, [&](std::size_t b) { return batch.samples[b].center; }, w, noise.target, tau, target);
    std::vector<BcStep> neg(k);
    for (std::size_t r = 0; r < k; ++r)
        bc_forward(bn0, [&](std::size_t b) { return batch.negatives[b][r]; }, w, noise.negative[r], tau, neg[r]);

    std::vector<BcStep> chain(steps);
    std::vector<BatchNormCache> chain_cache(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        auto word_of = [&](std::size_t b) { return batch.samples[b].context[s]; };
        if (s == 0) {
            bc_forward(bn0, word_of, w, noise.context[0], tau, chain[0]);
        } else {
            Matrix bns = batch_norm_forward(chain[s - 1].out, model.bn, opt.bn_mode, &chain_cache[s]);
            bc_forward(bns, word_of, w, noise.context[s], tau, chain[s]);
        }
    }
    const Matrix& fin = chain[steps - 1].out;

    LossBreakdown loss;
    std::vector<double> pos_dot(n);
    std::vector<std::vector<double>> neg_dot(n, std::vector<double>(k));
    for (std::size_t b = 0; b < n; ++b) {
        pos_dot[b] = shifted_dot(fin.row(b), target.out.row(b));
        loss.positive += log_sigmoid(pos_dot[b]);
        for (std::size_t r = 0; r < k; ++r) {
            neg_dot[b][r] = shifted_dot(fin.row(b), neg[r].out.row(b));
            loss.negative += log_sigmoid(-neg_dot[b][r]);
        }
        loss.kl += kl_sum(target, b);
        for (const auto& st : chain) loss.kl += kl_sum(st, b);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss.positive *= inv_n;
    loss.negative *= inv_n;
    loss.kl *= inv_n;
    loss.total = loss.positive + loss.negative - opt.beta * loss.kl;

    if (trace) {
        trace->clear();
        trace->push_back(cache0);
        for (std::size_t s = 1; s < steps; ++s) trace->push_back(chain_cache[s]);
    }
    if (!grad) return loss;

    // Seeds: d(objective)/d(final state), d/d(target), d/d(negative states).
    Matrix dfin(n, e), dtarget(n, e);
    std::vector<Matrix> dneg(k, Matrix(n, e));
    for (std::size_t b = 0; b < n; ++b) {
        const double gp = sigmoid(-pos_dot[b]) * inv_n;
        for (std::size_t j = 0; j < e; ++j) {
            dfin(b, j) += gp * (target.out(b, j) - 0.5);
            dtarget(b, j) += gp * (fin(b, j) - 0.5);
        }
        for (std::size_t r = 0; r < k; ++r) {
            const double gn = -sigmoid(neg_dot[b][r]) * inv_n;
            for (std::size_t j = 0; j < e; ++j) {
                dfin(b, j) += gn * (neg[r].out(b, j) - 0.5);
                dneg[r](b, j) += gn * (fin(b, j) - 0.5);
            }
        }
    }

    const double klw = opt.beta * inv_n;
    Matrix dbn0(n, e);
    {
        Matrix dl = bc_backward(target, dtarget, tau, klw);
        scatter_rows(grad->effect, dl, [&](std::size_t b) { return batch.samples[b].center; });
        add_into(dbn0, dl);
    }
    for (std::size_t r = 0; r < k; ++r) {
        Matrix dl = bc_backward(neg[r], dneg[r], tau, 0.0);
        scatter_rows(grad->effect, dl, [&](std::size_t b) { return batch.negatives[b][r]; });
        add_into(dbn0, dl);
    }
    Matrix dstate = std::move(dfin);
    for (std::size_t s = steps; s-- > 0;) {
        Matrix dl = bc_backward(chain[s], dstate, tau, klw);
        scatter_rows(grad->effect, dl, [&](std::size_t b) { return batch.samples[b].context[s]; });
        if (s > 0)
            dstate = batch_norm_backward(dl, chain_cache[s], model.bn, grad->gamma, grad->beta);
        else
            add_into(dbn0, dl);
    }
    batch_norm_backward(dbn0, cache0, model.bn, grad->gamma, grad->beta);
    return loss;
}

LossBreakdown sgbtl_loss(const Batch& batch, const ModelParameters& model, const DiscreteNoise& noise,
                         const DiscreteOptions& opt, Gradients* grad, BatchNormTrace* trace) {
    if (model.variant != Variant::sgbtl) throw UsageError("sgbtl_loss requires an sgbtl model");
    const std::size_t n = batch.size();
    const std::size_t positions = n ? batch.samples[0].context.size() : 0;
    const std::size_t slots = n ? batch.negatives[0].size() : 0;
    if (positions == 0 || slots % positions != 0) throw UsageError("sgbtl negatives must be K per context word");
    const std::size_t k = slots / positions;
    check_discrete_inputs(batch, model, noise, positions, slots);
    const std::size_t e = model.width;
    const Matrix& w = model.effect;
    const double tau = opt.tau;

    BatchNormCache cache0;
    Matrix bn0 = batch_norm_forward(noise.initial, model.bn, opt.bn_mode, &cache0);

    BcStep target;
    bc_forward(bn0, [&](std::size_t b) { return batch.samples[b].center; }, w, noise.target, tau, target);
    std::vector<BcStep> ctx(positions), neg(slots);
    for (std::size_t p = 0; p < positions; ++p)
        bc_forward(bn0, [&](std::size_t b) { return batch.samples[b].context[p]; }, w, noise.context[p], tau,
                   ctx[p]);
    for (std::size_t r = 0; r < slots; ++r)
        bc_forward(bn0, [&](std::size_t b) { return batch.negatives[b][r]; }, w, noise.negative[r], tau, neg[r]);

    LossBreakdown loss;
    std::vector<double> pos_dot(n * positions), neg_dot(n * slots);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t p = 0; p < positions; ++p) {
            double d = shifted_dot(target.out.row(b), ctx[p].out.row(b));
            pos_dot[b * positions + p] = d;
            loss.positive += log_sigmoid(d);
            loss.kl += kl_sum(ctx[p], b);
        }
        for (std::size_t r = 0; r < slots; ++r) {
            double d = shifted_dot(target.out.row(b), neg[r].out.row(b));
            neg_dot[b * slots + r] = d;
            loss.negative += log_sigmoid(-d);
        }
        loss.kl += kl_sum(target, b);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss.positive *= inv_n;
    loss.negative *= inv_n;
    loss.kl *= inv_n;
    loss.total = loss.positive + loss.negative - opt.beta * loss.kl;
    (void)k;

    if (trace) {
        trace->clear();
        trace->push_back(cache0);
    }
    if (!grad) return loss;

    Matrix dtarget(n, e);
    std::vector<Matrix> dctx(positions, Matrix(n, e)), dneg(slots, Matrix(n, e));
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t p = 0; p < positions; ++p) {
            const double g = sigmoid(-pos_dot[b * positions + p]) * inv_n;
            for (std::size_t j = 0; j < e; ++j) {
                dtarget(b, j) += g * (ctx[p].out(b, j) - 0.5);
                dctx[p](b, j) += g * (target.out(b, j) - 0.5);
            }
        }
        for (std::size_t r = 0; r < slots; ++r) {
            const double g = -sigmoid(neg_dot[b * slots + r]) * inv_n;
            for (std::size_t j = 0; j < e; ++j) {
                dtarget(b, j) += g * (neg[r].out(b, j) - 0.5);
                dneg[r](b, j) += g * (target.out(b, j) - 0.5);
            }
        }
    }
    const double klw = opt.beta * inv_n;
    Matrix dbn0(n, e);
    {
        Matrix dl = bc_backward(target, dtarget, tau, klw);
        scatter_rows(grad->effect, dl, [&](std::size_t b) { return batch.samples[b].center; });
        add_into(dbn0, dl);
    }
    for (std::size_t p = 0; p < positions; ++p) {
        Matrix dl = bc_backward(ctx[p], dctx[p], tau, klw);
        scatter_rows(grad->effect, dl, [&](std::size_t b) { return batch.samples[b].context[p]; });
        add_into(dbn0, dl);
    }
    for (std::size_t r = 0; r < slots; ++r) {
        Matrix dl = bc_backward(neg[r], dneg[r], tau, 0.0);
        scatter_rows(grad->effect, dl, [&](std::size_t b) { return batch.negatives[b][r]; });
        add_into(dbn0, dl);
    }
    batch_norm_backward(dbn0, cache0, model.bn, grad->gamma, grad->beta);
    return loss;
}

LossBreakdown dsaw_loss(const ContextSample& sample, std::span<const WordId> negatives,
                        const ModelParameters& model, double tau, double beta, Rng& rng) {
    Batch batch;
    batch.samples.push_back(sample);
    batch.negatives.emplace_back(negatives.begin(), negatives.end());
    DiscreteNoise noise = draw_discrete_noise(1, model.width, sample.context.size(), negatives.size(), rng);
    return dsaw_loss(batch, model, noise, DiscreteOptions{tau, beta, Mode::eval}, nullptr);
}

LossBreakdown batch_objective(const Batch& batch, const ModelParameters& model, const DiscreteNoise* noise,
                              const DiscreteOptions& opt, Gradients* grad, BatchNormTrace* trace,
                              ExecPolicy policy) {
    switch (model.variant) {
        case Variant::cbow: return cbow_loss(batch, model, grad, policy);
        case Variant::sg: return sg_loss(batch, model, grad, policy);
        case Variant::dsaw:
            if (!noise) throw UsageError("dsaw objective needs discrete noise");
            return dsaw_loss(batch, model, *noise, opt, grad, trace);
        case Variant::sgbtl:
            if (!noise) throw UsageError("sgbtl objective needs discrete noise");
            return sgbtl_loss(batch, model, *noise, opt, grad, trace);
    }
    throw UsageError("unknown variant");
}

// ---------------------------------------------------------------------------

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, long step, double lr, const AdamConfig& cfg) {
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

AdamState::AdamState(const ModelParameters& model, AdamConfig cfg)
    : config(cfg),
      m_effect(model.effect.rows(), model.effect.cols()),
      v_effect(model.effect.rows(), model.effect.cols()),
      m_context(model.context.rows(), model.context.cols()),
      v_context(model.context.rows(), model.context.cols()),
      m_gamma(model.width, 0.0),
      v_gamma(model.width, 0.0),
      m_beta(model.width, 0.0),
      v_beta(model.width, 0.0) {}

namespace {
void require_finite(std::span<const double> g, const std::string& name) {
    for (double x : g)
        if (!std::isfinite(x)) throw UsageError("non-finite gradient in " + name);
}
}  // namespace

void adam_step(ModelParameters& model, const Gradients& grads, AdamState& state, double lr) {
    for (WordId r : grads.effect.touched_rows())
        require_finite(grads.effect.row(r), "effect matrix row " + std::to_string(r));
    for (WordId r : grads.context.touched_rows())
        require_finite(grads.context.row(r), "context matrix row " + std::to_string(r));
    if (model.bn.affine) {
        require_finite(grads.gamma, "batch norm gamma");
        require_finite(grads.beta, "batch norm beta");
    }

    ++state.step;
    for (WordId r : grads.effect.touched_rows())
        adam_update(model.effect.row(r), grads.effect.row(r), state.m_effect.row(r), state.v_effect.row(r),
                    state.step, lr, state.config);
    for (WordId r : grads.context.touched_rows())
        adam_update(model.context.row(r), grads.context.row(r), state.m_context.row(r), state.v_context.row(r),
                    state.step, lr, state.config);
    if (model.bn.affine) {
        adam_update(model.bn.gamma, grads.gamma, state.m_gamma, state.v_gamma, state.step, lr, state.config);
        adam_update(model.bn.beta, grads.beta, state.m_beta, state.v_beta, state.step, lr, state.config);
    }
}

// ---------------------------------------------------------------------------

AnnealSchedule TrainConfig::schedule() const {
    AnnealSchedule s;
    s.anneal_start = anneal_start;
    s.total_epochs = static_cast<double>(epochs);
    return s;
}

InitDistribution TrainConfig::init_distribution() const {
    if (init) return *init;
    return is_discrete(variant) ? InitDistribution::logistic : InitDistribution::uniform;
}

void TrainConfig::validate() const {
    if (width == 0) throw UsageError("embedding width must be positive");
    if (window < 1) throw UsageError("window must be >= 1");
    if (negatives < 1) throw UsageError("number of negatives K must be >= 1");
    if (!(beta >= 0.0)) throw UsageError("beta must be >= 0");
    if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
    if (epochs < 0) throw UsageError("epochs must be >= 0");
    if (batch_size == 0) throw UsageError("batch size must be positive");
    if (threads < 1) throw UsageError("threads must be >= 1");
}

std::size_t negative_slots(Variant v, int window, int k) {
    if (v == Variant::sg || v == Variant::sgbtl) return static_cast<std::size_t>(2 * window * k);
    return static_cast<std::size_t>(k);
}

void fill_negatives(Batch& batch, const Vocabulary& vocab, Variant variant, int window, int k, Rng& rng) {
    const bool per_position = variant == Variant::sg || variant == Variant::sgbtl;
    const std::size_t slots = negative_slots(variant, window, k);
    batch.negatives.assign(batch.size(), std::vector<WordId>(slots));
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& s = batch.samples[b];
        for (std::size_t r = 0; r < slots; ++r) {
            const WordId positive = per_position ? s.context[r / static_cast<std::size_t>(k)] : s.center;
            WordId id = vocab.draw_negative(rng);
            for (int attempt = 0; id == positive && vocab.size() > 1 && attempt < 64; ++attempt)
                id = vocab.draw_negative(rng);
            batch.negatives[b][r] = id;
        }
    }
}

void write_batch_record(std::ostream& out, const BatchRecord& rec) {
    out << "epoch=" << rec.epoch << " batch=" << rec.batch << " positive=" << rec.loss.positive
        << " negative=" << rec.loss.negative << " kl=" << rec.loss.kl << " total=" << rec.loss.total
        << " tau=" << rec.tau << " wall=" << rec.wall_seconds << '\n';
}

TrainResult train(const IdCorpus& corpus, const Vocabulary& vocab, const TrainConfig& config,
                  const std::function<void(const BatchRecord&)>& on_batch) {
    config.validate();
    Rng init_rng(config.seed * 0x9e3779b97f4a7c15ULL + 17);
    ModelParameters model = ModelParameters::create(config.variant, vocab.size(), config.width,
                                                    config.init_distribution(), config.affine, init_rng);
    return train_from(std::move(model), corpus, vocab, config, on_batch);
}

TrainResult train_from(ModelParameters model, const IdCorpus& corpus, const Vocabulary& vocab,
                       const TrainConfig& config, const std::function<void(const BatchRecord&)>& on_batch) {
    config.validate();
    if (model.variant != config.variant || model.width != config.width || model.vocab_size() != vocab.size())
        throw UsageError("model does not match the training configuration");

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const bool discrete = is_discrete(config.variant);
    const ExecPolicy policy = config.threads > 1 ? ExecPolicy::parallel : ExecPolicy::serial;
    const AnnealSchedule schedule = config.schedule();
    const std::size_t slots = negative_slots(config.variant, config.window, config.negatives);

    Rng rng(config.seed * 0xbf58476d1ce4e5b9ULL + 29);
    AdamState adam(model);
    Gradients grads(model);
    BatchNormTrace trace;
    TrainResult result;
    ModelParameters last_good = model;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<ContextSample> samples = collect_samples(corpus, vocab, config.window, rng.fork());
        rng.shuffle(std::span(samples));

        // Batch boundaries; a trailing batch of one joins its predecessor so
        // train-mode BatchNorm always sees at least two rows.
        std::vector<std::size_t> bounds;
        for (std::size_t i = 0; i < samples.size(); i += config.batch_size) bounds.push_back(i);
        bounds.push_back(samples.size());
        if (bounds.size() > 2 && bounds[bounds.size() - 1] - bounds[bounds.size() - 2] == 1)
            bounds.erase(bounds.end() - 2);
        const std::size_t nbatches = bounds.size() - 1;
        if (discrete && samples.size() < 2) {
            result.epochs.push_back({epoch, samples.size(), 0.0});
            continue;
        }

        EpochSummary summary{epoch, samples.size(), 0.0};
        for (std::size_t bi = 0; bi < nbatches; ++bi) {
            Batch batch;
            batch.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(bounds[bi]),
                                 samples.begin() + static_cast<std::ptrdiff_t>(bounds[bi + 1]));
            fill_negatives(batch, vocab, config.variant, config.window, config.negatives, rng);

            const double t = epoch + static_cast<double>(bi) / static_cast<double>(nbatches);
            DiscreteOptions opt{schedule(t), config.beta, Mode::train};
            DiscreteNoise noise;
            if (discrete)
                noise = draw_discrete_noise(batch.size(), model.width, batch.samples[0].context.size(), slots, rng);

            grads.clear();
            LossBreakdown loss =
                batch_objective(batch, model, discrete ? &noise : nullptr, opt, &grads, &trace, policy);
            if (!std::isfinite(loss.total))
                throw TrainingDiverged("non-finite objective at epoch " + std::to_string(epoch) + ", batch " +
                                           std::to_string(bi),
                                       std::move(last_good));
            grads.scale(-1.0);
            try {
                adam_step(model, grads, adam, config.lr);
            } catch (const UsageError& e) {
                throw TrainingDiverged(e.what(), std::move(last_good));
            }
            model.bn.project_gamma(config.gamma_floor);
            if (discrete)
                for (const auto& cache : trace) update_running_stats(model.bn, cache, batch.size());

            summary.mean_total += loss.total * static_cast<double>(batch.size());
            if (on_batch) {
                BatchRecord rec{epoch, bi, loss, opt.tau,
                                std::chrono::duration<double>(clock::now() - t0).count()};
                on_batch(rec);
            }
        }
        if (!samples.empty()) summary.mean_total /= static_cast<double>(samples.size());
        result.epochs.push_back(summary);
        last_good = model;
    }
    result.model = std::move(model);
    return result;
}

}  // namespace dsaw
