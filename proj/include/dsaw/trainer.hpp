#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <iosfwd>
#include <span>
#include <vector>

#include "dsaw/corpus.hpp"
#include "dsaw/error.hpp"
#include "dsaw/model.hpp"
#include "dsaw/nncore.hpp"

namespace dsaw {

/// Objective terms, averaged over the batch. The objective is maximized:
/// total = positive + negative - beta * kl.
struct LossBreakdown {
    double positive = 0.0;
    double negative = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

/// Gradient rows for a V x E matrix. Only rows touched since the last clear()
/// are non-zero; clear() costs O(touched).
class RowGradient {
public:
    RowGradient() = default;
    RowGradient(std::size_t rows, std::size_t cols) : grad_(rows, cols), mark_(rows, 0) {}

    std::span<double> row(WordId r) {
        if (!mark_[r]) {
            mark_[r] = 1;
            touched_.push_back(r);
        }
        return grad_.row(r);
    }
    std::span<const double> row(WordId r) const { return grad_.row(r); }
    bool touched(WordId r) const { return mark_[r] != 0; }
    const std::vector<WordId>& touched_rows() const { return touched_; }
    /// Marks the row without returning it; used before concurrent writes.
    void touch(WordId r) { (void)row(r); }
    double* raw_row(WordId r) { return grad_.row(r).data(); }

    void clear();
    void scale(double s);

private:
    Matrix grad_;
    std::vector<char> mark_;
    std::vector<WordId> touched_;
};

/// Gradient of a batch objective with respect to every parameter group.
struct Gradients {
    RowGradient effect;
    RowGradient context;
    std::vector<double> gamma;
    std::vector<double> beta;

    Gradients() = default;
    explicit Gradients(const ModelParameters& model);
    void clear();
    void scale(double s);
};

/// One minibatch. `negatives[b]` holds K ids for CBOW/DSAW, or 2c*K ids
/// (K per context position, position-major) for the SkipGram variants.
struct Batch {
    std::vector<ContextSample> samples;
    std::vector<std::vector<WordId>> negatives;

    std::size_t size() const { return samples.size(); }
};

/// Frozen randomness of a discrete forward pass: the Bernoulli(0.5) initial
/// states and the Logistic noise of every Binary Concrete activation.
/// For DSAW `context` has one matrix per recurrent step; for SG-BTL one per
/// context position. `negative` has one matrix per negative slot.
struct DiscreteNoise {
    Matrix initial;
    Matrix target;
    std::vector<Matrix> context;
    std::vector<Matrix> negative;
};

DiscreteNoise draw_discrete_noise(std::size_t batch, std::size_t width, std::size_t context_steps,
                                  std::size_t negative_slots, Rng& rng);
/// All-zero noise (s^0 still Bernoulli draws from `rng`).
DiscreteNoise zero_discrete_noise(std::size_t batch, std::size_t width, std::size_t context_steps,
                                  std::size_t negative_slots, Rng& rng);

/// BatchNorm caches produced by a discrete forward pass in train mode, in
/// call order. Used to update running statistics after the optimizer step.
using BatchNormTrace = std::vector<BatchNormCache>;

/// KL(Bernoulli(sigmoid(logit)) || Bernoulli(0.5)).
double bernoulli_kl_half(double logit);

enum class ExecPolicy { serial, parallel };

LossBreakdown cbow_loss(const Batch& batch, const ModelParameters& model, Gradients* grad,
                        ExecPolicy policy = ExecPolicy::serial);
LossBreakdown sg_loss(const Batch& batch, const ModelParameters& model, Gradients* grad,
                      ExecPolicy policy = ExecPolicy::serial);

struct DiscreteOptions {
    double tau = 1.0;
    double beta = 0.0;
    Mode bn_mode = Mode::train;
};

LossBreakdown dsaw_loss(const Batch& batch, const ModelParameters& model, const DiscreteNoise& noise,
                        const DiscreteOptions& opt, Gradients* grad, BatchNormTrace* trace = nullptr);
LossBreakdown sgbtl_loss(const Batch& batch, const ModelParameters& model, const DiscreteNoise& noise,
                         const DiscreteOptions& opt, Gradients* grad, BatchNormTrace* trace = nullptr);

/// Single-sample convenience forms drawing the noise from `rng` (eval-mode
/// BatchNorm, since a batch of one has no batch statistics).
LossBreakdown dsaw_loss(const ContextSample& sample, std::span<const WordId> negatives,
                        const ModelParameters& model, double tau, double beta, Rng& rng);

// ---------------------------------------------------------------------------

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One dense Adam update of `params` (gradient of a loss to minimize).
/// `step` is the 1-based update count used for bias correction.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, long step, double lr, const AdamConfig& cfg = {});

/// Moment estimates for every parameter group of a model.
struct AdamState {
    AdamConfig config;
    long step = 0;
    Matrix m_effect, v_effect, m_context, v_context;
    std::vector<double> m_gamma, v_gamma, m_beta, v_beta;

    explicit AdamState(const ModelParameters& model, AdamConfig cfg = {});
};

/// Adam step on the model with `grads` being the gradient of the loss to
/// minimize. Only touched rows of W/W' are updated. Throws UsageError naming
/// the parameter if any gradient entry is non-finite.
void adam_step(ModelParameters& model, const Gradients& grads, AdamState& state, double lr);

// ---------------------------------------------------------------------------

struct TrainConfig {
    Variant variant = Variant::dsaw;
    std::size_t width = 200;
    int window = 2;  // c
    int negatives = 5;
    double lr = 1e-3;
    double beta = 0.1;  // KL scale; discrete variants only
    int epochs = 8;
    std::size_t batch_size = 1000;
    double anneal_start = 1.0;  // T
    bool affine = false;
    std::uint64_t seed = 1;
    std::optional<InitDistribution> init;  // default: logistic (discrete), uniform (continuous)
    double gamma_floor = 1e-3;
    int threads = 1;  // >1 enables the unsynchronized data-parallel CBOW/SG path

    AnnealSchedule schedule() const;
    InitDistribution init_distribution() const;
    void validate() const;
};

struct BatchRecord {
    int epoch = 0;
    std::size_t batch = 0;
    LossBreakdown loss;
    double tau = 0.0;
    double wall_seconds = 0.0;
};

struct EpochSummary {
    int epoch = 0;
    std::size_t samples = 0;
    double mean_total = 0.0;
};

/// Thrown when a batch produces a non-finite objective. Holds the parameters
/// as of the end of the last completed epoch.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, ModelParameters last_good)
        : Error(what), last_good_(std::move(last_good)) {}
    const ModelParameters& last_good() const { return last_good_; }

private:
    ModelParameters last_good_;
};

struct TrainResult {
    ModelParameters model;
    std::vector<EpochSummary> epochs;
};

/// Writes one "key=value ..." line per record.
void write_batch_record(std::ostream& out, const BatchRecord& rec);

/// Trains from scratch. `on_batch`, when set, is called after every update.
TrainResult train(const IdCorpus& corpus, const Vocabulary& vocab, const TrainConfig& config,
                  const std::function<void(const BatchRecord&)>& on_batch = {});

/// Continues training `model` in place (used by tests and resumption).
TrainResult train_from(ModelParameters model, const IdCorpus& corpus, const Vocabulary& vocab,
                       const TrainConfig& config, const std::function<void(const BatchRecord&)>& on_batch = {});

/// Generic objective dispatch used by the training loop and gradient checks.
LossBreakdown batch_objective(const Batch& batch, const ModelParameters& model, const DiscreteNoise* noise,
                              const DiscreteOptions& opt, Gradients* grad, BatchNormTrace* trace,
                              ExecPolicy policy = ExecPolicy::serial);

/// Number of negative slots per sample for a variant.
std::size_t negative_slots(Variant v, int window, int k);

/// Draws negatives for every sample, redrawing any id equal to the positive
/// id it is contrasted with (when V > 1).
void fill_negatives(Batch& batch, const Vocabulary& vocab, Variant variant, int window, int k, Rng& rng);

}  // namespace dsaw
