#include "dsaw/kernels.hpp"

#include <cmath>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dsaw/error.hpp"

namespace dsaw::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

void check_continuous(const Batch& batch, const ModelParameters& model, Variant expect) {
    if (model.variant != expect) throw UsageError("kernel called with the wrong model variant");
    if (batch.size() == 0) throw UsageError("empty batch");
    if (batch.negatives.size() != batch.size()) throw UsageError("batch negatives do not match samples");
}

inline void axpy(double* dst, double a, std::span<const double> x) {
    for (std::size_t j = 0; j < x.size(); ++j) dst[j] += a * x[j];
}

inline void axpy_atomic(double* dst, double a, std::span<const double> x) {
    for (std::size_t j = 0; j < x.size(); ++j) {
#pragma omp atomic
        dst[j] += a * x[j];
    }
}

// Pre-marks every row a batch will write so the concurrent phase only
// touches raw storage.
void touch_cbow_rows(const Batch& batch, Gradients& g) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
        for (WordId c : batch.samples[b].context) g.effect.touch(c);
        g.context.touch(batch.samples[b].center);
        for (WordId r : batch.negatives[b]) g.context.touch(r);
    }
}

void touch_sg_rows(const Batch& batch, Gradients& g) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
        g.effect.touch(batch.samples[b].center);
        for (WordId c : batch.samples[b].context) g.context.touch(c);
        for (WordId r : batch.negatives[b]) g.context.touch(r);
    }
}

/// One CBOW sample. Returns (positive, negative) and accumulates gradients
/// scaled by `scale` through `add`.
template <typename Add>
std::pair<double, double> cbow_sample(const ContextSample& s, std::span<const WordId> negs,
                                      const ModelParameters& model, Gradients* grad, double scale,
                                      std::vector<double>& h, std::vector<double>& dh, Add add) {
    const std::size_t e = model.width;
    std::fill(h.begin(), h.end(), 0.0);
    for (WordId c : s.context) {
        auto row = model.effect.row(c);
        for (std::size_t j = 0; j < e; ++j) h[j] += row[j];
    }
    const double d = dot(h, model.context.row(s.center));
    double pos = log_sigmoid(d), neg = 0.0;
    if (grad) std::fill(dh.begin(), dh.end(), 0.0);
    if (grad) {
        const double g = sigmoid(-d) * scale;
        add(grad->context.raw_row(s.center), g, std::span<const double>(h));
        axpy(dh.data(), g, model.context.row(s.center));
    }
    for (WordId r : negs) {
        const double dk = dot(h, model.context.row(r));
        neg += log_sigmoid(-dk);
        if (grad) {
            const double g = -sigmoid(dk) * scale;
            add(grad->context.raw_row(r), g, std::span<const double>(h));
            axpy(dh.data(), g, model.context.row(r));
        }
    }
    if (grad)
        for (WordId c : s.context) add(grad->effect.raw_row(c), 1.0, std::span<const double>(dh));
    return {pos, neg};
}

/// One SkipGram sample: every context position is its own positive pair
/// with K negatives (slots p*K .. p*K+K-1).
template <typename Add>
std::pair<double, double> sg_sample(const ContextSample& s, std::span<const WordId> negs,
                                    const ModelParameters& model, Gradients* grad, double scale,
                                    std::vector<double>& dh, Add add) {
    const std::size_t positions = s.context.size();
    const std::size_t k = negs.size() / positions;
    auto h = model.effect.row(s.center);
    double pos = 0.0, neg = 0.0;
    if (grad) std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t p = 0; p < positions; ++p) {
        const WordId c = s.context[p];
        const double d = dot(h, model.context.row(c));
        pos += log_sigmoid(d);
        if (grad) {
            const double g = sigmoid(-d) * scale;
            add(grad->context.raw_row(c), g, h);
            axpy(dh.data(), g, model.context.row(c));
        }
        for (std::size_t r = p * k; r < (p + 1) * k; ++r) {
            const double dk = dot(h, model.context.row(negs[r]));
            neg += log_sigmoid(-dk);
            if (grad) {
                const double g = -sigmoid(dk) * scale;
                add(grad->context.raw_row(negs[r]), g, h);
                axpy(dh.data(), g, model.context.row(negs[r]));
            }
        }
    }
    if (grad) add(grad->effect.raw_row(s.center), 1.0, std::span<const double>(dh));
    return {pos, neg};
}

LossBreakdown finish(double pos, double neg, std::size_t n) {
    LossBreakdown l;
    l.positive = pos / static_cast<double>(n);
    l.negative = neg / static_cast<double>(n);
    l.total = l.positive + l.negative;
    return l;
}

void check_sg_shape(const Batch& batch) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const std::size_t positions = batch.samples[b].context.size();
        if (positions == 0 || batch.negatives[b].size() % positions != 0)
            throw UsageError("sg negatives must be K per context word");
    }
}

}  // namespace

LossBreakdown cbow_serial(const Batch& batch, const ModelParameters& model, Gradients* grad) {
    check_continuous(batch, model, Variant::cbow);
    if (grad) touch_cbow_rows(batch, *grad);
    const double scale = 1.0 / static_cast<double>(batch.size());
    std::vector<double> h(model.width), dh(model.width);
    double pos = 0.0, neg = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        auto [p, n] = cbow_sample(batch.samples[b], batch.negatives[b], model, grad, scale, h, dh, axpy);
        pos += p;
        neg += n;
    }
    return finish(pos, neg, batch.size());
}

LossBreakdown cbow_parallel(const Batch& batch, const ModelParameters& model, Gradients* grad) {
    check_continuous(batch, model, Variant::cbow);
    if (grad) touch_cbow_rows(batch, *grad);
    const double scale = 1.0 / static_cast<double>(batch.size());
    const auto n = static_cast<std::ptrdiff_t>(batch.size());
    double pos = 0.0, neg = 0.0;
#pragma omp parallel reduction(+ : pos, neg)
    {
        std::vector<double> h(model.width), dh(model.width);
#pragma omp for schedule(static)
        for (std::ptrdiff_t b = 0; b < n; ++b) {
            auto [p, q] = cbow_sample(batch.samples[b], batch.negatives[b], model, grad, scale, h, dh, axpy_atomic);
            pos += p;
            neg += q;
        }
    }
    return finish(pos, neg, batch.size());
}

LossBreakdown sg_serial(const Batch& batch, const ModelParameters& model, Gradients* grad) {
    check_continuous(batch, model, Variant::sg);
    check_sg_shape(batch);
    if (grad) touch_sg_rows(batch, *grad);
    const double scale = 1.0 / static_cast<double>(batch.size());
    std::vector<double> dh(model.width);
    double pos = 0.0, neg = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        auto [p, n] = sg_sample(batch.samples[b], batch.negatives[b], model, grad, scale, dh, axpy);
        pos += p;
        neg += n;
    }
    return finish(pos, neg, batch.size());
}

LossBreakdown sg_parallel(const Batch& batch, const ModelParameters& model, Gradients* grad) {
    check_continuous(batch, model, Variant::sg);
    check_sg_shape(batch);
    if (grad) touch_sg_rows(batch, *grad);
    const double scale = 1.0 / static_cast<double>(batch.size());
    const auto n = static_cast<std::ptrdiff_t>(batch.size());
    double pos = 0.0, neg = 0.0;
#pragma omp parallel reduction(+ : pos, neg)
    {
        std::vector<double> dh(model.width);
#pragma omp for schedule(static)
        for (std::ptrdiff_t b = 0; b < n; ++b) {
            auto [p, q] = sg_sample(batch.samples[b], batch.negatives[b], model, grad, scale, dh, axpy_atomic);
            pos += p;
            neg += q;
        }
    }
    return finish(pos, neg, batch.size());
}

// ---------------------------------------------------------------------------

namespace {
inline double row_cosine(std::span<const double> q, double qnorm, std::span<const double> r) {
    const double rn = std::sqrt(dot(r, r));
    return rn == 0.0 ? 0.0 : dot(q, r) / (qnorm * rn);
}
}  // namespace

std::vector<double> cosine_scan_serial(std::span<const double> query, const Matrix& rows) {
    const double qn = std::sqrt(dot(query, query));
    std::vector<double> out(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = row_cosine(query, qn, rows.row(r));
    return out;
}

std::vector<double> cosine_scan_parallel(std::span<const double> query, const Matrix& rows) {
    const double qn = std::sqrt(dot(query, query));
    std::vector<double> out(rows.rows());
    const auto n = static_cast<std::ptrdiff_t>(rows.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) out[r] = row_cosine(query, qn, rows.row(r));
    return out;
}

std::vector<BinaryEffect> extract_effects_serial(const ModelParameters& model, const Vocabulary& vocab) {
    if (model.vocab_size() != vocab.size()) throw UsageError("model and vocabulary sizes differ");
    std::vector<BinaryEffect> out;
    out.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        const auto id = static_cast<WordId>(i);
        out.push_back(extract_effect(model, id, vocab.word(id)));
    }
    return out;
}

std::vector<BinaryEffect> extract_effects_parallel(const ModelParameters& model, const Vocabulary& vocab) {
    if (model.vocab_size() != vocab.size()) throw UsageError("model and vocabulary sizes differ");
    std::vector<BinaryEffect> out(vocab.size());
    std::vector<std::exception_ptr> errors(vocab.size());
    const auto n = static_cast<std::ptrdiff_t>(vocab.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto id = static_cast<WordId>(i);
        try {
            out[i] = extract_effect(model, id, vocab.word(id));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    // Report the lowest failing id, matching the serial order.
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace dsaw::kernels
