#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dsaw/trainer.hpp"

namespace dsaw::oracle {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;  // parameter with the largest error
    std::size_t checked = 0;
};

struct GradCheckShape {
    std::size_t vocab = 10;
    std::size_t width = 4;
    std::size_t batch = 4;
    int window = 2;
    int negatives = 3;
    double tau = 2.0;
    double beta = 0.1;
    bool affine = true;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero partials from
/// dominating through round-off alone.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Draws random parameters, one batch and frozen noise, then compares every
/// analytic partial of the batch objective with a central finite difference.
inline GradCheckResult gradient_check(Variant variant, const GradCheckShape& shape, Rng& rng) {
    const bool discrete = is_discrete(variant);
    ModelParameters model = ModelParameters::create(variant, shape.vocab, shape.width,
                                                    discrete ? InitDistribution::logistic
                                                             : InitDistribution::gaussian,
                                                    discrete && shape.affine, rng);
    if (has_context_matrix(variant))
        for (double& x : model.context.data()) x = 0.5 * rng.normal();
    else
        for (double& x : model.effect.data()) x *= 0.5;
    if (model.bn.affine)
        for (std::size_t j = 0; j < shape.width; ++j) {
            model.bn.gamma[j] = 0.5 + rng.uniform();
            model.bn.beta[j] = 0.5 * rng.normal();
        }

    Batch batch;
    const std::size_t slots = negative_slots(variant, shape.window, shape.negatives);
    for (std::size_t b = 0; b < shape.batch; ++b) {
        ContextSample s;
        s.center = static_cast<WordId>(rng.below(shape.vocab));
        for (int i = 0; i < 2 * shape.window; ++i) s.context.push_back(static_cast<WordId>(rng.below(shape.vocab)));
        batch.samples.push_back(s);
        std::vector<WordId> neg(slots);
        for (auto& id : neg) id = static_cast<WordId>(rng.below(shape.vocab));
        batch.negatives.push_back(neg);
    }
    DiscreteNoise noise;
    if (discrete)
        noise = draw_discrete_noise(shape.batch, shape.width, batch.samples[0].context.size(), slots, rng);
    const DiscreteOptions opt{shape.tau, shape.beta, Mode::train};
    const DiscreteNoise* np = discrete ? &noise : nullptr;

    Gradients grad(model);
    batch_objective(batch, model, np, opt, &grad, nullptr);
    auto objective = [&](const ModelParameters& m) { return batch_objective(batch, m, np, opt, nullptr, nullptr).total; };

    GradCheckResult res;
    // Five-point stencil: O(h^4) truncation and far less round-off than a
    // two-point difference at the step size that would match its accuracy.
    // Near sharp curvature (tiny batches through BatchNorm) the first step is
    // too coarse, so the step shrinks until two successive estimates agree and
    // the coarser of the closest pair is kept.
    auto probe = [&](double& param, double analytic, const std::string& name) {
        const double saved = param;
        auto at = [&](double x) {
            param = x;
            return objective(model);
        };
        auto stencil = [&](double h) {
            return (-at(saved + 2 * h) + 8 * at(saved + h) - 8 * at(saved - h) + at(saved - 2 * h)) / (12 * h);
        };
        double numeric = stencil(1e-3), prev = numeric, best_gap = std::numeric_limits<double>::infinity();
        for (double h = 1e-4; h >= 1e-6; h /= 10) {
            const double cur = stencil(h);
            const double gap = std::abs(cur - prev);
            if (gap < best_gap) {
                best_gap = gap;
                numeric = prev;
            }
            if (gap <= 1e-9 * std::max(1.0, std::abs(cur))) break;
            prev = cur;
        }
        param = saved;
        const double err = relative_error(analytic, numeric);
        ++res.checked;
        if (err > res.max_rel_error) {
            res.max_rel_error = err;
            res.worst = name;
        }
    };
    for (std::size_t r = 0; r < shape.vocab; ++r)
        for (std::size_t j = 0; j < shape.width; ++j) {
            const WordId id = static_cast<WordId>(r);
            const double g = grad.effect.touched(id) ? grad.effect.row(id)[j] : 0.0;
            probe(model.effect(r, j), g, "W[" + std::to_string(r) + "," + std::to_string(j) + "]");
            if (has_context_matrix(variant)) {
                const double gc = grad.context.touched(id) ? grad.context.row(id)[j] : 0.0;
                probe(model.context(r, j), gc, "W'[" + std::to_string(r) + "," + std::to_string(j) + "]");
            }
        }
    if (model.bn.affine)
        for (std::size_t j = 0; j < shape.width; ++j) {
            probe(model.bn.gamma[j], grad.gamma[j], "gamma[" + std::to_string(j) + "]");
            probe(model.bn.beta[j], grad.beta[j], "beta[" + std::to_string(j) + "]");
        }
    return res;
}

}  // namespace dsaw::oracle
