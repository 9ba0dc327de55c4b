#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dsaw/kernels.hpp"

using namespace dsaw;

namespace {

Batch random_batch(Variant v, std::size_t vocab, std::size_t size, int window, std::size_t k, Rng& rng) {
    Batch batch;
    const std::size_t slots = negative_slots(v, window, k);
    for (std::size_t b = 0; b < size; ++b) {
        ContextSample s;
        s.center = static_cast<WordId>(rng.below(vocab));
        for (int i = 0; i < 2 * window; ++i) s.context.push_back(static_cast<WordId>(rng.below(vocab)));
        batch.samples.push_back(s);
        std::vector<WordId> neg(slots);
        for (auto& id : neg) id = static_cast<WordId>(rng.below(vocab));
        batch.negatives.push_back(neg);
    }
    return batch;
}

ModelParameters random_model(Variant v, std::size_t vocab, std::size_t width, Rng& rng) {
    auto m = ModelParameters::create(v, vocab, width, InitDistribution::gaussian, false, rng);
    for (double& x : m.effect.data()) x = 0.3 * rng.normal();
    if (has_context_matrix(v))
        for (double& x : m.context.data()) x = 0.3 * rng.normal();
    return m;
}

std::vector<WordId> sorted(std::vector<WordId> v) {
    std::sort(v.begin(), v.end());
    return v;
}

void expect_same_gradient(const RowGradient& a, const RowGradient& b, std::size_t cols) {
    ASSERT_EQ(sorted(a.touched_rows()), sorted(b.touched_rows()));
    for (WordId r : a.touched_rows())
        for (std::size_t j = 0; j < cols; ++j) ASSERT_NEAR(a.row(r)[j], b.row(r)[j], 1e-12) << "row " << r;
}

void check_variant(Variant v, LossBreakdown (*serial)(const Batch&, const ModelParameters&, Gradients*),
                   LossBreakdown (*parallel)(const Batch&, const ModelParameters&, Gradients*)) {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t vocab = 50 + rng.below(200), width = 8 + rng.below(40);
        auto model = random_model(v, vocab, width, rng);
        auto batch = random_batch(v, vocab, 64 + rng.below(400), 1 + static_cast<int>(rng.below(3)), 5, rng);
        Gradients gs(model), gp(model), gref(model);
        auto ls = serial(batch, model, &gs);
        auto lp = parallel(batch, model, &gp);
        auto lref = batch_objective(batch, model, nullptr, {}, &gref, nullptr);
        EXPECT_NEAR(lp.total, ls.total, 1e-12 * std::abs(ls.total));
        EXPECT_NEAR(lref.total, ls.total, 1e-12 * std::abs(ls.total));
        EXPECT_NEAR(lp.positive, ls.positive, 1e-12 * std::abs(ls.positive));
        expect_same_gradient(gs.effect, gp.effect, width);
        expect_same_gradient(gs.context, gp.context, width);
        expect_same_gradient(gs.effect, gref.effect, width);
        expect_same_gradient(gs.context, gref.context, width);
        // The objective without a gradient request is the same number.
        EXPECT_NEAR(parallel(batch, model, nullptr).total, ls.total, 1e-12 * std::abs(ls.total));
    }
}

}  // namespace

TEST(Kernels, ThreadsAvailable) { EXPECT_GE(kernels::max_threads(), 1); }

TEST(Kernels, CbowParallelMatchesSerial) {
    check_variant(Variant::cbow, kernels::cbow_serial, kernels::cbow_parallel);
}

TEST(Kernels, SgParallelMatchesSerial) { check_variant(Variant::sg, kernels::sg_serial, kernels::sg_parallel); }

TEST(Kernels, CosineScanMatchesSerialAndDirectFormula) {
    Rng rng(12);
    Matrix rows(1000, 24);
    for (double& x : rows.data()) x = rng.normal();
    for (std::size_t j = 0; j < 24; ++j) rows(17, j) = 0.0;
    std::vector<double> q(24);
    for (double& x : q) x = rng.normal();

    auto s = kernels::cosine_scan_serial(q, rows);
    auto p = kernels::cosine_scan_parallel(q, rows);
    ASSERT_EQ(s.size(), 1000u);
    EXPECT_EQ(s, p);
    EXPECT_EQ(s[17], 0.0);
    for (std::size_t r = 0; r < 1000; r += 37) {
        if (r == 17) continue;
        double d = 0, nr = 0, nq = 0;
        for (std::size_t j = 0; j < 24; ++j) {
            d += rows(r, j) * q[j];
            nr += rows(r, j) * rows(r, j);
            nq += q[j] * q[j];
        }
        EXPECT_NEAR(s[r], d / std::sqrt(nr * nq), 1e-12);
    }
}

TEST(Kernels, ExtractEffectsParallelMatchesSerial) {
    Rng rng(13);
    for (Variant v : {Variant::dsaw, Variant::sgbtl}) {
        auto model = ModelParameters::create(v, 300, 32, InitDistribution::logistic, true, rng);
        for (std::size_t j = 0; j < 32; ++j) {
            model.bn.gamma[j] = 0.5 + rng.uniform();
            model.bn.beta[j] = 0.3 * rng.normal();
        }
        std::vector<std::string> words;
        for (int i = 0; i < 300; ++i) words.push_back("w" + std::to_string(i));
        auto vocab = Vocabulary::build(words, 1);
        auto s = kernels::extract_effects_serial(model, vocab);
        auto p = kernels::extract_effects_parallel(model, vocab);
        ASSERT_EQ(s.size(), 300u);
        EXPECT_EQ(s, p);
        EXPECT_EQ(s, extract_effects(model, vocab));
    }
}
