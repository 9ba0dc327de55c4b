#include <gtest/gtest.h>

#include <cmath>

#include "dsaw/fixtures.hpp"
#include "dsaw/trainer.hpp"
#include "support/gradcheck.hpp"

using namespace dsaw;

namespace {

Batch single_batch(std::size_t vocab, std::size_t n, int window, Variant v, int k, Rng& rng) {
    Batch batch;
    for (std::size_t b = 0; b < n; ++b) {
        ContextSample s;
        s.center = static_cast<WordId>(rng.below(vocab));
        for (int i = 0; i < 2 * window; ++i) s.context.push_back(static_cast<WordId>(rng.below(vocab)));
        batch.samples.push_back(s);
        std::vector<WordId> neg(negative_slots(v, window, k));
        for (auto& id : neg) id = static_cast<WordId>(rng.below(vocab));
        batch.negatives.push_back(neg);
    }
    return batch;
}

ModelParameters zero_model(Variant v, std::size_t vocab, std::size_t width) {
    Rng rng(0);
    return ModelParameters::create(v, vocab, width, InitDistribution::zeros, false, rng);
}

IdCorpus alternating_corpus(const Vocabulary& vocab, std::size_t lines, std::size_t len) {
    IdCorpus c;
    for (std::size_t l = 0; l < lines; ++l) {
        std::vector<WordId> line;
        for (std::size_t i = 0; i < len; ++i) line.push_back(vocab.id(i % 2 ? "b" : "a"));
        c.push_back(line);
    }
    return c;
}

}  // namespace

TEST(CbowLoss, ZeroEmbeddings) {
    Rng rng(1);
    const int k = 5;
    auto batch = single_batch(8, 3, 2, Variant::cbow, k, rng);
    auto loss = cbow_loss(batch, zero_model(Variant::cbow, 8, 6), nullptr);
    EXPECT_NEAR(loss.total, (1 + k) * std::log(0.5), 1e-12);
}

TEST(CbowLoss, OrthogonalContextMatchesZeroCase) {
    Rng rng(2);
    const int k = 3;
    auto batch = single_batch(6, 2, 1, Variant::cbow, k, rng);
    auto model = zero_model(Variant::cbow, 6, 4);
    // W lives in dims 0-1, W' in dims 2-3.
    for (std::size_t r = 0; r < 6; ++r) {
        model.effect(r, 0) = rng.normal();
        model.effect(r, 1) = rng.normal();
        model.context(r, 2) = rng.normal();
        model.context(r, 3) = rng.normal();
    }
    EXPECT_NEAR(cbow_loss(batch, model, nullptr).total, (1 + k) * std::log(0.5), 1e-12);
}

TEST(SgLoss, ZeroEmbeddings) {
    Rng rng(3);
    const int k = 4, c = 2;
    auto batch = single_batch(8, 3, c, Variant::sg, k, rng);
    auto loss = sg_loss(batch, zero_model(Variant::sg, 8, 5), nullptr);
    EXPECT_NEAR(loss.total, 2 * c * (1 + k) * std::log(0.5), 1e-12);
}

TEST(Kl, HalfProbabilityIsZero) {
    EXPECT_DOUBLE_EQ(bernoulli_kl_half(0.0), 0.0);
    for (double logit : {-8.0, -1.0, 0.3, 2.0, 30.0}) {
        const double q = 1.0 / (1.0 + std::exp(-logit));
        const double direct = q * std::log(2 * q) + (1 - q) * std::log(2 * (1 - q));
        EXPECT_NEAR(bernoulli_kl_half(logit), direct, 1e-9);
        EXPECT_GE(bernoulli_kl_half(logit), 0.0);
    }
}

TEST(DsawLoss, PositiveTermBounded) {
    Rng rng(4);
    const std::size_t e = 8;
    auto batch = single_batch(6, 4, 2, Variant::dsaw, 5, rng);
    auto model = zero_model(Variant::dsaw, 6, e);
    auto noise = draw_discrete_noise(4, e, 4, 5, rng);
    auto loss = dsaw_loss(batch, model, noise, {100.0, 0.0, Mode::train}, nullptr);
    const double bound = static_cast<double>(e) / 4;
    EXPECT_GE(loss.positive, log_sigmoid(-bound));
    EXPECT_LE(loss.positive, log_sigmoid(bound));
}

TEST(DsawLoss, HighTemperatureDegeneratesToConstant) {
    Rng rng(5);
    const int k = 5;
    const std::size_t e = 8;
    auto batch = single_batch(10, 6, 2, Variant::dsaw, k, rng);
    ModelParameters model = ModelParameters::create(Variant::dsaw, 10, e, InitDistribution::logistic, false, rng);
    auto noise = draw_discrete_noise(6, e, 4, k, rng);
    double prev = INFINITY;
    for (double tau : {1.0, 10.0, 100.0, 1000.0}) {
        auto loss = dsaw_loss(batch, model, noise, {tau, 0.0, Mode::train}, nullptr);
        const double gap = std::abs(loss.total - (1 + k) * std::log(0.5));
        EXPECT_LT(gap, prev) << "tau " << tau;
        prev = gap;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Gradients, CbowMatchesFiniteDifferences) {
    Rng rng(10);
    oracle::GradCheckShape shape;
    for (int trial = 0; trial < 100; ++trial) {
        auto r = oracle::gradient_check(Variant::cbow, shape, rng);
        ASSERT_LT(r.max_rel_error, 1e-5) << "trial " << trial << " at " << r.worst;
    }
}

TEST(Gradients, SgMatchesFiniteDifferences) {
    Rng rng(11);
    oracle::GradCheckShape shape;
    for (int trial = 0; trial < 100; ++trial) {
        auto r = oracle::gradient_check(Variant::sg, shape, rng);
        ASSERT_LT(r.max_rel_error, 1e-5) << "trial " << trial << " at " << r.worst;
    }
}

TEST(Gradients, DsawMatchesFiniteDifferences) {
    Rng rng(12);
    oracle::GradCheckShape shape;
    for (int trial = 0; trial < 100; ++trial) {
        shape.affine = trial % 2 == 0;
        auto r = oracle::gradient_check(Variant::dsaw, shape, rng);
        ASSERT_LT(r.max_rel_error, 1e-4) << "trial " << trial << " at " << r.worst;
    }
}

TEST(Gradients, SgBtlMatchesFiniteDifferences) {
    Rng rng(13);
    oracle::GradCheckShape shape;
    for (int trial = 0; trial < 100; ++trial) {
        shape.affine = trial % 2 == 0;
        auto r = oracle::gradient_check(Variant::sgbtl, shape, rng);
        ASSERT_LT(r.max_rel_error, 1e-4) << "trial " << trial << " at " << r.worst;
    }
}

TEST(Adam, ZeroGradientLeavesParameters) {
    std::vector<double> p = {1.0, -2.0}, g = {0.0, 0.0}, m = {0, 0}, v = {0, 0};
    adam_update(p, g, m, v, 1, 0.1);
    EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, OneStepByHand) {
    std::vector<double> p = {1.0, -2.0}, g = {0.5, -0.1}, m = {0, 0}, v = {0, 0};
    adam_update(p, g, m, v, 1, 0.1);
    // Bias-corrected first step: m_hat = g, v_hat = g^2.
    EXPECT_NEAR(p[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
    EXPECT_NEAR(p[1], -2.0 + 0.1 * 0.1 / (0.1 + 1e-8), 1e-15);
    EXPECT_NEAR(m[0], 0.05, 1e-15);
    EXPECT_NEAR(v[1], 0.001 * 0.01, 1e-18);
}

TEST(Adam, MovesAgainstGradientSign) {
    std::vector<double> p = {0.0, 0.0}, g = {3.0, -0.2}, m = {0, 0}, v = {0, 0};
    for (long step = 1; step <= 50; ++step) adam_update(p, g, m, v, step, 0.01);
    EXPECT_LT(p[0], 0.0);
    EXPECT_GT(p[1], 0.0);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
    auto model = zero_model(Variant::cbow, 3, 2);
    Gradients g(model);
    g.context.row(1)[0] = NAN;
    AdamState state(model);
    try {
        adam_step(model, g, state, 0.1);
        FAIL() << "expected UsageError";
    } catch (const UsageError& e) {
        EXPECT_NE(std::string(e.what()).find("context matrix row 1"), std::string::npos);
    }
}

TEST(Training, ZeroEpochsReturnsInitialization) {
    auto vocab = Vocabulary::from_entries({{"a", 10}, {"b", 10}});
    auto corpus = alternating_corpus(vocab, 4, 8);
    TrainConfig cfg;
    cfg.width = 4;
    cfg.epochs = 0;
    Rng rng(9);
    auto init = ModelParameters::create(Variant::dsaw, 2, 4, InitDistribution::logistic, false, rng);
    auto r = train_from(init, corpus, vocab, cfg);
    EXPECT_TRUE(r.model == init);
    EXPECT_TRUE(r.epochs.empty());
}

TEST(Training, SkipGramLearnsCooccurrence) {
    auto vocab = Vocabulary::from_entries({{"a", 500}, {"b", 500}});
    vocab.set_subsampling(0.0, SubsampleVariant::implementation);
    auto corpus = alternating_corpus(vocab, 100, 10);
    TrainConfig cfg;
    cfg.variant = Variant::sg;
    cfg.width = 8;
    cfg.window = 1;
    cfg.negatives = 2;
    cfg.epochs = 10;
    cfg.batch_size = 20;
    cfg.lr = 0.02;
    auto r = train(corpus, vocab, cfg);
    const auto& m = r.model;
    EXPECT_GT(sigmoid(dot(m.effect.row(vocab.id("a")), m.context.row(vocab.id("b")))), 0.9);
}

TEST(Training, Deterministic) {
    auto pc = fixtures::planted_synonyms({.tokens = 3000}, 4);
    auto vocab = Vocabulary::build(pc.corpus.flatten(), 1);
    vocab.set_subsampling(0.0, SubsampleVariant::implementation);
    auto ids = encode(pc.corpus, vocab);
    for (Variant v : {Variant::cbow, Variant::dsaw, Variant::sgbtl}) {
        auto cfg = fixtures::planted_train_config(v, 8, 3);
        cfg.epochs = 2;
        EXPECT_TRUE(train(ids, vocab, cfg).model == train(ids, vocab, cfg).model) << to_string(v);
    }
}

// The epoch mean of the objective (maximized) must rise every epoch while the
// model is still fitting, hence the smaller step size. DSAW is checked at a
// constant temperature: annealing makes later epochs harder.
TEST(Training, ObjectiveImprovesEachEpoch) {
    auto pc = fixtures::planted_synonyms({.tokens = 20000}, 8);
    auto vocab = Vocabulary::build(pc.corpus.flatten(), 1);
    vocab.set_subsampling(0.0, SubsampleVariant::implementation);
    auto ids = encode(pc.corpus, vocab);
    for (Variant v : {Variant::cbow, Variant::dsaw}) {
        auto cfg = fixtures::planted_train_config(v, 16, 1);
        cfg.epochs = 4;
        cfg.lr = 0.005;
        cfg.anneal_start = 100;
        auto r = train(ids, vocab, cfg);
        ASSERT_EQ(r.epochs.size(), 4u);
        for (std::size_t i = 1; i < r.epochs.size(); ++i)
            EXPECT_GT(r.epochs[i].mean_total, r.epochs[i - 1].mean_total) << to_string(v) << " epoch " << i;
    }
}

TEST(Training, TrailingSingletonBatchIsMerged) {
    // 7 lines of 5 tokens with c=2 give 7 samples; batch 3 leaves one over.
    auto vocab = Vocabulary::from_entries({{"a", 20}, {"b", 15}});
    vocab.set_subsampling(0.0, SubsampleVariant::implementation);
    auto corpus = alternating_corpus(vocab, 7, 5);
    TrainConfig cfg;
    cfg.width = 4;
    cfg.epochs = 1;
    cfg.batch_size = 3;
    std::vector<std::size_t> sizes;
    train(corpus, vocab, cfg, [&](const BatchRecord& rec) { sizes.push_back(rec.batch); });
    EXPECT_EQ(sizes.size(), 2u);
}

TEST(Training, PlantedSynonymsSeparate) {
    auto pc = fixtures::planted_synonyms({}, 1);
    auto vocab = Vocabulary::build(pc.corpus.flatten(), 1);
    vocab.set_subsampling(0.0, SubsampleVariant::implementation);
    auto ids = encode(pc.corpus, vocab);
    for (Variant v : {Variant::dsaw, Variant::cbow}) {
        auto r = train(ids, vocab, fixtures::planted_train_config(v, 16, 1));
        EXPECT_GE(fixtures::group_separation(r.model, vocab, pc.groups).gap(), 0.2) << to_string(v);
    }
}

TEST(TrainConfig, RejectsBadValues) {
    TrainConfig c;
    c.window = 0;
    EXPECT_THROW(c.validate(), UsageError);
    c = {};
    c.beta = -1;
    EXPECT_THROW(c.validate(), UsageError);
    c = {};
    c.lr = 0;
    EXPECT_THROW(c.validate(), UsageError);
}
