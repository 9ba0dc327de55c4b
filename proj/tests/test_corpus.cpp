#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "dsaw/corpus.hpp"
#include "dsaw/error.hpp"

using namespace dsaw;

namespace {

std::vector<std::string> words(std::string_view text) { return tokenize(text, false).flatten(); }

}  // namespace

TEST(Vocabulary, CountsAndIds) {
    auto v = Vocabulary::build(words("a a b"), 1);
    EXPECT_EQ(v.size(), 2u);
    EXPECT_EQ(v.id("a"), 0u);
    EXPECT_EQ(v.id("b"), 1u);
    EXPECT_DOUBLE_EQ(v.frequency(0), 2.0 / 3.0);
}

TEST(Vocabulary, MinCountPrunes) {
    auto v = Vocabulary::build(words("a a b"), 2);
    EXPECT_EQ(v.size(), 1u);
    EXPECT_FALSE(v.find("b").has_value());
}

TEST(Vocabulary, EmptyAfterPruningThrows) { EXPECT_THROW(Vocabulary::build(words("a b"), 5), DataError); }

TEST(Vocabulary, IdsMatchIndependentSort) {
    Rng rng(3);
    std::vector<std::string> tokens;
    for (int i = 0; i < 1000; ++i) tokens.push_back("w" + std::to_string(rng.below(40)));
    auto v = Vocabulary::build(tokens, 1);

    // Oracle: count with a map, then order by (-count, first occurrence).
    std::map<std::string, std::pair<std::uint64_t, std::size_t>> table;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto [it, fresh] = table.try_emplace(tokens[i], 0, i);
        ++it->second.first;
    }
    std::vector<std::tuple<long, std::size_t, std::string>> order;
    for (auto& [w, cf] : table) order.emplace_back(-static_cast<long>(cf.first), cf.second, w);
    std::sort(order.begin(), order.end());
    ASSERT_EQ(order.size(), v.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        EXPECT_EQ(v.word(static_cast<WordId>(i)), std::get<2>(order[i]));
        EXPECT_EQ(v.count(static_cast<WordId>(i)), static_cast<std::uint64_t>(-std::get<0>(order[i])));
    }
}

TEST(Vocabulary, TextRoundTrip) {
    auto v = Vocabulary::build(words("x y y z z z"), 1);
    std::stringstream s;
    v.write(s);
    auto w = Vocabulary::read(s);
    EXPECT_EQ(w.entries().size(), v.entries().size());
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(w.word(i), v.word(i));
    EXPECT_EQ(w.fingerprint(), v.fingerprint());
}

TEST(Subsample, SpotValues) {
    EXPECT_NEAR(subsample_prob(0.05, 1e-4, SubsampleVariant::implementation), 0.9532786, 1e-6);
    EXPECT_NEAR(subsample_prob(0.05, 1e-5, SubsampleVariant::paper), 0.9858579, 1e-6);
    // Independent evaluation of the two formulas.
    EXPECT_NEAR(subsample_prob(0.05, 1e-4, SubsampleVariant::implementation),
                1.0 - (std::sqrt(0.05 / 1e-4) + 1.0) * 1e-4 / 0.05, 1e-15);
}

TEST(Subsample, RareWordsNeverDropped) {
    for (auto variant : {SubsampleVariant::paper, SubsampleVariant::implementation}) {
        EXPECT_EQ(subsample_prob(1e-4, 1e-4, variant), 0.0);
        EXPECT_EQ(subsample_prob(1e-6, 1e-4, variant), 0.0);
    }
}

TEST(Subsample, MonotoneInFrequency) {
    for (auto variant : {SubsampleVariant::paper, SubsampleVariant::implementation}) {
        double prev = -1.0;
        for (int i = 1; i <= 1000; ++i) {
            double p = subsample_prob(i / 1000.0, 1e-3, variant);
            EXPECT_GE(p, prev);
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
            prev = p;
        }
    }
}

TEST(SampleStream, SingleFullWindow) {
    auto corpus = tokenize("a b c d e", false);
    auto v = Vocabulary::build(corpus.flatten(), 1);
    v.set_subsampling(0.0, SubsampleVariant::implementation);
    auto samples = collect_samples(encode(corpus, v), v, 2, 1);
    ASSERT_EQ(samples.size(), 1u);
    EXPECT_EQ(v.word(samples[0].center), "c");
    std::vector<std::string> ctx;
    for (auto id : samples[0].context) ctx.push_back(v.word(id));
    EXPECT_EQ(ctx, (std::vector<std::string>{"a", "b", "d", "e"}));
}

TEST(SampleStream, ShortLineYieldsNothing) {
    auto corpus = tokenize("a b", false);
    auto v = Vocabulary::build(corpus.flatten(), 1);
    EXPECT_TRUE(collect_samples(encode(corpus, v), v, 2, 1).empty());
}

TEST(SampleStream, NeverCrossesLines) {
    auto corpus = tokenize("a b c\nd e f", false);
    auto v = Vocabulary::build(corpus.flatten(), 1);
    v.set_subsampling(0.0, SubsampleVariant::implementation);
    auto samples = collect_samples(encode(corpus, v), v, 1, 1);
    ASSERT_EQ(samples.size(), 2u);
    EXPECT_EQ(v.word(samples[0].center), "b");
    EXPECT_EQ(v.word(samples[1].center), "e");
}

TEST(SampleStream, DeterministicPerSeed) {
    Rng rng(11);
    std::string text;
    for (int line = 0; line < 1000; ++line) {
        for (int k = 0; k < 10; ++k) text += "w" + std::to_string(rng.below(50)) + " ";
        text += "\n";
    }
    auto corpus = tokenize(text, false);
    auto v = Vocabulary::build(corpus.flatten(), 1);
    v.set_subsampling(1e-3, SubsampleVariant::implementation);
    auto ids = encode(corpus, v);
    auto a = collect_samples(ids, v, 2, 5);
    auto b = collect_samples(ids, v, 2, 5);
    auto c = collect_samples(ids, v, 2, 6);
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(a == c);
    for (const auto& s : a) {
        EXPECT_EQ(s.context.size(), 4u);
        EXPECT_LT(s.center, v.size());
        for (auto id : s.context) EXPECT_LT(id, v.size());
    }
}

TEST(Negatives, SingleWordVocabulary) {
    auto v = Vocabulary::build(words("a a a"), 1);
    Rng rng(1);
    for (auto id : v.draw_negatives(10, rng)) EXPECT_EQ(id, 0u);
}

namespace {

void expect_frequencies(const Vocabulary& v, const std::vector<double>& expected, int draws) {
    Rng rng(99);
    std::vector<int> hits(v.size(), 0);
    for (int i = 0; i < draws; ++i) ++hits[v.draw_negative(rng)];
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double p = expected[i];
        const double sigma = std::sqrt(draws * p * (1 - p));
        EXPECT_NEAR(hits[i], draws * p, 3 * sigma) << "word " << i;
    }
}

}  // namespace

TEST(Negatives, UniformAtPowerZero) {
    auto v = Vocabulary::from_entries({{"a", 900}, {"b", 90}, {"c", 10}});
    v.set_noise_power(0.0);
    expect_frequencies(v, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 100000);
}

TEST(Negatives, UnigramPowerThreeQuarters) {
    auto v = Vocabulary::from_entries({{"a", 900}, {"b", 90}, {"c", 10}});
    v.set_noise_power(0.75);
    const double z = std::pow(900, 0.75) + std::pow(90, 0.75) + std::pow(10, 0.75);
    std::vector<double> p = {std::pow(900, 0.75) / z, std::pow(90, 0.75) / z, std::pow(10, 0.75) / z};
    expect_frequencies(v, p, 100000);
    auto d = v.noise_distribution();
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(d[i], p[i], 1e-12);
}

TEST(Tokenize, Downcase) {
    auto c = tokenize("The CAT\n\nsat", true);
    EXPECT_EQ(c.flatten(), (std::vector<std::string>{"the", "cat", "sat"}));
}
