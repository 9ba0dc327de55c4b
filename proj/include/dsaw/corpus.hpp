#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dsaw/rng.hpp"

namespace dsaw {

using WordId = std::uint32_t;

/// Which word-dropping formula to use for frequent-word subsampling.
enum class SubsampleVariant {
    paper,           // p = 1 - sqrt(t / f)
    implementation,  // p = 1 - (sqrt(f / t) + 1) * t / f   (word2vec.c)
};

/// Probability of dropping a token with corpus frequency `f`, clamped to [0, 1].
double subsample_prob(double f, double t, SubsampleVariant variant);

std::string_view to_string(SubsampleVariant v);
SubsampleVariant parse_subsample_variant(std::string_view s);

struct VocabEntry {
    std::string word;
    std::uint64_t count = 0;
};

/// Frequency-ranked word table. Immutable once built except for the sampling
/// knobs (`set_subsampling`, `set_noise_power`), which callers set before
/// sharing it.
class Vocabulary {
public:
    /// Counts tokens, drops words below `min_count`, and assigns ids by
    /// descending count with ties in first-occurrence order.
    /// Throws DataError if nothing survives.
    static Vocabulary build(std::span<const std::string> tokens, std::uint64_t min_count);

    /// Builds from an already-ranked list (e.g. a saved vocabulary file).
    static Vocabulary from_entries(std::vector<VocabEntry> entries, std::uint64_t min_count = 1);

    std::size_t size() const { return entries_.size(); }
    const std::vector<VocabEntry>& entries() const { return entries_; }
    const std::string& word(WordId id) const { return entries_.at(id).word; }
    std::uint64_t count(WordId id) const { return entries_.at(id).count; }
    std::optional<WordId> find(std::string_view word) const;
    /// Like find() but throws DataError naming the word.
    WordId id(std::string_view word) const;

    std::uint64_t total_tokens() const { return total_tokens_; }
    std::uint64_t min_count() const { return min_count_; }
    double frequency(WordId id) const {
        return static_cast<double>(count(id)) / static_cast<double>(total_tokens_);
    }

    /// Threshold t <= 0 disables subsampling.
    void set_subsampling(double threshold, SubsampleVariant variant);
    double subsample_threshold() const { return subsample_threshold_; }
    SubsampleVariant subsample_variant() const { return subsample_variant_; }
    double drop_probability(WordId id) const;

    void set_noise_power(double power);
    double noise_power() const { return noise_power_; }
    /// Noise probability of each id: count^power normalized.
    std::vector<double> noise_distribution() const;

    /// K i.i.d. draws from the noise distribution.
    std::vector<WordId> draw_negatives(std::size_t k, Rng& rng) const;
    WordId draw_negative(Rng& rng) const;

    /// "word<TAB>count" lines, descending count; id = line index.
    void write(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static Vocabulary read(std::istream& in);
    static Vocabulary load(const std::filesystem::path& path);

    /// FNV-1a over the serialized form; stored in model files for integrity.
    std::uint64_t fingerprint() const;

private:
    void rebuild_index();
    void rebuild_noise_table();

    std::vector<VocabEntry> entries_;
    std::unordered_map<std::string, WordId> index_;
    std::uint64_t total_tokens_ = 0;
    std::uint64_t min_count_ = 1;
    double subsample_threshold_ = 1e-4;
    SubsampleVariant subsample_variant_ = SubsampleVariant::implementation;
    double noise_power_ = 0.75;
    std::vector<double> noise_cdf_;
};

/// Whitespace-tokenized text, one sentence per line.
struct Corpus {
    std::vector<std::vector<std::string>> lines;

    std::size_t token_count() const;
    std::vector<std::string> flatten() const;
};

Corpus tokenize(std::string_view text, bool downcase);
Corpus load_corpus(const std::filesystem::path& path, bool downcase);

/// Corpus with every token mapped to its id; out-of-vocabulary tokens dropped.
using IdCorpus = std::vector<std::vector<WordId>>;
IdCorpus encode(const Corpus& corpus, const Vocabulary& vocab);

struct ContextSample {
    WordId center = 0;
    /// Positions i-c..i-1 followed by i+1..i+c.
    std::vector<WordId> context;

    friend bool operator==(const ContextSample&, const ContextSample&) = default;
};

/// Single-pass stream of (context, center) windows. Subsampling is drawn per
/// token as each line is visited; windows never cross line boundaries and
/// only full 2c-context windows are emitted.
class SampleStream {
public:
    SampleStream(const IdCorpus& corpus, const Vocabulary& vocab, int c, std::uint64_t seed);

    /// Writes the next sample into `out`; false once the corpus is exhausted.
    bool next(ContextSample& out);

private:
    bool advance_line();

    const IdCorpus& corpus_;
    const Vocabulary& vocab_;
    int c_;
    Rng rng_;
    std::size_t line_ = 0;
    std::vector<WordId> kept_;
    std::size_t pos_ = 0;
};

/// Convenience: drains a SampleStream into a vector.
std::vector<ContextSample> collect_samples(const IdCorpus& corpus, const Vocabulary& vocab, int c,
                                           std::uint64_t seed);

}  // namespace dsaw
