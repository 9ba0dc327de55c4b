#include "dsaw/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dsaw/error.hpp"

namespace dsaw {

double subsample_prob(double f, double t, SubsampleVariant variant) {
    double p = 0.0;
    switch (variant) {
        case SubsampleVariant::paper:
            p = 1.0 - std::sqrt(t / f);
            break;
        case SubsampleVariant::implementation:
            p = 1.0 - (std::sqrt(f / t) + 1.0) * t / f;
            break;
    }
    return std::clamp(p, 0.0, 1.0);
}

std::string_view to_string(SubsampleVariant v) {
    return v == SubsampleVariant::paper ? "paper" : "implementation";
}

SubsampleVariant parse_subsample_variant(std::string_view s) {
    if (s == "paper") return SubsampleVariant::paper;
    if (s == "implementation") return SubsampleVariant::implementation;
    throw UsageError("unknown subsampling variant '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

Vocabulary Vocabulary::build(std::span<const std::string> tokens, std::uint64_t min_count) {
    std::unordered_map<std::string_view, std::size_t> slot;
    std::vector<VocabEntry> seen;
    for (const auto& tok : tokens) {
        auto [it, inserted] = slot.try_emplace(tok, seen.size());
        if (inserted) seen.push_back({tok, 0});
        ++seen[it->second].count;
    }
    std::erase_if(seen, [&](const VocabEntry& e) { return e.count < min_count; });
    if (seen.empty()) throw DataError("vocabulary is empty after pruning (min_count=" +
                                      std::to_string(min_count) + ")");
    // stable_sort keeps first-occurrence order among equal counts
    std::stable_sort(seen.begin(), seen.end(),
                     [](const VocabEntry& a, const VocabEntry& b) { return a.count > b.count; });
    return from_entries(std::move(seen), min_count);
}

Vocabulary Vocabulary::from_entries(std::vector<VocabEntry> entries, std::uint64_t min_count) {
    if (entries.empty()) throw DataError("vocabulary is empty");
    Vocabulary v;
    v.entries_ = std::move(entries);
    v.min_count_ = min_count;
    for (std::size_t i = 0; i < v.entries_.size(); ++i) {
        const auto& e = v.entries_[i];
        if (e.count == 0) throw DataError("vocabulary word '" + e.word + "' has zero count");
        if (i > 0 && e.count > v.entries_[i - 1].count)
            throw DataError("vocabulary is not sorted by descending count at '" + e.word + "'");
        v.total_tokens_ += e.count;
    }
    v.rebuild_index();
    v.rebuild_noise_table();
    return v;
}

void Vocabulary::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto [_, inserted] = index_.emplace(entries_[i].word, static_cast<WordId>(i));
        if (!inserted) throw DataError("duplicate vocabulary word '" + entries_[i].word + "'");
    }
}

void Vocabulary::rebuild_noise_table() {
    noise_cdf_.resize(entries_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        acc += std::pow(static_cast<double>(entries_[i].count), noise_power_);
        noise_cdf_[i] = acc;
    }
    for (auto& x : noise_cdf_) x /= acc;
    noise_cdf_.back() = 1.0;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

WordId Vocabulary::id(std::string_view word) const {
    if (auto id = find(word)) return *id;
    throw DataError("word '" + std::string(word) + "' is not in the vocabulary");
}

void Vocabulary::set_subsampling(double threshold, SubsampleVariant variant) {
    subsample_threshold_ = threshold;
    subsample_variant_ = variant;
}

double Vocabulary::drop_probability(WordId id) const {
    if (subsample_threshold_ <= 0.0) return 0.0;
    return subsample_prob(frequency(id), subsample_threshold_, subsample_variant_);
}

void Vocabulary::set_noise_power(double power) {
    noise_power_ = power;
    rebuild_noise_table();
}

std::vector<double> Vocabulary::noise_distribution() const {
    std::vector<double> p(noise_cdf_.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = noise_cdf_[i] - prev;
        prev = noise_cdf_[i];
    }
    return p;
}

WordId Vocabulary::draw_negative(Rng& rng) const {
    double u = rng.uniform();
    auto it = std::upper_bound(noise_cdf_.begin(), noise_cdf_.end(), u);
    if (it == noise_cdf_.end()) --it;
    return static_cast<WordId>(it - noise_cdf_.begin());
}

std::vector<WordId> Vocabulary::draw_negatives(std::size_t k, Rng& rng) const {
    std::vector<WordId> out(k);
    for (auto& id : out) id = draw_negative(rng);
    return out;
}

void Vocabulary::write(std::ostream& out) const {
    for (const auto& e : entries_) out << e.word << '\t' << e.count << '\n';
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary to " + path.string());
    write(out);
}

Vocabulary Vocabulary::read(std::istream& in) {
    std::vector<VocabEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("vocabulary line " + std::to_string(lineno) + " lacks a tab");
        VocabEntry e;
        e.word = line.substr(0, tab);
        try {
            e.count = std::stoull(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw DataError("vocabulary line " + std::to_string(lineno) + " has a bad count");
        }
        entries.push_back(std::move(e));
    }
    std::uint64_t min_count = entries.empty() ? 1 : entries.back().count;
    return from_entries(std::move(entries), min_count);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read vocabulary " + path.string());
    return read(in);
}

std::uint64_t Vocabulary::fingerprint() const {
    std::ostringstream ss;
    write(ss);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : ss.str()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------

std::size_t Corpus::token_count() const {
    return std::accumulate(lines.begin(), lines.end(), std::size_t{0},
                           [](std::size_t n, const auto& l) { return n + l.size(); });
}

std::vector<std::string> Corpus::flatten() const {
    std::vector<std::string> out;
    out.reserve(token_count());
    for (const auto& l : lines) out.insert(out.end(), l.begin(), l.end());
    return out;
}

Corpus tokenize(std::string_view text, bool downcase) {
    Corpus corpus;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::vector<std::string> toks;
        std::string cur;
        for (std::size_t i = start; i < end; ++i) {
            unsigned char ch = static_cast<unsigned char>(text[i]);
            if (std::isspace(ch)) {
                if (!cur.empty()) toks.push_back(std::move(cur)), cur.clear();
            } else {
                cur.push_back(downcase ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch));
            }
        }
        if (!cur.empty()) toks.push_back(std::move(cur));
        if (!toks.empty()) corpus.lines.push_back(std::move(toks));
        start = end + 1;
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, bool downcase) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read corpus " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return tokenize(ss.str(), downcase);
}

IdCorpus encode(const Corpus& corpus, const Vocabulary& vocab) {
    IdCorpus out;
    out.reserve(corpus.lines.size());
    for (const auto& line : corpus.lines) {
        std::vector<WordId> ids;
        ids.reserve(line.size());
        for (const auto& tok : line)
            if (auto id = vocab.find(tok)) ids.push_back(*id);
        out.push_back(std::move(ids));
    }
    return out;
}

// ---------------------------------------------------------------------------

SampleStream::SampleStream(const IdCorpus& corpus, const Vocabulary& vocab, int c, std::uint64_t seed)
    : corpus_(corpus), vocab_(vocab), c_(c), rng_(seed) {
    if (c < 1) throw UsageError("context half-width c must be >= 1");
}

bool SampleStream::advance_line() {
    while (line_ < corpus_.size()) {
        const auto& ids = corpus_[line_++];
        kept_.clear();
        for (WordId id : ids) {
            double p = vocab_.drop_probability(id);
            if (p > 0.0 && rng_.uniform() < p) continue;
            kept_.push_back(id);
        }
        pos_ = static_cast<std::size_t>(c_);
        if (kept_.size() >= static_cast<std::size_t>(2 * c_ + 1)) return true;
    }
    return false;
}

bool SampleStream::next(ContextSample& out) {
    const auto c = static_cast<std::size_t>(c_);
    while (kept_.size() < 2 * c + 1 || pos_ + c >= kept_.size()) {
        if (!advance_line()) return false;
    }
    out.center = kept_[pos_];
    out.context.clear();
    for (std::size_t j = pos_ - c; j < pos_; ++j) out.context.push_back(kept_[j]);
    for (std::size_t j = pos_ + 1; j <= pos_ + c; ++j) out.context.push_back(kept_[j]);
    ++pos_;
    return true;
}

std::vector<ContextSample> collect_samples(const IdCorpus& corpus, const Vocabulary& vocab, int c,
                                           std::uint64_t seed) {
    std::vector<ContextSample> out;
    SampleStream stream(corpus, vocab, c, seed);
    ContextSample s;
    while (stream.next(s)) out.push_back(s);
    return out;
}

}  // namespace dsaw
