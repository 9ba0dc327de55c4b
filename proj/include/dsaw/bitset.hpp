#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dsaw {

/// Fixed-width bit vector sized at runtime. Binary operations require equal
/// widths; bits past `size()` in the last word are always zero.
class BitSet {
public:
    using Word = std::uint64_t;
    static constexpr std::size_t kWordBits = 64;

    BitSet() = default;
    explicit BitSet(std::size_t nbits) : nbits_(nbits), words_(word_count(nbits), 0) {}

    static std::size_t word_count(std::size_t nbits) { return (nbits + kWordBits - 1) / kWordBits; }

    /// Parses a string of '0'/'1' characters, bit 0 first.
    static BitSet from_string(std::string_view bits);

    static BitSet from_words(std::span<const Word> words, std::size_t nbits) {
        BitSet b(nbits);
        for (std::size_t i = 0; i < b.words_.size(); ++i) b.words_[i] = words[i];
        return b;
    }

    std::size_t size() const { return nbits_; }
    std::span<const Word> words() const { return words_; }
    std::span<Word> words() { return words_; }

    bool test(std::size_t i) const { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
    bool operator[](std::size_t i) const { return test(i); }

    BitSet& set(std::size_t i, bool value = true) {
        Word mask = Word{1} << (i % kWordBits);
        if (value)
            words_[i / kWordBits] |= mask;
        else
            words_[i / kWordBits] &= ~mask;
        return *this;
    }
    BitSet& reset(std::size_t i) { return set(i, false); }

    BitSet& set_all() {
        for (auto& w : words_) w = ~Word{0};
        trim();
        return *this;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (Word w : words_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }
    bool any() const {
        for (Word w : words_)
            if (w) return true;
        return false;
    }
    bool none() const { return !any(); }

    BitSet& operator&=(const BitSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
        return *this;
    }
    BitSet& operator|=(const BitSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
        return *this;
    }
    BitSet& operator^=(const BitSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= o.words_[i];
        return *this;
    }
    /// this := this & ~o
    BitSet& subtract(const BitSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
        return *this;
    }

    friend BitSet operator&(BitSet a, const BitSet& b) { return a &= b; }
    friend BitSet operator|(BitSet a, const BitSet& b) { return a |= b; }
    friend BitSet operator^(BitSet a, const BitSet& b) { return a ^= b; }
    friend BitSet operator-(BitSet a, const BitSet& b) { return a.subtract(b); }

    BitSet operator~() const {
        BitSet r = *this;
        for (auto& w : r.words_) w = ~w;
        r.trim();
        return r;
    }

    bool is_subset_of(const BitSet& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.words_[i]) return false;
        return true;
    }
    bool intersects(const BitSet& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & o.words_[i]) return true;
        return false;
    }
    /// Number of bits set in this but not in o.
    std::size_t count_missing_from(const BitSet& o) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            n += static_cast<std::size_t>(std::popcount(words_[i] & ~o.words_[i]));
        return n;
    }

    std::vector<std::size_t> indices() const;

    /// '0'/'1' characters, bit 0 first.
    std::string to_string() const;

    std::size_t hash() const {
        std::uint64_t h = 1469598103934665603ULL ^ nbits_;
        for (Word w : words_) {
            h ^= w;
            h *= 1099511628211ULL;
            h ^= h >> 29;
        }
        return static_cast<std::size_t>(h);
    }

    friend bool operator==(const BitSet& a, const BitSet& b) {
        return a.nbits_ == b.nbits_ && a.words_ == b.words_;
    }

private:
    void trim() {
        if (nbits_ % kWordBits != 0 && !words_.empty())
            words_.back() &= (Word{1} << (nbits_ % kWordBits)) - 1;
    }

    std::size_t nbits_ = 0;
    std::vector<Word> words_;
};

}  // namespace dsaw

template <>
struct std::hash<dsaw::BitSet> {
    std::size_t operator()(const dsaw::BitSet& b) const noexcept { return b.hash(); }
};
