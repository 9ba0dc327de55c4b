#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dsaw/bitset.hpp"
#include "dsaw/corpus.hpp"
#include "dsaw/matrix.hpp"
#include "dsaw/model.hpp"

namespace dsaw {

/// STRIPS-style effect of a word: bits it sets and bits it clears.
struct BinaryEffect {
    BitSet add;
    BitSet del;

    BinaryEffect() = default;
    explicit BinaryEffect(std::size_t width) : add(width), del(width) {}
    BinaryEffect(BitSet a, BitSet d) : add(std::move(a)), del(std::move(d)) {}

    std::size_t width() const { return add.size(); }
    bool disjoint() const { return !add.intersects(del); }
    bool empty() const { return add.none() && del.none(); }

    /// Same effect with add and del exchanged (the inverse action).
    BinaryEffect swapped() const { return {del, add}; }

    friend bool operator==(const BinaryEffect&, const BinaryEffect&) = default;
};

/// A composed effect has the same shape as a word effect.
using CombinedEffect = BinaryEffect;

enum class ComposeOp { plus, minus };

/// s' = (s - del) | add
BitSet progress(const BitSet& state, const BinaryEffect& e);
/// s = (s' - add) | del
BitSet regress(const BitSet& state, const BinaryEffect& e);

/// Left-to-right composition. `minus` composes with x.swapped().
CombinedEffect compose(const CombinedEffect& e, ComposeOp op, const BinaryEffect& x);

/// Folds `ops` over an initially empty effect.
CombinedEffect compose_all(std::size_t width, std::span<const ComposeOp> ops,
                           std::span<const BinaryEffect* const> operands);

using TertiaryVector = std::vector<double>;

/// add - del, entries in {-1, 0, +1}.
TertiaryVector tertiary(const BinaryEffect& e);

/// Normalized dot product. Throws UsageError if either vector is all zero.
double cosine(std::span<const double> u, std::span<const double> v);

/// Extracts one word's effect from a discrete model by applying it to the
/// all-zero and all-one states (eval mode, tau -> 0, zero noise).
/// Throws IntegrityError naming `word` and the dimension if a bit would be
/// both added and deleted.
BinaryEffect extract_effect(const ModelParameters& model, WordId id, const std::string& word);

/// Effects of every word, in id order.
std::vector<BinaryEffect> extract_effects(const ModelParameters& model, const Vocabulary& vocab);

/// Row matrix of tertiary vectors, one per effect.
Matrix tertiary_matrix(std::span<const BinaryEffect> effects);

struct Neighbor {
    WordId id = 0;
    double similarity = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Top-k rows of `vectors` by cosine similarity to `query`, excluding the
/// ids in `exclude`. Zero rows score 0. Ties go to the lower id.
/// Throws UsageError on an all-zero query.
std::vector<Neighbor> nearest(std::span<const double> query, const Matrix& vectors, std::size_t k,
                              std::span<const WordId> exclude = {});

/// Effect export, one line per word: "word<TAB>add-bits<TAB>del-bits".
void write_effects(std::ostream& out, const Vocabulary& vocab, std::span<const BinaryEffect> effects);

struct EffectTable {
    std::vector<std::string> words;
    std::vector<BinaryEffect> effects;
};

EffectTable read_effects(std::istream& in);

}  // namespace dsaw
