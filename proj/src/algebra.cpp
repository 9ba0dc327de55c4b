#include "dsaw/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "dsaw/error.hpp"
#include "dsaw/kernels.hpp"

namespace dsaw {

namespace {
void require_width(const BitSet& s, const BinaryEffect& e) {
    if (s.size() != e.width() || e.del.size() != e.width()) throw UsageError("state and effect widths differ");
}
}  // namespace

BitSet progress(const BitSet& state, const BinaryEffect& e) {
    require_width(state, e);
    return (state - e.del) | e.add;
}

BitSet regress(const BitSet& state, const BinaryEffect& e) {
    require_width(state, e);
    return (state - e.add) | e.del;
}

CombinedEffect compose(const CombinedEffect& e, ComposeOp op, const BinaryEffect& x) {
    if (e.width() != x.width()) throw UsageError("effect widths differ");
    const BitSet& xa = op == ComposeOp::plus ? x.add : x.del;
    const BitSet& xd = op == ComposeOp::plus ? x.del : x.add;
    return {(e.add - xd) | xa, (e.del - xa) | xd};
}

CombinedEffect compose_all(std::size_t width, std::span<const ComposeOp> ops,
                           std::span<const BinaryEffect* const> operands) {
    if (ops.size() != operands.size()) throw UsageError("compose_all: operator/operand count mismatch");
    CombinedEffect e(width);
    for (std::size_t i = 0; i < ops.size(); ++i) e = compose(e, ops[i], *operands[i]);
    return e;
}

TertiaryVector tertiary(const BinaryEffect& e) {
    TertiaryVector v(e.width());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = (e.add.test(j) ? 1.0 : 0.0) - (e.del.test(j) ? 1.0 : 0.0);
    return v;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw UsageError("cosine: length mismatch");
    const double nu = std::sqrt(dot(u, u));
    const double nv = std::sqrt(dot(v, v));
    if (nu == 0.0 || nv == 0.0) throw UsageError("cosine of an all-zero vector has no direction");
    return dot(u, v) / (nu * nv);
}

BinaryEffect extract_effect(const ModelParameters& model, WordId id, const std::string& word) {
    if (!is_discrete(model.variant))
        throw UsageError("effects exist only for discrete models, not " + std::string(to_string(model.variant)));
    const std::size_t e = model.width;
    BitSet zeros(e), ones(e);
    ones.set_all();
    auto w = model.effect.row(id);
    BitSet from_zero = btl_apply_limit(zeros, w, model.bn);
    BitSet from_one = btl_apply_limit(ones, w, model.bn);
    BinaryEffect out(from_zero, ~from_one);
    if (!out.disjoint()) {
        std::size_t j = (out.add & out.del).indices().front();
        throw IntegrityError("word '" + word + "' both adds and deletes dimension " + std::to_string(j) +
                             " (non-monotonic transition)");
    }
    return out;
}

std::vector<BinaryEffect> extract_effects(const ModelParameters& model, const Vocabulary& vocab) {
    return kernels::extract_effects_serial(model, vocab);
}

Matrix tertiary_matrix(std::span<const BinaryEffect> effects) {
    const std::size_t e = effects.empty() ? 0 : effects[0].width();
    Matrix m(effects.size(), e);
    for (std::size_t r = 0; r < effects.size(); ++r) {
        auto t = tertiary(effects[r]);
        std::copy(t.begin(), t.end(), m.row(r).begin());
    }
    return m;
}

std::vector<Neighbor> nearest(std::span<const double> query, const Matrix& vectors, std::size_t k,
                              std::span<const WordId> exclude) {
    if (query.size() != vectors.cols()) throw UsageError("nearest: query width does not match vectors");
    if (dot(query, query) == 0.0) throw UsageError("query vector is all zero; its direction is undefined");
    std::vector<double> sims = kernels::cosine_scan_serial(query, vectors);
    std::vector<char> skip(vectors.rows(), 0);
    for (WordId x : exclude)
        if (x < skip.size()) skip[x] = 1;
    std::vector<Neighbor> all;
    all.reserve(vectors.rows());
    for (std::size_t r = 0; r < vectors.rows(); ++r)
        if (!skip[r]) all.push_back({static_cast<WordId>(r), sims[r]});
    auto better = [](const Neighbor& a, const Neighbor& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
    };
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
    all.resize(k);
    return all;
}

void write_effects(std::ostream& out, const Vocabulary& vocab, std::span<const BinaryEffect> effects) {
    if (effects.size() != vocab.size()) throw UsageError("effect table does not match the vocabulary");
    for (std::size_t i = 0; i < effects.size(); ++i)
        out << vocab.word(static_cast<WordId>(i)) << '\t' << effects[i].add.to_string() << '\t'
            << effects[i].del.to_string() << '\n';
}

EffectTable read_effects(std::istream& in) {
    EffectTable t;
    std::string line;
    std::size_t lineno = 0, width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string word, add, del, extra;
        if (!std::getline(fields, word, '\t') || !std::getline(fields, add, '\t') || !std::getline(fields, del) ||
            del.find('\t') != std::string::npos)
            throw ParseError("expected word<TAB>add<TAB>del", lineno, 1);
        if (add.size() != del.size() || (width && add.size() != width))
            throw ParseError("inconsistent effect width", lineno, 1);
        width = add.size();
        BinaryEffect e;
        try {
            e = BinaryEffect(BitSet::from_string(add), BitSet::from_string(del));
        } catch (const std::exception&) {
            throw ParseError("effect bits must be 0/1 strings", lineno, 1);
        }
        if (!e.disjoint()) throw ParseError("add and del bits overlap for '" + word + "'", lineno, 1);
        t.words.push_back(std::move(word));
        t.effects.push_back(std::move(e));
    }
    return t;
}

}  // namespace dsaw
