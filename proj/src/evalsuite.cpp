#include "dsaw/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "dsaw/error.hpp"
#include "dsaw/kernels.hpp"
#include "dsaw/rng.hpp"

namespace dsaw {

std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw UsageError("spearman: inputs differ in length");
    if (xs.size() < 2) throw DataError("correlation is undefined for fewer than 2 pairs");
    auto rx = average_ranks(xs);
    auto ry = average_ranks(ys);
    const double n = static_cast<double>(rx.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("correlation is undefined for a constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

Embedding Embedding::from_model(const ModelParameters& model, const Vocabulary& vocab) {
    if (model.vocab_size() != vocab.size()) throw UsageError("model and vocabulary sizes differ");
    Embedding e;
    e.variant = model.variant;
    e.vocab = &vocab;
    if (is_discrete(model.variant)) {
        e.effects = extract_effects(model, vocab);
        e.vectors = tertiary_matrix(e.effects);
    } else {
        e.vectors = model.effect;
    }
    return e;
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    return in;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream s(line);
    while (std::getline(s, field, '\t')) out.push_back(field);
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string downcase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

SimilarityDataset read_similarity(std::istream& in, std::string name) {
    SimilarityDataset d{std::move(name), {}};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto f = split_tabs(line);
        if (f.size() != 3) throw ParseError("expected word1<TAB>word2<TAB>score", lineno, 1);
        auto score = parse_number(f[2]);
        if (!score) throw ParseError("score is not a finite number", lineno, static_cast<int>(f[0].size() + f[1].size() + 3));
        d.pairs.push_back({downcase(f[0]), downcase(f[1]), *score});
    }
    return d;
}

SimilarityDataset load_similarity(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_similarity(in, path.stem().string());
}

namespace {
double pair_similarity(const Embedding& emb, WordId a, WordId b) {
    auto u = emb.vectors.row(a);
    auto v = emb.vectors.row(b);
    const double nu = dot(u, u), nv = dot(v, v);
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot(u, v) / std::sqrt(nu * nv);
}

void collect_pairs(const Embedding& emb, const SimilarityDataset& data, std::vector<double>& model,
                   std::vector<double>& human, std::size_t& skipped) {
    for (const auto& p : data.pairs) {
        auto a = emb.vocab->find(p.first);
        auto b = emb.vocab->find(p.second);
        if (!a || !b) {
            ++skipped;
            continue;
        }
        model.push_back(pair_similarity(emb, *a, *b));
        human.push_back(p.score);
    }
}
}  // namespace

SimilarityResult similarity_eval(const Embedding& emb, const SimilarityDataset& data) {
    return similarity_pooled(emb, std::span(&data, 1));
}

SimilarityResult similarity_pooled(const Embedding& emb, std::span<const SimilarityDataset> data) {
    SimilarityResult r;
    r.name = data.size() == 1 ? data[0].name : "total";
    std::vector<double> model, human;
    for (const auto& d : data) collect_pairs(emb, d, model, human, r.skipped);
    r.used = model.size();
    if (r.used < 2)
        throw DataError("dataset '" + r.name + "' has " + std::to_string(r.used) +
                        " in-vocabulary pairs; correlation is undefined");
    r.rho = spearman(model, human);
    return r;
}

// ---------------------------------------------------------------------------

std::vector<AnalogyQuestion> read_analogies(std::istream& in) {
    std::vector<AnalogyQuestion> qs;
    std::string line, category = "default";
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == ':') {
            std::istringstream s(line.substr(1));
            s >> category;
            if (category.empty()) throw ParseError("empty category header", lineno, 1);
            continue;
        }
        std::istringstream s(downcase(line));
        AnalogyQuestion q{category, {}, {}, {}, {}};
        std::string extra;
        if (!(s >> q.a >> q.a_star >> q.b >> q.b_star) || (s >> extra))
            throw ParseError("expected four words", lineno, 1);
        if (q.a == q.a_star || q.a == q.b || q.a == q.b_star || q.a_star == q.b || q.a_star == q.b_star ||
            q.b == q.b_star)
            throw ParseError("analogy words must be distinct", lineno, 1);
        qs.push_back(std::move(q));
    }
    return qs;
}

std::vector<AnalogyQuestion> load_analogies(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_analogies(in);
}

std::string_view to_string(AnalogyMethod m) {
    switch (m) {
        case AnalogyMethod::cos3add: return "3cosadd";
        case AnalogyMethod::seqadd: return "seqadd";
        case AnalogyMethod::ignore_a: return "ignorea";
        case AnalogyMethod::only_b: return "onlyb";
    }
    return "?";
}

AnalogyMethod parse_analogy_method(std::string_view s) {
    std::string l = downcase(std::string(s));
    if (l == "3cosadd" || l == "add") return AnalogyMethod::cos3add;
    if (l == "seqadd") return AnalogyMethod::seqadd;
    if (l == "ignorea" || l == "ignore-a") return AnalogyMethod::ignore_a;
    if (l == "onlyb" || l == "only-b") return AnalogyMethod::only_b;
    throw UsageError("unknown analogy method '" + std::string(s) + "'");
}

Ordering parse_ordering(std::string_view s) {
    Ordering o;
    std::size_t i = 0;
    auto fail = [&] { throw UsageError("bad ordering '" + std::string(s) + "' (expected e.g. -a+a*+b)"); };
    while (i < s.size()) {
        OrderingTerm t;
        if (s[i] == '+' || s[i] == '-') {
            t.op = s[i] == '+' ? ComposeOp::plus : ComposeOp::minus;
            ++i;
        } else if (!o.empty()) {
            fail();
        }
        if (i >= s.size()) fail();
        if (s[i] == 'a') {
            ++i;
            if (i < s.size() && s[i] == '*') {
                t.operand = Operand::a_star;
                ++i;
            } else {
                t.operand = Operand::a;
            }
        } else if (s[i] == 'b') {
            t.operand = Operand::b;
            ++i;
        } else {
            fail();
        }
        o.push_back(t);
    }
    if (o.empty()) fail();
    return o;
}

std::string to_string(const Ordering& o) {
    std::string s;
    for (const auto& t : o) {
        s += t.op == ComposeOp::plus ? '+' : '-';
        s += t.operand == Operand::a ? "a" : t.operand == Operand::a_star ? "a*" : "b";
    }
    return s;
}

const std::vector<std::string>& standard_orderings() {
    static const std::vector<std::string> all = {"-a+a*+b", "b-a+a*", "b+a*-a", "a*-a+b", "a*+b-a", "-a+b+a*"};
    return all;
}

namespace {

void normalize_into(std::vector<double>& acc, std::span<const double> row, double sign) {
    const double n = std::sqrt(dot(row, row));
    if (n == 0.0) return;
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += sign * row[j] / n;
}

void check_method(const Embedding& emb, AnalogyMethod m) {
    if (m == AnalogyMethod::seqadd && !emb.discrete())
        throw UsageError("seqadd needs a discrete model; use 3cosadd for " + std::string(to_string(emb.variant)));
    if (m == AnalogyMethod::cos3add && emb.discrete())
        throw UsageError("3cosadd needs a continuous model; use seqadd for " + std::string(to_string(emb.variant)));
}

}  // namespace

std::vector<double> analogy_query(const Embedding& emb, WordId a, WordId a_star, WordId b,
                                  const AnalogyOptions& opt) {
    check_method(emb, opt.method);
    auto pick = [&](Operand x) { return x == Operand::a ? a : x == Operand::a_star ? a_star : b; };
    if (emb.discrete()) {
        Ordering ord;
        switch (opt.method) {
            case AnalogyMethod::seqadd: ord = opt.ordering; break;
            case AnalogyMethod::ignore_a: ord = parse_ordering("a*+b"); break;
            case AnalogyMethod::only_b: ord = parse_ordering("b"); break;
            case AnalogyMethod::cos3add: break;
        }
        CombinedEffect e(emb.width());
        for (const auto& t : ord) e = compose(e, t.op, emb.effects[pick(t.operand)]);
        return tertiary(e);
    }
    std::vector<double> q(emb.width(), 0.0);
    switch (opt.method) {
        case AnalogyMethod::cos3add:
            normalize_into(q, emb.vectors.row(a_star), 1.0);
            normalize_into(q, emb.vectors.row(a), -1.0);
            normalize_into(q, emb.vectors.row(b), 1.0);
            break;
        case AnalogyMethod::ignore_a:
            normalize_into(q, emb.vectors.row(a_star), 1.0);
            normalize_into(q, emb.vectors.row(b), 1.0);
            break;
        case AnalogyMethod::only_b: normalize_into(q, emb.vectors.row(b), 1.0); break;
        case AnalogyMethod::seqadd: break;
    }
    return q;
}

std::vector<Neighbor> rank_candidates(const Embedding& emb, std::span<const double> query, std::size_t k,
                                      std::span<const WordId> exclude) {
    if (dot(query, query) != 0.0) return nearest(query, emb.vectors, k, exclude);
    std::vector<Neighbor> out;
    for (std::size_t r = 0; r < emb.vectors.rows() && out.size() < k; ++r)
        if (std::find(exclude.begin(), exclude.end(), static_cast<WordId>(r)) == exclude.end())
            out.push_back({static_cast<WordId>(r), 0.0});
    return out;
}

AnalogyReport analogy_eval(const Embedding& emb, std::span<const AnalogyQuestion> questions,
                           const AnalogyOptions& opt) {
    check_method(emb, opt.method);
    if (opt.topk == 0) throw UsageError("topk must be positive");
    AnalogyReport rep;
    rep.overall.category = "total";
    auto category = [&](const std::string& name) -> CategoryAccuracy& {
        for (auto& c : rep.categories)
            if (c.category == name) return c;
        rep.categories.push_back({name, 0, 0, 0});
        return rep.categories.back();
    };
    for (const auto& q : questions) {
        CategoryAccuracy& cat = category(q.category);
        auto a = emb.vocab->find(q.a), as = emb.vocab->find(q.a_star), b = emb.vocab->find(q.b),
             bs = emb.vocab->find(q.b_star);
        if (!a || !as || !b || !bs) {
            ++cat.skipped;
            ++rep.overall.skipped;
            continue;
        }
        auto query = analogy_query(emb, *a, *as, *b, opt);
        const WordId exclude[] = {*a, *as, *b};
        auto top = rank_candidates(emb, query, opt.topk, exclude);
        const bool hit = std::any_of(top.begin(), top.end(), [&](const Neighbor& n) { return n.id == *bs; });
        ++cat.total;
        ++rep.overall.total;
        if (hit) {
            ++cat.correct;
            ++rep.overall.correct;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------

namespace {
std::vector<std::string> words_of(const std::string& text) {
    std::vector<std::string> w;
    std::istringstream s(downcase(text));
    std::string t;
    while (s >> t) w.push_back(t);
    return w;
}
}  // namespace

ClassificationDataset read_classification(std::istream& in, std::string name) {
    ClassificationDataset d{std::move(name), {}};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected label<TAB>text", lineno, 1);
        std::string label = line.substr(0, tab);
        if (label != "0" && label != "1") throw ParseError("label must be 0 or 1", lineno, 1);
        d.docs.push_back({label == "1" ? 1 : 0, words_of(line.substr(tab + 1))});
    }
    return d;
}

ClassificationDataset load_classification(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_classification(in, path.stem().string());
}

ClassificationDataset read_sentiment(std::istream& in, std::string name) {
    ClassificationDataset d{std::move(name), {}};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected score<TAB>text", lineno, 1);
        auto score = parse_number(line.substr(0, tab));
        if (!score || *score < 0.0 || *score > 1.0) throw ParseError("score must be a number in [0,1]", lineno, 1);
        if (*score <= 0.4)
            d.docs.push_back({0, words_of(line.substr(tab + 1))});
        else if (*score > 0.6)
            d.docs.push_back({1, words_of(line.substr(tab + 1))});
    }
    return d;
}

std::vector<double> aggregate_ids(std::span<const WordId> ids, const Embedding& emb) {
    if (emb.discrete()) {
        BitSet s(emb.width());
        for (WordId id : ids) s = progress(s, emb.effects[id]);
        std::vector<double> v(emb.width());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = (s.test(j) ? 1.0 : 0.0) - 0.5;
        return v;
    }
    std::vector<double> v(emb.width(), 0.0);
    for (WordId id : ids) {
        auto row = emb.vectors.row(id);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] += row[j];
    }
    return v;
}

std::vector<double> aggregate_document(std::span<const std::string> words, const Embedding& emb) {
    std::vector<WordId> ids;
    for (const auto& w : words)
        if (auto id = emb.vocab->find(w)) ids.push_back(*id);
    return aggregate_ids(ids, emb);
}

Split split_indices(std::size_t n, const SplitFractions& f, std::uint64_t seed) {
    if (f.train <= 0.0 || f.validation < 0.0 || f.test < 0.0 ||
        std::abs(f.train + f.validation + f.test - 1.0) > 1e-9)
        throw UsageError("split fractions must be non-negative and sum to 1");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span(idx));
    const auto n_train = static_cast<std::size_t>(std::llround(f.train * static_cast<double>(n)));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(f.validation * static_cast<double>(n))));
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                        idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return s;
}

double LogisticModel::probability(std::span<const double> x) const { return sigmoid(dot(weights, x) + bias); }

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

struct LogisticProblem {
    const Matrix& x;
    std::span<const int> y;
    double l2;

    double value(std::span<const double> w, double b) const {
        double f = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double z = dot(w, x.row(i)) + b;
            f += softplus(z) - y[i] * z;
        }
        return f / static_cast<double>(x.rows()) + 0.5 * l2 * dot(w, w);
    }

    void gradient(std::span<const double> w, double b, std::vector<double>& gw, double& gb) const {
        std::fill(gw.begin(), gw.end(), 0.0);
        gb = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double r = sigmoid(dot(w, x.row(i)) + b) - y[i];
            auto xi = x.row(i);
            for (std::size_t j = 0; j < gw.size(); ++j) gw[j] += r * xi[j];
            gb += r;
        }
        const double inv = 1.0 / static_cast<double>(x.rows());
        for (std::size_t j = 0; j < gw.size(); ++j) gw[j] = gw[j] * inv + l2 * w[j];
        gb *= inv;
    }
};

}  // namespace

LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, double l2, const LogisticOptions& opt) {
    if (x.rows() != y.size() || x.rows() == 0) throw UsageError("fit_logistic: bad shapes");
    if (l2 < 0.0) throw UsageError("l2 strength must be non-negative");
    LogisticProblem prob{x, y, l2};
    const std::size_t d = x.cols();
    LogisticModel m;
    m.weights.assign(d, 0.0);
    std::vector<double> gw(d), w_new(d);
    double gb = 0.0;
    double f = prob.value(m.weights, m.bias);
    double step = 1.0;
    for (m.iterations = 0; m.iterations < opt.max_iterations; ++m.iterations) {
        prob.gradient(m.weights, m.bias, gw, gb);
        const double g2 = dot(gw, gw) + gb * gb;
        m.gradient_norm = std::sqrt(g2);
        if (m.gradient_norm < opt.tolerance) break;
        step = std::min(step * 2.0, 1e6);
        for (;;) {
            for (std::size_t j = 0; j < d; ++j) w_new[j] = m.weights[j] - step * gw[j];
            const double b_new = m.bias - step * gb;
            const double f_new = prob.value(w_new, b_new);
            if (f_new <= f - 0.5 * step * g2 || step < 1e-20) {
                m.weights.swap(w_new);
                m.bias = b_new;
                f = f_new;
                break;
            }
            step *= 0.5;
        }
    }
    return m;
}

double accuracy(const LogisticModel& m, const Matrix& x, std::span<const int> y) {
    if (x.rows() == 0) return 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) ok += m.predict(x.row(i)) == y[i] ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(x.rows());
}

namespace {
Matrix gather(const Matrix& x, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy(x.row(rows[i]).begin(), x.row(rows[i]).end(), out.row(i).begin());
    return out;
}
std::vector<int> gather(std::span<const int> y, std::span<const std::size_t> rows) {
    std::vector<int> out;
    for (auto r : rows) out.push_back(y[r]);
    return out;
}
}  // namespace

ClassifyResult classify_features(const std::string& name, const Matrix& features, std::span<const int> labels,
                                 const ClassifyOptions& opt) {
    if (features.rows() != labels.size()) throw UsageError("features and labels differ in length");
    if (opt.l2_grid.empty()) throw UsageError("l2 grid is empty");
    Split split = split_indices(features.rows(), opt.fractions, opt.seed);
    Matrix xtr = gather(features, split.train), xva = gather(features, split.validation),
           xte = gather(features, split.test);
    auto ytr = gather(labels, split.train), yva = gather(labels, split.validation), yte = gather(labels, split.test);
    if (ytr.empty() || std::all_of(ytr.begin(), ytr.end(), [&](int v) { return v == ytr[0]; }))
        throw DataError("training split of '" + name + "' contains a single class");

    // Standardize with training statistics.
    const std::size_t d = features.cols();
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t i = 0; i < xtr.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += xtr(i, j);
    for (auto& m : mean) m /= static_cast<double>(xtr.rows());
    for (std::size_t i = 0; i < xtr.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) sd[j] += (xtr(i, j) - mean[j]) * (xtr(i, j) - mean[j]);
    for (auto& s : sd) s = s > 0.0 ? std::sqrt(s / static_cast<double>(xtr.rows())) : 1.0;
    for (Matrix* m : {&xtr, &xva, &xte})
        for (std::size_t i = 0; i < m->rows(); ++i)
            for (std::size_t j = 0; j < d; ++j) (*m)(i, j) = ((*m)(i, j) - mean[j]) / sd[j];

    ClassifyResult r;
    r.name = name;
    r.train = xtr.rows();
    r.validation = xva.rows();
    r.test = xte.rows();
    double best = -1.0;
    LogisticModel chosen;
    for (double l2 : opt.l2_grid) {
        LogisticModel m = fit_logistic(xtr, ytr, l2, opt.logistic);
        // Without a validation split, fall back to training accuracy.
        const double score = xva.rows() ? accuracy(m, xva, yva) : accuracy(m, xtr, ytr);
        if (score > best) {
            best = score;
            chosen = std::move(m);
            r.l2 = l2;
        }
    }
    r.validation_accuracy = best;
    r.test_accuracy = accuracy(chosen, xte, yte);
    return r;
}

ClassifyResult classify_eval(const Embedding& emb, const ClassificationDataset& data, const ClassifyOptions& opt) {
    Matrix x(data.docs.size(), emb.width());
    std::vector<int> y;
    for (std::size_t i = 0; i < data.docs.size(); ++i) {
        auto v = aggregate_document(data.docs[i].words, emb);
        std::copy(v.begin(), v.end(), x.row(i).begin());
        y.push_back(data.docs[i].label);
    }
    return classify_features(data.name, x, y, opt);
}

double mean_accuracy(std::span<const ClassifyResult> results) {
    if (results.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : results) s += r.test_accuracy;
    return s / static_cast<double>(results.size());
}

// ---------------------------------------------------------------------------

std::vector<EffectDensity> effect_density(std::span<const BinaryEffect> effects) {
    std::vector<EffectDensity> out;
    out.reserve(effects.size());
    for (const auto& e : effects) {
        const double w = static_cast<double>(e.width());
        out.push_back({w ? static_cast<double>(e.add.count()) / w : 0.0, w ? static_cast<double>(e.del.count()) / w : 0.0});
    }
    return out;
}

void write_density_csv(std::ostream& out, const Vocabulary& vocab, std::span<const EffectDensity> d) {
    out << "rank,word,count,add_density,del_density\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto id = static_cast<WordId>(i);
        out << i << ',' << vocab.word(id) << ',' << vocab.count(id) << ',' << d[i].add << ',' << d[i].del << '\n';
    }
}

namespace {

std::vector<double> mat_vec(const Matrix& c, std::span<const double> v) {
    std::vector<double> out(c.rows());
    for (std::size_t i = 0; i < c.rows(); ++i) out[i] = dot(c.row(i), v);
    return out;
}

void normalize(std::vector<double>& v) {
    const double n = std::sqrt(dot(v, v));
    for (double& x : v) x /= n;
}

void orthogonalize(std::vector<double>& v, std::span<const double> u) {
    const double p = dot(v, u);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] -= p * u[j];
}

// Flip so the largest-magnitude entry is positive.
void fix_sign(std::vector<double>& v) {
    std::size_t k = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (std::abs(v[j]) > std::abs(v[k])) k = j;
    if (v[k] < 0.0)
        for (double& x : v) x = -x;
}

/// Dominant eigenpair of a symmetric PSD matrix, kept orthogonal to `against`.
std::pair<std::vector<double>, double> power_iteration(const Matrix& c, const std::vector<double>* against) {
    const std::size_t d = c.rows();
    std::vector<double> v(d);
    // Deterministic start with no special alignment to coordinate axes.
    for (std::size_t j = 0; j < d; ++j) v[j] = 1.0 + 0.1 * static_cast<double>((j * 7919) % 17);
    if (against) orthogonalize(v, *against);
    normalize(v);
    double lambda = 0.0;
    for (int it = 0; it < 20000; ++it) {
        auto w = mat_vec(c, v);
        if (against) orthogonalize(w, *against);
        const double n = std::sqrt(dot(w, w));
        if (n == 0.0) return {v, 0.0};
        for (double& x : w) x /= n;
        double diff = 0.0;
        for (std::size_t j = 0; j < d; ++j) diff = std::max(diff, std::abs(w[j] - v[j]));
        v.swap(w);
        lambda = n;
        if (diff < 1e-13) break;
    }
    auto cv = mat_vec(c, v);
    lambda = dot(v, cv);  // Rayleigh quotient
    return {v, lambda};
}

}  // namespace

Pca2 pca2(const Matrix& vectors) {
    const std::size_t n = vectors.rows(), d = vectors.cols();
    if (n < 3) throw DataError("PCA needs at least 3 vectors");
    if (d < 2) throw DataError("PCA to 2 dimensions needs vectors of width >= 2");
    Pca2 p;
    p.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) p.mean[j] += vectors(i, j);
    for (double& m : p.mean) m /= static_cast<double>(n);
    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = vectors(i, a) - p.mean[a];
            for (std::size_t b = 0; b < d; ++b) cov(a, b) += xa * (vectors(i, b) - p.mean[b]);
        }
    for (double& x : cov.data()) x /= static_cast<double>(n - 1);
    for (std::size_t j = 0; j < d; ++j) p.total_variance += cov(j, j);
    if (p.total_variance <= 0.0) throw DataError("PCA of identical vectors (rank 0) is undefined");

    auto [v1, l1] = power_iteration(cov, nullptr);
    // Deflate: C - l1 v1 v1^T.
    Matrix deflated = cov;
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) deflated(a, b) -= l1 * v1[a] * v1[b];
    auto [v2, l2] = power_iteration(deflated, &v1);
    if (l2 <= 1e-12 * l1) {
        // Rank-1 data: complete the basis with the axis least aligned to v1.
        std::size_t k = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(v1[j]) < std::abs(v1[k])) k = j;
        v2.assign(d, 0.0);
        v2[k] = 1.0;
        orthogonalize(v2, v1);
        normalize(v2);
        l2 = std::max(0.0, dot(v2, mat_vec(cov, v2)));
    }
    orthogonalize(v2, v1);
    normalize(v2);
    fix_sign(v1);
    fix_sign(v2);
    p.components = {v1, v2};
    p.variances = {l1, l2};
    p.projections = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += (vectors(i, j) - p.mean[j]) * p.components[c][j];
            p.projections(i, c) = s;
        }
    }
    return p;
}

}  // namespace dsaw
