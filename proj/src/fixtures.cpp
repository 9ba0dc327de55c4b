#include "dsaw/fixtures.hpp"

#include <fstream>

#include "dsaw/algebra.hpp"
#include "dsaw/error.hpp"

namespace dsaw::fixtures {

FixtureModel from_effects(const std::vector<std::string>& words, const std::vector<std::vector<int>>& signs) {
    if (words.empty() || words.size() != signs.size()) throw UsageError("one sign row per word is required");
    std::vector<VocabEntry> entries;
    for (std::size_t i = 0; i < words.size(); ++i) entries.push_back({words[i], 100 - std::min<std::size_t>(i, 99)});
    FixtureModel f{Vocabulary::from_entries(std::move(entries)), {}};
    const std::size_t e = signs.front().size();
    ModelParameters& m = f.model;
    m.variant = Variant::dsaw;
    m.width = e;
    m.effect = Matrix(words.size(), e);
    // A weight of -10 forces a bit off, +10 forces it on, 0 keeps it.
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (signs[i].size() != e) throw UsageError("sign rows differ in width");
        for (std::size_t j = 0; j < e; ++j) m.effect(i, j) = 10.0 * signs[i][j];
    }
    m.bn = BatchNormState::identity(e, false);
    // Statistics of Bernoulli(0.5) bits, so eval mode maps 0 -> -1 and 1 -> +1.
    m.bn.running_mean.assign(e, 0.5);
    m.bn.running_var.assign(e, 0.25);
    m.validate();
    return f;
}

FixtureModel table1() {
    // Columns: female, status.
    return from_effects({"king", "man", "woman", "queen"}, {{-1, 1}, {-1, 0}, {1, 0}, {1, 1}});
}

FixtureModel unreachable() { return from_effects({"beta", "gamma", "alpha"}, {{0, 1}, {0, -1}, {1, 0}}); }

PlantedCorpus planted_synonyms(const PlantedOptions& opt, std::uint64_t seed) {
    if (opt.groups < 2 || opt.synonyms < 2 || opt.context_words == 0)
        throw UsageError("planted corpus needs >= 2 groups of >= 2 synonyms and some context words");
    PlantedCorpus pc;
    std::vector<std::vector<std::string>> context(opt.groups);
    std::vector<std::string> filler;
    for (std::size_t g = 0; g < opt.groups; ++g) {
        pc.groups.emplace_back();
        for (std::size_t i = 0; i < opt.synonyms; ++i)
            pc.groups[g].push_back("syn" + std::string(1, static_cast<char>('a' + g)) + std::to_string(i));
        for (std::size_t i = 0; i < opt.context_words; ++i)
            context[g].push_back("ctx" + std::string(1, static_cast<char>('a' + g)) + std::to_string(i));
    }
    for (std::size_t i = 0; i < opt.filler_words; ++i) filler.push_back("fill" + std::to_string(i));

    Rng rng(seed);
    std::size_t total = 0;
    while (total < opt.tokens) {
        const std::size_t g = rng.below(opt.groups);
        const std::size_t len = 6 + rng.below(5);
        std::vector<std::string> line;
        for (std::size_t k = 0; k < len; ++k) {
            const double u = rng.uniform();
            if (u < opt.synonym_share)
                line.push_back(pc.groups[g][rng.below(opt.synonyms)]);
            else if (u < opt.synonym_share + opt.filler_share && !filler.empty())
                line.push_back(filler[rng.below(filler.size())]);
            else
                line.push_back(context[g][rng.below(opt.context_words)]);
        }
        total += line.size();
        pc.corpus.lines.push_back(std::move(line));
    }
    return pc;
}

Separation group_separation(const ModelParameters& model, const Vocabulary& vocab,
                            const std::vector<std::vector<std::string>>& groups) {
    Matrix vectors;
    if (is_discrete(model.variant))
        vectors = tertiary_matrix(extract_effects(model, vocab));
    else
        vectors = model.effect;
    auto sim = [&](const std::string& a, const std::string& b) {
        auto u = vectors.row(vocab.id(a));
        auto v = vectors.row(vocab.id(b));
        const double nu = dot(u, u), nv = dot(v, v);
        return nu == 0.0 || nv == 0.0 ? 0.0 : dot(u, v) / std::sqrt(nu * nv);
    };
    double within = 0.0, cross = 0.0;
    std::size_t nw = 0, nc = 0;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t i = 0; i < groups[g].size(); ++i) {
            for (std::size_t j = i + 1; j < groups[g].size(); ++j, ++nw) within += sim(groups[g][i], groups[g][j]);
            for (std::size_t h = g + 1; h < groups.size(); ++h)
                for (const auto& w : groups[h]) {
                    cross += sim(groups[g][i], w);
                    ++nc;
                }
        }
    if (nw == 0 || nc == 0) throw UsageError("need at least two groups with two members");
    return {within / static_cast<double>(nw), cross / static_cast<double>(nc)};
}

TrainConfig planted_train_config(Variant variant, std::size_t width, std::uint64_t seed) {
    TrainConfig c;
    c.variant = variant;
    c.width = width;
    c.window = 2;
    c.negatives = 5;
    c.epochs = 6;
    c.batch_size = 50;
    c.lr = 0.02;
    // At this scale beta = 0.1 drives every logit into the KL basin and all
    // extracted effects come out empty.
    c.beta = 0.0;
    c.seed = seed;
    return c;
}

namespace {

std::ofstream create(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
}

}  // namespace

void write_all(const std::filesystem::path& dir, std::uint64_t seed) {
    std::filesystem::create_directories(dir);

    const FixtureModel t = table1();
    t.vocab.save(dir / "table1.vocab");
    save_model(dir / "table1.model", t.model, t.vocab.fingerprint());
    const FixtureModel u = unreachable();
    u.vocab.save(dir / "unreachable.vocab");
    save_model(dir / "unreachable.model", u.model, u.vocab.fingerprint());
    create(dir / "toy.grammar") << "# S generates a*b\nS -> a S\nS -> b\n";
    create(dir / "table1_analogy.txt") << ": royalty\nman king woman queen\n";

    // Label 1 iff the document mentions king or queen: the status bit of the
    // progressed state, since no word deletes it.
    {
        auto out = create(dir / "table1_classify.tsv");
        Rng rng(seed + 1);
        const char* words[] = {"king", "man", "woman", "queen"};
        for (int d = 0; d < 60; ++d) {
            const int label = d % 2;
            std::vector<std::string> doc;
            const std::size_t len = 2 + rng.below(4);
            for (std::size_t k = 0; k < len; ++k) doc.push_back(words[1 + rng.below(2)]);
            if (label) doc[rng.below(doc.size())] = words[rng.below(2) ? 0 : 3];
            out << label << '\t';
            for (std::size_t k = 0; k < doc.size(); ++k) out << (k ? " " : "") << doc[k];
            out << '\n';
        }
    }

    const PlantedCorpus pc = planted_synonyms({}, seed);
    {
        auto out = create(dir / "planted.txt");
        for (const auto& line : pc.corpus.lines) {
            for (std::size_t k = 0; k < line.size(); ++k) out << (k ? " " : "") << line[k];
            out << '\n';
        }
    }
    {
        auto out = create(dir / "planted_groups.txt");
        for (const auto& g : pc.groups) {
            for (std::size_t k = 0; k < g.size(); ++k) out << (k ? " " : "") << g[k];
            out << '\n';
        }
    }
    // Similarity pairs: synonyms score high, cross-group pairs low.
    {
        auto out = create(dir / "planted_sim.tsv");
        const auto& a = pc.groups[0];
        const auto& b = pc.groups[1];
        out << a[0] << '\t' << a[1] << "\t9.5\n"
            << b[0] << '\t' << b[1] << "\t9.0\n"
            << a[2] << '\t' << a[3] << "\t8.5\n"
            << b[2] << '\t' << b[3] << "\t8.0\n"
            << a[1] << '\t' << a[4] << "\t7.5\n"
            << a[0] << '\t' << b[0] << "\t2.0\n"
            << a[1] << '\t' << b[2] << "\t1.5\n"
            << a[3] << '\t' << b[4] << "\t1.0\n"
            << a[4] << '\t' << b[1] << "\t0.5\n"
            << a[2] << '\t' << b[3] << "\t0.0\n";
    }

    Vocabulary vocab = Vocabulary::build(pc.corpus.flatten(), 1);
    vocab.set_subsampling(0.0, SubsampleVariant::implementation);
    const IdCorpus ids = encode(pc.corpus, vocab);
    vocab.save(dir / "planted.vocab");
    const TrainResult r = train(ids, vocab, planted_train_config(Variant::dsaw, 16, seed));
    save_model(dir / "planted.model", r.model, vocab.fingerprint());
}

}  // namespace dsaw::fixtures
