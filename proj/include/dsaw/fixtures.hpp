#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dsaw/corpus.hpp"
#include "dsaw/model.hpp"
#include "dsaw/trainer.hpp"

namespace dsaw::fixtures {

struct FixtureModel {
    Vocabulary vocab;
    ModelParameters model;
};

/// The four-word, two-dimensional embedding with dimensions [female, status]:
/// king {-female, +status}, man {-female}, woman {+female},
/// queen {+female, +status}.
FixtureModel table1();

/// Three words over two bits where only "alpha" can set bit 0, so a hard
/// paraphrase of "alpha" from the other words is unsolvable.
FixtureModel unreachable();

/// Discrete model whose limit effects follow `signs`: +1 adds the bit, -1
/// deletes it, 0 leaves it alone.
FixtureModel from_effects(const std::vector<std::string>& words, const std::vector<std::vector<int>>& signs);

/// Synthetic corpus with interchangeable token groups. Each sentence picks a
/// topic group and draws its tokens from that group's synonyms, its own
/// context words, and a shared filler pool.
struct PlantedOptions {
    std::size_t groups = 2;
    std::size_t synonyms = 5;
    std::size_t context_words = 8;
    std::size_t filler_words = 6;
    std::size_t tokens = 50000;
    double synonym_share = 0.3;
    double filler_share = 0.2;
};

struct PlantedCorpus {
    Corpus corpus;
    std::vector<std::vector<std::string>> groups;  // synonyms of each group
};
PlantedCorpus planted_synonyms(const PlantedOptions& opt, std::uint64_t seed);

/// Mean cosine over same-group pairs minus mean over cross-group pairs.
/// Uses the tertiary vectors for discrete models, rows of W otherwise.
struct Separation {
    double within = 0.0;
    double cross = 0.0;
    double gap() const { return within - cross; }
};
Separation group_separation(const ModelParameters& model, const Vocabulary& vocab,
                            const std::vector<std::vector<std::string>>& groups);

/// Training settings used for the planted corpus at desk scale.
TrainConfig planted_train_config(Variant variant, std::size_t width, std::uint64_t seed);

/// Writes every fixture file into `dir` (created if missing).
void write_all(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace dsaw::fixtures
