#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsaw/algebra.hpp"
#include "dsaw/corpus.hpp"
#include "dsaw/matrix.hpp"
#include "dsaw/model.hpp"

namespace dsaw {

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

/// Pearson correlation of average ranks. Throws DataError when either input
/// is constant or shorter than 2.
double spearman(std::span<const double> xs, std::span<const double> ys);

// ---------------------------------------------------------------------------

/// The vectors a model is compared with: tertiary effect vectors for discrete
/// models, rows of W for continuous ones.
struct Embedding {
    Variant variant = Variant::dsaw;
    const Vocabulary* vocab = nullptr;
    Matrix vectors;
    std::vector<BinaryEffect> effects;  // discrete only

    static Embedding from_model(const ModelParameters& model, const Vocabulary& vocab);
    bool discrete() const { return is_discrete(variant); }
    std::size_t width() const { return vectors.cols(); }
};

struct SimilarityPair {
    std::string first;
    std::string second;
    double score = 0.0;
};

struct SimilarityDataset {
    std::string name;
    std::vector<SimilarityPair> pairs;
};

/// "word1<TAB>word2<TAB>score" lines; '#' lines are comments.
SimilarityDataset read_similarity(std::istream& in, std::string name);
SimilarityDataset load_similarity(const std::filesystem::path& path);

struct SimilarityResult {
    std::string name;
    double rho = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;  // pairs with an OOV word
};

SimilarityResult similarity_eval(const Embedding& emb, const SimilarityDataset& data);
/// One correlation over the in-vocabulary pairs of every dataset together.
SimilarityResult similarity_pooled(const Embedding& emb, std::span<const SimilarityDataset> data);

// ---------------------------------------------------------------------------

struct AnalogyQuestion {
    std::string category;
    std::string a, a_star, b, b_star;
};

/// Google analogy layout: ": category" headers, then "a a* b b*" lines.
std::vector<AnalogyQuestion> read_analogies(std::istream& in);
std::vector<AnalogyQuestion> load_analogies(const std::filesystem::path& path);

enum class AnalogyMethod { cos3add, seqadd, ignore_a, only_b };
std::string_view to_string(AnalogyMethod m);
AnalogyMethod parse_analogy_method(std::string_view s);

enum class Operand { a, a_star, b };

struct OrderingTerm {
    ComposeOp op = ComposeOp::plus;
    Operand operand = Operand::a;
    friend bool operator==(const OrderingTerm&, const OrderingTerm&) = default;
};

/// Order of discrete operations, e.g. "-a+a*+b". A leading term without a
/// sign is a plus.
using Ordering = std::vector<OrderingTerm>;
Ordering parse_ordering(std::string_view s);
std::string to_string(const Ordering& o);
/// The six orderings of {-a, +a*, +b}, default first.
const std::vector<std::string>& standard_orderings();
inline constexpr std::string_view kDefaultOrdering = "-a+a*+b";

struct AnalogyOptions {
    AnalogyMethod method = AnalogyMethod::seqadd;
    Ordering ordering = parse_ordering(kDefaultOrdering);
    std::size_t topk = 1;
};

struct CategoryAccuracy {
    std::string category;
    std::size_t correct = 0;
    std::size_t total = 0;    // answered questions
    std::size_t skipped = 0;  // questions with an OOV word
    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct AnalogyReport {
    std::vector<CategoryAccuracy> categories;  // in first-appearance order
    CategoryAccuracy overall;
};

/// Query vector for one question under `opt`.
std::vector<double> analogy_query(const Embedding& emb, WordId a, WordId a_star, WordId b,
                                  const AnalogyOptions& opt);

/// Candidate ranking for a query, excluding `exclude`. An all-zero query
/// ranks every candidate at similarity 0, i.e. by ascending id.
std::vector<Neighbor> rank_candidates(const Embedding& emb, std::span<const double> query, std::size_t k,
                                      std::span<const WordId> exclude);

/// Throws UsageError if the method does not fit the model (e.g. seqadd on CBOW).
AnalogyReport analogy_eval(const Embedding& emb, std::span<const AnalogyQuestion> questions,
                           const AnalogyOptions& opt);

// ---------------------------------------------------------------------------

struct LabeledDocument {
    int label = 0;
    std::vector<std::string> words;
};

struct ClassificationDataset {
    std::string name;
    std::vector<LabeledDocument> docs;
};

/// "label<TAB>text" lines with integer labels 0/1. Text is downcased.
ClassificationDataset read_classification(std::istream& in, std::string name);
ClassificationDataset load_classification(const std::filesystem::path& path);
/// "score<TAB>text" lines with a sentiment score in [0,1]: <=0.4 becomes 0,
/// >0.6 becomes 1, anything between is dropped as neutral.
ClassificationDataset read_sentiment(std::istream& in, std::string name);

/// Discrete: progression from the all-zero state, result shifted by -0.5.
/// Continuous: sum of rows. Out-of-vocabulary words are ignored.
std::vector<double> aggregate_document(std::span<const std::string> words, const Embedding& emb);
std::vector<double> aggregate_ids(std::span<const WordId> ids, const Embedding& emb);

struct SplitFractions {
    double train = 0.48;
    double validation = 0.12;
    double test = 0.40;
};

struct Split {
    std::vector<std::size_t> train, validation, test;
};

/// Shuffled split of 0..n-1 by the given proportions.
Split split_indices(std::size_t n, const SplitFractions& f, std::uint64_t seed);

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;

    double probability(std::span<const double> x) const;
    int predict(std::span<const double> x) const { return probability(x) > 0.5 ? 1 : 0; }
};

struct LogisticOptions {
    double tolerance = 1e-8;
    std::size_t max_iterations = 100000;
};

/// Minimizes mean log-loss + l2/2 * |w|^2 (bias unpenalized) by full-batch
/// gradient descent with a backtracking line search.
LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, double l2, const LogisticOptions& opt = {});

double accuracy(const LogisticModel& m, const Matrix& x, std::span<const int> y);

struct ClassifyOptions {
    SplitFractions fractions;
    std::uint64_t seed = 1;
    std::vector<double> l2_grid = {0.01, 0.1, 1.0, 10.0};
    LogisticOptions logistic;
};

struct ClassifyResult {
    std::string name;
    double test_accuracy = 0.0;
    double validation_accuracy = 0.0;
    double l2 = 0.0;
    std::size_t train = 0, validation = 0, test = 0;
};

/// Features are standardized with training-split statistics. Throws DataError
/// if the training split holds a single class.
ClassifyResult classify_features(const std::string& name, const Matrix& features, std::span<const int> labels,
                                 const ClassifyOptions& opt);
ClassifyResult classify_eval(const Embedding& emb, const ClassificationDataset& data, const ClassifyOptions& opt);
/// Unweighted mean of test accuracies.
double mean_accuracy(std::span<const ClassifyResult> results);

// ---------------------------------------------------------------------------

struct EffectDensity {
    double add = 0.0;
    double del = 0.0;
};

/// popcount / E per word, in id (frequency rank) order.
std::vector<EffectDensity> effect_density(std::span<const BinaryEffect> effects);
void write_density_csv(std::ostream& out, const Vocabulary& vocab, std::span<const EffectDensity> d);

struct Pca2 {
    std::vector<double> mean;
    std::array<std::vector<double>, 2> components;
    std::array<double, 2> variances{};  // eigenvalues of the sample covariance
    double total_variance = 0.0;
    Matrix projections;  // n x 2
};

/// Top two principal components by power iteration with deflation on the
/// sample covariance (divisor n-1). Needs >= 3 rows; throws DataError when
/// all rows coincide.
Pca2 pca2(const Matrix& vectors);

}  // namespace dsaw
