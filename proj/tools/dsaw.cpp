// Command-line front end: train, eval, effects, paraphrase, grammar, fixtures.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dsaw/algebra.hpp"
#include "dsaw/corpus.hpp"
#include "dsaw/error.hpp"
#include "dsaw/evalsuite.hpp"
#include "dsaw/fixtures.hpp"
#include "dsaw/grammar.hpp"
#include "dsaw/kernels.hpp"
#include "dsaw/model.hpp"
#include "dsaw/pddl.hpp"
#include "dsaw/planner.hpp"
#include "dsaw/trainer.hpp"

namespace fs = std::filesystem;
using namespace dsaw;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitUnsolvable = 3;

/// Writes through a temporary file so readers never see a partial output.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + path.string());
        body(out);
        if (!out) throw DataError("write failed for " + path.string());
    }
    fs::rename(tmp, path);
}

void write_text(const fs::path& path, const std::string& text) {
    write_atomic(path, [&](std::ostream& out) { out << text; });
}

/// Resolved configuration of a subcommand, loadable again with
/// `dsaw --config FILE`.
/// Keys in `skip` are left out, for options that do not apply to the run.
void write_config(const fs::path& path, const CLI::App& sub, const std::vector<std::string>& skip = {}) {
    std::istringstream in(sub.config_to_str(true, false));
    std::string text = "[" + sub.get_name() + "]\n";
    for (std::string line; std::getline(in, line);) {
        const std::string key = line.substr(0, line.find('='));
        if (std::find(skip.begin(), skip.end(), key) == skip.end()) text += line + '\n';
    }
    write_text(path, text);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

WordId require_word(const Vocabulary& vocab, const std::string& word) {
    if (auto id = vocab.find(word)) return *id;
    std::vector<std::pair<std::size_t, WordId>> d;
    for (WordId i = 0; i < vocab.size(); ++i) d.push_back({levenshtein(word, vocab.word(i)), i});
    const std::size_t k = std::min<std::size_t>(5, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::string msg = "'" + word + "' is not in the vocabulary; nearest:";
    for (std::size_t i = 0; i < k; ++i) msg += " " + vocab.word(d[i].second);
    throw DataError(msg);
}

struct LoadedModel {
    Vocabulary vocab;
    ModelParameters model;
};

LoadedModel load_pair(const fs::path& model_path, const fs::path& vocab_path) {
    LoadedModel m{Vocabulary::load(vocab_path), {}};
    std::uint64_t fp = 0;
    m.model = load_model(model_path, &fp);
    if (fp != m.vocab.fingerprint())
        throw IntegrityError("model " + model_path.string() + " was not trained with vocabulary " + vocab_path.string());
    return m;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string corpus;
    std::string out = "run";
    std::string model = "dsaw";
    std::size_t dim = 200;
    int window = 2;
    int negatives = 5;
    int epochs = 8;
    std::size_t batch = 1000;
    double lr = 1e-3;
    double beta = 0.1;
    double anneal_start = 1.0;
    bool affine = false;
    std::string init;
    std::uint64_t min_count = 10;
    double subsample = 1e-4;
    std::string subsample_variant = "implementation";
    bool downcase = true;
    int threads = 1;
    std::uint64_t seed = 1;
};

int run_train(const TrainArgs& a, const CLI::App& sub) {
    TrainConfig cfg;
    cfg.variant = parse_variant(a.model);
    if (sub.count("--beta") && !is_discrete(cfg.variant))
        throw UsageError("--beta scales the KL term of the discrete variants; " + a.model + " has none");
    if (sub.count("--affine") && !is_discrete(cfg.variant))
        throw UsageError("--affine applies to the BatchNorm of the discrete variants only");
    cfg.width = a.dim;
    cfg.window = a.window;
    cfg.negatives = a.negatives;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.lr = a.lr;
    cfg.beta = is_discrete(cfg.variant) ? a.beta : 0.0;
    cfg.anneal_start = a.anneal_start;
    cfg.affine = a.affine;
    if (!a.init.empty()) cfg.init = parse_init_distribution(a.init);
    cfg.threads = a.threads;
    cfg.seed = a.seed;
    cfg.validate();
    if (!fs::exists(a.corpus)) throw DataError("corpus " + a.corpus + " does not exist");

    const Corpus corpus = load_corpus(a.corpus, a.downcase);
    Vocabulary vocab = Vocabulary::build(corpus.flatten(), a.min_count);
    vocab.set_subsampling(a.subsample, parse_subsample_variant(a.subsample_variant));
    const IdCorpus ids = encode(corpus, vocab);

    const fs::path out(a.out);
    fs::create_directories(out);
    std::ostringstream log;
    TrainResult r;
    try {
        r = train(ids, vocab, cfg, [&](const BatchRecord& rec) { write_batch_record(log, rec); });
    } catch (const TrainingDiverged& e) {
        save_model(out / "last_good.model", e.last_good(), vocab.fingerprint());
        write_text(out / "metrics.log", log.str());
        throw;
    }
    for (const auto& e : r.epochs)
        log << "epoch=" << e.epoch << " samples=" << e.samples << " mean_total=" << e.mean_total << '\n';

    write_atomic(out / "vocab.txt", [&](std::ostream& o) { vocab.write(o); });
    write_atomic(out / "model.bin", [&](std::ostream& o) { write_model(o, r.model, vocab.fingerprint()); });
    write_text(out / "metrics.log", log.str());
    write_config(out / "config.ini", sub,
                 is_discrete(cfg.variant) ? std::vector<std::string>{} : std::vector<std::string>{"beta", "affine"});
    std::cout << "trained " << a.model << " E=" << a.dim << " V=" << vocab.size() << " -> " << out.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string model, vocab;
    std::string task;
    std::vector<std::string> datasets;
    std::string method;
    std::string ordering{kDefaultOrdering};
    bool all_orderings = false;
    std::size_t topk = 1;
    std::string format = "labeled";
    std::vector<double> split = {0.48, 0.12, 0.40};
    std::uint64_t seed = 1;
    std::string out;
};

void emit(const std::string& out_path, const std::string& csv) {
    if (out_path.empty())
        std::cout << csv;
    else
        write_text(out_path, csv);
}

int run_eval(const EvalArgs& a, const CLI::App& sub) {
    const LoadedModel m = load_pair(a.model, a.vocab);
    const Embedding emb = Embedding::from_model(m.model, m.vocab);
    std::ostringstream csv;
    if (a.task == "sim") {
        std::vector<SimilarityDataset> data;
        for (const auto& p : a.datasets) data.push_back(load_similarity(p));
        csv << "dataset,rho,pairs_used,pairs_skipped\n";
        auto row = [&](const SimilarityResult& r) {
            csv << r.name << ',' << r.rho << ',' << r.used << ',' << r.skipped << '\n';
        };
        for (const auto& d : data) row(similarity_eval(emb, d));
        if (data.size() > 1) row(similarity_pooled(emb, data));
    } else if (a.task == "analogy") {
        std::vector<AnalogyQuestion> qs;
        for (const auto& p : a.datasets) {
            auto part = load_analogies(p);
            qs.insert(qs.end(), part.begin(), part.end());
        }
        AnalogyOptions opt;
        opt.method = a.method.empty() ? (emb.discrete() ? AnalogyMethod::seqadd : AnalogyMethod::cos3add)
                                      : parse_analogy_method(a.method);
        opt.topk = a.topk;
        std::vector<std::string> orderings{a.ordering};
        if (a.all_orderings) {
            if (opt.method != AnalogyMethod::seqadd) throw UsageError("--all-orderings needs the seqadd method");
            orderings = standard_orderings();
        }
        csv << "method,ordering,category,correct,answered,skipped,accuracy\n";
        for (const auto& o : orderings) {
            opt.ordering = parse_ordering(o);
            const AnalogyReport rep = analogy_eval(emb, qs, opt);
            const std::string ord = opt.method == AnalogyMethod::seqadd ? o : "";
            auto row = [&](const CategoryAccuracy& c) {
                csv << to_string(opt.method) << ',' << ord << ',' << c.category << ',' << c.correct << ',' << c.total
                    << ',' << c.skipped << ',' << c.accuracy() << '\n';
            };
            for (const auto& c : rep.categories) row(c);
            row(rep.overall);
        }
    } else if (a.task == "classify") {
        if (a.split.size() != 3) throw UsageError("--split takes three fractions: train validation test");
        ClassifyOptions opt;
        opt.fractions = {a.split[0], a.split[1], a.split[2]};
        opt.seed = a.seed;
        std::vector<ClassifyResult> results;
        for (const auto& p : a.datasets) {
            ClassificationDataset d;
            if (a.format == "sentiment") {
                std::ifstream in(p);
                if (!in) throw DataError("cannot read " + p);
                d = read_sentiment(in, fs::path(p).stem().string());
            } else if (a.format == "labeled") {
                d = load_classification(p);
            } else {
                throw UsageError("unknown --format '" + a.format + "'");
            }
            results.push_back(classify_eval(emb, d, opt));
        }
        csv << "dataset,test_accuracy,validation_accuracy,l2,train,validation,test\n";
        for (const auto& r : results)
            csv << r.name << ',' << r.test_accuracy << ',' << r.validation_accuracy << ',' << r.l2 << ',' << r.train
                << ',' << r.validation << ',' << r.test << '\n';
        if (results.size() > 1) csv << "mean," << mean_accuracy(results) << ",,,,,\n";
    } else {
        throw UsageError("unknown --task '" + a.task + "' (expected sim, analogy or classify)");
    }
    emit(a.out, csv.str());
    if (!a.out.empty()) write_config(fs::path(a.out).replace_extension(".config.ini"), sub);
    return 0;
}

// ---------------------------------------------------------------------------

struct EffectsArgs {
    std::string model, vocab, out, density, pca;
};

int run_effects(const EffectsArgs& a, const CLI::App&) {
    const LoadedModel m = load_pair(a.model, a.vocab);
    if (!is_discrete(m.model.variant)) throw UsageError("effects need a discrete model (dsaw or sgbtl)");
    const auto effects = extract_effects(m.model, m.vocab);
    if (a.out.empty())
        write_effects(std::cout, m.vocab, effects);
    else
        write_atomic(a.out, [&](std::ostream& o) { write_effects(o, m.vocab, effects); });
    if (!a.density.empty())
        write_atomic(a.density, [&](std::ostream& o) { write_density_csv(o, m.vocab, effect_density(effects)); });
    if (!a.pca.empty()) {
        const Pca2 p = pca2(tertiary_matrix(effects));
        write_atomic(a.pca, [&](std::ostream& o) {
            o << "word,pc1,pc2\n";
            for (std::size_t i = 0; i < m.vocab.size(); ++i)
                o << m.vocab.word(static_cast<WordId>(i)) << ',' << p.projections(i, 0) << ',' << p.projections(i, 1)
                  << '\n';
        });
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct ParaphraseArgs {
    std::string model, vocab, target;
    std::size_t vocab_top = 4000;
    bool hard = false;
    bool no_repeat = false;
    long utility = 100;
    long cost = -1;
    double budget = 0.0;
    std::string out = "paraphrase";
};

int run_paraphrase(const ParaphraseArgs& a, const CLI::App& sub) {
    const LoadedModel m = load_pair(a.model, a.vocab);
    if (!is_discrete(m.model.variant)) throw UsageError("paraphrasing needs a discrete model (dsaw or sgbtl)");
    if (a.vocab_top == 0) throw UsageError("--vocab-top must be positive");
    const WordId target = require_word(m.vocab, a.target);
    const auto effects = extract_effects(m.model, m.vocab);
    std::vector<std::string> words;
    std::vector<BinaryEffect> action_effects;
    for (WordId i = 0; i < m.vocab.size() && words.size() < a.vocab_top; ++i) {
        if (i == target) continue;
        words.push_back(m.vocab.word(i));
        action_effects.push_back(effects[i]);
    }
    const Cost cost = a.cost >= 0 ? a.cost : static_cast<Cost>(m.model.width);
    const NetBenefitTask nb = build_paraphrase_task(a.target, effects[target], words, action_effects, cost, a.utility);
    StripsTask task;
    if (a.hard) {
        task = nb.task;
        if (a.no_repeat) add_used_guard(task);
    } else {
        task = compile_net_benefit(nb, {});
    }

    const fs::path out(a.out);
    fs::create_directories(out);
    const PddlText pddl = emit_pddl(task, "paraphrase", pddl_identifier(a.target));
    write_text(out / "domain.pddl", pddl.domain);
    write_text(out / "problem.pddl", pddl.problem);
    write_config(out / "config.ini", sub);

    AnytimeOptions opt;
    if (a.budget > 0.0) opt.time_budget_seconds = a.budget;
    std::ofstream log(out / "plans.csv", std::ios::binary);
    if (!log) throw DataError("cannot write " + (out / "plans.csv").string());
    write_plan_log_header(log);
    std::size_t index = 0;
    const AnytimeResult r = solve_anytime(task, opt, [&](const Plan& p) {
        write_plan_log_row(log, task, ++index, p);
        log.flush();
        std::cout << "plan " << index << " cost " << p.cost << ':';
        for (const auto& w : p.labels(task)) std::cout << ' ' << w;
        std::cout << '\n';
    });
    write_plan_log_status(log, r.status);
    std::cout << to_string(r.status) << '\n';
    if (a.hard && r.status == AnytimeStatus::unsolvable) return kExitUnsolvable;
    return 0;
}

// ---------------------------------------------------------------------------

struct GrammarArgs {
    std::string direction;
    std::vector<std::string> inputs;
    std::string out;
    std::size_t state_bound = 100000;
    bool solve = false;
};

int run_grammar(const GrammarArgs& a, const CLI::App&) {
    if (a.direction == "to-task") {
        if (a.inputs.size() != 1) throw UsageError("to-task takes one grammar file");
        std::ifstream in(a.inputs[0]);
        if (!in) throw DataError("cannot read " + a.inputs[0]);
        const StripsTask task = grammar_to_task(parse_grammar(in));
        const PddlText pddl = emit_pddl(task, "grammar", "derivation");
        if (a.out.empty()) {
            std::cout << pddl.domain << pddl.problem;
        } else {
            write_text(fs::path(a.out) / "domain.pddl", pddl.domain);
            write_text(fs::path(a.out) / "problem.pddl", pddl.problem);
        }
        if (a.solve) {
            const AnytimeResult r = solve_anytime(task);
            if (const Plan* p = r.best()) {
                std::cout << "labels:";
                for (const auto& w : p->labels(task)) std::cout << ' ' << w;
                std::cout << '\n';
            }
            std::cout << to_string(r.status) << '\n';
            if (r.status == AnytimeStatus::unsolvable) return kExitUnsolvable;
        }
        return 0;
    }
    if (a.direction == "to-grammar") {
        if (a.inputs.size() != 2) throw UsageError("to-grammar takes a domain and a problem file");
        auto slurp = [](const std::string& p) {
            std::ifstream in(p, std::ios::binary);
            if (!in) throw DataError("cannot read " + p);
            std::ostringstream s;
            s << in.rdbuf();
            return s.str();
        };
        const StripsTask task = parse_pddl(slurp(a.inputs[0]), slurp(a.inputs[1]));
        const RightRegularGrammar g = task_to_grammar(task, a.state_bound);
        if (a.out.empty())
            write_grammar(std::cout, g);
        else
            write_atomic(a.out, [&](std::ostream& o) { write_grammar(o, g); });
        return 0;
    }
    throw UsageError("unknown direction '" + a.direction + "' (expected to-task or to-grammar)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete word embeddings as STRIPS actions: training, evaluation and paraphrase planning"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "dsaw 1.0");
    app.set_config("--config", "", "Read options from a file written by a previous run");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train an embedding model on a text corpus");
    train_cmd->add_option("corpus", ta.corpus, "Corpus, one sentence per line")->required();
    train_cmd->add_option("--out", ta.out, "Output directory")->capture_default_str();
    train_cmd->add_option("--model", ta.model, "cbow, dsaw, sg or sgbtl")
        ->check(CLI::IsMember({"cbow", "dsaw", "sg", "sgbtl"}))
        ->capture_default_str();
    train_cmd->add_option("--dim", ta.dim, "Embedding width E")->capture_default_str();
    train_cmd->add_option("--window", ta.window, "Context half-width c")->capture_default_str();
    train_cmd->add_option("--negatives", ta.negatives, "Negative samples K")->capture_default_str();
    train_cmd->add_option("--epochs", ta.epochs)->capture_default_str();
    train_cmd->add_option("--batch-size", ta.batch)->capture_default_str();
    train_cmd->add_option("--lr", ta.lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--beta", ta.beta, "KL scale (discrete variants)")->capture_default_str();
    train_cmd->add_option("--anneal-start", ta.anneal_start, "Epoch at which the temperature starts falling")
        ->capture_default_str();
    train_cmd->add_flag("--affine", ta.affine, "Learn BatchNorm gamma/beta (discrete variants)");
    train_cmd->add_option("--init", ta.init, "logistic, gaussian, uniform or zeros");
    train_cmd->add_option("--min-count", ta.min_count)->capture_default_str();
    train_cmd->add_option("--subsample", ta.subsample, "Subsampling threshold t; 0 disables")->capture_default_str();
    train_cmd->add_option("--subsample-variant", ta.subsample_variant, "paper or implementation")
        ->capture_default_str();
    train_cmd->add_flag("--downcase,!--no-downcase", ta.downcase, "Lowercase the corpus")->capture_default_str();
    train_cmd->add_option("--threads", ta.threads, "OpenMP threads for the CBOW/SG kernels")->capture_default_str();
    train_cmd->add_option("--seed", ta.seed)->capture_default_str();

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model; writes a CSV report");
    eval_cmd->add_option("--model", ea.model)->required();
    eval_cmd->add_option("--vocab", ea.vocab)->required();
    eval_cmd->add_option("--task", ea.task, "sim, analogy or classify")->required();
    eval_cmd->add_option("dataset", ea.datasets, "Dataset files")->required();
    eval_cmd->add_option("--method", ea.method, "3cosadd, seqadd, ignore-a or only-b");
    eval_cmd->add_option("--ordering", ea.ordering, "seqadd operation order")->capture_default_str();
    eval_cmd->add_flag("--all-orderings", ea.all_orderings, "Report all six seqadd orderings");
    eval_cmd->add_option("--topk", ea.topk)->check(CLI::IsMember({1, 10}))->capture_default_str();
    eval_cmd->add_option("--format", ea.format, "classify input: labeled or sentiment")->capture_default_str();
    eval_cmd->add_option("--split", ea.split, "train/validation/test fractions")->expected(3)->capture_default_str();
    eval_cmd->add_option("--seed", ea.seed)->capture_default_str();
    eval_cmd->add_option("--out", ea.out, "CSV path (default: stdout)");

    EffectsArgs fa;
    auto* effects_cmd = app.add_subcommand("effects", "Dump the add/delete effects of a discrete model");
    effects_cmd->add_option("--model", fa.model)->required();
    effects_cmd->add_option("--vocab", fa.vocab)->required();
    effects_cmd->add_option("--out", fa.out, "Effect table path (default: stdout)");
    effects_cmd->add_option("--density", fa.density, "Also write per-word effect density CSV");
    effects_cmd->add_option("--pca", fa.pca, "Also write a 2-D PCA of the tertiary vectors");

    ParaphraseArgs pa;
    auto* para_cmd = app.add_subcommand("paraphrase", "Find word sequences whose combined effect matches a word");
    para_cmd->add_option("--model", pa.model)->required();
    para_cmd->add_option("--vocab", pa.vocab)->required();
    para_cmd->add_option("target", pa.target)->required();
    para_cmd->add_option("--vocab-top", pa.vocab_top, "Use the N most frequent words as actions")
        ->capture_default_str();
    auto* hard = para_cmd->add_flag("--hard", pa.hard, "All target bits are hard goals");
    para_cmd->add_flag("--soft", "Soft goals with utility U (default)")->excludes(hard);
    para_cmd->add_flag("--no-repeat", pa.no_repeat, "With --hard, use each word at most once");
    para_cmd->add_option("--utility", pa.utility, "Utility U of each goal bit")->capture_default_str();
    para_cmd->add_option("--cost", pa.cost, "Cost of each word; -1 means E")->capture_default_str();
    para_cmd->add_option("--budget", pa.budget, "Time budget in seconds (0: unlimited)")->capture_default_str();
    para_cmd->add_option("--out", pa.out, "Output directory")->capture_default_str();

    GrammarArgs ga;
    auto* gram_cmd = app.add_subcommand("grammar", "Convert between right-regular grammars and STRIPS tasks");
    gram_cmd->add_option("direction", ga.direction, "to-task or to-grammar")->required();
    gram_cmd->add_option("inputs", ga.inputs, "Grammar file, or PDDL domain and problem")->required();
    gram_cmd->add_option("--out", ga.out, "Output directory (to-task) or grammar file (to-grammar)");
    gram_cmd->add_option("--state-bound", ga.state_bound, "Reachable-state limit for to-grammar")
        ->capture_default_str();
    gram_cmd->add_flag("--solve", ga.solve, "to-task: also solve and print one plan's labels");

    std::string fixture_dir = "data/fixtures";
    std::uint64_t fixture_seed = 1;
    auto* fix_cmd = app.add_subcommand("fixtures", "Regenerate the fixture models and datasets");
    fix_cmd->add_option("--out", fixture_dir)->capture_default_str();
    fix_cmd->add_option("--seed", fixture_seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*train_cmd) return run_train(ta, *train_cmd);
        if (*eval_cmd) return run_eval(ea, *eval_cmd);
        if (*effects_cmd) return run_effects(fa, *effects_cmd);
        if (*para_cmd) return run_paraphrase(pa, *para_cmd);
        if (*gram_cmd) return run_grammar(ga, *gram_cmd);
        if (*fix_cmd) {
            fixtures::write_all(fixture_dir, fixture_seed);
            std::cout << "fixtures written to " << fixture_dir << '\n';
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
