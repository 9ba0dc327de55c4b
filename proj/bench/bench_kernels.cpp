#include <benchmark/benchmark.h>

#include "dsaw/kernels.hpp"
#include "dsaw/planner.hpp"

using namespace dsaw;

namespace {

constexpr std::size_t kVocab = 5000;
constexpr std::size_t kWidth = 100;

struct Fixture {
    ModelParameters model;
    Batch batch;
    Vocabulary vocab;

    Fixture(Variant v, std::size_t batch_size) {
        Rng rng(1);
        model = ModelParameters::create(v, kVocab, kWidth, InitDistribution::gaussian, false, rng);
        if (has_context_matrix(v))
            for (double& x : model.context.data()) x = 0.3 * rng.normal();
        const int window = 5;
        const std::size_t slots = negative_slots(v, window, 5);
        for (std::size_t b = 0; b < batch_size; ++b) {
            ContextSample s;
            s.center = static_cast<WordId>(rng.below(kVocab));
            for (int i = 0; i < 2 * window; ++i) s.context.push_back(static_cast<WordId>(rng.below(kVocab)));
            batch.samples.push_back(s);
            std::vector<WordId> neg(slots);
            for (auto& id : neg) id = static_cast<WordId>(rng.below(kVocab));
            batch.negatives.push_back(neg);
        }
        std::vector<std::string> words;
        for (std::size_t i = 0; i < kVocab; ++i) words.push_back("w" + std::to_string(i));
        vocab = Vocabulary::build(words, 1);
    }
};

using Kernel = LossBreakdown (*)(const Batch&, const ModelParameters&, Gradients*);

void run_objective(benchmark::State& state, const Fixture& f, Kernel kernel) {
    for (auto _ : state) {
        Gradients g(f.model);
        benchmark::DoNotOptimize(kernel(f.batch, f.model, &g));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.samples.size()));
}

const Fixture& cbow_fixture() {
    static const Fixture f(Variant::cbow, 1000);
    return f;
}

const Fixture& sg_fixture() {
    static const Fixture f(Variant::sg, 1000);
    return f;
}

void BM_CbowSerial(benchmark::State& s) { run_objective(s, cbow_fixture(), kernels::cbow_serial); }
void BM_CbowParallel(benchmark::State& s) { run_objective(s, cbow_fixture(), kernels::cbow_parallel); }
void BM_SgSerial(benchmark::State& s) { run_objective(s, sg_fixture(), kernels::sg_serial); }
void BM_SgParallel(benchmark::State& s) { run_objective(s, sg_fixture(), kernels::sg_parallel); }

template <auto Scan>
void BM_CosineScan(benchmark::State& state) {
    Rng rng(2);
    Matrix rows(50000, kWidth);
    for (double& x : rows.data()) x = rng.normal();
    std::vector<double> q(kWidth);
    for (double& x : q) x = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(Scan(q, rows));
    state.SetItemsProcessed(state.iterations() * 50000);
}

template <auto Extract>
void BM_ExtractEffects(benchmark::State& state) {
    static Fixture f(Variant::dsaw, 1);
    for (auto _ : state) benchmark::DoNotOptimize(Extract(f.model, f.vocab));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kVocab));
}

// Compiled soft-goal paraphrase search over random 12-bit effects.
void BM_ParaphraseSearch(benchmark::State& state) {
    Rng rng(3);
    const std::size_t e = 12;
    auto effect = [&] {
        BinaryEffect x(e);
        for (std::size_t j = 0; j < e; ++j) {
            const double u = rng.uniform();
            if (u < 0.3) x.add.set(j);
            else if (u < 0.6) x.del.set(j);
        }
        return x;
    };
    std::vector<BinaryEffect> actions;
    std::vector<std::string> words;
    for (int i = 0; i < 30; ++i) {
        actions.push_back(effect());
        words.push_back("w" + std::to_string(i));
    }
    const auto target = effect();
    const auto task = compile_net_benefit(build_paraphrase_task("target", target, words, actions, 8, 100));
    for (auto _ : state) benchmark::DoNotOptimize(solve_anytime(task));
}

}  // namespace

BENCHMARK(BM_CbowSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CbowParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SgSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SgParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CosineScan<kernels::cosine_scan_serial>)->Name("BM_CosineScanSerial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CosineScan<kernels::cosine_scan_parallel>)
    ->Name("BM_CosineScanParallel")
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_ExtractEffects<kernels::extract_effects_serial>)->Name("BM_ExtractEffectsSerial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractEffects<kernels::extract_effects_parallel>)
    ->Name("BM_ExtractEffectsParallel")
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_ParaphraseSearch)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
