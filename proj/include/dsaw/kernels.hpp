#pragma once

// Hot loops with an OpenMP implementation next to the serial reference it
// must agree with. The serial versions are what the rest of the library
// calls by default; tests and bench/ compare the two.

#include <span>
#include <vector>

#include "dsaw/algebra.hpp"
#include "dsaw/trainer.hpp"

namespace dsaw::kernels {

/// CBOW negative-sampling objective and its gradient (scaled by 1/B).
LossBreakdown cbow_serial(const Batch& batch, const ModelParameters& model, Gradients* grad);
/// Same objective, samples processed concurrently; gradient rows are
/// accumulated with atomic adds, so results match serial up to rounding.
LossBreakdown cbow_parallel(const Batch& batch, const ModelParameters& model, Gradients* grad);

/// SkipGram: center row of W against each context row of W'.
LossBreakdown sg_serial(const Batch& batch, const ModelParameters& model, Gradients* grad);
LossBreakdown sg_parallel(const Batch& batch, const ModelParameters& model, Gradients* grad);

/// Cosine similarity of every row against `query` (0 for zero rows).
std::vector<double> cosine_scan_serial(std::span<const double> query, const Matrix& rows);
std::vector<double> cosine_scan_parallel(std::span<const double> query, const Matrix& rows);

std::vector<BinaryEffect> extract_effects_serial(const ModelParameters& model, const Vocabulary& vocab);
std::vector<BinaryEffect> extract_effects_parallel(const ModelParameters& model, const Vocabulary& vocab);

int max_threads();

}  // namespace dsaw::kernels
