#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "dsaw/matrix.hpp"
#include "dsaw/nncore.hpp"

namespace dsaw {

enum class Variant : std::uint8_t { cbow = 0, dsaw = 1, sg = 2, sgbtl = 3 };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

/// Discrete variants run Back-to-Logit and yield binary effects.
inline bool is_discrete(Variant v) { return v == Variant::dsaw || v == Variant::sgbtl; }
/// Continuous variants own a second (context/output) matrix.
inline bool has_context_matrix(Variant v) { return v == Variant::cbow || v == Variant::sg; }

struct ModelParameters {
    Variant variant = Variant::dsaw;
    std::size_t width = 0;  // E
    Matrix effect;          // W, V x E
    Matrix context;         // W', V x E; empty for discrete variants
    BatchNormState bn;      // identity for continuous variants

    std::size_t vocab_size() const { return effect.rows(); }

    /// Fresh parameters. W uses `dist`; W' starts at zero.
    static ModelParameters create(Variant variant, std::size_t vocab_size, std::size_t width,
                                  InitDistribution dist, bool affine, Rng& rng);

    /// Throws IntegrityError on non-finite entries or an invalid BatchNorm state.
    void validate() const;

    friend bool operator==(const ModelParameters& a, const ModelParameters& b);
};

/// Model container format (little-endian):
///   "DSAWMODL" u32 version, u8 variant, u8 affine, u16 0, u64 V, u64 E,
///   u64 vocabulary fingerprint, f32 W[V*E], u8 has_context, [f32 W'[V*E]],
///   f32 momentum, f32 epsilon, f32 gamma[E], beta[E], running_mean[E],
///   running_var[E].
inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const ModelParameters& model, std::uint64_t vocab_fingerprint);
ModelParameters read_model(std::istream& in, std::uint64_t* vocab_fingerprint = nullptr);

void save_model(const std::filesystem::path& path, const ModelParameters& model,
                std::uint64_t vocab_fingerprint);
ModelParameters load_model(const std::filesystem::path& path, std::uint64_t* vocab_fingerprint = nullptr);

}  // namespace dsaw
