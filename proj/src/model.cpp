#include "dsaw/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "dsaw/error.hpp"

namespace dsaw {

static_assert(std::endian::native == std::endian::little, "model I/O assumes a little-endian host");

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::cbow: return "cbow";
        case Variant::dsaw: return "dsaw";
        case Variant::sg: return "sg";
        case Variant::sgbtl: return "sgbtl";
    }
    return "?";
}

Variant parse_variant(std::string_view s) {
    if (s == "cbow") return Variant::cbow;
    if (s == "dsaw") return Variant::dsaw;
    if (s == "sg") return Variant::sg;
    if (s == "sgbtl") return Variant::sgbtl;
    throw UsageError("unknown model variant '" + std::string(s) + "'");
}

ModelParameters ModelParameters::create(Variant variant, std::size_t vocab_size, std::size_t width,
                                        InitDistribution dist, bool affine, Rng& rng) {
    ModelParameters m;
    m.variant = variant;
    m.width = width;
    m.effect = init_weights(vocab_size, width, dist, rng);
    if (has_context_matrix(variant)) m.context = Matrix(vocab_size, width);
    m.bn = BatchNormState::identity(width, is_discrete(variant) && affine);
    return m;
}

void ModelParameters::validate() const {
    if (effect.cols() != width) throw IntegrityError("effect matrix width does not match E");
    if (has_context_matrix(variant) && (context.rows() != effect.rows() || context.cols() != width))
        throw IntegrityError("context matrix shape does not match effect matrix");
    for (double x : effect.data())
        if (!std::isfinite(x)) throw IntegrityError("effect matrix has a non-finite entry");
    for (double x : context.data())
        if (!std::isfinite(x)) throw IntegrityError("context matrix has a non-finite entry");
    if (bn.width() != width) throw IntegrityError("batch norm width does not match E");
    bn.validate();
}

bool operator==(const ModelParameters& a, const ModelParameters& b) {
    return a.variant == b.variant && a.width == b.width && a.effect == b.effect && a.context == b.context &&
           a.bn.gamma == b.bn.gamma && a.bn.beta == b.bn.beta && a.bn.running_mean == b.bn.running_mean &&
           a.bn.running_var == b.bn.running_var && a.bn.affine == b.bn.affine &&
           a.bn.momentum == b.bn.momentum && a.bn.epsilon == b.bn.epsilon;
}

namespace {

constexpr char kMagic[8] = {'D', 'S', 'A', 'W', 'M', 'O', 'D', 'L'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("model file is truncated");
    return v;
}

void put_floats(std::ostream& out, std::span<const double> xs) {
    for (double x : xs) put(out, static_cast<float>(x));
}

void get_floats(std::istream& in, std::span<double> xs) {
    for (auto& x : xs) x = static_cast<double>(get<float>(in));
}

}  // namespace

void write_model(std::ostream& out, const ModelParameters& model, std::uint64_t vocab_fingerprint) {
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kModelFormatVersion);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(model.variant));
    put<std::uint8_t>(out, model.bn.affine ? 1 : 0);
    put<std::uint16_t>(out, 0);
    put<std::uint64_t>(out, model.vocab_size());
    put<std::uint64_t>(out, model.width);
    put<std::uint64_t>(out, vocab_fingerprint);
    put_floats(out, model.effect.data());
    const bool has_ctx = !model.context.empty();
    put<std::uint8_t>(out, has_ctx ? 1 : 0);
    if (has_ctx) put_floats(out, model.context.data());
    put(out, static_cast<float>(model.bn.momentum));
    put(out, static_cast<float>(model.bn.epsilon));
    put_floats(out, model.bn.gamma);
    put_floats(out, model.bn.beta);
    put_floats(out, model.bn.running_mean);
    put_floats(out, model.bn.running_var);
    if (!out) throw DataError("failed writing model");
}

ModelParameters read_model(std::istream& in, std::uint64_t* vocab_fingerprint) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw DataError("not a model file (bad magic)");
    auto version = get<std::uint32_t>(in);
    if (version != kModelFormatVersion)
        throw DataError("unsupported model format version " + std::to_string(version));
    auto variant_tag = get<std::uint8_t>(in);
    if (variant_tag > 3) throw DataError("unknown variant tag in model file");
    ModelParameters m;
    m.variant = static_cast<Variant>(variant_tag);
    bool affine = get<std::uint8_t>(in) != 0;
    get<std::uint16_t>(in);
    auto v = get<std::uint64_t>(in);
    auto e = get<std::uint64_t>(in);
    auto fp = get<std::uint64_t>(in);
    if (vocab_fingerprint) *vocab_fingerprint = fp;
    if (v == 0 || e == 0 || v > (1ULL << 32) || e > (1ULL << 20)) throw DataError("implausible model dimensions");
    m.width = e;
    m.effect = Matrix(v, e);
    get_floats(in, m.effect.data());
    if (get<std::uint8_t>(in) != 0) {
        m.context = Matrix(v, e);
        get_floats(in, m.context.data());
    }
    m.bn = BatchNormState::identity(e, affine);
    m.bn.momentum = get<float>(in);
    m.bn.epsilon = get<float>(in);
    get_floats(in, m.bn.gamma);
    get_floats(in, m.bn.beta);
    get_floats(in, m.bn.running_mean);
    get_floats(in, m.bn.running_var);
    m.validate();
    return m;
}

void save_model(const std::filesystem::path& path, const ModelParameters& model, std::uint64_t vocab_fingerprint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model to " + path.string());
    write_model(out, model, vocab_fingerprint);
}

ModelParameters load_model(const std::filesystem::path& path, std::uint64_t* vocab_fingerprint) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read model " + path.string());
    return read_model(in, vocab_fingerprint);
}

}  // namespace dsaw
