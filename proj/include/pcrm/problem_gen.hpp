#pragma once

#include "pcrm/affine.hpp"
#include "pcrm/errors.hpp"
#include "pcrm/types.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pcrm {

/// Name recorded in descriptors; changing the stream changes every instance.
inline constexpr const char* generator_id = "mt19937_64+box-muller";

/// Standard normal samples from a seeded mt19937_64 through the Box-Muller
/// transform.  The engine's output sequence is fixed by the C++ standard and
/// the transform is written out here, so streams are reproducible across
/// standard libraries (std::normal_distribution is not).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        const double u1     = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2     = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle  = 2.0 * std::numbers::pi * u2;
        spare_              = radius * std::sin(angle);
        has_spare_          = true;
        return radius * std::cos(angle);
    }

    Vector vector(Index n)
    {
        Vector v(n);
        for (Index i = 0; i < n; ++i)
            v(i) = next();
        return v;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_   = 0.0;
};

enum class InstanceKind { dense, planted, explicit_blocks };

struct GenerationDescriptor {
    InstanceKind kind  = InstanceKind::dense;
    Index m            = 0;
    Index n            = 0;
    double coherence   = 0.0;
    std::uint64_t seed = 0;
    std::string generator = generator_id;
    Index block_count  = 0;
    std::vector<Index> block_rows; ///< explicit row counts (planted instances only)
};

struct ProblemInstance {
    std::vector<AffineSubspace> subspaces;
    Index ambient_dim = 0;
    std::optional<Vector> known_solution;
    GenerationDescriptor descriptor;

    SubspaceList blocks() const { return subspaces; }
    std::size_t block_count() const { return subspaces.size(); }
};

/// (1 - c) N(0,1) + c, filled row by row from `stream`.
inline Matrix gaussian_matrix(Index m, Index n, double coherence, NormalStream& stream)
{
    if (!(coherence >= 0.0 && coherence <= 1.0))
        throw invalid_coherence("coherence must lie in [0, 1], got " + std::to_string(coherence));
    if (m < 1 || n < 1)
        throw dimension_mismatch("gaussian_matrix: m and n must be positive");
    Matrix A(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j)
            A(i, j) = (1.0 - coherence) * stream.next() + coherence;
    return A;
}

inline Matrix gaussian_matrix(Index m, Index n, double coherence, std::uint64_t seed)
{
    NormalStream stream(seed);
    return gaussian_matrix(m, n, coherence, stream);
}

/// floor(m / n) + 1
inline Index default_block_count(Index m, Index n) { return m / n + 1; }

/// Row counts of `blocks` consecutive blocks covering m rows; the first m mod blocks get one extra row.
inline std::vector<Index> block_partition(Index m, Index blocks)
{
    std::vector<Index> sizes(static_cast<std::size_t>(blocks), m / blocks);
    for (Index i = 0; i < m % blocks; ++i)
        ++sizes[static_cast<std::size_t>(i)];
    return sizes;
}

namespace detail {

inline std::vector<AffineSubspace> split_rows(const Matrix& A, const Vector& b, const std::vector<Index>& sizes)
{
    std::vector<AffineSubspace> blocks;
    blocks.reserve(sizes.size());
    Index offset = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        blocks.push_back(AffineSubspace::build(A.middleRows(offset, sizes[i]), b.segment(offset, sizes[i]),
                                               static_cast<int>(i)));
        offset += sizes[i];
    }
    return blocks;
}

} // namespace detail

/// Overdetermined benchmark instance: A is m x n with coherence c, x* = A^T w
/// for a standard normal w drawn after A, b = A x*, and the rows are split
/// into floor(m/n) + 1 consecutive blocks.
inline ProblemInstance build_instance(Index m, Index n, double coherence, std::uint64_t seed)
{
    if (n < 1 || m <= n)
        throw dimension_mismatch("build_instance: requires m > n >= 1");
    NormalStream stream(seed);
    const Matrix A = gaussian_matrix(m, n, coherence, stream);
    const Vector w = stream.vector(m);

    ProblemInstance inst;
    inst.ambient_dim           = n;
    inst.known_solution        = A.transpose() * w;
    const Vector b             = A * *inst.known_solution;
    const Index blocks         = default_block_count(m, n);
    inst.subspaces             = detail::split_rows(A, b, block_partition(m, blocks));
    inst.descriptor.kind       = InstanceKind::dense;
    inst.descriptor.m          = m;
    inst.descriptor.n          = n;
    inst.descriptor.coherence  = coherence;
    inst.descriptor.seed       = seed;
    inst.descriptor.block_count = blocks;
    return inst;
}

/// Blocks with the given row counts sharing a planted standard normal point.
/// No known solution is attached: S need not be a singleton.
inline ProblemInstance build_planted_instance(Index n, const std::vector<Index>& block_rows, double coherence,
                                              std::uint64_t seed)
{
    if (n < 1 || block_rows.empty())
        throw dimension_mismatch("build_planted_instance: need n >= 1 and at least one block");
    Index m = 0;
    for (Index r : block_rows) {
        if (r < 1)
            throw dimension_mismatch("build_planted_instance: every block needs at least one row");
        m += r;
    }
    NormalStream stream(seed);
    const Matrix A       = gaussian_matrix(m, n, coherence, stream);
    const Vector planted = stream.vector(n);
    const Vector b       = A * planted;

    ProblemInstance inst;
    inst.ambient_dim            = n;
    inst.subspaces              = detail::split_rows(A, b, block_rows);
    inst.descriptor.kind        = InstanceKind::planted;
    inst.descriptor.m           = m;
    inst.descriptor.n           = n;
    inst.descriptor.coherence   = coherence;
    inst.descriptor.seed        = seed;
    inst.descriptor.block_count = static_cast<Index>(block_rows.size());
    inst.descriptor.block_rows  = block_rows;
    return inst;
}

/// Planted instance with fewer total rows than columns, so dim S >= 1.
inline ProblemInstance build_underdetermined_instance(Index n, const std::vector<Index>& block_rows,
                                                      double coherence, std::uint64_t seed)
{
    Index m = 0;
    for (Index r : block_rows)
        m += r;
    if (m >= n)
        throw dimension_mismatch("build_underdetermined_instance: total rows must be below n");
    return build_planted_instance(n, block_rows, coherence, seed);
}

/// Instance from hand-written blocks (toy problems, CLI explicit files).
inline ProblemInstance make_instance(std::vector<AffineSubspace> blocks, std::optional<Vector> known = {})
{
    if (blocks.empty())
        throw dimension_mismatch("make_instance: no blocks");
    ProblemInstance inst;
    inst.ambient_dim = blocks.front().ambient_dim();
    Index m          = 0;
    for (const auto& U : blocks) {
        detail::require_dims(U.ambient_dim() == inst.ambient_dim, "make_instance",
                             "blocks disagree on ambient dimension");
        m += U.rows();
        inst.descriptor.block_rows.push_back(U.rows());
    }
    if (known)
        detail::require_dims(known->size() == inst.ambient_dim, "make_instance", "known solution dimension");
    inst.subspaces              = std::move(blocks);
    inst.known_solution         = std::move(known);
    inst.descriptor.kind        = InstanceKind::explicit_blocks;
    inst.descriptor.m           = m;
    inst.descriptor.n           = inst.ambient_dim;
    inst.descriptor.block_count = static_cast<Index>(inst.subspaces.size());
    return inst;
}

/// Regenerate an instance from its descriptor (dense or planted kinds).
inline ProblemInstance regenerate(const GenerationDescriptor& d)
{
    if (d.generator != generator_id)
        throw error("unsupported generator '" + d.generator + "', expected '" + generator_id + "'");
    switch (d.kind) {
    case InstanceKind::dense: {
        auto inst = build_instance(d.m, d.n, d.coherence, d.seed);
        if (d.block_count != 0 && d.block_count != inst.descriptor.block_count)
            throw error("descriptor block_count " + std::to_string(d.block_count) +
                        " disagrees with floor(m/n)+1 = " + std::to_string(inst.descriptor.block_count));
        return inst;
    }
    case InstanceKind::planted:
        return build_planted_instance(d.n, d.block_rows, d.coherence, d.seed);
    case InstanceKind::explicit_blocks:
        break;
    }
    throw error("explicit instances cannot be regenerated from a descriptor");
}

/// FNV-1a over the IEEE bytes of every block's A (column-major) then b.
inline std::uint64_t content_hash(const ProblemInstance& inst)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix        = [&h](const double* data, Index count) {
        for (Index i = 0; i < count; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, data + i, sizeof bits);
            for (int k = 0; k < 8; ++k) {
                h ^= (bits >> (8 * k)) & 0xffU;
                h *= 0x100000001b3ULL;
            }
        }
    };
    for (const auto& U : inst.subspaces) {
        mix(U.constraint_matrix().data(), U.constraint_matrix().size());
        mix(U.rhs().data(), U.rhs().size());
    }
    return h;
}

} // namespace pcrm
