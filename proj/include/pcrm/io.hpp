#pragma once

// JSON forms of instance descriptors and of small hand-written instances.
//
// Descriptor (dense random instance):
//   {"m":5000,"n":500,"coherence":0.1,"seed":42,"generator_id":"...","block_count":11}
// Planted instances add "kind":"planted" and "block_rows":[...].
// Explicit instances: {"kind":"explicit","n":2,"blocks":[{"A":[[1,0]],"b":[0]}, ...],
//                      "known_solution":[...]}   (known_solution optional)
// Every generated descriptor may carry "content_hash" (hex FNV-1a of the matrices).

#include "pcrm/errors.hpp"
#include "pcrm/problem_gen.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace pcrm::io {

using json = nlohmann::json;

inline std::string hash_hex(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json to_json(const GenerationDescriptor& d)
{
    json j;
    if (d.kind == InstanceKind::planted)
        j["kind"] = "planted";
    j["m"]            = d.m;
    j["n"]            = d.n;
    j["coherence"]    = d.coherence;
    j["seed"]         = d.seed;
    j["generator_id"] = d.generator;
    j["block_count"]  = d.block_count;
    if (d.kind == InstanceKind::planted)
        j["block_rows"] = d.block_rows;
    return j;
}

inline GenerationDescriptor descriptor_from_json(const json& j)
{
    GenerationDescriptor d;
    const std::string kind = j.value("kind", std::string("dense"));
    if (kind == "dense")
        d.kind = InstanceKind::dense;
    else if (kind == "planted")
        d.kind = InstanceKind::planted;
    else
        throw error("descriptor: unknown kind '" + kind + "'");
    d.m           = j.at("m").get<Index>();
    d.n           = j.at("n").get<Index>();
    d.coherence   = j.at("coherence").get<double>();
    d.seed        = j.at("seed").get<std::uint64_t>();
    d.generator   = j.value("generator_id", std::string(generator_id));
    d.block_count = j.value("block_count", Index{0});
    if (d.kind == InstanceKind::planted)
        d.block_rows = j.at("block_rows").get<std::vector<Index>>();
    return d;
}

inline Matrix matrix_from_json(const json& rows)
{
    if (!rows.is_array() || rows.empty() || !rows.front().is_array())
        throw error("explicit block: A must be a non-empty array of rows");
    const auto m = static_cast<Index>(rows.size());
    const auto n = static_cast<Index>(rows.front().size());
    Matrix A(m, n);
    for (Index i = 0; i < m; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<Index>(row.size()) != n)
            throw dimension_mismatch("explicit block: ragged rows in A");
        for (Index k = 0; k < n; ++k)
            A(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return A;
}

inline Vector vector_from_json(const json& values)
{
    const auto v = values.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

/// Build (or regenerate) the instance described by a JSON document.
inline ProblemInstance instance_from_json(const json& j)
{
    if (j.value("kind", std::string("dense")) == "explicit") {
        std::vector<AffineSubspace> blocks;
        int label = 0;
        for (const auto& blk : j.at("blocks"))
            blocks.push_back(AffineSubspace::build(matrix_from_json(blk.at("A")), vector_from_json(blk.at("b")),
                                                   label++));
        std::optional<Vector> known;
        if (j.contains("known_solution"))
            known = vector_from_json(j.at("known_solution"));
        if (j.contains("n") && j.at("n").get<Index>() != blocks.front().ambient_dim())
            throw dimension_mismatch("explicit instance: n disagrees with block width");
        return make_instance(std::move(blocks), std::move(known));
    }

    ProblemInstance inst = regenerate(descriptor_from_json(j));
    if (j.contains("content_hash")) {
        const std::string expected = j.at("content_hash").get<std::string>();
        const std::string actual   = hash_hex(content_hash(inst));
        if (expected != actual)
            throw error("content hash mismatch: descriptor says " + expected + ", regenerated " + actual);
    }
    return inst;
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw error("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline ProblemInstance load_instance(const std::string& path) { return instance_from_json(read_json_file(path)); }

} // namespace pcrm::io
