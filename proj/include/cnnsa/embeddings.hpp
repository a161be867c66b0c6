#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "cnnsa/matrix.hpp"

namespace cnnsa::embeddings {

/// Reserved token for sentence padding; always maps to the zero vector so
/// padded rows stay neutral under convolution.
inline constexpr const char* kPadToken = "<pad>";

struct LoadReport {
    std::size_t tokens_loaded = 0;
    std::size_t duplicates_replaced = 0;
};

/// Immutable-after-load word vector table. Lookup is total: unknown tokens
/// get a deterministic pseudo-random vector derived from the token hash and
/// the table seed, so the same OOV token maps to the same vector across runs.
class EmbeddingTable {
public:
    EmbeddingTable(std::size_t dimension, std::uint64_t seed)
        : dim_(dimension), seed_(seed) {}

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return table_.size(); }
    std::uint64_t seed() const { return seed_; }

    void insert(const std::string& token, Vec v);
    bool contains(const std::string& token) const {
        return table_.find(token) != table_.end();
    }

    /// Total lookup: pad token -> zeros, stored token -> stored vector,
    /// anything else -> seeded-hash vector with entries in [-0.25, 0.25].
    Vec lookup(const std::string& token) const;

    /// Mutable access for embedding fine-tuning; nullptr when absent.
    Vec* find(const std::string& token);

    const std::map<std::string, Vec>& entries() const { return table_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::map<std::string, Vec> table_;
};

/// Parses the standard text vector format: optional `<count> <dim>` header,
/// then one `token v1 ... vs` line per word, single-space separated.
/// Duplicate tokens: last occurrence wins, counted in the report.
std::pair<EmbeddingTable, LoadReport> load_embeddings(
    const std::string& path,
    std::optional<std::size_t> expected_dim = std::nullopt,
    std::uint64_t seed = 0);

/// Writes the same text format with a header line; floats use the shortest
/// representation that round-trips exactly.
void save_embeddings(const EmbeddingTable& table, const std::string& path);

}  // namespace cnnsa::embeddings
