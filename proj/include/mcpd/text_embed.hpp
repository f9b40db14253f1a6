#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mcpd {

// Deterministic replacement for a pretrained sentence encoder: text is
// tokenized and mapped to a fixed-dimension L2-normalized term-frequency
// vector by feature hashing. Externally computed sentence embeddings can be
// imported from CSV instead; both providers fill the same vector slot.
struct EmbedderConfig {
    int dim = 64;
    std::uint64_t hash_seed = 0;
    bool signed_hashing = true;
};

// Lowercased tokens: each contiguous ASCII alphanumeric run is one token,
// each CJK codepoint is its own token, everything else separates.
std::vector<std::string> tokenize(const std::string& text);

// Feature-hashed term-frequency vector. Empty token list gives the zero
// vector; otherwise the result is L2-normalized.
Eigen::VectorXd embed_text(const std::string& text, const EmbedderConfig& config);

// Stable 64-bit string hash (seeded FNV-1a); exposed for reuse by tests.
std::uint64_t hash_token(const std::string& token, std::uint64_t seed);

using EmbeddingKey = std::pair<std::string, int>;  // (student_id, period_index)
using EmbeddingMap = std::map<EmbeddingKey, Eigen::VectorXd>;

// Reads a precomputed-embedding CSV (header: student_id, period_index, then
// one column per dimension). Every row must carry exactly expected_dim
// values; vectors are L2-normalized on load, zero rows pass through.
EmbeddingMap load_precomputed(const std::string& path, int expected_dim);

}  // namespace mcpd
