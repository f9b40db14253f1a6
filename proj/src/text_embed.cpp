#include "mcpd/text_embed.hpp"

#include "mcpd/errors.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mcpd {

namespace {

bool is_ascii_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
           (cp >= 0x3400 && cp <= 0x4DBF) ||    // extension A
           (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
           (cp >= 0x20000 && cp <= 0x2FA1F);    // extensions B..F
}

// Decodes one UTF-8 codepoint starting at i; advances i past it. Invalid
// bytes decode as U+FFFD and consume a single byte.
char32_t decode_utf8(const std::string& s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char b0 = byte(i);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
        ++i;
        return b0;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    if (i + len > s.size()) {
        ++i;
        return 0xFFFD;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const unsigned char bk = byte(i + k);
        if ((bk & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += len;
    return cp;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const unsigned char b = static_cast<unsigned char>(text[i]);
        if (b < 0x80) {
            if (is_ascii_alnum(b)) {
                current.push_back(static_cast<char>(std::tolower(b)));
            } else if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
            ++i;
            continue;
        }
        const std::size_t start = i;
        const char32_t cp = decode_utf8(text, i);
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
        if (is_cjk(cp)) {
            tokens.emplace_back(text.substr(start, i - start));
        }
        // other non-ASCII codepoints separate
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::uint64_t hash_token(const std::string& token, std::uint64_t seed) {
    // FNV-1a with the seed folded into the offset basis.
    std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
    for (const char c : token) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

Eigen::VectorXd embed_text(const std::string& text, const EmbedderConfig& config) {
    if (config.dim < 1) {
        throw ArgumentError("embedder dim must be >= 1, got " + std::to_string(config.dim));
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(config.dim);
    const auto tokens = tokenize(text);
    for (const auto& tok : tokens) {
        const std::uint64_t h_index = hash_token(tok, config.hash_seed);
        const auto idx = static_cast<Eigen::Index>(h_index % static_cast<std::uint64_t>(config.dim));
        double sign = 1.0;
        if (config.signed_hashing) {
            const std::uint64_t h_sign = hash_token(tok, config.hash_seed ^ 0x6a09e667f3bcc908ULL);
            sign = (h_sign & 1u) ? 1.0 : -1.0;
        }
        v[idx] += sign;
    }
    const double norm = v.norm();
    if (norm > 0.0) {
        v /= norm;
    }
    return v;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

}  // namespace

EmbeddingMap load_precomputed(const std::string& path, int expected_dim) {
    if (expected_dim < 1) {
        throw ArgumentError("expected_dim must be >= 1, got " + std::to_string(expected_dim));
    }
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open embedding file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError("embedding file is empty: " + path);
    }
    const auto header = split_csv_line(line);
    if (header.size() != static_cast<std::size_t>(expected_dim) + 2) {
        throw SchemaError("embedding header has " + std::to_string(header.size()) +
                          " columns, expected " + std::to_string(expected_dim + 2));
    }
    EmbeddingMap map;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != static_cast<std::size_t>(expected_dim) + 2) {
            throw SchemaError("line " + std::to_string(line_no) + ": row has " +
                              std::to_string(fields.size() - 2) + " values, expected dim " +
                              std::to_string(expected_dim));
        }
        EmbeddingKey key;
        key.first = fields[0];
        try {
            key.second = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw ParseError("bad period_index '" + fields[1] + "'", line_no);
        }
        Eigen::VectorXd v(expected_dim);
        for (int d = 0; d < expected_dim; ++d) {
            try {
                v[d] = std::stod(fields[static_cast<std::size_t>(d) + 2]);
            } catch (const std::exception&) {
                throw ParseError("bad float '" + fields[static_cast<std::size_t>(d) + 2] + "'",
                                 line_no);
            }
        }
        if (!v.allFinite()) {
            throw SchemaError("line " + std::to_string(line_no) + ": non-finite embedding value");
        }
        const double norm = v.norm();
        if (norm > 0.0) {
            v /= norm;
        }
        if (!map.emplace(key, std::move(v)).second) {
            throw SchemaError("duplicate embedding key (" + key.first + ", " +
                              std::to_string(key.second) + ")");
        }
    }
    return map;
}

}  // namespace mcpd
