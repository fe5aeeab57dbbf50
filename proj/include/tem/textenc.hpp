#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tem/common.hpp"

namespace tem {

inline constexpr const char* kUnknownToken = "<unk>";

/// Dense token ids 0..n-1; id 0 is always the reserved unknown token.
class Vocabulary {
public:
    Vocabulary();
    /// tokens[0] must be the unknown token; all tokens unique.
    explicit Vocabulary(std::vector<std::string> tokens);

    int size() const { return static_cast<int>(tokens_.size()); }
    bool contains(const std::string& token) const { return index_.count(token) > 0; }
    /// Id of token, or 0 (unknown) if absent.
    int id_of(const std::string& token) const;
    const std::string& token(int id) const;
    const std::vector<std::string>& tokens() const { return tokens_; }

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

/// Lowercases, splits on whitespace/punctuation, drops the punctuation,
/// keeps digits. Bytes >= 0x80 are kept so multi-byte UTF-8 sequences
/// survive intact.
std::vector<std::string> tokenize(std::string_view text);

/// Tokens with frequency >= min_count, ordered by (frequency desc, token asc),
/// with the unknown token prepended at id 0.
Vocabulary build_vocab(const std::vector<std::string>& texts, int min_count);

/// Token-per-line text file; id = line number.
void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocab(const std::filesystem::path& path);

enum class ExpandMode { MeanExact, GaussianSample };

/// The mean/covariance used to initialize new rows, plus the rows drawn.
struct ExpansionInit {
    Vector mu;           // row mean of the original embedding matrix
    Matrix sigma;        // (1/n) (M - mu)^T (M - mu), population normalization
    Matrix sampled_rows; // one row per new token
};

struct ExpansionResult {
    Vocabulary vocab;
    Matrix emb;
    ExpansionInit init;
};

/// Appends new_tokens to the vocabulary and initializes their embedding rows
/// from the statistics of the existing rows. MeanExact sets each new row to
/// mu; GaussianSample draws from N(mu, sigma) through an eigendecomposition
/// with negative eigenvalues clipped to zero. Original rows are unchanged.
ExpansionResult expand_vocab(const Vocabulary& vocab, const Matrix& emb,
                             const std::vector<std::string>& new_tokens,
                             ExpandMode mode, std::uint64_t seed);

/// Softmax language model over a fixed context vector: p_j proportional to
/// exp(h . m_j). Exists to check how vocabulary expansion shifts the output
/// distribution.
class ToySoftmaxLM {
public:
    ToySoftmaxLM(Vector context, Matrix embeddings);

    const Vector& context() const { return h_; }
    const Matrix& embeddings() const { return emb_; }
    int vocab_size() const { return static_cast<int>(emb_.rows()); }
    /// log of the partition sum over clamped dot products.
    double log_partition() const { return log_z_; }

    /// Full distribution; sums to 1 within 1e-12.
    Vector distribution() const;

    /// KL divergence between the pre- and post-expansion models over the
    /// pre-expansion support after appending one token with this embedding:
    /// log(1 + e^{h . new_row} / Z).
    double kl_post_expansion(const Vector& new_row) const;

private:
    Vector h_;
    Matrix emb_;
    Vector dots_;  // clamped h . m_j
    double log_z_;
};

Vector lm_distribution(const ToySoftmaxLM& lm);
double kl_post_expansion(const ToySoftmaxLM& lm_pre, const Vector& new_row);

/// Worst-case post-expansion KL under mean initialization: log(1 + 1/n).
double kl_bound(std::int64_t n);

}  // namespace tem
