#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tem/common.hpp"
#include "tem/textenc.hpp"

namespace tem {

/// The trainable embedding model: token-embedding lookup, mean pooling,
/// linear projection, L2 normalization.
struct EncoderModel {
    Vocabulary vocab;
    Matrix token_emb;   // vocab.size() x d_tok
    Matrix projection;  // d_tok x d_out

    int d_tok() const { return static_cast<int>(token_emb.cols()); }
    int d_out() const { return static_cast<int>(projection.cols()); }
};

EncoderModel init_encoder(const Vocabulary& vocab, int d_tok, int d_out, std::uint64_t seed);

std::vector<int> text_to_ids(const Vocabulary& vocab, std::string_view text);

/// Unit-norm embedding of the text. Empty or fully cancelled input maps to
/// the deterministic fallback e1 so retrieval never fails on a degenerate
/// query.
Vector encode(const EncoderModel& model, std::string_view text);
Vector encode_ids(const EncoderModel& model, const std::vector<int>& ids);

/// Dot product of unit vectors, clamped to [-1, 1].
double cosine_sim(const Vector& a, const Vector& b);

/// Complete weight-file image: magic "TEMW", version, dims, vocab,
/// float64 row-major weights, CRC32 trailer. Little-endian throughout.
std::string serialize_weights(const EncoderModel& model);
EncoderModel parse_weights(std::string_view bytes, const std::string& what);

void save_weights(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_weights(const std::filesystem::path& path);

/// CRC32 of the serialized weight payload; equals the weight file's trailer.
/// Indexes record it so a stale index cannot silently serve a different model.
std::uint32_t model_fingerprint(const EncoderModel& model);

}  // namespace tem
