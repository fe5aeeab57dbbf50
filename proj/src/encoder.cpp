#include "tem/encoder.hpp"

#include <cmath>
#include <cstddef>

#include "tem/binio.hpp"

namespace tem {

namespace {

constexpr std::uint32_t kWeightVersion = 1;
constexpr const char* kWeightMagic = "TEMW";

// Fill order is rows-then-columns so the draw sequence is part of the format
// contract (same seed, same weights, everywhere).
void fill_uniform(Matrix& m, Rng& rng, double lo, double hi) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = rng.uniform(lo, hi);
        }
    }
}

}  // namespace

EncoderModel init_encoder(const Vocabulary& vocab, int d_tok, int d_out, std::uint64_t seed) {
    if (d_tok < 2) {
        throw Error("init_encoder: d_tok must be >= 2, got " + std::to_string(d_tok));
    }
    if (d_out < 2) {
        throw Error("init_encoder: d_out must be >= 2, got " + std::to_string(d_out));
    }
    Rng rng(seed);
    EncoderModel model;
    model.vocab = vocab;
    model.token_emb.resize(vocab.size(), d_tok);
    model.projection.resize(d_tok, d_out);
    double half = 0.5 / static_cast<double>(d_tok);
    fill_uniform(model.token_emb, rng, -half, half);
    double proj_half = half / std::sqrt(static_cast<double>(d_tok));
    fill_uniform(model.projection, rng, -proj_half, proj_half);
    return model;
}

std::vector<int> text_to_ids(const Vocabulary& vocab, std::string_view text) {
    std::vector<int> ids;
    for (const std::string& token : tokenize(text)) {
        ids.push_back(vocab.id_of(token));
    }
    return ids;
}

Vector encode_ids(const EncoderModel& model, const std::vector<int>& ids) {
    Vector pooled = Vector::Zero(model.d_tok());
    if (!ids.empty()) {
        for (int id : ids) {
            pooled += model.token_emb.row(id).transpose();
        }
        pooled /= static_cast<double>(ids.size());
    }
    Vector projected = model.projection.transpose() * pooled;
    double norm = projected.norm();
    if (!(norm > 1e-290) || !std::isfinite(norm)) {
        return Vector::Unit(model.d_out(), 0);
    }
    return projected / norm;
}

Vector encode(const EncoderModel& model, std::string_view text) {
    return encode_ids(model, text_to_ids(model.vocab, text));
}

double cosine_sim(const Vector& a, const Vector& b) {
    double d = a.dot(b);
    if (d > 1.0) return 1.0;
    if (d < -1.0) return -1.0;
    return d;
}

std::string serialize_weights(const EncoderModel& model) {
    binio::Writer w;
    w.raw(kWeightMagic);
    w.u32(kWeightVersion);
    w.u32(static_cast<std::uint32_t>(model.vocab.size()));
    w.u32(static_cast<std::uint32_t>(model.d_tok()));
    w.u32(static_cast<std::uint32_t>(model.d_out()));
    for (const std::string& token : model.vocab.tokens()) {
        w.str(token);
    }
    for (Eigen::Index r = 0; r < model.token_emb.rows(); ++r) {
        for (Eigen::Index c = 0; c < model.token_emb.cols(); ++c) {
            w.f64(model.token_emb(r, c));
        }
    }
    for (Eigen::Index r = 0; r < model.projection.rows(); ++r) {
        for (Eigen::Index c = 0; c < model.projection.cols(); ++c) {
            w.f64(model.projection(r, c));
        }
    }
    return w.finish();
}

EncoderModel parse_weights(std::string_view bytes, const std::string& what) {
    binio::Reader r(bytes, what);
    r.expect_magic(kWeightMagic);
    std::uint32_t version = r.u32();
    if (version != kWeightVersion) {
        throw Error(what + ": unsupported weight version " + std::to_string(version) +
                    " (expected " + std::to_string(kWeightVersion) + ")");
    }
    std::uint32_t n = r.u32();
    std::uint32_t d_tok = r.u32();
    std::uint32_t d_out = r.u32();
    if (n == 0 || d_tok < 2 || d_out < 2) {
        throw Error(what + ": degenerate dimensions in weight file");
    }
    // 8 bytes per weight; reject impossible dims before allocating.
    std::size_t need = (static_cast<std::size_t>(n) * d_tok + static_cast<std::size_t>(d_tok) * d_out) * 8;
    if (need > bytes.size()) {
        throw Error(what + ": truncated file");
    }
    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        tokens.push_back(r.str());
    }
    EncoderModel model;
    model.vocab = Vocabulary(std::move(tokens));
    model.token_emb.resize(n, d_tok);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < d_tok; ++j) {
            model.token_emb(i, j) = r.f64();
        }
    }
    model.projection.resize(d_tok, d_out);
    for (std::uint32_t i = 0; i < d_tok; ++i) {
        for (std::uint32_t j = 0; j < d_out; ++j) {
            model.projection(i, j) = r.f64();
        }
    }
    r.verify_crc();
    return model;
}

void save_weights(const EncoderModel& model, const std::filesystem::path& path) {
    binio::write_file_atomic(path, serialize_weights(model));
}

EncoderModel load_weights(const std::filesystem::path& path) {
    return parse_weights(binio::read_file(path), path.string());
}

std::uint32_t model_fingerprint(const EncoderModel& model) {
    std::string bytes = serialize_weights(model);
    // Equals the weight file's CRC trailer.
    return binio::crc32(std::string_view(bytes).substr(0, bytes.size() - 4));
}

}  // namespace tem
