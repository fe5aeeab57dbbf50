#include "tem/textenc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace tem {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{kUnknownToken}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
    if (tokens.empty() || tokens[0] != kUnknownToken) {
        throw Error("vocabulary must start with the unknown token " + std::string(kUnknownToken));
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!index_.emplace(tokens[i], static_cast<int>(i)).second) {
            throw Error("duplicate vocabulary token \"" + tokens[i] + "\"");
        }
    }
    tokens_ = std::move(tokens);
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? 0 : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw Error("token id out of range: " + std::to_string(id));
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        bool keep;
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<unsigned char>(c - 'A' + 'a');
            keep = true;
        } else {
            keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
        }
        if (keep) {
            current.push_back(static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Vocabulary build_vocab(const std::vector<std::string>& texts, int min_count) {
    std::map<std::string, std::int64_t> counts;
    for (const std::string& text : texts) {
        for (std::string& tok : tokenize(text)) counts[std::move(tok)] += 1;
    }
    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (auto& [tok, cnt] : counts) {
        if (cnt >= min_count) kept.emplace_back(tok, cnt);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> tokens;
    tokens.reserve(kept.size() + 1);
    tokens.emplace_back(kUnknownToken);
    for (auto& [tok, cnt] : kept) tokens.push_back(std::move(tok));
    return Vocabulary(std::move(tokens));
}

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const std::string& tok : vocab.tokens()) out << tok << "\n";
}

Vocabulary load_vocab(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens));
}

ExpansionResult expand_vocab(const Vocabulary& vocab, const Matrix& emb,
                             const std::vector<std::string>& new_tokens,
                             ExpandMode mode, std::uint64_t seed) {
    const auto n = emb.rows();
    const auto d = emb.cols();
    if (n != vocab.size()) throw Error("embedding rows do not match vocabulary size");
    if (n < 2) throw Error("vocabulary too small for covariance (need n >= 2)");
    std::set<std::string> seen;
    for (const std::string& tok : new_tokens) {
        if (vocab.contains(tok)) throw Error("token already in vocabulary: \"" + tok + "\"");
        if (!seen.insert(tok).second) throw Error("duplicate new token \"" + tok + "\"");
    }

    ExpansionInit init;
    init.mu = emb.colwise().mean().transpose();
    Matrix centered = emb.rowwise() - init.mu.transpose();
    init.sigma = (centered.transpose() * centered) / static_cast<double>(n);

    const auto k = static_cast<Eigen::Index>(new_tokens.size());
    init.sampled_rows.resize(k, d);
    if (mode == ExpandMode::MeanExact) {
        for (Eigen::Index i = 0; i < k; ++i) init.sampled_rows.row(i) = init.mu.transpose();
    } else {
        // sigma is PSD in exact arithmetic; clip the tiny negative eigenvalues
        // floating point can introduce before taking the square root.
        Eigen::SelfAdjointEigenSolver<Matrix> es(init.sigma);
        Vector scale = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        Matrix transform = es.eigenvectors() * scale.asDiagonal();
        Rng rng(seed);
        Vector z(d);
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
            init.sampled_rows.row(i) = (init.mu + transform * z).transpose();
        }
    }

    std::vector<std::string> tokens = vocab.tokens();
    tokens.insert(tokens.end(), new_tokens.begin(), new_tokens.end());

    ExpansionResult result{Vocabulary(std::move(tokens)), Matrix(n + k, d), std::move(init)};
    result.emb.topRows(n) = emb;
    result.emb.bottomRows(k) = result.init.sampled_rows;
    return result;
}

ToySoftmaxLM::ToySoftmaxLM(Vector context, Matrix embeddings)
    : h_(std::move(context)), emb_(std::move(embeddings)) {
    if (emb_.rows() < 1) throw Error("toy LM needs at least one vocabulary row");
    if (emb_.cols() != h_.size()) throw Error("context/embedding dimension mismatch");
    if (!h_.allFinite() || !emb_.allFinite()) throw Error("non-finite toy LM inputs");
    dots_ = (emb_ * h_).unaryExpr([](double x) { return clamp_exponent(x); });
    double max_dot = dots_.maxCoeff();
    double sum = (dots_.array() - max_dot).exp().sum();
    log_z_ = max_dot + std::log(sum);
}

Vector ToySoftmaxLM::distribution() const {
    return (dots_.array() - log_z_).exp();
}

double ToySoftmaxLM::kl_post_expansion(const Vector& new_row) const {
    if (new_row.size() != h_.size()) throw Error("new row dimension mismatch");
    double dot = clamp_exponent(h_.dot(new_row));
    return softplus(dot - log_z_);
}

Vector lm_distribution(const ToySoftmaxLM& lm) { return lm.distribution(); }

double kl_post_expansion(const ToySoftmaxLM& lm_pre, const Vector& new_row) {
    return lm_pre.kl_post_expansion(new_row);
}

double kl_bound(std::int64_t n) {
    if (n < 1) throw Error("kl_bound requires n >= 1");
    return std::log1p(1.0 / static_cast<double>(n));
}

}  // namespace tem
