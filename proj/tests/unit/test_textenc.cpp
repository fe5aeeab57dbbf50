#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "tem/common.hpp"
#include "tem/textenc.hpp"

using namespace tem;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = scale * rng.normal();
        }
    }
    return m;
}

Vector random_vector(Eigen::Index size, Rng& rng, double scale) {
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        v(i) = scale * rng.normal();
    }
    return v;
}

// Elementwise two-distribution divergence over the original vocabulary:
// sum of p_j * log(p_j / p'_j) where p is the pre-expansion softmax and p'
// is the post-expansion softmax restricted to the first n entries.
double divergence_by_hand(const Vector& h, const Matrix& emb, const Vector& new_row) {
    Eigen::Index n = emb.rows();
    std::vector<double> dots(static_cast<std::size_t>(n) + 1);
    for (Eigen::Index j = 0; j < n; ++j) {
        dots[static_cast<std::size_t>(j)] = h.dot(emb.row(j).transpose());
    }
    dots[static_cast<std::size_t>(n)] = h.dot(new_row);
    double mx = *std::max_element(dots.begin(), dots.end());
    double z_pre = 0.0;
    double z_post = 0.0;
    for (std::size_t j = 0; j < dots.size(); ++j) {
        double e = std::exp(dots[j] - mx);
        if (j + 1 < dots.size()) {
            z_pre += e;
        }
        z_post += e;
    }
    double kl = 0.0;
    for (std::size_t j = 0; j + 1 < dots.size(); ++j) {
        double p = std::exp(dots[j] - mx) / z_pre;
        double p_post = std::exp(dots[j] - mx) / z_post;
        kl += p * std::log(p / p_post);
    }
    return kl;
}

}  // namespace

TEST_CASE("tokenize lowercases, drops punctuation, keeps digits") {
    CHECK(tokenize("S&P500 Index") == std::vector<std::string>{"s", "p500", "index"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("  \t\n ").empty());
    CHECK(tokenize("a-b_c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("Hello, WORLD!") == std::vector<std::string>{"hello", "world"});
}

TEST_CASE("tokenize is idempotent on its joined output") {
    std::vector<std::string> first = tokenize("The S&P 500, closed *up* 1.2% today!!");
    std::string joined;
    for (const std::string& t : first) {
        if (!joined.empty()) joined += " ";
        joined += t;
    }
    CHECK(tokenize(joined) == first);
}

TEST_CASE("vocab keeps frequent tokens ordered by count then alphabetically") {
    Vocabulary v1 = build_vocab({"a a b"}, 2);
    CHECK(v1.tokens() == std::vector<std::string>{kUnknownToken, "a"});

    Vocabulary v2 = build_vocab({"a b", "b"}, 1);
    CHECK(v2.tokens() == std::vector<std::string>{kUnknownToken, "b", "a"});

    Vocabulary v3 = build_vocab({"a b c"}, 10);
    CHECK(v3.tokens() == std::vector<std::string>{kUnknownToken});
}

TEST_CASE("vocabulary reserves id 0 for the unknown token") {
    Vocabulary v = build_vocab({"alpha beta"}, 1);
    CHECK(v.id_of(kUnknownToken) == 0);
    CHECK(v.id_of("never-seen") == 0);
    CHECK(v.id_of("alpha") > 0);
    CHECK(v.token(v.id_of("beta")) == "beta");
    CHECK_THROWS_AS(v.token(v.size()), Error);
    CHECK_THROWS_AS(Vocabulary({"a", "b"}), Error);          // missing unknown at id 0
    CHECK_THROWS_AS(Vocabulary({kUnknownToken, "a", "a"}), Error);  // duplicate
}

TEST_CASE("vocab file round-trips token per line") {
    Vocabulary v = build_vocab({"gamma delta gamma"}, 1);
    std::filesystem::path path =
        std::filesystem::temp_directory_path() / "tem_vocab_test.txt";
    save_vocab(v, path);
    Vocabulary loaded = load_vocab(path);
    CHECK(loaded == v);
    std::filesystem::remove(path);
}

TEST_CASE("mean expansion on a two-row matrix gives the hand-computed mean and spread") {
    Vocabulary v({kUnknownToken, "w"});
    Matrix emb(2, 2);
    emb << 1.0, 0.0, -1.0, 0.0;
    ExpansionResult r = expand_vocab(v, emb, {"new"}, ExpandMode::MeanExact, 0);
    CHECK(r.init.mu(0) == 0.0);
    CHECK(r.init.mu(1) == 0.0);
    CHECK(r.init.sigma(0, 0) == 1.0);
    CHECK(r.init.sigma(0, 1) == 0.0);
    CHECK(r.init.sigma(1, 0) == 0.0);
    CHECK(r.init.sigma(1, 1) == 0.0);
    CHECK(r.emb.row(2).norm() == 0.0);
    CHECK(r.vocab.size() == 3);
    CHECK(r.vocab.id_of("new") == 2);
}

TEST_CASE("expansion leaves original rows untouched and appends the new ones") {
    Rng rng(11);
    Matrix emb = random_matrix(6, 4, rng, 1.0);
    std::vector<std::string> tokens = {kUnknownToken, "a", "b", "c", "d", "e"};
    Vocabulary v(tokens);
    for (ExpandMode mode : {ExpandMode::MeanExact, ExpandMode::GaussianSample}) {
        ExpansionResult r = expand_vocab(v, emb, {"x", "y"}, mode, 5);
        CHECK(r.emb.topRows(6) == emb);
        CHECK(r.emb.rows() == 8);
        CHECK(r.emb.bottomRows(2) == r.init.sampled_rows);
    }
}

TEST_CASE("gaussian sampling is seed-reproducible") {
    Rng rng(3);
    Matrix emb = random_matrix(5, 3, rng, 2.0);
    Vocabulary v({kUnknownToken, "a", "b", "c", "d"});
    ExpansionResult r1 = expand_vocab(v, emb, {"x"}, ExpandMode::GaussianSample, 42);
    ExpansionResult r2 = expand_vocab(v, emb, {"x"}, ExpandMode::GaussianSample, 42);
    ExpansionResult r3 = expand_vocab(v, emb, {"x"}, ExpandMode::GaussianSample, 43);
    CHECK(r1.init.sampled_rows == r2.init.sampled_rows);
    CHECK(r1.init.sampled_rows != r3.init.sampled_rows);
}

TEST_CASE("zero-variance matrix samples its own mean") {
    Vocabulary v({kUnknownToken, "a", "b"});
    Matrix emb(3, 2);
    emb << 2.0, -1.0, 2.0, -1.0, 2.0, -1.0;
    ExpansionResult r = expand_vocab(v, emb, {"x"}, ExpandMode::GaussianSample, 9);
    CHECK(r.init.mu(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.init.mu(1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.init.sigma.norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK((r.init.sampled_rows.row(0).transpose() - r.init.mu).norm() < 1e-9);
}

TEST_CASE("expansion rejects bad inputs") {
    Vocabulary v({kUnknownToken, "a"});
    Matrix emb = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(expand_vocab(v, emb, {"a"}, ExpandMode::MeanExact, 0), Error);
    CHECK_THROWS_AS(expand_vocab(v, emb, {"x", "x"}, ExpandMode::MeanExact, 0), Error);
    Vocabulary tiny({kUnknownToken});
    CHECK_THROWS_AS(expand_vocab(tiny, Matrix::Zero(1, 2), {"x"}, ExpandMode::MeanExact, 0),
                    Error);
}

TEST_CASE("expansion covariance is symmetric and has no negative spectrum") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng.below(30));
        int d = 2 + static_cast<int>(rng.below(12));
        Matrix emb = random_matrix(n, d, rng, 3.0);
        Vocabulary v = [&] {
            std::vector<std::string> tokens = {kUnknownToken};
            for (int i = 1; i < n; ++i) tokens.push_back("t" + std::to_string(i));
            return Vocabulary(tokens);
        }();
        ExpansionResult r = expand_vocab(v, emb, {"x"}, ExpandMode::MeanExact, 0);
        CHECK((r.init.sigma - r.init.sigma.transpose()).norm() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Matrix> es(r.init.sigma);
        CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    }
}

TEST_CASE("softmax model distributes uniformly for symmetric inputs") {
    Matrix emb(4, 3);
    emb << 1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3;
    Vector h = Vector::Ones(3);
    ToySoftmaxLM lm(h, emb);
    Vector p = lm.distribution();
    for (int j = 0; j < 4; ++j) {
        CHECK(p(j) == doctest::Approx(0.25).epsilon(1e-12));
    }

    Rng rng(5);
    ToySoftmaxLM zero_context(Vector::Zero(3), random_matrix(6, 3, rng, 2.0));
    Vector pz = zero_context.distribution();
    for (int j = 0; j < 6; ++j) {
        CHECK(pz(j) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    }
}

TEST_CASE("softmax model reproduces a hand-solved two-word case") {
    // dots ln 3 and 0 give probabilities 3/4 and 1/4.
    Matrix emb(2, 1);
    emb << std::log(3.0), 0.0;
    Vector h = Vector::Ones(1);
    ToySoftmaxLM lm(h, emb);
    Vector p = lm.distribution();
    CHECK(p(0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(p(1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("distributions sum to one on random instances") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 1 + static_cast<int>(rng.below(32));
        int d = 1 + static_cast<int>(rng.below(16));
        ToySoftmaxLM lm(random_vector(d, rng, 4.0), random_matrix(n, d, rng, 4.0));
        CHECK(std::abs(lm.distribution().sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("adding an invisible word barely moves the model") {
    Matrix emb(3, 2);
    emb << 0.5, 0.1, -0.2, 0.3, 0.0, -0.4;
    Vector h(2);
    h << 1.0, -1.0;
    ToySoftmaxLM lm(h, emb);
    Vector far(2);
    far << -700.0, 0.0;  // dot is about -700, e^dot underflows to nothing
    CHECK(lm.kl_post_expansion(far) < 1e-12);
}

TEST_CASE("one-word model doubles its partition when a same-weight word joins") {
    Matrix emb = Matrix::Zero(1, 1);
    Vector h = Vector::Zero(1);
    ToySoftmaxLM lm(h, emb);
    Vector new_row = Vector::Zero(1);
    CHECK(lm.kl_post_expansion(new_row) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("formula divergence equals the elementwise two-distribution computation") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + static_cast<int>(rng.below(63));
        int d = 2 + static_cast<int>(rng.below(31));
        Matrix emb = random_matrix(n, d, rng, 2.0);
        Vector h = random_vector(d, rng, 2.0);
        Vector new_row = random_vector(d, rng, 2.0);
        ToySoftmaxLM lm(h, emb);
        double formula = lm.kl_post_expansion(new_row);
        double by_hand = divergence_by_hand(h, emb, new_row);
        CHECK(std::abs(formula - by_hand) < 1e-9);
        CHECK(formula >= 0.0);
    }
}

TEST_CASE("mean-initialized expansion respects the vocabulary-size bound") {
    Rng rng(37);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + static_cast<int>(rng.below(63));
        int d = 2 + static_cast<int>(rng.below(31));
        Matrix emb = random_matrix(n, d, rng, 3.0);
        Vector h = random_vector(d, rng, 3.0);
        Vector mu = emb.colwise().mean().transpose();
        ToySoftmaxLM lm(h, emb);
        CHECK(lm.kl_post_expansion(mu) <= kl_bound(n) + 1e-9);
    }
}

TEST_CASE("worst-case divergence bound values") {
    CHECK(kl_bound(1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(kl_bound(4) == doctest::Approx(std::log(1.25)).epsilon(1e-12));
    CHECK(std::abs(kl_bound(1000000) - 1e-6) < 1e-9);
    CHECK_THROWS_AS(kl_bound(0), Error);
}
