#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "tem/common.hpp"
#include "tem/corpus.hpp"

using namespace tem;

namespace {

Corpus tiny_corpus() {
    std::vector<TableDescriptor> ds;
    ds.push_back(TableDescriptor{
        "equity_prices",
        "Equity Prices",
        "Daily closing prices for listed equities.",
        {Column{"ticker", "Exchange symbol"}, Column{"close", "Closing price in USD"}}});
    ds.push_back(TableDescriptor{
        "fx_rates",
        "FX Rates",
        "Spot foreign-exchange rates.",
        {Column{"pair", "Currency pair"}, Column{"rate", "Mid-market rate"}}});
    return Corpus::from_descriptors(std::move(ds));
}

}  // namespace

TEST_CASE("corpus JSONL round-trips structurally") {
    Corpus corpus = tiny_corpus();
    std::ostringstream out;
    save_corpus(corpus, out);
    std::istringstream in(out.str());
    Corpus loaded = load_corpus(in, "roundtrip");
    CHECK(loaded == corpus);
}

TEST_CASE("dataset JSONL round-trips structurally") {
    Corpus corpus = tiny_corpus();
    std::vector<QuerySample> samples = {
        QuerySample{"What is the close for AAPL?", {"equity_prices"}},
        QuerySample{"Convert EUR revenue using spot rates.", {"equity_prices", "fx_rates"}},
    };
    std::ostringstream out;
    save_dataset(samples, out);
    std::istringstream in(out.str());
    std::vector<QuerySample> loaded = load_dataset(in, "roundtrip", corpus);
    CHECK(loaded == samples);
}

TEST_CASE("loader skips blank lines and reports the source line of bad records") {
    std::istringstream in(
        "\n"
        R"({"file_id":"a","name":"A","description":"d","columns":[{"name":"c","definition":"x"}]})"
        "\n"
        "   \n"
        "not json\n");
    CHECK_THROWS_WITH_AS(load_corpus(in, "corpus.jsonl"),
                         doctest::Contains("corpus.jsonl line 4"), Error);
}

TEST_CASE("unknown top-level keys are rejected by name") {
    std::istringstream in(
        R"({"file_id":"a","name":"A","description":"d","columns":[{"name":"c","definition":"x"}],"extra":1})"
        "\n");
    CHECK_THROWS_WITH_AS(load_corpus(in, "c"), doctest::Contains("unknown key \"extra\""),
                         Error);
}

TEST_CASE("duplicate file ids are rejected with their line") {
    std::string rec =
        R"({"file_id":"a","name":"A","description":"d","columns":[{"name":"c","definition":"x"}]})";
    std::istringstream in(rec + "\n" + rec + "\n");
    CHECK_THROWS_WITH_AS(load_corpus(in, "c"), doctest::Contains("line 2"), Error);
}

TEST_CASE("empty corpus is an error") {
    std::istringstream in("\n\n");
    CHECK_THROWS_WITH_AS(load_corpus(in, "c"), doctest::Contains("empty corpus"), Error);
}

TEST_CASE("descriptor validation rejects structural defects") {
    CHECK_THROWS_AS(Corpus::from_descriptors({}), Error);
    CHECK_THROWS_WITH_AS(
        Corpus::from_descriptors({TableDescriptor{"", "n", "d", {Column{"c", "x"}}}}),
        doctest::Contains("empty file_id"), Error);
    CHECK_THROWS_WITH_AS(Corpus::from_descriptors({TableDescriptor{"f", "n", "d", {}}}),
                         doctest::Contains("no columns"), Error);
    CHECK_THROWS_WITH_AS(
        Corpus::from_descriptors(
            {TableDescriptor{"f", "n", "d", {Column{"c", "x"}, Column{"c", "y"}}}}),
        doctest::Contains("duplicate column"), Error);
}

TEST_CASE("corpus lookup by id") {
    Corpus corpus = tiny_corpus();
    CHECK(corpus.contains("fx_rates"));
    CHECK(corpus.at("fx_rates").name == "FX Rates");
    CHECK_FALSE(corpus.contains("bonds"));
    CHECK_THROWS_WITH_AS(corpus.at("bonds"), doctest::Contains("unknown file_id \"bonds\""),
                         Error);
}

TEST_CASE("dataset validation rejects unknown ids, duplicates, and empties") {
    Corpus corpus = tiny_corpus();

    SUBCASE("unknown id is named") {
        std::istringstream in(R"({"question":"q?","relevant_files":["bonds"]})" "\n");
        CHECK_THROWS_WITH_AS(load_dataset(in, "d", corpus),
                             doctest::Contains("unknown file_id \"bonds\""), Error);
    }
    SUBCASE("duplicate relevant file") {
        std::istringstream in(
            R"({"question":"q?","relevant_files":["fx_rates","fx_rates"]})" "\n");
        CHECK_THROWS_WITH_AS(load_dataset(in, "d", corpus), doctest::Contains("duplicate"),
                             Error);
    }
    SUBCASE("empty relevant_files") {
        std::istringstream in(R"({"question":"q?","relevant_files":[]})" "\n");
        CHECK_THROWS_AS(load_dataset(in, "d", corpus), Error);
    }
    SUBCASE("empty question") {
        std::istringstream in(R"({"question":"","relevant_files":["fx_rates"]})" "\n");
        CHECK_THROWS_WITH_AS(load_dataset(in, "d", corpus), doctest::Contains("empty question"),
                             Error);
    }
    SUBCASE("unknown key named") {
        std::istringstream in(
            R"({"question":"q?","relevant_files":["fx_rates"],"notes":"x"})" "\n");
        CHECK_THROWS_WITH_AS(load_dataset(in, "d", corpus),
                             doctest::Contains("unknown key \"notes\""), Error);
    }
}

TEST_CASE("loaded relevant_files come back sorted") {
    Corpus corpus = tiny_corpus();
    std::istringstream in(
        R"({"question":"q?","relevant_files":["fx_rates","equity_prices"]})" "\n");
    std::vector<QuerySample> samples = load_dataset(in, "d", corpus);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].relevant_files ==
          std::vector<std::string>{"equity_prices", "fx_rates"});
    CHECK(samples[0].n() == 2);
}

TEST_CASE("rendered descriptor text is name, description, then column lines") {
    TableDescriptor d{"id", "Bond Yields", "Sovereign yield curves.",
                      {Column{"tenor", "Time to maturity"}, Column{"yield", "Yield in percent"}}};
    CHECK(render_descriptor_text(d) ==
          "Bond Yields\nSovereign yield curves.\ntenor: Time to maturity\nyield: Yield in percent");
}

TEST_CASE("rendering is sensitive to every field") {
    TableDescriptor base{"id", "N", "D", {Column{"c", "x"}}};
    TableDescriptor other = base;
    other.description = "E";
    CHECK(render_descriptor_text(base) != render_descriptor_text(other));
    other = base;
    other.columns[0].definition = "y";
    CHECK(render_descriptor_text(base) != render_descriptor_text(other));
}
