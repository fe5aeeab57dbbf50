#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tem/binio.hpp"
#include "tem/common.hpp"
#include "tem/corpus.hpp"
#include "tem/datagen.hpp"
#include "tem/encoder.hpp"
#include "tem/evaluator.hpp"
#include "tem/manifest.hpp"
#include "tem/retrieval.hpp"
#include "tem/textenc.hpp"
#include "tem/trainer.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

std::uint32_t input_crc(const std::string& path) {
    return tem::binio::crc32(tem::binio::read_file(path));
}

struct TrainArgs {
    std::string corpus;
    std::string dataset;
    std::string out;
    std::string loss_csv;
    std::string manifest;
    int d_tok = 64;
    int d_out = 64;
    int min_count = 1;
    tem::TrainConfig config;
};

void run_train(const TrainArgs& args) {
    auto start = Clock::now();
    tem::Corpus corpus = tem::load_corpus(args.corpus);
    std::vector<tem::QuerySample> samples = tem::load_dataset(args.dataset, corpus);

    std::vector<std::string> texts;
    for (const tem::TableDescriptor& d : corpus.descriptors()) {
        texts.push_back(tem::render_descriptor_text(d));
    }
    for (const tem::QuerySample& s : samples) {
        texts.push_back(s.question);
    }
    tem::Vocabulary vocab = tem::build_vocab(texts, args.min_count);
    tem::EncoderModel model = tem::init_encoder(vocab, args.d_tok, args.d_out,
                                                args.config.seed);
    tem::TrainResult result = tem::train(model, samples, corpus, args.config);
    tem::save_weights(result.model, args.out);
    std::string loss_csv = args.loss_csv.empty() ? args.out + ".loss.csv" : args.loss_csv;
    tem::write_loss_csv(result.history, loss_csv);

    tem::RunManifest manifest;
    manifest.command = "train";
    manifest.seed = args.config.seed;
    manifest.config = {
        {"batch-size", std::to_string(args.config.batch_size)},
        {"epochs", std::to_string(args.config.epochs)},
        {"peak-lr", fmt_double(args.config.peak_lr)},
        {"weight-decay", fmt_double(args.config.weight_decay)},
        {"warmup-fraction", fmt_double(args.config.warmup_fraction)},
        {"scale", fmt_double(args.config.similarity_scale)},
        {"adam-beta1", fmt_double(args.config.adam_beta1)},
        {"adam-beta2", fmt_double(args.config.adam_beta2)},
        {"adam-eps", fmt_double(args.config.adam_eps)},
        {"d-tok", std::to_string(args.d_tok)},
        {"d-out", std::to_string(args.d_out)},
        {"min-count", std::to_string(args.min_count)},
    };
    manifest.input_checksums = {{args.corpus, input_crc(args.corpus)},
                                {args.dataset, input_crc(args.dataset)}};
    manifest.artifacts = {{"weights", args.out}, {"loss_csv", loss_csv}};
    manifest.duration_seconds = seconds_since(start);
    tem::write_manifest(manifest,
                        args.manifest.empty() ? args.out + ".manifest.json" : args.manifest);
}

struct IndexArgs {
    std::string corpus;
    std::string weights;
    std::string out;
    std::string manifest;
};

void run_index(const IndexArgs& args) {
    auto start = Clock::now();
    tem::Corpus corpus = tem::load_corpus(args.corpus);
    tem::EncoderModel model = tem::load_weights(args.weights);
    if (std::filesystem::exists(args.out)) {
        try {
            tem::DescriptorIndex existing = tem::load_index(args.out);
            if (existing.model_fingerprint != tem::model_fingerprint(model)) {
                std::cerr << "warning: existing index " << args.out
                          << " was built by a different model (fingerprint "
                          << existing.model_fingerprint << " vs "
                          << tem::model_fingerprint(model) << "); rebuilding\n";
            }
        } catch (const tem::Error&) {
            std::cerr << "warning: existing index " << args.out
                      << " is unreadable; rebuilding\n";
        }
    }
    tem::DescriptorIndex index = tem::build_index(model, corpus);
    tem::save_index(index, args.out);

    tem::RunManifest manifest;
    manifest.command = "index";
    manifest.input_checksums = {{args.corpus, input_crc(args.corpus)},
                                {args.weights, input_crc(args.weights)}};
    manifest.artifacts = {{"index", args.out}};
    manifest.duration_seconds = seconds_since(start);
    tem::write_manifest(manifest,
                        args.manifest.empty() ? args.out + ".manifest.json" : args.manifest);
}

struct RetrieveArgs {
    std::string index;
    std::string weights;
    std::string query;
    std::string manifest;
    int k = 10;
};

void run_retrieve(const RetrieveArgs& args) {
    auto start = Clock::now();
    tem::EncoderModel model = tem::load_weights(args.weights);
    tem::DescriptorIndex index = tem::load_index(args.index);
    tem::Retrieval retrieval = tem::search_topk(index, model, args.query, args.k);
    std::ostringstream out;
    out << std::setprecision(17);
    for (const tem::Hit& hit : retrieval.hits) {
        out << hit.file_id << '\t' << hit.score << '\n';
    }
    std::cout << out.str();

    tem::RunManifest manifest;
    manifest.command = "retrieve";
    manifest.config = {{"query", args.query}, {"k", std::to_string(args.k)}};
    manifest.input_checksums = {{args.index, input_crc(args.index)},
                                {args.weights, input_crc(args.weights)}};
    manifest.duration_seconds = seconds_since(start);
    tem::write_manifest(manifest, args.manifest.empty() ? "retrieve.manifest.json"
                                                        : args.manifest);
}

struct EvalArgs {
    std::string corpus;
    std::string dataset;
    std::string index;
    std::string weights;
    std::string format = "text-table";
    std::string out;
    std::string manifest;
    int k = 10;
};

void run_eval(const EvalArgs& args) {
    auto start = Clock::now();
    tem::Corpus corpus = tem::load_corpus(args.corpus);
    std::vector<tem::QuerySample> samples = tem::load_dataset(args.dataset, corpus);
    tem::EncoderModel model = tem::load_weights(args.weights);
    tem::DescriptorIndex index = tem::load_index(args.index);
    tem::EvalReport report = tem::evaluate(index, model, samples, args.k);
    tem::ReportFormat format = tem::report_format_from_name(args.format);
    if (args.out.empty()) {
        std::cout << tem::format_report(report, format);
    } else {
        tem::emit_report(report, format, args.out);
    }

    tem::RunManifest manifest;
    manifest.command = "eval";
    manifest.config = {{"k", std::to_string(args.k)}, {"format", args.format}};
    manifest.input_checksums = {{args.corpus, input_crc(args.corpus)},
                                {args.dataset, input_crc(args.dataset)},
                                {args.index, input_crc(args.index)},
                                {args.weights, input_crc(args.weights)}};
    if (!args.out.empty()) {
        manifest.artifacts = {{"report", args.out}};
    }
    manifest.duration_seconds = seconds_since(start);
    tem::write_manifest(manifest,
                        args.manifest.empty() ? "eval.manifest.json" : args.manifest);
}

struct GenDataArgs {
    std::string mode = "synth";
    std::string corpus;
    std::string plan;
    std::string guidelines;
    std::string out_corpus;
    std::string out_dataset;
    std::string rejections;
    std::string manifest;
    int files = 20;
    int questions = 100;
    int max_n = 4;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

void run_gendata(const GenDataArgs& args) {
    auto start = Clock::now();
    tem::RunManifest manifest;
    manifest.command = "gen-data";
    manifest.seed = args.seed;
    manifest.config = {{"mode", args.mode}};

    if (args.mode == "synth") {
        if (args.out_corpus.empty() || args.out_dataset.empty()) {
            throw tem::Error("synth mode needs --out-corpus and --out-dataset");
        }
        tem::SynthData data = tem::synth_generate(args.files, args.questions, args.max_n,
                                                  args.noise, args.seed);
        tem::save_corpus(data.corpus, args.out_corpus);
        tem::save_dataset(data.samples, args.out_dataset);
        manifest.config["files"] = std::to_string(args.files);
        manifest.config["questions"] = std::to_string(args.questions);
        manifest.config["max-n"] = std::to_string(args.max_n);
        manifest.config["noise"] = fmt_double(args.noise);
        manifest.artifacts = {{"corpus", args.out_corpus}, {"dataset", args.out_dataset}};
        manifest.duration_seconds = seconds_since(start);
        tem::write_manifest(manifest, args.manifest.empty()
                                          ? args.out_dataset + ".manifest.json"
                                          : args.manifest);
        return;
    }
    if (args.mode != "llm") {
        throw tem::Error("unknown gen-data mode \"" + args.mode +
                         "\" (expected synth or llm)");
    }
    if (args.corpus.empty() || args.plan.empty() || args.out_dataset.empty()) {
        throw tem::Error("llm mode needs --corpus, --plan, and --out-dataset");
    }
    tem::Corpus corpus = tem::load_corpus(args.corpus);
    std::vector<tem::GenPlanEntry> plan = tem::parse_plan(args.plan);
    std::string guidelines;
    if (!args.guidelines.empty()) {
        guidelines = tem::binio::read_file(args.guidelines);
    }
    std::unique_ptr<tem::LlmClient> client = tem::make_http_client_from_env();
    tem::GenResult result = tem::generate_dataset(corpus, *client, plan, guidelines,
                                                  args.seed);
    // Partial results are still written when the backend dies mid-run.
    tem::save_dataset(result.samples, args.out_dataset);
    std::string rejections = args.rejections.empty() ? args.out_dataset + ".rejections.jsonl"
                                                     : args.rejections;
    tem::write_rejections(result.rejections, rejections);

    manifest.config["plan"] = args.plan;
    manifest.input_checksums = {{args.corpus, input_crc(args.corpus)}};
    if (!args.guidelines.empty()) {
        manifest.input_checksums[args.guidelines] = input_crc(args.guidelines);
    }
    manifest.artifacts = {{"dataset", args.out_dataset}, {"rejections", rejections}};
    manifest.duration_seconds = seconds_since(start);
    tem::write_manifest(manifest, args.manifest.empty() ? args.out_dataset + ".manifest.json"
                                                        : args.manifest);
    if (result.aborted) {
        throw tem::Error("generation aborted after transport failures: " +
                         result.abort_reason + " (partial results saved to " +
                         args.out_dataset + ")");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tabular embedding model toolkit: train, index, retrieve, evaluate, "
                 "and generate question-to-file datasets"};
    app.require_subcommand(1);
    // One config option on the root: keys live under a [subcommand] section.
    // Subcommands use fallthrough so "tem train --config f.ini" still parses.
    app.set_config("--config", "", "ini file with flag defaults under a [subcommand] section");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "fine-tune the embedding model");
    train->fallthrough();
    train->add_option("--corpus", train_args.corpus, "descriptor corpus JSONL")->required();
    train->add_option("--dataset", train_args.dataset, "question dataset JSONL")->required();
    train->add_option("--out", train_args.out, "output weights path")->required();
    train->add_option("--loss-csv", train_args.loss_csv, "loss history CSV path");
    train->add_option("--manifest", train_args.manifest, "manifest path");
    train->add_option("--seed", train_args.config.seed, "random seed");
    train->add_option("--batch-size", train_args.config.batch_size, "batch size");
    train->add_option("--epochs", train_args.config.epochs, "training epochs");
    train->add_option("--peak-lr", train_args.config.peak_lr, "peak learning rate");
    train->add_option("--weight-decay", train_args.config.weight_decay, "decoupled decay");
    train->add_option("--warmup-fraction", train_args.config.warmup_fraction,
                      "fraction of steps spent warming up");
    train->add_option("--scale", train_args.config.similarity_scale, "similarity scale");
    train->add_option("--d-tok", train_args.d_tok, "token embedding width");
    train->add_option("--d-out", train_args.d_out, "output embedding width");
    train->add_option("--min-count", train_args.min_count, "vocabulary frequency cutoff");
    train->callback([&] { run_train(train_args); });

    IndexArgs index_args;
    CLI::App* index = app.add_subcommand("index", "embed every descriptor into an index");
    index->fallthrough();
    index->add_option("--corpus", index_args.corpus, "descriptor corpus JSONL")->required();
    index->add_option("--weights", index_args.weights, "model weights")->required();
    index->add_option("--out", index_args.out, "output index path")->required();
    index->add_option("--manifest", index_args.manifest, "manifest path");
    index->callback([&] { run_index(index_args); });

    RetrieveArgs retrieve_args;
    CLI::App* retrieve = app.add_subcommand("retrieve", "rank files for one query");
    retrieve->fallthrough();
    retrieve->add_option("--index", retrieve_args.index, "descriptor index")->required();
    retrieve->add_option("--weights", retrieve_args.weights, "model weights")->required();
    retrieve->add_option("--query", retrieve_args.query, "question text")->required();
    retrieve->add_option("--k", retrieve_args.k, "results to return");
    retrieve->add_option("--manifest", retrieve_args.manifest, "manifest path");
    retrieve->callback([&] { run_retrieve(retrieve_args); });

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "score retrieval over a labeled dataset");
    eval->fallthrough();
    eval->add_option("--corpus", eval_args.corpus, "descriptor corpus JSONL")->required();
    eval->add_option("--dataset", eval_args.dataset, "question dataset JSONL")->required();
    eval->add_option("--index", eval_args.index, "descriptor index")->required();
    eval->add_option("--weights", eval_args.weights, "model weights")->required();
    eval->add_option("--k", eval_args.k, "retrieval depth");
    eval->add_option("--format", eval_args.format, "text-table, csv, or json");
    eval->add_option("--out", eval_args.out, "report path (stdout when omitted)");
    eval->add_option("--manifest", eval_args.manifest, "manifest path");
    eval->callback([&] { run_eval(eval_args); });

    GenDataArgs gendata_args;
    CLI::App* gendata = app.add_subcommand("gen-data", "generate a corpus/dataset");
    gendata->fallthrough();
    gendata->add_option("--mode", gendata_args.mode, "synth or llm");
    gendata->add_option("--corpus", gendata_args.corpus, "existing corpus (llm mode)");
    gendata->add_option("--plan", gendata_args.plan,
                        "llm mode plan, e.g. macro-trader:2:50,data-scientist:1:25");
    gendata->add_option("--guidelines", gendata_args.guidelines, "guidelines text file");
    gendata->add_option("--files", gendata_args.files, "synth: number of files");
    gendata->add_option("--questions", gendata_args.questions, "synth: number of questions");
    gendata->add_option("--max-n", gendata_args.max_n, "synth: max relevant files");
    gendata->add_option("--noise", gendata_args.noise, "synth: distinctive-word swap rate");
    gendata->add_option("--seed", gendata_args.seed, "random seed");
    gendata->add_option("--out-corpus", gendata_args.out_corpus, "synth: corpus output");
    gendata->add_option("--out-dataset", gendata_args.out_dataset, "dataset output");
    gendata->add_option("--rejections", gendata_args.rejections, "rejection log path");
    gendata->add_option("--manifest", gendata_args.manifest, "manifest path");
    gendata->callback([&] { run_gendata(gendata_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const tem::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
