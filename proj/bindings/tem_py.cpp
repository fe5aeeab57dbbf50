#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tem/common.hpp"
#include "tem/corpus.hpp"
#include "tem/datagen.hpp"
#include "tem/encoder.hpp"
#include "tem/evaluator.hpp"
#include "tem/retrieval.hpp"
#include "tem/textenc.hpp"
#include "tem/trainer.hpp"

namespace py = pybind11;

namespace {

// Lets Python objects implement the completion backend.
class PyLlmClient : public tem::LlmClient {
public:
    using tem::LlmClient::LlmClient;

    std::string complete(const std::string& prompt) override {
        PYBIND11_OVERRIDE_PURE(std::string, tem::LlmClient, complete, prompt);
    }
};

}  // namespace

PYBIND11_MODULE(_tem, m) {
    m.doc() = "Descriptor-based tabular retrieval: trainable text encoder, index, "
              "evaluation, and dataset generation";

    py::register_exception<tem::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<tem::TransportError>(m, "TransportError", PyExc_RuntimeError);

    py::class_<tem::Column>(m, "Column")
        .def(py::init<>())
        .def(py::init([](std::string name, std::string definition) {
                 return tem::Column{std::move(name), std::move(definition)};
             }),
             py::arg("name"), py::arg("definition"))
        .def_readwrite("name", &tem::Column::name)
        .def_readwrite("definition", &tem::Column::definition)
        .def("__eq__", [](const tem::Column& a, const tem::Column& b) { return a == b; });

    py::class_<tem::TableDescriptor>(m, "TableDescriptor")
        .def(py::init<>())
        .def(py::init([](std::string file_id, std::string name, std::string description,
                         std::vector<tem::Column> columns) {
                 return tem::TableDescriptor{std::move(file_id), std::move(name),
                                             std::move(description), std::move(columns)};
             }),
             py::arg("file_id"), py::arg("name"), py::arg("description"), py::arg("columns"))
        .def_readwrite("file_id", &tem::TableDescriptor::file_id)
        .def_readwrite("name", &tem::TableDescriptor::name)
        .def_readwrite("description", &tem::TableDescriptor::description)
        .def_readwrite("columns", &tem::TableDescriptor::columns)
        .def("__eq__", [](const tem::TableDescriptor& a, const tem::TableDescriptor& b) {
            return a == b;
        });

    py::class_<tem::QuerySample>(m, "QuerySample")
        .def(py::init<>())
        .def(py::init([](std::string question, std::vector<std::string> relevant_files) {
                 return tem::QuerySample{std::move(question), std::move(relevant_files)};
             }),
             py::arg("question"), py::arg("relevant_files"))
        .def_readwrite("question", &tem::QuerySample::question)
        .def_readwrite("relevant_files", &tem::QuerySample::relevant_files)
        .def("n", &tem::QuerySample::n)
        .def("__eq__",
             [](const tem::QuerySample& a, const tem::QuerySample& b) { return a == b; });

    py::class_<tem::Corpus>(m, "Corpus")
        .def_static("from_descriptors", &tem::Corpus::from_descriptors,
                    py::arg("descriptors"))
        .def("descriptors", &tem::Corpus::descriptors,
             py::return_value_policy::reference_internal)
        .def("size", &tem::Corpus::size)
        .def("contains", &tem::Corpus::contains, py::arg("file_id"))
        .def("at", &tem::Corpus::at, py::arg("file_id"),
             py::return_value_policy::reference_internal)
        .def("__len__", &tem::Corpus::size)
        .def("__eq__", [](const tem::Corpus& a, const tem::Corpus& b) { return a == b; });

    m.def("load_corpus",
          [](const std::filesystem::path& path) { return tem::load_corpus(path); },
          py::arg("path"));
    m.def("save_corpus",
          [](const tem::Corpus& corpus, const std::filesystem::path& path) {
              tem::save_corpus(corpus, path);
          },
          py::arg("corpus"), py::arg("path"));
    m.def("load_dataset",
          [](const std::filesystem::path& path, const tem::Corpus& corpus) {
              return tem::load_dataset(path, corpus);
          },
          py::arg("path"), py::arg("corpus"));
    m.def("save_dataset",
          [](const std::vector<tem::QuerySample>& samples, const std::filesystem::path& path) {
              tem::save_dataset(samples, path);
          },
          py::arg("samples"), py::arg("path"));
    m.def("render_descriptor_text", &tem::render_descriptor_text, py::arg("descriptor"));

    py::class_<tem::Vocabulary>(m, "Vocabulary")
        .def(py::init<>())
        .def(py::init<std::vector<std::string>>(), py::arg("tokens"))
        .def("size", &tem::Vocabulary::size)
        .def("contains", &tem::Vocabulary::contains, py::arg("token"))
        .def("id_of", &tem::Vocabulary::id_of, py::arg("token"))
        .def("token", &tem::Vocabulary::token, py::arg("id"))
        .def("tokens", &tem::Vocabulary::tokens)
        .def("__len__", &tem::Vocabulary::size)
        .def("__eq__",
             [](const tem::Vocabulary& a, const tem::Vocabulary& b) { return a == b; });

    m.def("tokenize", [](const std::string& text) { return tem::tokenize(text); },
          py::arg("text"));
    m.def("build_vocab", &tem::build_vocab, py::arg("texts"), py::arg("min_count") = 1);
    m.def("save_vocab", &tem::save_vocab, py::arg("vocab"), py::arg("path"));
    m.def("load_vocab", &tem::load_vocab, py::arg("path"));

    py::enum_<tem::ExpandMode>(m, "ExpandMode")
        .value("MeanExact", tem::ExpandMode::MeanExact)
        .value("GaussianSample", tem::ExpandMode::GaussianSample);

    py::class_<tem::ExpansionInit>(m, "ExpansionInit")
        .def_readonly("mu", &tem::ExpansionInit::mu)
        .def_readonly("sigma", &tem::ExpansionInit::sigma)
        .def_readonly("sampled_rows", &tem::ExpansionInit::sampled_rows);

    py::class_<tem::ExpansionResult>(m, "ExpansionResult")
        .def_readonly("vocab", &tem::ExpansionResult::vocab)
        .def_readonly("emb", &tem::ExpansionResult::emb)
        .def_readonly("init", &tem::ExpansionResult::init);

    m.def("expand_vocab", &tem::expand_vocab, py::arg("vocab"), py::arg("emb"),
          py::arg("new_tokens"), py::arg("mode") = tem::ExpandMode::MeanExact,
          py::arg("seed") = 0);

    py::class_<tem::ToySoftmaxLM>(m, "ToySoftmaxLM")
        .def(py::init<tem::Vector, tem::Matrix>(), py::arg("context"), py::arg("embeddings"))
        .def("context", &tem::ToySoftmaxLM::context)
        .def("embeddings", &tem::ToySoftmaxLM::embeddings)
        .def("vocab_size", &tem::ToySoftmaxLM::vocab_size)
        .def("log_partition", &tem::ToySoftmaxLM::log_partition)
        .def("distribution", &tem::ToySoftmaxLM::distribution)
        .def("kl_post_expansion", &tem::ToySoftmaxLM::kl_post_expansion, py::arg("new_row"));

    m.def("kl_bound", &tem::kl_bound, py::arg("n"));

    py::class_<tem::EncoderModel>(m, "EncoderModel")
        .def(py::init<>())
        .def_readwrite("vocab", &tem::EncoderModel::vocab)
        .def_readwrite("token_emb", &tem::EncoderModel::token_emb)
        .def_readwrite("projection", &tem::EncoderModel::projection)
        .def("d_tok", &tem::EncoderModel::d_tok)
        .def("d_out", &tem::EncoderModel::d_out);

    m.def("init_encoder", &tem::init_encoder, py::arg("vocab"), py::arg("d_tok"),
          py::arg("d_out"), py::arg("seed"));
    m.def("encode",
          [](const tem::EncoderModel& model, const std::string& text) {
              return tem::encode(model, text);
          },
          py::arg("model"), py::arg("text"));
    m.def("cosine_sim", &tem::cosine_sim, py::arg("a"), py::arg("b"));
    m.def("save_weights", &tem::save_weights, py::arg("model"), py::arg("path"));
    m.def("load_weights", &tem::load_weights, py::arg("path"));
    m.def("model_fingerprint", &tem::model_fingerprint, py::arg("model"));

    py::class_<tem::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("batch_size", &tem::TrainConfig::batch_size)
        .def_readwrite("epochs", &tem::TrainConfig::epochs)
        .def_readwrite("peak_lr", &tem::TrainConfig::peak_lr)
        .def_readwrite("weight_decay", &tem::TrainConfig::weight_decay)
        .def_readwrite("warmup_fraction", &tem::TrainConfig::warmup_fraction)
        .def_readwrite("similarity_scale", &tem::TrainConfig::similarity_scale)
        .def_readwrite("adam_beta1", &tem::TrainConfig::adam_beta1)
        .def_readwrite("adam_beta2", &tem::TrainConfig::adam_beta2)
        .def_readwrite("adam_eps", &tem::TrainConfig::adam_eps)
        .def_readwrite("seed", &tem::TrainConfig::seed);

    py::class_<tem::TrainBatch>(m, "TrainBatch")
        .def(py::init<>())
        .def(py::init([](std::vector<std::string> anchors, std::vector<std::string> positives) {
                 return tem::TrainBatch{std::move(anchors), std::move(positives)};
             }),
             py::arg("anchors"), py::arg("positives"))
        .def_readwrite("anchors", &tem::TrainBatch::anchors)
        .def_readwrite("positives", &tem::TrainBatch::positives);

    py::class_<tem::BatchLoss>(m, "BatchLoss")
        .def_readonly("loss", &tem::BatchLoss::loss)
        .def_readonly("per_sample", &tem::BatchLoss::per_sample);

    py::class_<tem::LossGrads>(m, "LossGrads")
        .def_readonly("loss", &tem::LossGrads::loss)
        .def_readonly("per_sample", &tem::LossGrads::per_sample)
        .def_readonly("d_token_emb", &tem::LossGrads::d_token_emb)
        .def_readonly("d_projection", &tem::LossGrads::d_projection);

    m.def("mnr_loss_from_scores", &tem::mnr_loss_from_scores, py::arg("scores"));
    m.def("mnr_loss", &tem::mnr_loss, py::arg("model"), py::arg("batch"), py::arg("scale"));
    m.def("mnr_loss_grad", &tem::mnr_loss_grad, py::arg("model"), py::arg("batch"),
          py::arg("scale"));
    m.def("lr_at_step",
          [](std::int64_t t, std::int64_t total_steps, const tem::TrainConfig& config) {
              return tem::lr_at_step(t, total_steps, config);
          },
          py::arg("t"), py::arg("total_steps"), py::arg("config"));
    m.def("positive_context_text", &tem::positive_context_text, py::arg("corpus"),
          py::arg("sample"));

    py::class_<tem::StepRecord>(m, "StepRecord")
        .def_readonly("step", &tem::StepRecord::step)
        .def_readonly("epoch", &tem::StepRecord::epoch)
        .def_readonly("lr", &tem::StepRecord::lr)
        .def_readonly("loss", &tem::StepRecord::loss);

    py::class_<tem::TrainResult>(m, "TrainResult")
        .def_readonly("model", &tem::TrainResult::model)
        .def_readonly("history", &tem::TrainResult::history);

    m.def("train", &tem::train, py::arg("model"), py::arg("samples"), py::arg("corpus"),
          py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("write_loss_csv", &tem::write_loss_csv, py::arg("history"), py::arg("path"));

    py::class_<tem::Hit>(m, "Hit")
        .def_readonly("file_id", &tem::Hit::file_id)
        .def_readonly("score", &tem::Hit::score);

    py::class_<tem::Retrieval>(m, "Retrieval")
        .def_readonly("query", &tem::Retrieval::query)
        .def_readonly("hits", &tem::Retrieval::hits);

    py::class_<tem::DescriptorIndex>(m, "DescriptorIndex")
        .def_readonly("file_ids", &tem::DescriptorIndex::file_ids)
        .def_readonly("vectors", &tem::DescriptorIndex::vectors)
        .def_readonly("model_fingerprint", &tem::DescriptorIndex::model_fingerprint)
        .def("size", &tem::DescriptorIndex::size)
        .def("d_out", &tem::DescriptorIndex::d_out);

    m.def("build_index", &tem::build_index, py::arg("model"), py::arg("corpus"));
    m.def("search_topk",
          [](const tem::DescriptorIndex& index, const tem::EncoderModel& model,
             const std::string& query, int k) {
              return tem::search_topk(index, model, query, k);
          },
          py::arg("index"), py::arg("model"), py::arg("query"), py::arg("k"));
    m.def("save_index", &tem::save_index, py::arg("index"), py::arg("path"));
    m.def("load_index", &tem::load_index, py::arg("path"));

    py::class_<tem::PerNStats>(m, "PerNStats")
        .def_readonly("hit_rate", &tem::PerNStats::hit_rate)
        .def_readonly("count", &tem::PerNStats::count)
        .def("__eq__",
             [](const tem::PerNStats& a, const tem::PerNStats& b) { return a == b; });

    py::class_<tem::SampleResult>(m, "SampleResult")
        .def_readonly("sample", &tem::SampleResult::sample)
        .def_readonly("retrieved", &tem::SampleResult::retrieved)
        .def_readonly("precision_at_k", &tem::SampleResult::precision_at_k)
        .def_readonly("recall_at_k", &tem::SampleResult::recall_at_k)
        .def_readonly("hit", &tem::SampleResult::hit);

    py::class_<tem::EvalReport>(m, "EvalReport")
        .def_readonly("k", &tem::EvalReport::k)
        .def_readonly("sample_count", &tem::EvalReport::sample_count)
        .def_readonly("precision", &tem::EvalReport::precision)
        .def_readonly("recall", &tem::EvalReport::recall)
        .def_readonly("hit_rate", &tem::EvalReport::hit_rate)
        .def_readonly("per_n", &tem::EvalReport::per_n)
        .def("__eq__",
             [](const tem::EvalReport& a, const tem::EvalReport& b) { return a == b; });

    m.def("precision_at_k", &tem::precision_at_k, py::arg("relevant"), py::arg("retrieved"),
          py::arg("k"));
    m.def("recall_at_k", &tem::recall_at_k, py::arg("relevant"), py::arg("retrieved"),
          py::arg("k"));
    m.def("hit_at_k", &tem::hit_at_k, py::arg("relevant"), py::arg("retrieved"), py::arg("k"));
    m.def("evaluate_sample", &tem::evaluate_sample, py::arg("index"), py::arg("model"),
          py::arg("sample"), py::arg("k"));
    m.def("evaluate", &tem::evaluate, py::arg("index"), py::arg("model"), py::arg("samples"),
          py::arg("k"));

    py::enum_<tem::ReportFormat>(m, "ReportFormat")
        .value("TextTable", tem::ReportFormat::TextTable)
        .value("Csv", tem::ReportFormat::Csv)
        .value("Json", tem::ReportFormat::Json);

    m.def("format_report", &tem::format_report, py::arg("report"), py::arg("format"));
    m.def("report_from_json", &tem::report_from_json, py::arg("text"));
    m.def("emit_report", &tem::emit_report, py::arg("report"), py::arg("format"),
          py::arg("path"));

    py::enum_<tem::Role>(m, "Role")
        .value("FundamentalAnalyst", tem::Role::FundamentalAnalyst)
        .value("MacroTrader", tem::Role::MacroTrader)
        .value("MachineLearningExpert", tem::Role::MachineLearningExpert)
        .value("DataScientist", tem::Role::DataScientist)
        .value("RetailTrader", tem::Role::RetailTrader);

    m.def("role_name", &tem::role_name, py::arg("role"));
    m.def("role_from_name", &tem::role_from_name, py::arg("name"));

    py::class_<tem::LlmClient, PyLlmClient>(m, "LlmClient")
        .def(py::init<>())
        .def("complete", &tem::LlmClient::complete, py::arg("prompt"));

    m.def("build_prompt", &tem::build_prompt, py::arg("corpus"), py::arg("role"),
          py::arg("target_n"), py::arg("few_shot") = std::vector<tem::QuerySample>{},
          py::arg("guidelines") = std::string{});

    py::class_<tem::GenPlanEntry>(m, "GenPlanEntry")
        .def(py::init<>())
        .def(py::init([](tem::Role role, int target_n, int count) {
                 return tem::GenPlanEntry{role, target_n, count};
             }),
             py::arg("role"), py::arg("target_n"), py::arg("count"))
        .def_readwrite("role", &tem::GenPlanEntry::role)
        .def_readwrite("target_n", &tem::GenPlanEntry::target_n)
        .def_readwrite("count", &tem::GenPlanEntry::count);

    m.def("parse_plan", &tem::parse_plan, py::arg("text"));

    py::class_<tem::RejectionRecord>(m, "RejectionRecord")
        .def_readonly("plan_index", &tem::RejectionRecord::plan_index)
        .def_readonly("sequence", &tem::RejectionRecord::sequence)
        .def_readonly("attempt", &tem::RejectionRecord::attempt)
        .def_readonly("reason", &tem::RejectionRecord::reason)
        .def_readonly("completion", &tem::RejectionRecord::completion);

    py::class_<tem::GenResult>(m, "GenResult")
        .def_readonly("samples", &tem::GenResult::samples)
        .def_readonly("rejections", &tem::GenResult::rejections)
        .def_readonly("aborted", &tem::GenResult::aborted)
        .def_readonly("abort_reason", &tem::GenResult::abort_reason);

    m.def("generate_dataset", &tem::generate_dataset, py::arg("corpus"), py::arg("client"),
          py::arg("plan"), py::arg("guidelines") = std::string{}, py::arg("seed") = 0);

    py::class_<tem::SynthData>(m, "SynthData")
        .def_readonly("corpus", &tem::SynthData::corpus)
        .def_readonly("samples", &tem::SynthData::samples);

    m.def("synth_generate", &tem::synth_generate, py::arg("num_files"),
          py::arg("num_questions"), py::arg("max_n"), py::arg("noise") = 0.0,
          py::arg("seed") = 0);
}
