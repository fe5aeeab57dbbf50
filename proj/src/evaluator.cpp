#include "tem/evaluator.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "tem/binio.hpp"

namespace tem {

namespace {

std::size_t overlap(const std::vector<std::string>& relevant,
                    const std::vector<std::string>& retrieved, int k) {
    std::unordered_set<std::string> rel(relevant.begin(), relevant.end());
    std::unordered_set<std::string> counted;
    std::size_t limit = std::min(retrieved.size(), static_cast<std::size_t>(k));
    std::size_t n = 0;
    for (std::size_t i = 0; i < limit; ++i) {
        if (rel.count(retrieved[i]) && counted.insert(retrieved[i]).second) {
            ++n;
        }
    }
    return n;
}

std::size_t unique_relevant_count(const std::vector<std::string>& relevant) {
    std::unordered_set<std::string> rel(relevant.begin(), relevant.end());
    if (rel.empty()) {
        throw Error("metrics need a nonempty relevant set");
    }
    return rel.size();
}

void check_k(int k) {
    if (k < 1) {
        throw Error("k must be >= 1, got " + std::to_string(k));
    }
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

double precision_at_k(const std::vector<std::string>& relevant,
                      const std::vector<std::string>& retrieved, int k) {
    check_k(k);
    unique_relevant_count(relevant);
    return static_cast<double>(overlap(relevant, retrieved, k)) / static_cast<double>(k);
}

double recall_at_k(const std::vector<std::string>& relevant,
                   const std::vector<std::string>& retrieved, int k) {
    check_k(k);
    std::size_t total = unique_relevant_count(relevant);
    return static_cast<double>(overlap(relevant, retrieved, k)) / static_cast<double>(total);
}

int hit_at_k(const std::vector<std::string>& relevant,
             const std::vector<std::string>& retrieved, int k) {
    check_k(k);
    std::size_t total = unique_relevant_count(relevant);
    return overlap(relevant, retrieved, k) == total ? 1 : 0;
}

SampleResult evaluate_sample(const DescriptorIndex& index, const EncoderModel& model,
                             const QuerySample& sample, int k) {
    Retrieval retrieval = search_topk(index, model, sample.question, k);
    SampleResult result;
    result.sample = sample;
    result.retrieved.reserve(retrieval.hits.size());
    for (const Hit& hit : retrieval.hits) {
        result.retrieved.push_back(hit.file_id);
    }
    result.precision_at_k = precision_at_k(sample.relevant_files, result.retrieved, k);
    result.recall_at_k = recall_at_k(sample.relevant_files, result.retrieved, k);
    result.hit = hit_at_k(sample.relevant_files, result.retrieved, k);
    return result;
}

EvalReport evaluate(const DescriptorIndex& index, const EncoderModel& model,
                    const std::vector<QuerySample>& samples, int k) {
    check_k(k);
    if (samples.empty()) {
        throw Error("evaluate needs at least one sample");
    }
    EvalReport report;
    report.k = k;
    report.sample_count = static_cast<int>(samples.size());
    std::map<int, std::pair<double, int>> per_n_acc;  // n -> (hit sum, count)
    for (const QuerySample& sample : samples) {
        SampleResult r = evaluate_sample(index, model, sample, k);
        report.precision += r.precision_at_k;
        report.recall += r.recall_at_k;
        report.hit_rate += r.hit;
        auto& acc = per_n_acc[sample.n()];
        acc.first += r.hit;
        acc.second += 1;
    }
    auto count = static_cast<double>(samples.size());
    report.precision /= count;
    report.recall /= count;
    report.hit_rate /= count;
    for (const auto& [n, acc] : per_n_acc) {
        report.per_n[n] = PerNStats{acc.first / acc.second, acc.second};
    }
    return report;
}

ReportFormat report_format_from_name(const std::string& name) {
    if (name == "text-table") return ReportFormat::TextTable;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw Error("unknown report format \"" + name + "\" (expected text-table, csv, or json)");
}

std::string format_report(const EvalReport& report, ReportFormat format) {
    std::ostringstream out;
    std::string at = "@" + std::to_string(report.k);
    if (format == ReportFormat::TextTable) {
        out << "Metric  Value\n";
        out << "Precision" << at << "  " << fixed4(report.precision) << "\n";
        out << "Recall" << at << "  " << fixed4(report.recall) << "\n";
        out << "Hit Rate" << at << "  " << fixed4(report.hit_rate) << "\n";
        out << "\n";
        out << "N  Hit Rate" << at << "  Questions\n";
        for (const auto& [n, stats] : report.per_n) {
            out << n << "  " << fixed4(stats.hit_rate) << "  " << stats.count << "\n";
        }
        out << "Total  " << fixed4(report.hit_rate) << "  " << report.sample_count << "\n";
        return out.str();
    }
    if (format == ReportFormat::Csv) {
        out << "metric,value\n";
        out << "k," << report.k << "\n";
        out << "samples," << report.sample_count << "\n";
        out << std::setprecision(17);
        out << "precision_at_k," << report.precision << "\n";
        out << "recall_at_k," << report.recall << "\n";
        out << "hit_rate_at_k," << report.hit_rate << "\n";
        for (const auto& [n, stats] : report.per_n) {
            out << "hit_rate_n_" << n << "," << stats.hit_rate << "\n";
            out << "questions_n_" << n << "," << stats.count << "\n";
        }
        return out.str();
    }
    nlohmann::json j;
    j["k"] = report.k;
    j["sample_count"] = report.sample_count;
    j["precision_at_k"] = report.precision;
    j["recall_at_k"] = report.recall;
    j["hit_rate_at_k"] = report.hit_rate;
    nlohmann::json per_n = nlohmann::json::object();
    for (const auto& [n, stats] : report.per_n) {
        per_n[std::to_string(n)] = {{"hit_rate", stats.hit_rate}, {"questions", stats.count}};
    }
    j["per_n"] = per_n;
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error("malformed report json");
    }
    try {
        EvalReport report;
        report.k = j.at("k").get<int>();
        report.sample_count = j.at("sample_count").get<int>();
        report.precision = j.at("precision_at_k").get<double>();
        report.recall = j.at("recall_at_k").get<double>();
        report.hit_rate = j.at("hit_rate_at_k").get<double>();
        for (const auto& [key, stats] : j.at("per_n").items()) {
            PerNStats s;
            s.hit_rate = stats.at("hit_rate").get<double>();
            s.count = stats.at("questions").get<int>();
            report.per_n[std::stoi(key)] = s;
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed report json: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw Error("malformed report json: non-numeric per_n key");
    }
}

void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
    binio::write_file(path, format_report(report, format));
}

}  // namespace tem
