#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tem/common.hpp"
#include "tem/corpus.hpp"
#include "tem/encoder.hpp"
#include "tem/retrieval.hpp"

namespace tem {

/// Per-question outcome: what came back and how it scored against the
/// labeled relevant files.
struct SampleResult {
    QuerySample sample;
    std::vector<std::string> retrieved;
    double precision_at_k = 0.0;
    double recall_at_k = 0.0;
    int hit = 0;
};

struct PerNStats {
    double hit_rate = 0.0;
    int count = 0;

    bool operator==(const PerNStats&) const = default;
};

struct EvalReport {
    int k = 0;
    int sample_count = 0;
    double precision = 0.0;  // mean precision@k
    double recall = 0.0;     // mean recall@k
    double hit_rate = 0.0;   // mean hit@k
    std::map<int, PerNStats> per_n;

    bool operator==(const EvalReport&) const = default;
};

/// |relevant ∩ top-k| / k. The denominator stays k even when fewer items
/// could be retrieved, so a small corpus depresses precision rather than
/// inflating it.
double precision_at_k(const std::vector<std::string>& relevant,
                      const std::vector<std::string>& retrieved, int k);

/// |relevant ∩ top-k| / |relevant|.
double recall_at_k(const std::vector<std::string>& relevant,
                   const std::vector<std::string>& retrieved, int k);

/// 1 iff every relevant id is in the top-k list; equivalent to recall = 1.
int hit_at_k(const std::vector<std::string>& relevant,
             const std::vector<std::string>& retrieved, int k);

SampleResult evaluate_sample(const DescriptorIndex& index, const EncoderModel& model,
                             const QuerySample& sample, int k);

/// Runs search_topk per sample; aggregates are unweighted means, and per-N
/// rows group samples by their relevant-file count.
EvalReport evaluate(const DescriptorIndex& index, const EncoderModel& model,
                    const std::vector<QuerySample>& samples, int k);

enum class ReportFormat { TextTable, Csv, Json };

ReportFormat report_format_from_name(const std::string& name);

/// Deterministic rendering: aggregate table then per-N table.
std::string format_report(const EvalReport& report, ReportFormat format);

EvalReport report_from_json(const std::string& text);

void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace tem
