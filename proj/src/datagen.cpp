#include "tem/datagen.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tem/binio.hpp"

namespace tem {

namespace {

struct RoleName {
    Role role;
    const char* name;
    const char* slug;
};

constexpr RoleName kRoleNames[] = {
    {Role::FundamentalAnalyst, "fundamental analyst", "fundamental-analyst"},
    {Role::MacroTrader, "macro trader", "macro-trader"},
    {Role::MachineLearningExpert, "machine learning expert", "machine-learning-expert"},
    {Role::DataScientist, "data scientist", "data-scientist"},
    {Role::RetailTrader, "retail trader", "retail-trader"},
};

// First `pick` entries of a seeded partial shuffle of 0..total-1.
std::vector<int> sample_indices(int total, int pick, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(total));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < pick; ++i) {
        int j = i + static_cast<int>(rng.below(static_cast<std::size_t>(total - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(pick));
    return idx;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Parses one completion into a sample; returns a rejection reason on
// failure, empty string on success.
std::string parse_completion(const std::string& completion, const Corpus& corpus,
                             int target_n, QuerySample& out) {
    nlohmann::json j = nlohmann::json::parse(trim(completion), nullptr, false);
    if (j.is_discarded()) {
        return "completion is not valid json";
    }
    if (!j.is_object()) {
        return "completion is not a json object";
    }
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "question" && key != "relevant_files") {
            return "unknown key \"" + key + "\"";
        }
    }
    if (!j.contains("question") || !j.contains("relevant_files")) {
        return "missing question or relevant_files";
    }
    if (!j["question"].is_string() || j["question"].get<std::string>().empty()) {
        return "question must be a nonempty string";
    }
    if (!j["relevant_files"].is_array()) {
        return "relevant_files must be an array";
    }
    std::vector<std::string> files;
    for (const auto& item : j["relevant_files"]) {
        if (!item.is_string()) {
            return "relevant_files must contain only strings";
        }
        files.push_back(item.get<std::string>());
    }
    for (const std::string& id : files) {
        if (!corpus.contains(id)) {
            return "unknown file_id \"" + id + "\"";
        }
    }
    std::vector<std::string> sorted = files;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        return "duplicate file_id in relevant_files";
    }
    if (static_cast<int>(files.size()) != target_n) {
        return "expected exactly " + std::to_string(target_n) + " relevant files, got " +
               std::to_string(files.size());
    }
    out.question = j["question"].get<std::string>();
    out.relevant_files = std::move(sorted);
    return "";
}

std::vector<QuerySample> pick_few_shot(const Corpus& corpus, int target_n, Rng& rng) {
    int examples = corpus.size() >= static_cast<std::size_t>(2 * target_n) ? 2 : 1;
    std::vector<QuerySample> out;
    for (int e = 0; e < examples; ++e) {
        std::vector<int> idx =
            sample_indices(static_cast<int>(corpus.size()), target_n, rng);
        QuerySample sample;
        std::string names;
        for (int i : idx) {
            const TableDescriptor& d = corpus.descriptors()[static_cast<std::size_t>(i)];
            sample.relevant_files.push_back(d.file_id);
            if (!names.empty()) {
                names += " and ";
            }
            names += d.name;
        }
        std::sort(sample.relevant_files.begin(), sample.relevant_files.end());
        sample.question = "Which data covers " + names + "?";
        out.push_back(std::move(sample));
    }
    return out;
}

}  // namespace

std::string role_name(Role role) {
    for (const RoleName& rn : kRoleNames) {
        if (rn.role == role) {
            return rn.name;
        }
    }
    throw Error("unknown role value");
}

Role role_from_name(const std::string& name) {
    for (const RoleName& rn : kRoleNames) {
        if (name == rn.name || name == rn.slug) {
            return rn.role;
        }
    }
    throw Error("unknown role \"" + name +
                "\" (expected one of: fundamental-analyst, macro-trader, "
                "machine-learning-expert, data-scientist, retail-trader)");
}

std::string build_prompt(const Corpus& corpus, Role role, int target_n,
                         const std::vector<QuerySample>& few_shot,
                         const std::string& guidelines) {
    if (target_n < 1) {
        throw Error("target_n must be >= 1, got " + std::to_string(target_n));
    }
    for (const QuerySample& example : few_shot) {
        for (const std::string& id : example.relevant_files) {
            if (!corpus.contains(id)) {
                throw Error("few-shot example references unknown file_id \"" + id + "\"");
            }
        }
    }
    std::ostringstream out;
    out << "You are a " << role_name(role)
        << " who knows the following catalog of tabular data files.\n\n";
    out << "File catalog:\n";
    for (const TableDescriptor& d : corpus.descriptors()) {
        out << "- " << d.file_id << ": " << d.name << ". " << d.description << " Columns:";
        for (std::size_t i = 0; i < d.columns.size(); ++i) {
            out << (i == 0 ? " " : ", ") << d.columns[i].name;
        }
        out << ".\n";
    }
    out << "\nGuidelines:\n" << (guidelines.empty() ? "(none provided)" : guidelines) << "\n";
    if (!few_shot.empty()) {
        out << "\nExamples:\n";
        for (const QuerySample& example : few_shot) {
            out << "Q: " << example.question << "\nFiles:";
            for (std::size_t i = 0; i < example.relevant_files.size(); ++i) {
                out << (i == 0 ? " " : ", ") << example.relevant_files[i];
            }
            out << "\n";
        }
    }
    out << "\nTask: write one new question you would ask in this role. It must require "
        << "exactly " << target_n << " of the files above to answer.\n";
    out << "Respond with a single JSON object: "
        << R"({"question": "...", "relevant_files": ["file_id", ...]})" << "\n";
    return out.str();
}

std::vector<GenPlanEntry> parse_plan(const std::string& text) {
    std::vector<GenPlanEntry> plan;
    std::istringstream in(text);
    std::string entry;
    while (std::getline(in, entry, ',')) {
        entry = trim(entry);
        if (entry.empty()) {
            continue;
        }
        std::size_t second = entry.rfind(':');
        std::size_t first = second == std::string::npos ? second : entry.rfind(':', second - 1);
        if (first == std::string::npos || second == first) {
            throw Error("bad plan entry \"" + entry + "\" (expected role:target_n:count)");
        }
        GenPlanEntry p;
        p.role = role_from_name(entry.substr(0, first));
        try {
            p.target_n = std::stoi(entry.substr(first + 1, second - first - 1));
            p.count = std::stoi(entry.substr(second + 1));
        } catch (const std::exception&) {
            throw Error("bad plan entry \"" + entry + "\" (expected role:target_n:count)");
        }
        if (p.target_n < 1 || p.count < 1) {
            throw Error("plan entry \"" + entry + "\" needs target_n >= 1 and count >= 1");
        }
        plan.push_back(p);
    }
    if (plan.empty()) {
        throw Error("empty generation plan");
    }
    return plan;
}

GenResult generate_dataset(const Corpus& corpus, LlmClient& client,
                           const std::vector<GenPlanEntry>& plan,
                           const std::string& guidelines, std::uint64_t seed) {
    constexpr int kMaxAttempts = 4;  // first try + 3 retries
    for (const GenPlanEntry& entry : plan) {
        if (entry.count < 1) {
            throw Error("plan counts must be >= 1");
        }
        if (entry.target_n < 1 || static_cast<std::size_t>(entry.target_n) > corpus.size()) {
            throw Error("plan target_n " + std::to_string(entry.target_n) +
                        " impossible for a corpus of " + std::to_string(corpus.size()));
        }
    }
    GenResult result;
    Rng rng(seed);
    for (std::size_t pi = 0; pi < plan.size(); ++pi) {
        const GenPlanEntry& entry = plan[pi];
        std::vector<QuerySample> few_shot = pick_few_shot(corpus, entry.target_n, rng);
        std::string prompt = build_prompt(corpus, entry.role, entry.target_n, few_shot,
                                          guidelines);
        for (int seq = 0; seq < entry.count; ++seq) {
            for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
                std::string completion;
                try {
                    completion = client.complete(prompt);
                } catch (const std::exception& e) {
                    result.rejections.push_back(RejectionRecord{
                        static_cast<int>(pi), seq, attempt,
                        std::string("transport failure: ") + e.what(), ""});
                    if (attempt == kMaxAttempts) {
                        result.aborted = true;
                        result.abort_reason = e.what();
                        return result;
                    }
                    continue;
                }
                QuerySample sample;
                std::string reason = parse_completion(completion, corpus, entry.target_n,
                                                      sample);
                if (reason.empty()) {
                    result.samples.push_back(std::move(sample));
                    break;
                }
                result.rejections.push_back(RejectionRecord{static_cast<int>(pi), seq,
                                                            attempt, reason, completion});
            }
        }
    }
    return result;
}

void write_rejections(const std::vector<RejectionRecord>& rejections,
                      const std::filesystem::path& path) {
    std::ostringstream out;
    for (const RejectionRecord& r : rejections) {
        nlohmann::json j;
        j["plan_index"] = r.plan_index;
        j["sequence"] = r.sequence;
        j["attempt"] = r.attempt;
        j["reason"] = r.reason;
        j["completion"] = r.completion;
        out << j.dump() << "\n";
    }
    binio::write_file(path, out.str());
}

SynthData synth_generate(int num_files, int num_questions, int max_n, double noise,
                         std::uint64_t seed) {
    if (max_n < 1 || num_files < max_n) {
        throw Error("need num_files >= max_n >= 1, got num_files=" +
                    std::to_string(num_files) + " max_n=" + std::to_string(max_n));
    }
    if (num_questions < 1) {
        throw Error("num_questions must be >= 1");
    }
    if (num_files > 500) {
        throw Error("num_files capped at 500, got " + std::to_string(num_files));
    }
    if (!(noise >= 0.0) || noise > 1.0) {
        throw Error("noise must be in [0, 1]");
    }

    static constexpr const char* kSyllables[] = {
        "ba", "ce", "di", "fo", "gu", "ha", "ki", "lo", "mu", "ne",
        "pa", "qi", "ru", "sa", "te", "vo", "wi", "xa", "yu", "zo"};
    constexpr int kSyllableCount = 20;
    constexpr int kWordsPerFile = 8;

    Rng rng(seed);
    // 3-syllable coinages, globally unique, so no two files share a
    // distinctive token.
    std::set<std::string> used;
    auto fresh_word = [&]() {
        while (true) {
            std::string w;
            for (int s = 0; s < 3; ++s) {
                w += kSyllables[rng.below(kSyllableCount)];
            }
            if (used.insert(w).second) {
                return w;
            }
        }
    };

    std::vector<std::array<std::string, kWordsPerFile>> words(
        static_cast<std::size_t>(num_files));
    std::vector<TableDescriptor> descriptors;
    for (int f = 0; f < num_files; ++f) {
        auto& w = words[static_cast<std::size_t>(f)];
        for (int i = 0; i < kWordsPerFile; ++i) {
            w[static_cast<std::size_t>(i)] = fresh_word();
        }
        char id[16];
        std::snprintf(id, sizeof id, "file_%03d", f);
        TableDescriptor d;
        d.file_id = id;
        d.name = w[0] + " " + w[1] + " ledger";
        d.description = "Quarterly records covering " + w[2] + " and " + w[3] +
                        " metrics for desk analysis.";
        for (int c = 4; c < kWordsPerFile; ++c) {
            d.columns.push_back(Column{
                w[static_cast<std::size_t>(c)],
                "Tracks " + w[static_cast<std::size_t>(c)] + " measured per reporting period."});
        }
        descriptors.push_back(std::move(d));
    }

    // None of these appear in any descriptor, so they never contribute
    // overlap with any file.
    static constexpr const char* kFiller[] = {
        "please", "show", "me", "the", "latest", "figures", "i", "want",
        "a", "breakdown", "of", "how", "these", "numbers", "compare"};
    constexpr int kFillerCount = 15;

    SynthData out;
    out.corpus = Corpus::from_descriptors(std::move(descriptors));
    for (int q = 0; q < num_questions; ++q) {
        int n = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(max_n)));
        std::vector<int> chosen = sample_indices(num_files, n, rng);
        std::vector<std::string> parts;
        for (int f : chosen) {
            int picks = 2 + static_cast<int>(rng.below(2));
            for (int wi : sample_indices(kWordsPerFile, picks, rng)) {
                std::string word = words[static_cast<std::size_t>(f)][static_cast<std::size_t>(wi)];
                if (noise > 0.0 && num_files > n && rng.uniform01() < noise) {
                    int other;
                    do {
                        other = static_cast<int>(rng.below(static_cast<std::size_t>(num_files)));
                    } while (std::find(chosen.begin(), chosen.end(), other) != chosen.end());
                    word = words[static_cast<std::size_t>(other)][rng.below(kWordsPerFile)];
                }
                parts.push_back(std::move(word));
            }
        }
        for (int fi : sample_indices(kFillerCount, 4, rng)) {
            parts.push_back(kFiller[fi]);
        }
        rng.shuffle(parts);
        QuerySample sample;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i > 0) {
                sample.question += " ";
            }
            sample.question += parts[i];
        }
        sample.question += "?";
        for (int f : chosen) {
            sample.relevant_files.push_back(
                out.corpus.descriptors()[static_cast<std::size_t>(f)].file_id);
        }
        std::sort(sample.relevant_files.begin(), sample.relevant_files.end());
        out.samples.push_back(std::move(sample));
    }
    return out;
}

}  // namespace tem
