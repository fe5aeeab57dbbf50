#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tem/common.hpp"
#include "tem/corpus.hpp"

namespace tem {

enum class Role {
    FundamentalAnalyst,
    MacroTrader,
    MachineLearningExpert,
    DataScientist,
    RetailTrader,
};

inline constexpr std::array<Role, 5> kAllRoles = {
    Role::FundamentalAnalyst, Role::MacroTrader, Role::MachineLearningExpert,
    Role::DataScientist,      Role::RetailTrader,
};

/// Human-readable name, e.g. "macro trader".
std::string role_name(Role role);
/// Accepts the human-readable name or its hyphenated slug ("macro-trader").
Role role_from_name(const std::string& name);

/// Completion backend. Implementations are injected; library code never
/// constructs one. complete() throws TransportError when the backend is
/// unreachable, which generate_dataset treats differently from a completion
/// that merely fails to parse.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

class TransportError : public Error {
public:
    using Error::Error;
};

/// HTTP backend configured by TEM_LLM_ENDPOINT / TEM_LLM_API_KEY.
/// POSTs {"prompt": ...} and expects {"completion": ...} back.
std::unique_ptr<LlmClient> make_http_client_from_env();

/// Deterministic role-play prompt: role declaration, the file-descriptor
/// dictionary (every file exactly once), guidelines, few-shot examples, then
/// the instruction requesting exactly target_n relevant files and the JSON
/// answer shape.
std::string build_prompt(const Corpus& corpus, Role role, int target_n,
                         const std::vector<QuerySample>& few_shot,
                         const std::string& guidelines);

struct GenPlanEntry {
    Role role = Role::DataScientist;
    int target_n = 1;
    int count = 1;
};

/// "role:target_n:count" entries joined by commas; roles in slug form.
std::vector<GenPlanEntry> parse_plan(const std::string& text);

struct RejectionRecord {
    int plan_index = 0;
    int sequence = 0;
    int attempt = 0;
    std::string reason;
    std::string completion;
};

struct GenResult {
    std::vector<QuerySample> samples;
    std::vector<RejectionRecord> rejections;
    bool aborted = false;
    std::string abort_reason;
};

/// Issues one prompt per requested sample, parsing each completion as a
/// single JSON object {"question", "relevant_files"}. A completion that
/// fails to parse or validate is logged and the prompt retried up to 3 more
/// times, then the sample is skipped. A transport failure that survives the
/// same retry budget aborts the run with the samples collected so far.
GenResult generate_dataset(const Corpus& corpus, LlmClient& client,
                           const std::vector<GenPlanEntry>& plan,
                           const std::string& guidelines, std::uint64_t seed);

void write_rejections(const std::vector<RejectionRecord>& rejections,
                      const std::filesystem::path& path);

struct SynthData {
    Corpus corpus;
    std::vector<QuerySample> samples;
};

/// Seeded offline generator. Every file gets its own set of distinctive
/// made-up words; descriptors share ordinary boilerplate, and question
/// filler words appear in no descriptor. At noise 0 a question's token
/// overlap with its relevant files' descriptors is positive and its overlap
/// with every other descriptor is zero, so bag-of-words retrieval is
/// perfectly separable. noise is the per-word probability of swapping a
/// distinctive question word for one from an irrelevant file.
SynthData synth_generate(int num_files, int num_questions, int max_n, double noise,
                         std::uint64_t seed);

}  // namespace tem
