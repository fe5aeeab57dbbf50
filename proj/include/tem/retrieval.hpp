#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tem/common.hpp"
#include "tem/corpus.hpp"
#include "tem/encoder.hpp"

namespace tem {

/// Embedded descriptors, one unit-norm row per corpus file, stamped with the
/// checksum of the encoder weights that produced them.
struct DescriptorIndex {
    std::vector<std::string> file_ids;
    Matrix vectors;  // |file_ids| x d_out, unit-norm rows
    std::uint32_t model_fingerprint = 0;

    int size() const { return static_cast<int>(file_ids.size()); }
    int d_out() const { return static_cast<int>(vectors.cols()); }
};

struct Hit {
    std::string file_id;
    double score = 0.0;

    bool operator==(const Hit& other) const {
        return file_id == other.file_id && score == other.score;
    }
};

struct Retrieval {
    std::string query;
    std::vector<Hit> hits;  // score desc, ties by file_id asc
};

DescriptorIndex build_index(const EncoderModel& model, const Corpus& corpus);

/// Exhaustive scoring of every row; returns min(k, index size) hits ordered
/// by (score desc, file_id asc). Refuses an index whose fingerprint does not
/// match the model: a stale index scores against the wrong vectors.
Retrieval search_topk(const DescriptorIndex& index, const EncoderModel& model,
                      std::string_view query, int k);

std::string serialize_index(const DescriptorIndex& index);
DescriptorIndex parse_index(std::string_view bytes, const std::string& what);

void save_index(const DescriptorIndex& index, const std::filesystem::path& path);
DescriptorIndex load_index(const std::filesystem::path& path);

}  // namespace tem
