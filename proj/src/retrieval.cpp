#include "tem/retrieval.hpp"

#include <algorithm>

#include "tem/binio.hpp"

namespace tem {

namespace {

constexpr std::uint32_t kIndexVersion = 1;
constexpr const char* kIndexMagic = "TEMI";

}  // namespace

DescriptorIndex build_index(const EncoderModel& model, const Corpus& corpus) {
    DescriptorIndex index;
    index.model_fingerprint = model_fingerprint(model);
    index.vectors.resize(static_cast<Eigen::Index>(corpus.size()), model.d_out());
    Eigen::Index row = 0;
    for (const TableDescriptor& desc : corpus.descriptors()) {
        index.file_ids.push_back(desc.file_id);
        index.vectors.row(row) = encode(model, render_descriptor_text(desc)).transpose();
        ++row;
    }
    return index;
}

Retrieval search_topk(const DescriptorIndex& index, const EncoderModel& model,
                      std::string_view query, int k) {
    if (k < 1) {
        throw Error("k must be >= 1, got " + std::to_string(k));
    }
    std::uint32_t fp = model_fingerprint(model);
    if (fp != index.model_fingerprint) {
        throw Error("index is stale: built with model fingerprint " +
                    std::to_string(index.model_fingerprint) + " but queried with " +
                    std::to_string(fp));
    }
    Vector q = encode(model, query);
    Retrieval out;
    out.query = std::string(query);
    out.hits.reserve(static_cast<std::size_t>(index.size()));
    for (int i = 0; i < index.size(); ++i) {
        double score = cosine_sim(index.vectors.row(i).transpose(), q);
        out.hits.push_back(Hit{index.file_ids[static_cast<std::size_t>(i)], score});
    }
    std::sort(out.hits.begin(), out.hits.end(), [](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.file_id < b.file_id;
    });
    if (out.hits.size() > static_cast<std::size_t>(k)) {
        out.hits.resize(static_cast<std::size_t>(k));
    }
    return out;
}

std::string serialize_index(const DescriptorIndex& index) {
    binio::Writer w;
    w.raw(kIndexMagic);
    w.u32(kIndexVersion);
    w.u32(index.model_fingerprint);
    w.u32(static_cast<std::uint32_t>(index.size()));
    w.u32(static_cast<std::uint32_t>(index.d_out()));
    for (const std::string& id : index.file_ids) {
        w.str(id);
    }
    for (Eigen::Index r = 0; r < index.vectors.rows(); ++r) {
        for (Eigen::Index c = 0; c < index.vectors.cols(); ++c) {
            w.f64(index.vectors(r, c));
        }
    }
    return w.finish();
}

DescriptorIndex parse_index(std::string_view bytes, const std::string& what) {
    binio::Reader r(bytes, what);
    r.expect_magic(kIndexMagic);
    std::uint32_t version = r.u32();
    if (version != kIndexVersion) {
        throw Error(what + ": unsupported index version " + std::to_string(version) +
                    " (expected " + std::to_string(kIndexVersion) + ")");
    }
    DescriptorIndex index;
    index.model_fingerprint = r.u32();
    std::uint32_t count = r.u32();
    std::uint32_t d_out = r.u32();
    if (count == 0 || d_out < 2) {
        throw Error(what + ": degenerate dimensions in index file");
    }
    if (static_cast<std::size_t>(count) * d_out * 8 > bytes.size()) {
        throw Error(what + ": truncated file");
    }
    index.file_ids.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        index.file_ids.push_back(r.str());
    }
    index.vectors.resize(count, d_out);
    for (std::uint32_t i = 0; i < count; ++i) {
        for (std::uint32_t j = 0; j < d_out; ++j) {
            index.vectors(i, j) = r.f64();
        }
    }
    r.verify_crc();
    return index;
}

void save_index(const DescriptorIndex& index, const std::filesystem::path& path) {
    binio::write_file_atomic(path, serialize_index(index));
}

DescriptorIndex load_index(const std::filesystem::path& path) {
    return parse_index(binio::read_file(path), path.string());
}

}  // namespace tem
