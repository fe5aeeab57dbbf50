#include "tem/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tem/common.hpp"

namespace tem {

using nlohmann::json;

namespace {

std::string loc(const std::string& source, std::size_t line_no) {
    return source + " line " + std::to_string(line_no);
}

void check_known_keys(const json& obj, const std::set<std::string>& allowed,
                      const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw Error(where + ": unknown key \"" + item.key() + "\"");
        }
    }
}

json parse_record(const std::string& line, const std::string& where) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
        throw Error(where + ": malformed record");
    }
    return rec;
}

std::string string_field(const json& rec, const char* key, const std::string& where) {
    if (!rec.contains(key) || !rec[key].is_string()) {
        throw Error(where + ": missing or non-string \"" + std::string(key) + "\"");
    }
    return rec[key].get<std::string>();
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

}  // namespace

Corpus Corpus::from_descriptors(std::vector<TableDescriptor> descriptors) {
    if (descriptors.empty()) throw Error("corpus is empty");
    Corpus c;
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
        const TableDescriptor& d = descriptors[i];
        if (d.file_id.empty()) throw Error("descriptor " + std::to_string(i) + ": empty file_id");
        if (d.columns.empty()) throw Error("descriptor \"" + d.file_id + "\": no columns");
        std::set<std::string> col_names;
        for (const Column& col : d.columns) {
            if (!col_names.insert(col.name).second) {
                throw Error("descriptor \"" + d.file_id + "\": duplicate column \"" + col.name + "\"");
            }
        }
        if (!c.id_index_.emplace(d.file_id, i).second) {
            throw Error("duplicate file_id \"" + d.file_id + "\"");
        }
    }
    c.descriptors_ = std::move(descriptors);
    return c;
}

const TableDescriptor& Corpus::at(const std::string& file_id) const {
    auto it = id_index_.find(file_id);
    if (it == id_index_.end()) throw Error("unknown file_id \"" + file_id + "\"");
    return descriptors_[it->second];
}

Corpus load_corpus(std::istream& in, const std::string& source_name) {
    std::vector<TableDescriptor> descriptors;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = loc(source_name, line_no);
        json rec = parse_record(line, where);
        check_known_keys(rec, {"file_id", "name", "description", "columns"}, where);

        TableDescriptor d;
        d.file_id = string_field(rec, "file_id", where);
        if (d.file_id.empty()) throw Error(where + ": empty file_id");
        d.name = string_field(rec, "name", where);
        d.description = string_field(rec, "description", where);
        if (!rec.contains("columns") || !rec["columns"].is_array() || rec["columns"].empty()) {
            throw Error(where + ": \"columns\" must be a non-empty array");
        }
        std::set<std::string> col_names;
        for (const json& cj : rec["columns"]) {
            if (!cj.is_object()) throw Error(where + ": malformed column entry");
            Column col;
            col.name = string_field(cj, "name", where);
            col.definition = string_field(cj, "definition", where);
            if (!col_names.insert(col.name).second) {
                throw Error(where + ": duplicate column \"" + col.name + "\"");
            }
            d.columns.push_back(std::move(col));
        }
        if (!seen_ids.insert(d.file_id).second) {
            throw Error(where + ": duplicate file_id \"" + d.file_id + "\"");
        }
        descriptors.push_back(std::move(d));
    }
    if (descriptors.empty()) throw Error(source_name + ": empty corpus");
    return Corpus::from_descriptors(std::move(descriptors));
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in = open_or_throw(path);
    return load_corpus(in, path.string());
}

void save_corpus(const Corpus& corpus, std::ostream& out) {
    for (const TableDescriptor& d : corpus.descriptors()) {
        json cols = json::array();
        for (const Column& col : d.columns) {
            cols.push_back({{"name", col.name}, {"definition", col.definition}});
        }
        json rec = {{"file_id", d.file_id},
                    {"name", d.name},
                    {"description", d.description},
                    {"columns", cols}};
        out << rec.dump() << "\n";
    }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    save_corpus(corpus, out);
}

std::vector<QuerySample> load_dataset(std::istream& in, const std::string& source_name,
                                      const Corpus& corpus) {
    std::vector<QuerySample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = loc(source_name, line_no);
        json rec = parse_record(line, where);
        check_known_keys(rec, {"question", "relevant_files"}, where);

        QuerySample s;
        s.question = string_field(rec, "question", where);
        if (s.question.empty()) throw Error(where + ": empty question");
        if (!rec.contains("relevant_files") || !rec["relevant_files"].is_array()) {
            throw Error(where + ": \"relevant_files\" must be an array");
        }
        for (const json& fj : rec["relevant_files"]) {
            if (!fj.is_string()) throw Error(where + ": non-string file id");
            std::string id = fj.get<std::string>();
            if (!corpus.contains(id)) {
                throw Error(where + ": unknown file_id \"" + id + "\"");
            }
            s.relevant_files.push_back(std::move(id));
        }
        if (s.relevant_files.empty()) throw Error(where + ": empty relevant_files");
        std::sort(s.relevant_files.begin(), s.relevant_files.end());
        if (std::adjacent_find(s.relevant_files.begin(), s.relevant_files.end()) !=
            s.relevant_files.end()) {
            throw Error(where + ": duplicate entry in relevant_files");
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<QuerySample> load_dataset(const std::filesystem::path& path, const Corpus& corpus) {
    std::ifstream in = open_or_throw(path);
    return load_dataset(in, path.string(), corpus);
}

void save_dataset(const std::vector<QuerySample>& samples, std::ostream& out) {
    for (const QuerySample& s : samples) {
        json rec = {{"question", s.question}, {"relevant_files", s.relevant_files}};
        out << rec.dump() << "\n";
    }
}

void save_dataset(const std::vector<QuerySample>& samples, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    save_dataset(samples, out);
}

std::string render_descriptor_text(const TableDescriptor& d) {
    std::string out = d.name;
    out += "\n";
    out += d.description;
    for (const Column& col : d.columns) {
        out += "\n";
        out += col.name;
        out += ": ";
        out += col.definition;
    }
    return out;
}

}  // namespace tem
