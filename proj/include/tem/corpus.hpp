#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

namespace tem {

struct Column {
    std::string name;
    std::string definition;
    bool operator==(const Column&) const = default;
};

/// One table/CSV file's metadata: the unit that gets embedded and indexed.
/// Table contents are never loaded.
struct TableDescriptor {
    std::string file_id;
    std::string name;
    std::string description;
    std::vector<Column> columns;
    bool operator==(const TableDescriptor&) const = default;
};

/// A question mapped to the set of files needed to answer it.
/// relevant_files is kept sorted ascending and duplicate-free.
struct QuerySample {
    std::string question;
    std::vector<std::string> relevant_files;

    int n() const { return static_cast<int>(relevant_files.size()); }
    bool operator==(const QuerySample&) const = default;
};

class Corpus {
public:
    /// Validates descriptors (unique non-empty file_ids, non-empty columns,
    /// unique column names) and builds the id index.
    static Corpus from_descriptors(std::vector<TableDescriptor> descriptors);

    const std::vector<TableDescriptor>& descriptors() const { return descriptors_; }
    std::size_t size() const { return descriptors_.size(); }
    bool contains(const std::string& file_id) const { return id_index_.count(file_id) > 0; }
    const TableDescriptor& at(const std::string& file_id) const;

    bool operator==(const Corpus& other) const { return descriptors_ == other.descriptors_; }

private:
    std::vector<TableDescriptor> descriptors_;
    std::unordered_map<std::string, std::size_t> id_index_;
};

Corpus load_corpus(std::istream& in, const std::string& source_name);
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

std::vector<QuerySample> load_dataset(std::istream& in, const std::string& source_name,
                                      const Corpus& corpus);
std::vector<QuerySample> load_dataset(const std::filesystem::path& path, const Corpus& corpus);
void save_dataset(const std::vector<QuerySample>& samples, std::ostream& out);
void save_dataset(const std::vector<QuerySample>& samples, const std::filesystem::path& path);

/// Canonical text for one descriptor: name, description, then one
/// "column: definition" line per column, newline-separated. The embedding of
/// a descriptor is a pure function of this string.
std::string render_descriptor_text(const TableDescriptor& d);

}  // namespace tem
