#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cnnsa::data {

/// Sentiment label schema: binary polarity or the five intensity levels.
struct LabelSchema {
    std::vector<std::string> class_names;

    static LabelSchema binary() {
        return {{"negative", "positive"}};
    }
    static LabelSchema five_level() {
        return {{"emotional-negative", "rational-negative", "neutral",
                 "rational-positive", "emotional-positive"}};
    }
    static LabelSchema for_level(std::size_t levels);

    std::size_t num_classes() const { return class_names.size(); }
};

struct Document {
    std::vector<std::string> tokens;
    std::size_t label = 0;
};

struct LabeledCorpus {
    std::vector<Document> documents;
    LabelSchema schema;
    std::string provenance;

    std::size_t size() const { return documents.size(); }
    std::vector<std::size_t> class_counts() const;
};

struct LoadReport {
    std::size_t kept = 0;
    std::size_t dropped_empty = 0;
};

/// Reads `<label-index><TAB><raw text>` records, runs the preprocessing
/// pipeline on each text, drops records that tokenize to empty.
std::pair<LabeledCorpus, LoadReport> load_dataset(const std::string& path,
                                                  const LabelSchema& schema);

/// Seeded stratified split: per class, floor(count * eval_fraction) documents
/// go to eval (at least 1 when the class has >= 2). Deterministic partition.
std::pair<LabeledCorpus, LabeledCorpus> split(const LabeledCorpus& corpus,
                                              double eval_fraction,
                                              std::uint64_t seed);

struct ClassStats {
    std::string name;
    std::size_t documents = 0;
    std::size_t tokens = 0;
    double mean_tokens_per_doc = 0.0;
    std::size_t vocabulary = 0;
};

struct CorpusStats {
    std::vector<ClassStats> per_class;
    ClassStats total;
};

CorpusStats corpus_stats(const LabeledCorpus& corpus);
std::string render_stats(const CorpusStats& stats);

}  // namespace cnnsa::data
