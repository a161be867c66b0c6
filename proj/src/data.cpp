#include "cnnsa/data.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "cnnsa/errors.hpp"
#include "cnnsa/preprocess.hpp"
#include "cnnsa/rng.hpp"

namespace cnnsa::data {

LabelSchema LabelSchema::for_level(std::size_t levels) {
    if (levels == 2) return binary();
    if (levels == 5) return five_level();
    throw ConfigError("label schema must have 2 or 5 levels");
}

std::vector<std::size_t> LabeledCorpus::class_counts() const {
    std::vector<std::size_t> counts(schema.num_classes(), 0);
    for (const auto& doc : documents) counts[doc.label]++;
    return counts;
}

std::pair<LabeledCorpus, LoadReport> load_dataset(const std::string& path,
                                                  const LabelSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset: " + path);

    LabeledCorpus corpus;
    corpus.schema = schema;
    corpus.provenance = path;
    LoadReport report;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            ++report.dropped_empty;
            continue;
        }
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": missing tab separator");
        std::size_t label = 0;
        try {
            std::size_t used = 0;
            label = std::stoul(line.substr(0, tab), &used);
            if (used != tab) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": malformed label '" + line.substr(0, tab) + "'");
        }
        if (label >= schema.num_classes())
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": label " + std::to_string(label) +
                            " out of range for " +
                            std::to_string(schema.num_classes()) + "-class schema");
        auto tokens = preprocess::pipeline(line.substr(tab + 1));
        if (tokens.empty()) {
            ++report.dropped_empty;
            continue;
        }
        corpus.documents.push_back({std::move(tokens), label});
        ++report.kept;
    }
    return {std::move(corpus), report};
}

std::pair<LabeledCorpus, LabeledCorpus> split(const LabeledCorpus& corpus,
                                              double eval_fraction,
                                              std::uint64_t seed) {
    if (eval_fraction <= 0.0 || eval_fraction >= 1.0)
        throw ConfigError("eval fraction must be strictly between 0 and 1");
    std::size_t L = corpus.schema.num_classes();
    if (corpus.size() < L)
        throw ConfigError("corpus smaller than the number of classes");

    auto counts = corpus.class_counts();
    for (std::size_t c = 0; c < L; ++c)
        if (counts[c] == 0)
            throw ConfigError("class '" + corpus.schema.class_names[c] +
                              "' has no documents");

    std::vector<std::vector<std::size_t>> by_class(L);
    for (std::size_t i = 0; i < corpus.size(); ++i)
        by_class[corpus.documents[i].label].push_back(i);

    LabeledCorpus train, eval;
    train.schema = eval.schema = corpus.schema;
    train.provenance = corpus.provenance + " [train]";
    eval.provenance = corpus.provenance + " [eval]";

    std::vector<bool> in_eval(corpus.size(), false);
    for (std::size_t c = 0; c < L; ++c) {
        Rng rng(mix_seed(seed, hash_bytes("split-class") + c));
        deterministic_shuffle(by_class[c], rng);
        std::size_t take = static_cast<std::size_t>(
            static_cast<double>(counts[c]) * eval_fraction);
        if (take == 0 && counts[c] >= 2) take = 1;
        for (std::size_t i = 0; i < take; ++i) in_eval[by_class[c][i]] = true;
    }
    // Original document order within each side keeps the partition stable.
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (in_eval[i])
            eval.documents.push_back(corpus.documents[i]);
        else
            train.documents.push_back(corpus.documents[i]);
    }
    return {std::move(train), std::move(eval)};
}

namespace {

ClassStats stats_for(const std::string& name,
                     const std::vector<const Document*>& docs) {
    ClassStats s;
    s.name = name;
    s.documents = docs.size();
    std::set<std::string> vocab;
    for (const auto* doc : docs) {
        s.tokens += doc->tokens.size();
        vocab.insert(doc->tokens.begin(), doc->tokens.end());
    }
    s.vocabulary = vocab.size();
    s.mean_tokens_per_doc =
        docs.empty() ? 0.0
                     : static_cast<double>(s.tokens) / static_cast<double>(s.documents);
    return s;
}

}  // namespace

CorpusStats corpus_stats(const LabeledCorpus& corpus) {
    CorpusStats out;
    std::vector<const Document*> all;
    for (std::size_t c = 0; c < corpus.schema.num_classes(); ++c) {
        std::vector<const Document*> docs;
        for (const auto& doc : corpus.documents)
            if (doc.label == c) docs.push_back(&doc);
        out.per_class.push_back(stats_for(corpus.schema.class_names[c], docs));
    }
    for (const auto& doc : corpus.documents) all.push_back(&doc);
    out.total = stats_for("total", all);
    return out;
}

std::string render_stats(const CorpusStats& stats) {
    std::ostringstream os;
    os << std::left << std::setw(22) << "class" << std::right << std::setw(10)
       << "documents" << std::setw(10) << "tokens" << std::setw(12)
       << "tokens/doc" << std::setw(12) << "vocabulary" << '\n';
    auto row = [&os](const ClassStats& s) {
        os << std::left << std::setw(22) << s.name << std::right << std::setw(10)
           << s.documents << std::setw(10) << s.tokens << std::setw(12)
           << std::fixed << std::setprecision(2) << s.mean_tokens_per_doc
           << std::setw(12) << s.vocabulary << '\n';
    };
    for (const auto& s : stats.per_class) row(s);
    row(stats.total);
    return os.str();
}

}  // namespace cnnsa::data
