#include "cnnsa/eval.hpp"

#include <algorithm>
#include <atomic>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "cnnsa/errors.hpp"
#include "cnnsa/rng.hpp"

namespace cnnsa::eval {

double roc_auc_binary(const Vec& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("scores and labels differ in length");
    std::size_t n = scores.size();
    std::size_t positives = 0;
    for (int l : labels) positives += (l != 0);
    std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0)
        throw ConfigError("AUC undefined: only one class present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    // Midranks over tie groups; the positive rank-sum gives the pair
    // statistic with ties at 1/2 exactly.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] != 0) pos_rank_sum += midrank;
        i = j;
    }
    double p = static_cast<double>(positives);
    double u = pos_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

double macro_auc_multiclass(const ScoredSet& scored) {
    if (scored.empty()) throw ConfigError("AUC undefined: empty scored set");
    std::size_t L = scored.front().probs.size();
    std::vector<std::size_t> counts(L, 0);
    for (const auto& doc : scored) {
        if (doc.probs.size() != L)
            throw std::invalid_argument("inconsistent probability vector length");
        if (doc.gold >= L) throw std::invalid_argument("gold class out of range");
        counts[doc.gold]++;
    }
    for (std::size_t c = 0; c < L; ++c)
        if (counts[c] == 0)
            throw ConfigError("AUC undefined: class " + std::to_string(c) +
                              " missing from the scored set");
    double total = 0.0;
    for (std::size_t c = 0; c < L; ++c) {
        Vec scores;
        std::vector<int> labels;
        scores.reserve(scored.size());
        labels.reserve(scored.size());
        for (const auto& doc : scored) {
            scores.push_back(doc.probs[c]);
            labels.push_back(doc.gold == c ? 1 : 0);
        }
        total += roc_auc_binary(scores, labels);
    }
    return total / static_cast<double>(L);
}

ScoredSet score_corpus(const model::ModelParams& model,
                       const data::LabeledCorpus& corpus,
                       const embeddings::EmbeddingTable& table,
                       std::size_t jobs) {
    std::size_t min_rows = model.config.max_height();
    ScoredSet scored(corpus.size());
    auto score_range = [&](std::size_t lo, std::size_t hi) {
        nn::DropoutMask identity = nn::DropoutMask::identity(model.filters.size());
        for (std::size_t i = lo; i < hi; ++i) {
            const auto& doc = corpus.documents[i];
            auto d = nn::embed_sentence(doc.tokens, table, min_rows);
            scored[i] = {model::forward_masked(model, d, identity), doc.label};
        }
    };
    if (jobs <= 1 || corpus.size() < 2 * jobs) {
        score_range(0, corpus.size());
        return scored;
    }
    // Documents are scored into fixed slots, so the merge order (and hence
    // the result) is independent of thread scheduling.
    std::vector<std::thread> workers;
    std::size_t chunk = (corpus.size() + jobs - 1) / jobs;
    for (std::size_t w = 0; w < jobs; ++w) {
        std::size_t lo = w * chunk, hi = std::min(corpus.size(), lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back(score_range, lo, hi);
    }
    for (auto& t : workers) t.join();
    return scored;
}

EvalReport evaluate(const model::ModelParams& model,
                    const data::LabeledCorpus& corpus,
                    const embeddings::EmbeddingTable& table, std::size_t jobs) {
    if (corpus.schema.num_classes() != model.config.num_classes)
        throw ConfigError("corpus schema does not match model class count");
    ScoredSet scored = score_corpus(model, corpus, table, jobs);

    EvalReport report;
    report.documents = scored.size();
    std::size_t L = model.config.num_classes;
    report.confusion.assign(L, std::vector<std::size_t>(L, 0));
    std::size_t correct = 0;
    for (const auto& doc : scored) {
        std::size_t pred = static_cast<std::size_t>(
            std::max_element(doc.probs.begin(), doc.probs.end()) -
            doc.probs.begin());
        report.confusion[doc.gold][pred]++;
        correct += (pred == doc.gold);
    }
    report.accuracy = scored.empty()
                          ? 0.0
                          : static_cast<double>(correct) /
                                static_cast<double>(scored.size());
    if (L == 2) {
        Vec scores;
        std::vector<int> labels;
        for (const auto& doc : scored) {
            scores.push_back(doc.probs[1]);  // positive-class probability
            labels.push_back(doc.gold == 1 ? 1 : 0);
        }
        report.auc = roc_auc_binary(scores, labels);
    } else {
        report.auc = macro_auc_multiclass(scored);
    }
    return report;
}

SweepReport grid_search(const data::LabeledCorpus& corpus, const SweepAxes& axes,
                        const model::ModelConfig& base_model,
                        const train::TrainConfig& base_train,
                        double eval_fraction, std::size_t jobs) {
    if (axes.filter_heights.empty() || axes.vectors.empty())
        throw ConfigError("grid axes must be non-empty");

    SweepReport report;
    report.axes = axes;
    report.cells.resize(axes.filter_heights.size() * axes.vectors.size());

    // The same seed in every cell: identical random conditions across models.
    auto run_cell = [&](std::size_t index) {
        std::size_t hi = index / axes.vectors.size();
        std::size_t vi = index % axes.vectors.size();
        SweepCell cell;
        cell.height = axes.filter_heights[hi];
        cell.vectors_label = axes.vectors[vi].label;
        try {
            auto [table, load_report] =
                embeddings::load_embeddings(axes.vectors[vi].path, std::nullopt,
                                            base_train.seed);
            (void)load_report;
            model::ModelConfig mcfg = base_model;
            mcfg.filter_heights = {cell.height};
            mcfg.embedding_dim = table.dimension();
            auto [train_part, eval_part] = data::split(
                corpus, eval_fraction,
                mix_seed(base_train.seed, hash_bytes("grid-eval-split")));
            auto result = train::run_training(train_part, mcfg, base_train, table);
            cell.auc = evaluate(result.params, eval_part, result.embeddings).auc;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
        report.cells[index] = std::move(cell);
    };

    if (jobs <= 1 || report.cells.size() == 1) {
        for (std::size_t i = 0; i < report.cells.size(); ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next.fetch_add(1); i < report.cells.size();
                 i = next.fetch_add(1))
                run_cell(i);
        };
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < std::min(jobs, report.cells.size()); ++w)
            threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    bool any_ok = false;
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        if (!report.cells[i].auc) continue;
        if (!any_ok || *report.cells[i].auc > *report.cells[report.best_cell].auc)
            report.best_cell = i;
        any_ok = true;
    }
    if (!any_ok) throw NumericError("every grid cell failed");
    return report;
}

std::string sweep_report_csv(const SweepReport& report) {
    std::ostringstream os;
    os << "height,vectors,auc,status\n";
    for (const auto& cell : report.cells) {
        os << cell.height << ',' << cell.vectors_label << ',';
        if (cell.auc)
            os << std::fixed << std::setprecision(6) << *cell.auc << ",ok";
        else
            os << ",failed: " << cell.error;
        os << '\n';
    }
    return os.str();
}

std::string sweep_report_table(const SweepReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(8) << "height";
    for (const auto& v : report.axes.vectors)
        os << std::right << std::setw(14) << v.label;
    os << '\n';
    std::size_t cols = report.axes.vectors.size();
    for (std::size_t hi = 0; hi < report.axes.filter_heights.size(); ++hi) {
        os << std::left << std::setw(8) << report.axes.filter_heights[hi];
        for (std::size_t vi = 0; vi < cols; ++vi) {
            const auto& cell = report.cells[hi * cols + vi];
            if (cell.auc) {
                std::ostringstream val;
                val << std::fixed << std::setprecision(4) << *cell.auc;
                os << std::right << std::setw(14) << val.str();
            } else {
                os << std::right << std::setw(14) << "failed";
            }
        }
        os << '\n';
    }
    const auto& best = report.best();
    os << "best: height=" << best.height << " vectors=" << best.vectors_label
       << " auc=" << std::fixed << std::setprecision(6) << *best.auc << '\n';
    return os.str();
}

}  // namespace cnnsa::eval
