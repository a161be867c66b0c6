#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cnnsa/data.hpp"
#include "cnnsa/embeddings.hpp"
#include "cnnsa/model.hpp"
#include "cnnsa/train.hpp"

namespace cnnsa::eval {

/// Per-document class probabilities plus the gold label.
struct ScoredDoc {
    Vec probs;
    std::size_t gold = 0;
};

using ScoredSet = std::vector<ScoredDoc>;

/// Mann-Whitney statistic: over all (positive, negative) pairs, the fraction
/// where the positive scores higher, ties counting 1/2. Equals the area
/// under the ROC curve. Computed via midranks in O(n log n).
double roc_auc_binary(const Vec& scores, const std::vector<int>& labels);

/// Unweighted mean of one-vs-rest binary AUCs over all classes.
double macro_auc_multiclass(const ScoredSet& scored);

struct EvalReport {
    double auc = 0.0;
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
    std::size_t documents = 0;
};

ScoredSet score_corpus(const model::ModelParams& model,
                       const data::LabeledCorpus& corpus,
                       const embeddings::EmbeddingTable& table,
                       std::size_t jobs = 1);

/// Infer-mode scoring of every document; binary schemas use the positive
/// class probability, 5-level schemas the macro one-vs-rest mean.
EvalReport evaluate(const model::ModelParams& model,
                    const data::LabeledCorpus& corpus,
                    const embeddings::EmbeddingTable& table,
                    std::size_t jobs = 1);

/// One labelled vector file (the embedding-dimension / pretraining-iteration
/// axis of the sweeps).
struct VectorVariant {
    std::string label;
    std::string path;
};

struct SweepAxes {
    std::vector<std::size_t> filter_heights;
    std::vector<VectorVariant> vectors;
};

struct SweepCell {
    std::size_t height = 0;
    std::string vectors_label;
    std::optional<double> auc;  // empty when the cell failed
    std::string error;
};

struct SweepReport {
    SweepAxes axes;
    std::vector<SweepCell> cells;  // row-major: heights x vectors
    std::size_t best_cell = 0;

    const SweepCell& best() const { return cells[best_cell]; }
};

/// Trains and evaluates one model per grid cell, every cell with the same
/// seed. A failing cell is recorded and the sweep continues.
SweepReport grid_search(const data::LabeledCorpus& corpus, const SweepAxes& axes,
                        const model::ModelConfig& base_model,
                        const train::TrainConfig& base_train,
                        double eval_fraction, std::size_t jobs = 1);

std::string sweep_report_csv(const SweepReport& report);
std::string sweep_report_table(const SweepReport& report);

}  // namespace cnnsa::eval
