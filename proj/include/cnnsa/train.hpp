#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "cnnsa/data.hpp"
#include "cnnsa/embeddings.hpp"
#include "cnnsa/model.hpp"

namespace cnnsa::train {

/// Negative log probability of the gold class. Probabilities are floored at
/// 1e-12 before the log.
double nll_loss(const nn::ProbabilityVector& probs, std::size_t gold);

/// One real array per parameter array in ModelParams, shape-matched.
/// embedding_rows is populated only when embedding fine-tuning is on; it
/// holds gradients for the embedding rows of in-batch tokens.
struct Gradients {
    std::vector<Matrix> filter_weights;
    Vec filter_bias;
    Matrix head_U;
    Vec head_bias;
    std::map<std::string, Vec> embedding_rows;

    static Gradients zeros_like(const model::ModelParams& m);
    void accumulate(const Gradients& other);
    bool all_finite() const;
};

/// Exact gradients of nll_loss(forward(...)) w.r.t. every model parameter.
/// Max-pool routes gradient only to the (first) argmax window. The dropout
/// mask must be the one recorded from the matching forward pass. When
/// `tokens` is given, gradients w.r.t. the embedding rows of those tokens
/// are included (padding rows receive none).
Gradients backward(const model::ModelParams& model, const nn::SentenceMatrix& d,
                   std::size_t gold, const nn::DropoutMask& mask,
                   const std::vector<std::string>* tokens = nullptr);

/// Independent oracle: central differences per parameter, same mask on both
/// sides. Tight tolerances need a smooth nonlinearity (tanh).
Gradients finite_difference_gradient(const model::ModelParams& model,
                                     const nn::SentenceMatrix& d,
                                     std::size_t gold,
                                     const nn::DropoutMask& mask,
                                     double eps = 1e-5,
                                     const std::vector<std::string>* tokens = nullptr);

/// Decaying averages of squared gradients and squared updates, shape-matched
/// to the model parameters.
struct AdadeltaState {
    double rho = 0.95;
    double epsilon = 1e-6;
    std::vector<Matrix> filter_weights_g2, filter_weights_dx2;
    Vec filter_bias_g2, filter_bias_dx2;
    Matrix head_U_g2, head_U_dx2;
    Vec head_bias_g2, head_bias_dx2;

    static AdadeltaState zeros_like(const model::ModelParams& m, double rho,
                                    double epsilon);
};

/// Per parameter: E[g^2] <- rho E[g^2] + (1-rho) g^2;
/// dx = -(sqrt(E[dx^2]+eps) / sqrt(E[g^2]+eps)) g;
/// E[dx^2] <- rho E[dx^2] + (1-rho) dx^2; theta <- theta + dx.
void adadelta_step(model::ModelParams& params, const Gradients& grads,
                   AdadeltaState& state);

struct TrainConfig {
    std::size_t max_epochs = 100;
    std::size_t patience = 5;
    std::size_t batch_size = 50;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
    double rho = 0.95;
    double epsilon = 1e-6;
    bool finetune_embeddings = false;

    void validate() const;
};

/// Tracks the best validation loss; improvement means dropping below the
/// best by more than a small absolute slack, so float noise cannot reset
/// the patience counter.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience, double slack = 1e-6)
        : patience_(patience), slack_(slack) {}

    /// Feed one epoch's validation loss; true means stop after this epoch.
    bool observe(double val_loss);

    bool last_was_best() const { return since_best_ == 0; }
    std::size_t best_epoch_index() const { return best_index_; }
    double best_loss() const { return best_; }

private:
    std::size_t patience_;
    double slack_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t best_index_ = 0;
    std::size_t epochs_seen_ = 0;
    std::size_t since_best_ = 0;
};

enum class StopReason { EarlyStop, MaxEpochs };

struct TrainHistory {
    std::vector<double> train_loss;  // infer-mode mean NLL on the train split
    std::vector<double> val_loss;    // infer-mode mean NLL on the val split
    std::size_t best_epoch = 0;      // 0-based index into the loss vectors
    StopReason stop_reason = StopReason::MaxEpochs;

    std::size_t epochs() const { return val_loss.size(); }
};

/// Comma-separated `epoch,train_loss,val_loss` lines (1-based epochs).
void save_history_csv(const TrainHistory& history, const std::string& path);

struct TrainResult {
    model::ModelParams params;  // parameters from the best-validation epoch
    TrainHistory history;
    embeddings::EmbeddingTable embeddings;  // tuned copy when fine-tuning
};

/// Mini-batch Adadelta training with a stratified validation split and early
/// stopping. Pure function of (corpus, configs, embeddings, seed): identical
/// inputs give bit-identical parameters.
TrainResult run_training(const data::LabeledCorpus& corpus,
                         const model::ModelConfig& model_config,
                         const TrainConfig& config,
                         const embeddings::EmbeddingTable& table);

/// Mean per-document NLL of the model on a corpus, dropout off.
double mean_loss(const model::ModelParams& model,
                 const data::LabeledCorpus& corpus,
                 const embeddings::EmbeddingTable& table);

}  // namespace cnnsa::train
