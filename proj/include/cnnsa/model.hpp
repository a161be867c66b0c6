#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cnnsa/nn.hpp"

namespace cnnsa::model {

struct ModelConfig {
    std::vector<std::size_t> filter_heights{3};
    std::size_t filters_per_height = 100;
    nn::Nonlinearity nonlinearity = nn::Nonlinearity::ReLU;
    double dropout_rate = 0.5;
    std::size_t embedding_dim = 100;
    std::size_t num_classes = 2;

    std::size_t total_filters() const {
        return filter_heights.size() * filters_per_height;
    }
    std::size_t max_height() const;
    void validate() const;
};

/// All trainable parameters. Filters are stored in the fixed ordering
/// (height ascending, filter index ascending) that also defines the layout
/// of the global feature vector and the checkpoint file.
struct ModelParams {
    ModelConfig config;
    std::vector<nn::ConvFilter> filters;
    nn::ClassifierHead head;

    std::size_t feature_size() const { return filters.size(); }
    void check_consistent() const;
};

/// Uniform [-0.05, 0.05] weights from the given seed; biases zero.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

/// Everything backprop needs from one forward pass.
struct ForwardTrace {
    std::vector<std::size_t> argmax_window;  // per filter, first argmax
    Vec argmax_preact;                       // pre-activation at that window
    nn::GlobalFeatureVector pooled;          // before dropout
    Vec dropped;                             // after mask
    Vec probs;
};

/// Full pipeline: convolution bank, max-over-time pooling, dropout on the
/// penultimate vector, affine head, softmax.
nn::ProbabilityVector forward(const ModelParams& model,
                              const nn::SentenceMatrix& d, nn::Mode mode,
                              Rng& rng);

nn::ProbabilityVector forward_masked(const ModelParams& model,
                                     const nn::SentenceMatrix& d,
                                     const nn::DropoutMask& mask,
                                     ForwardTrace* trace = nullptr);

/// Versioned text checkpoint; floats use shortest round-trip formatting so
/// save/load is bit-exact and identical runs produce identical bytes.
void save_checkpoint(const ModelParams& model, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace cnnsa::model
