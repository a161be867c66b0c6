#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cnnsa/embeddings.hpp"
#include "cnnsa/matrix.hpp"
#include "cnnsa/rng.hpp"

namespace cnnsa::nn {

/// Document matrix: one embedding row per token, zero-padded so every
/// configured filter fits.
using SentenceMatrix = Matrix;

/// Filter responses across window positions; length n - h + 1.
using FeatureMap = Vec;

/// Concatenated pooled maxima of all filters; fixed length k regardless of
/// sentence length.
using GlobalFeatureVector = Vec;

using ProbabilityVector = Vec;

enum class Nonlinearity { ReLU, Tanh };

Nonlinearity parse_nonlinearity(const std::string& name);
const char* nonlinearity_name(Nonlinearity f);

double activate(Nonlinearity f, double x);
/// Derivative at the pre-activation; relu' at exactly 0 is taken as 0.
double activate_derivative(Nonlinearity f, double x);

/// One convolution channel: an h x s weight window plus scalar bias.
struct ConvFilter {
    Matrix weights;  // h rows, s cols
    double bias = 0.0;

    std::size_t height() const { return weights.rows(); }
    std::size_t width() const { return weights.cols(); }
};

/// Affine classification layer: L x k weights and length-L bias.
struct ClassifierHead {
    Matrix U;
    Vec bias;

    std::size_t classes() const { return U.rows(); }
    std::size_t width() const { return U.cols(); }
};

enum class Mode { Train, Infer };

/// Builds the n x s document matrix by embedding lookup, appending zero rows
/// up to min_rows. Empty token sequences are rejected as degenerate.
SentenceMatrix embed_sentence(const std::vector<std::string>& tokens,
                              const embeddings::EmbeddingTable& table,
                              std::size_t min_rows);

/// Slides the filter over all token windows: response j is the elementwise
/// product of the weights with rows j..j+h-1 summed, plus bias, through f.
FeatureMap convolve(const SentenceMatrix& d, const ConvFilter& filter,
                    Nonlinearity f);

double max_pool(const FeatureMap& c);

/// Pooled maximum of every filter, in the model's fixed filter ordering.
GlobalFeatureVector build_global_feature(const SentenceMatrix& d,
                                         const std::vector<ConvFilter>& filters,
                                         Nonlinearity f);

/// Keep/drop pattern for one forward pass; recorded so backprop can replay
/// the exact mask instead of resampling.
struct DropoutMask {
    std::vector<std::uint8_t> keep;
    double scale = 1.0;

    static DropoutMask identity(std::size_t size) {
        return DropoutMask{std::vector<std::uint8_t>(size, 1), 1.0};
    }
};

DropoutMask sample_dropout_mask(std::size_t size, double rate, Rng& rng);
Vec apply_mask(const Vec& v, const DropoutMask& mask);

/// Inverted dropout: train mode zeroes entries with probability `rate` and
/// scales survivors by 1/(1-rate); infer mode is a passthrough.
Vec apply_dropout(const Vec& v, double rate, Rng& rng, Mode mode);

/// y_j = dot(U row j, g) + bias_j.
Vec logits(const GlobalFeatureVector& g, const ClassifierHead& head);

/// Max-shifted exponential normalization; entries sum to 1.
ProbabilityVector softmax(const Vec& y);

}  // namespace cnnsa::nn
