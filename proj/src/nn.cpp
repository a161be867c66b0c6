#include "cnnsa/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cnnsa/errors.hpp"

namespace cnnsa::nn {

Nonlinearity parse_nonlinearity(const std::string& name) {
    if (name == "relu") return Nonlinearity::ReLU;
    if (name == "tanh") return Nonlinearity::Tanh;
    throw ConfigError("unknown nonlinearity '" + name + "' (expected relu or tanh)");
}

const char* nonlinearity_name(Nonlinearity f) {
    return f == Nonlinearity::ReLU ? "relu" : "tanh";
}

double activate(Nonlinearity f, double x) {
    switch (f) {
        case Nonlinearity::ReLU: return x > 0.0 ? x : 0.0;
        case Nonlinearity::Tanh: return std::tanh(x);
    }
    return 0.0;
}

double activate_derivative(Nonlinearity f, double x) {
    switch (f) {
        case Nonlinearity::ReLU: return x > 0.0 ? 1.0 : 0.0;
        case Nonlinearity::Tanh: {
            double t = std::tanh(x);
            return 1.0 - t * t;
        }
    }
    return 0.0;
}

SentenceMatrix embed_sentence(const std::vector<std::string>& tokens,
                              const embeddings::EmbeddingTable& table,
                              std::size_t min_rows) {
    if (tokens.empty())
        throw DataError("degenerate document: empty token sequence");
    std::size_t s = table.dimension();
    std::size_t n = std::max(tokens.size(), min_rows);
    SentenceMatrix d(n, s);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        Vec row = table.lookup(tokens[i]);
        for (std::size_t j = 0; j < s; ++j) d(i, j) = row[j];
    }
    return d;  // rows past the tokens stay zero
}

FeatureMap convolve(const SentenceMatrix& d, const ConvFilter& filter,
                    Nonlinearity f) {
    std::size_t n = d.rows(), h = filter.height();
    if (h == 0 || h > n)
        throw std::invalid_argument("filter height exceeds sentence length");
    if (filter.width() != d.cols())
        throw std::invalid_argument("filter width does not match embedding dimension");
    FeatureMap c(n - h + 1);
    for (std::size_t j = 0; j + h <= n; ++j) {
        double a = filter.bias;
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t k = 0; k < d.cols(); ++k)
                a += filter.weights(r, k) * d(j + r, k);
        c[j] = activate(f, a);
    }
    return c;
}

double max_pool(const FeatureMap& c) {
    if (c.empty()) throw std::invalid_argument("max_pool of empty feature map");
    return *std::max_element(c.begin(), c.end());
}

GlobalFeatureVector build_global_feature(const SentenceMatrix& d,
                                         const std::vector<ConvFilter>& filters,
                                         Nonlinearity f) {
    GlobalFeatureVector g(filters.size());
    for (std::size_t t = 0; t < filters.size(); ++t)
        g[t] = max_pool(convolve(d, filters[t], f));
    return g;
}

DropoutMask sample_dropout_mask(std::size_t size, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout rate must be in [0, 1)");
    DropoutMask mask;
    mask.keep.resize(size);
    for (std::size_t i = 0; i < size; ++i)
        mask.keep[i] = rng.bernoulli(rate) ? 0 : 1;
    mask.scale = 1.0 / (1.0 - rate);
    return mask;
}

Vec apply_mask(const Vec& v, const DropoutMask& mask) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = mask.keep[i] ? v[i] * mask.scale : 0.0;
    return out;
}

Vec apply_dropout(const Vec& v, double rate, Rng& rng, Mode mode) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout rate must be in [0, 1)");
    if (mode == Mode::Infer) return v;
    return apply_mask(v, sample_dropout_mask(v.size(), rate, rng));
}

Vec logits(const GlobalFeatureVector& g, const ClassifierHead& head) {
    if (head.width() != g.size())
        throw std::invalid_argument("classifier head width does not match feature size");
    Vec y(head.classes());
    for (std::size_t j = 0; j < head.classes(); ++j) {
        double acc = head.bias[j];
        for (std::size_t k = 0; k < g.size(); ++k) acc += head.U(j, k) * g[k];
        y[j] = acc;
    }
    return y;
}

ProbabilityVector softmax(const Vec& y) {
    double m = *std::max_element(y.begin(), y.end());
    ProbabilityVector p(y.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        p[i] = std::exp(y[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace cnnsa::nn
