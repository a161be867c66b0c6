#include "cnnsa/model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "cnnsa/errors.hpp"

namespace cnnsa::model {

namespace {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_array(std::ofstream& out, const std::string& name, const Vec& v) {
    out << name << ' ' << v.size();
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
}

Vec read_array(std::istream& in, const std::string& expected_name,
               std::size_t expected_len, const std::string& path,
               std::size_t& line_no) {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(path + ": unexpected end of file, expected array '" +
                        expected_name + "'");
    ++line_no;
    std::istringstream iss(line);
    std::string name;
    std::size_t len = 0;
    if (!(iss >> name >> len) || name != expected_name || len != expected_len)
        throw DataError(path + " line " + std::to_string(line_no) +
                        ": expected array '" + expected_name + "' of length " +
                        std::to_string(expected_len));
    Vec v(len);
    std::string field;
    for (std::size_t i = 0; i < len; ++i) {
        if (!(iss >> field))
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": array '" + name + "' is truncated");
        double x = 0.0;
        auto [ptr, ec] =
            std::from_chars(field.data(), field.data() + field.size(), x);
        if (ec != std::errc() || ptr != field.data() + field.size())
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": malformed float '" + field + "'");
        v[i] = x;
    }
    return v;
}

std::string parse_field(const std::string& token, const std::string& key,
                        const std::string& path) {
    if (token.rfind(key + "=", 0) != 0)
        throw DataError(path + ": malformed checkpoint header, expected " + key + "=...");
    return token.substr(key.size() + 1);
}

}  // namespace

std::size_t ModelConfig::max_height() const {
    return *std::max_element(filter_heights.begin(), filter_heights.end());
}

void ModelConfig::validate() const {
    if (filter_heights.empty())
        throw ConfigError("at least one filter height is required");
    for (std::size_t h : filter_heights)
        if (h < 1) throw ConfigError("filter heights must be >= 1");
    for (std::size_t i = 1; i < filter_heights.size(); ++i)
        if (filter_heights[i] <= filter_heights[i - 1])
            throw ConfigError("filter heights must be strictly ascending");
    if (filters_per_height < 1)
        throw ConfigError("filters per height must be >= 1");
    if (nonlinearity != nn::Nonlinearity::ReLU &&
        nonlinearity != nn::Nonlinearity::Tanh)
        throw ConfigError("unsupported nonlinearity");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("dropout rate must be in [0, 1)");
    if (embedding_dim < 1) throw ConfigError("embedding dimension must be >= 1");
    if (num_classes != 2 && num_classes != 5)
        throw ConfigError("number of classes must be 2 or 5");
}

void ModelParams::check_consistent() const {
    config.validate();
    if (filters.size() != config.total_filters())
        throw ConfigError("filter count does not match configuration");
    for (const auto& f : filters)
        if (f.width() != config.embedding_dim)
            throw ConfigError("filter width does not match embedding dimension");
    if (head.width() != filters.size() || head.classes() != config.num_classes ||
        head.bias.size() != config.num_classes)
        throw ConfigError("classifier head shape does not match configuration");
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(mix_seed(seed, hash_bytes("model-init")));
    ModelParams m;
    m.config = config;
    // Heights ascending, filter index ascending: this ordering defines the
    // global feature layout and the checkpoint layout.
    for (std::size_t h : config.filter_heights) {
        for (std::size_t i = 0; i < config.filters_per_height; ++i) {
            nn::ConvFilter f;
            f.weights = Matrix(h, config.embedding_dim);
            for (double& w : f.weights.data()) w = rng.uniform(-0.05, 0.05);
            f.bias = 0.0;
            m.filters.push_back(std::move(f));
        }
    }
    m.head.U = Matrix(config.num_classes, m.filters.size());
    for (double& w : m.head.U.data()) w = rng.uniform(-0.05, 0.05);
    m.head.bias.assign(config.num_classes, 0.0);
    return m;
}

nn::ProbabilityVector forward_masked(const ModelParams& model,
                                     const nn::SentenceMatrix& d,
                                     const nn::DropoutMask& mask,
                                     ForwardTrace* trace) {
    const auto f = model.config.nonlinearity;
    std::size_t k = model.filters.size();
    nn::GlobalFeatureVector pooled(k);
    if (trace) {
        trace->argmax_window.assign(k, 0);
        trace->argmax_preact.assign(k, 0.0);
    }
    for (std::size_t t = 0; t < k; ++t) {
        const auto& filt = model.filters[t];
        std::size_t n = d.rows(), h = filt.height();
        if (h > n)
            throw std::invalid_argument("filter height exceeds sentence length");
        std::size_t best = 0;
        double best_val = 0.0, best_pre = 0.0;
        for (std::size_t j = 0; j + h <= n; ++j) {
            double a = filt.bias;
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t c = 0; c < d.cols(); ++c)
                    a += filt.weights(r, c) * d(j + r, c);
            double v = nn::activate(f, a);
            if (j == 0 || v > best_val) {
                best = j;
                best_val = v;
                best_pre = a;
            }
        }
        pooled[t] = best_val;
        if (trace) {
            trace->argmax_window[t] = best;
            trace->argmax_preact[t] = best_pre;
        }
    }
    Vec dropped = nn::apply_mask(pooled, mask);
    Vec y = nn::logits(dropped, model.head);
    nn::ProbabilityVector p = nn::softmax(y);
    if (trace) {
        trace->pooled = std::move(pooled);
        trace->dropped = std::move(dropped);
        trace->probs = p;
    }
    return p;
}

nn::ProbabilityVector forward(const ModelParams& model,
                              const nn::SentenceMatrix& d, nn::Mode mode,
                              Rng& rng) {
    if (mode == nn::Mode::Infer)
        return forward_masked(model, d, nn::DropoutMask::identity(model.filters.size()));
    auto mask = nn::sample_dropout_mask(model.filters.size(),
                                        model.config.dropout_rate, rng);
    return forward_masked(model, d, mask);
}

void save_checkpoint(const ModelParams& model, const std::string& path) {
    model.check_consistent();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint: " + path);
    out << "CNNSA v1 L=" << model.config.num_classes
        << " s=" << model.config.embedding_dim << " heights=";
    for (std::size_t i = 0; i < model.config.filter_heights.size(); ++i) {
        if (i) out << ',';
        out << model.config.filter_heights[i];
    }
    out << " per_height=" << model.config.filters_per_height
        << " nonlin=" << nn::nonlinearity_name(model.config.nonlinearity) << '\n';
    for (std::size_t t = 0; t < model.filters.size(); ++t) {
        write_array(out, "filter" + std::to_string(t) + ".W",
                    model.filters[t].weights.data());
        write_array(out, "filter" + std::to_string(t) + ".b",
                    Vec{model.filters[t].bias});
    }
    write_array(out, "head.U", model.head.U.data());
    write_array(out, "head.b", model.head.bias);
    if (!out) throw DataError("I/O failure writing " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError(path + ": empty checkpoint");
    std::size_t line_no = 1;

    std::istringstream iss(header);
    std::string magic, version, tok;
    iss >> magic >> version;
    if (magic != "CNNSA" || version != "v1")
        throw DataError(path + ": not a CNNSA v1 checkpoint");

    ModelConfig cfg;
    iss >> tok;
    cfg.num_classes = std::stoul(parse_field(tok, "L", path));
    iss >> tok;
    cfg.embedding_dim = std::stoul(parse_field(tok, "s", path));
    iss >> tok;
    {
        std::string heights = parse_field(tok, "heights", path);
        cfg.filter_heights.clear();
        std::istringstream hs(heights);
        std::string part;
        while (std::getline(hs, part, ','))
            cfg.filter_heights.push_back(std::stoul(part));
    }
    iss >> tok;
    cfg.filters_per_height = std::stoul(parse_field(tok, "per_height", path));
    iss >> tok;
    cfg.nonlinearity = nn::parse_nonlinearity(parse_field(tok, "nonlin", path));
    // The checkpoint carries inference parameters only; dropout is a
    // train-time setting and plays no role after loading.
    cfg.dropout_rate = 0.0;
    cfg.validate();

    ModelParams m;
    m.config = cfg;
    std::size_t t = 0;
    for (std::size_t h : cfg.filter_heights) {
        for (std::size_t i = 0; i < cfg.filters_per_height; ++i, ++t) {
            nn::ConvFilter f;
            f.weights = Matrix(h, cfg.embedding_dim);
            f.weights.data() = read_array(in, "filter" + std::to_string(t) + ".W",
                                          h * cfg.embedding_dim, path, line_no);
            f.bias = read_array(in, "filter" + std::to_string(t) + ".b", 1, path,
                                line_no)[0];
            m.filters.push_back(std::move(f));
        }
    }
    std::size_t k = m.filters.size();
    m.head.U = Matrix(cfg.num_classes, k);
    m.head.U.data() = read_array(in, "head.U", cfg.num_classes * k, path, line_no);
    m.head.bias = read_array(in, "head.b", cfg.num_classes, path, line_no);
    m.check_consistent();
    return m;
}

}  // namespace cnnsa::model
