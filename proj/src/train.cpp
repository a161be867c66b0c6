#include "cnnsa/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "cnnsa/errors.hpp"
#include "cnnsa/rng.hpp"

namespace cnnsa::train {

double nll_loss(const nn::ProbabilityVector& probs, std::size_t gold) {
    if (gold >= probs.size())
        throw std::invalid_argument("gold class index out of range");
    return -std::log(std::max(probs[gold], 1e-12));
}

Gradients Gradients::zeros_like(const model::ModelParams& m) {
    Gradients g;
    g.filter_weights.reserve(m.filters.size());
    for (const auto& f : m.filters)
        g.filter_weights.emplace_back(f.weights.rows(), f.weights.cols());
    g.filter_bias.assign(m.filters.size(), 0.0);
    g.head_U = Matrix(m.head.U.rows(), m.head.U.cols());
    g.head_bias.assign(m.head.bias.size(), 0.0);
    return g;
}

void Gradients::accumulate(const Gradients& other) {
    for (std::size_t t = 0; t < filter_weights.size(); ++t) {
        auto& dst = filter_weights[t].data();
        const auto& src = other.filter_weights[t].data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    for (std::size_t t = 0; t < filter_bias.size(); ++t)
        filter_bias[t] += other.filter_bias[t];
    for (std::size_t i = 0; i < head_U.size(); ++i)
        head_U.data()[i] += other.head_U.data()[i];
    for (std::size_t i = 0; i < head_bias.size(); ++i)
        head_bias[i] += other.head_bias[i];
    for (const auto& [token, row] : other.embedding_rows) {
        auto it = embedding_rows.find(token);
        if (it == embedding_rows.end()) {
            embedding_rows.emplace(token, row);
        } else {
            for (std::size_t i = 0; i < row.size(); ++i) it->second[i] += row[i];
        }
    }
}

bool Gradients::all_finite() const {
    auto finite = [](const Vec& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    for (const auto& m : filter_weights)
        if (!finite(m.data())) return false;
    if (!finite(filter_bias) || !finite(head_U.data()) || !finite(head_bias))
        return false;
    for (const auto& [token, row] : embedding_rows)
        if (!finite(row)) return false;
    return true;
}

Gradients backward(const model::ModelParams& model, const nn::SentenceMatrix& d,
                   std::size_t gold, const nn::DropoutMask& mask,
                   const std::vector<std::string>* tokens) {
    model::ForwardTrace trace;
    model::forward_masked(model, d, mask, &trace);
    if (gold >= trace.probs.size())
        throw std::invalid_argument("gold class index out of range");

    Gradients g = Gradients::zeros_like(model);
    std::size_t L = trace.probs.size(), k = model.filters.size();

    // Softmax + NLL collapse to probs - one_hot(gold).
    Vec dy(trace.probs);
    dy[gold] -= 1.0;

    for (std::size_t j = 0; j < L; ++j) {
        g.head_bias[j] = dy[j];
        for (std::size_t t = 0; t < k; ++t)
            g.head_U(j, t) = dy[j] * trace.dropped[t];
    }

    Vec dpooled(k, 0.0);
    for (std::size_t t = 0; t < k; ++t) {
        if (!mask.keep[t]) continue;
        double acc = 0.0;
        for (std::size_t j = 0; j < L; ++j) acc += model.head.U(j, t) * dy[j];
        dpooled[t] = acc * mask.scale;
    }

    Matrix dinput;
    if (tokens) dinput = Matrix(d.rows(), d.cols());

    for (std::size_t t = 0; t < k; ++t) {
        if (dpooled[t] == 0.0) continue;
        const auto& filt = model.filters[t];
        std::size_t j = trace.argmax_window[t], h = filt.height();
        double da = dpooled[t] * nn::activate_derivative(model.config.nonlinearity,
                                                         trace.argmax_preact[t]);
        if (da == 0.0) continue;
        g.filter_bias[t] = da;
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < d.cols(); ++c) {
                g.filter_weights[t](r, c) = da * d(j + r, c);
                if (tokens) dinput(j + r, c) += da * filt.weights(r, c);
            }
        }
    }

    if (tokens) {
        for (std::size_t i = 0; i < tokens->size() && i < d.rows(); ++i) {
            auto& row = g.embedding_rows[(*tokens)[i]];
            if (row.empty()) row.assign(d.cols(), 0.0);
            for (std::size_t c = 0; c < d.cols(); ++c) row[c] += dinput(i, c);
        }
    }
    return g;
}

namespace {

double masked_loss(const model::ModelParams& m, const nn::SentenceMatrix& d,
                   std::size_t gold, const nn::DropoutMask& mask) {
    return nll_loss(model::forward_masked(m, d, mask), gold);
}

}  // namespace

Gradients finite_difference_gradient(const model::ModelParams& model,
                                     const nn::SentenceMatrix& d,
                                     std::size_t gold,
                                     const nn::DropoutMask& mask, double eps,
                                     const std::vector<std::string>* tokens) {
    Gradients g = Gradients::zeros_like(model);
    model::ModelParams probe = model;

    auto central = [&](double& slot) {
        double saved = slot;
        slot = saved + eps;
        double hi = masked_loss(probe, d, gold, mask);
        slot = saved - eps;
        double lo = masked_loss(probe, d, gold, mask);
        slot = saved;
        return (hi - lo) / (2.0 * eps);
    };

    for (std::size_t t = 0; t < probe.filters.size(); ++t) {
        auto& w = probe.filters[t].weights.data();
        for (std::size_t i = 0; i < w.size(); ++i)
            g.filter_weights[t].data()[i] = central(w[i]);
        g.filter_bias[t] = central(probe.filters[t].bias);
    }
    for (std::size_t i = 0; i < probe.head.U.size(); ++i)
        g.head_U.data()[i] = central(probe.head.U.data()[i]);
    for (std::size_t j = 0; j < probe.head.bias.size(); ++j)
        g.head_bias[j] = central(probe.head.bias[j]);

    if (tokens) {
        // One embedding row may feed several sentence rows; perturb them all
        // at once so the difference is w.r.t. the shared parameter.
        nn::SentenceMatrix dm = d;
        std::set<std::string> distinct(tokens->begin(), tokens->end());
        for (const auto& token : distinct) {
            Vec row(d.cols(), 0.0);
            for (std::size_t c = 0; c < d.cols(); ++c) {
                for (std::size_t i = 0; i < tokens->size(); ++i)
                    if ((*tokens)[i] == token) dm(i, c) = d(i, c) + eps;
                double hi = masked_loss(model, dm, gold, mask);
                for (std::size_t i = 0; i < tokens->size(); ++i)
                    if ((*tokens)[i] == token) dm(i, c) = d(i, c) - eps;
                double lo = masked_loss(model, dm, gold, mask);
                for (std::size_t i = 0; i < tokens->size(); ++i)
                    if ((*tokens)[i] == token) dm(i, c) = d(i, c);
                row[c] = (hi - lo) / (2.0 * eps);
            }
            g.embedding_rows[token] = std::move(row);
        }
    }
    return g;
}

AdadeltaState AdadeltaState::zeros_like(const model::ModelParams& m, double rho,
                                        double epsilon) {
    AdadeltaState s;
    s.rho = rho;
    s.epsilon = epsilon;
    for (const auto& f : m.filters) {
        s.filter_weights_g2.emplace_back(f.weights.rows(), f.weights.cols());
        s.filter_weights_dx2.emplace_back(f.weights.rows(), f.weights.cols());
    }
    s.filter_bias_g2.assign(m.filters.size(), 0.0);
    s.filter_bias_dx2.assign(m.filters.size(), 0.0);
    s.head_U_g2 = Matrix(m.head.U.rows(), m.head.U.cols());
    s.head_U_dx2 = Matrix(m.head.U.rows(), m.head.U.cols());
    s.head_bias_g2.assign(m.head.bias.size(), 0.0);
    s.head_bias_dx2.assign(m.head.bias.size(), 0.0);
    return s;
}

namespace {

void adadelta_apply(double* theta, const double* grad, double* g2, double* dx2,
                    std::size_t len, double rho, double eps) {
    for (std::size_t i = 0; i < len; ++i) {
        double g = grad[i];
        g2[i] = rho * g2[i] + (1.0 - rho) * g * g;
        double dx = -(std::sqrt(dx2[i] + eps) / std::sqrt(g2[i] + eps)) * g;
        dx2[i] = rho * dx2[i] + (1.0 - rho) * dx * dx;
        theta[i] += dx;
    }
}

}  // namespace

void adadelta_step(model::ModelParams& params, const Gradients& grads,
                   AdadeltaState& state) {
    if (!grads.all_finite()) throw NumericError("non-finite gradient");
    for (std::size_t t = 0; t < params.filters.size(); ++t) {
        adadelta_apply(params.filters[t].weights.data().data(),
                       grads.filter_weights[t].data().data(),
                       state.filter_weights_g2[t].data().data(),
                       state.filter_weights_dx2[t].data().data(),
                       params.filters[t].weights.size(), state.rho, state.epsilon);
        adadelta_apply(&params.filters[t].bias, &grads.filter_bias[t],
                       &state.filter_bias_g2[t], &state.filter_bias_dx2[t], 1,
                       state.rho, state.epsilon);
    }
    adadelta_apply(params.head.U.data().data(), grads.head_U.data().data(),
                   state.head_U_g2.data().data(), state.head_U_dx2.data().data(),
                   params.head.U.size(), state.rho, state.epsilon);
    adadelta_apply(params.head.bias.data(), grads.head_bias.data(),
                   state.head_bias_g2.data(), state.head_bias_dx2.data(),
                   params.head.bias.size(), state.rho, state.epsilon);
}

void TrainConfig::validate() const {
    if (max_epochs < 1) throw ConfigError("max epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (validation_fraction <= 0.0 || validation_fraction >= 1.0)
        throw ConfigError("validation fraction must be strictly between 0 and 1");
    if (rho <= 0.0 || rho >= 1.0) throw ConfigError("rho must be in (0, 1)");
    if (epsilon <= 0.0) throw ConfigError("epsilon must be > 0");
}

bool EarlyStopper::observe(double val_loss) {
    std::size_t epoch = epochs_seen_++;
    if (val_loss < best_ - slack_) {
        best_ = val_loss;
        best_index_ = epoch;
        since_best_ = 0;
    } else {
        ++since_best_;
    }
    return since_best_ >= patience_;
}

void save_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write history file: " + path);
    auto fmt = [](double v) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    };
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < history.epochs(); ++e)
        out << (e + 1) << ',' << fmt(history.train_loss[e]) << ','
            << fmt(history.val_loss[e]) << '\n';
}

namespace {

struct PreparedDoc {
    nn::SentenceMatrix matrix;
    std::size_t gold = 0;
    const std::vector<std::string>* tokens = nullptr;
};

std::vector<PreparedDoc> prepare(const data::LabeledCorpus& corpus,
                                 const embeddings::EmbeddingTable& table,
                                 std::size_t min_rows) {
    std::vector<PreparedDoc> docs;
    docs.reserve(corpus.size());
    for (const auto& doc : corpus.documents)
        docs.push_back({nn::embed_sentence(doc.tokens, table, min_rows), doc.label,
                        &doc.tokens});
    return docs;
}

double mean_prepared_loss(const model::ModelParams& m,
                          const std::vector<PreparedDoc>& docs) {
    if (docs.empty()) return 0.0;
    nn::DropoutMask identity = nn::DropoutMask::identity(m.filters.size());
    double total = 0.0;
    for (const auto& doc : docs)
        total += nll_loss(model::forward_masked(m, doc.matrix, identity), doc.gold);
    return total / static_cast<double>(docs.size());
}

/// Per-row Adadelta accumulators for fine-tuned embedding rows, created on
/// first touch; only rows present in a batch move.
struct EmbeddingAdadelta {
    double rho, eps;
    std::map<std::string, std::pair<Vec, Vec>> acc;

    void step(embeddings::EmbeddingTable& table,
              const std::map<std::string, Vec>& grads) {
        for (const auto& [token, grad] : grads) {
            Vec* row = table.find(token);
            if (!row) continue;  // pad rows and absent tokens stay fixed
            auto& [g2, dx2] = acc[token];
            if (g2.empty()) {
                g2.assign(grad.size(), 0.0);
                dx2.assign(grad.size(), 0.0);
            }
            adadelta_apply(row->data(), grad.data(), g2.data(), dx2.data(),
                           grad.size(), rho, eps);
        }
    }
};

}  // namespace

double mean_loss(const model::ModelParams& model,
                 const data::LabeledCorpus& corpus,
                 const embeddings::EmbeddingTable& table) {
    auto docs = prepare(corpus, table, model.config.max_height());
    return mean_prepared_loss(model, docs);
}

TrainResult run_training(const data::LabeledCorpus& corpus,
                         const model::ModelConfig& model_config,
                         const TrainConfig& config,
                         const embeddings::EmbeddingTable& table) {
    config.validate();
    model_config.validate();
    if (corpus.size() == 0) throw ConfigError("training corpus is empty");
    if (corpus.schema.num_classes() != model_config.num_classes)
        throw ConfigError("corpus schema does not match model class count");
    if (table.dimension() != model_config.embedding_dim)
        throw ConfigError("vector file dimension " + std::to_string(table.dimension()) +
                          " does not match configured embedding dimension " +
                          std::to_string(model_config.embedding_dim));

    auto [train_split, val_split] =
        data::split(corpus, config.validation_fraction,
                    mix_seed(config.seed, hash_bytes("validation-split")));
    {
        auto counts = train_split.class_counts();
        for (std::size_t c = 0; c < counts.size(); ++c)
            if (counts[c] == 0)
                throw ConfigError("class '" + corpus.schema.class_names[c] +
                                  "' has no documents in the training split");
    }

    embeddings::EmbeddingTable working = table;
    if (config.finetune_embeddings) {
        // Materialize every corpus token so OOV rows become trainable.
        for (const auto& doc : corpus.documents)
            for (const auto& token : doc.tokens)
                if (token != embeddings::kPadToken && !working.contains(token))
                    working.insert(token, working.lookup(token));
    }

    std::size_t min_rows = model_config.max_height();
    auto train_docs = prepare(train_split, working, min_rows);
    auto val_docs = prepare(val_split, working, min_rows);

    model::ModelParams params = init_model(model_config, config.seed);
    AdadeltaState state =
        AdadeltaState::zeros_like(params, config.rho, config.epsilon);
    EmbeddingAdadelta emb_state{config.rho, config.epsilon, {}};

    EarlyStopper stopper(config.patience);
    TrainHistory history;
    model::ModelParams best_params = params;
    embeddings::EmbeddingTable best_embeddings = working;

    std::uint64_t order_tag = hash_bytes("epoch-order");
    std::uint64_t mask_tag = hash_bytes("dropout-mask");
    std::size_t k = params.filters.size();

    std::vector<std::size_t> order(train_docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        Rng order_rng(mix_seed(config.seed, order_tag + epoch));
        deterministic_shuffle(order, order_rng);

        for (std::size_t start = 0; start < order.size();
             start += config.batch_size) {
            std::size_t end = std::min(order.size(), start + config.batch_size);
            Gradients batch = Gradients::zeros_like(params);
            for (std::size_t pos = start; pos < end; ++pos) {
                std::size_t idx = order[pos];
                const auto& doc = train_docs[idx];
                // Counter-based mask: a fresh draw per (epoch, document),
                // reproducible without storing masks.
                Rng mask_rng(mix_seed(mix_seed(config.seed, mask_tag + epoch), idx));
                nn::DropoutMask mask =
                    model_config.dropout_rate == 0.0
                        ? nn::DropoutMask::identity(k)
                        : nn::sample_dropout_mask(k, model_config.dropout_rate,
                                                  mask_rng);
                if (config.finetune_embeddings) {
                    auto fresh = nn::embed_sentence(*doc.tokens, working, min_rows);
                    batch.accumulate(
                        backward(params, fresh, doc.gold, mask, doc.tokens));
                } else {
                    batch.accumulate(backward(params, doc.matrix, doc.gold, mask));
                }
            }
            try {
                adadelta_step(params, batch, state);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch + 1) + ": " +
                                   e.what());
            }
            if (config.finetune_embeddings)
                emb_state.step(working, batch.embedding_rows);
        }

        if (config.finetune_embeddings) {
            train_docs = prepare(train_split, working, min_rows);
            val_docs = prepare(val_split, working, min_rows);
        }
        double train_loss = mean_prepared_loss(params, train_docs);
        double val_loss = mean_prepared_loss(params, val_docs);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
            throw NumericError("epoch " + std::to_string(epoch + 1) +
                               ": non-finite loss");
        history.train_loss.push_back(train_loss);
        history.val_loss.push_back(val_loss);

        bool stop = stopper.observe(val_loss);
        if (stopper.last_was_best()) {
            best_params = params;
            if (config.finetune_embeddings) best_embeddings = working;
        }
        if (stop) {
            history.stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch_index();
    return {std::move(best_params), std::move(history),
            config.finetune_embeddings ? std::move(best_embeddings)
                                       : std::move(working)};
}

}  // namespace cnnsa::train
