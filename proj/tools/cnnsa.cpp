#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cnnsa/data.hpp"
#include "cnnsa/embeddings.hpp"
#include "cnnsa/errors.hpp"
#include "cnnsa/eval.hpp"
#include "cnnsa/model.hpp"
#include "cnnsa/preprocess.hpp"
#include "cnnsa/train.hpp"

namespace {

using namespace cnnsa;

struct ModelFlags {
    std::vector<std::size_t> heights{3};
    std::size_t per_height = 100;
    std::string nonlin = "relu";
    double dropout = 0.5;
};

struct TrainFlags {
    std::size_t epochs = 100;
    std::size_t patience = 5;
    std::size_t batch = 50;
    double val_fraction = 0.2;
    double rho = 0.95;
    double epsilon = 1e-6;
    std::uint64_t seed = 1;
    bool finetune = false;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
    cmd->add_option("--heights", f.heights,
                    "filter heights (token window lengths), ascending")
        ->delimiter(',');
    cmd->add_option("--per-height", f.per_height, "filters per height");
    cmd->add_option("--nonlin", f.nonlin, "nonlinearity: relu or tanh")
        ->check(CLI::IsMember({"relu", "tanh"}));
    cmd->add_option("--dropout", f.dropout,
                    "dropout rate on the penultimate layer");
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--epochs", f.epochs, "maximum training epochs");
    cmd->add_option("--patience", f.patience,
                    "epochs without validation improvement before stopping");
    cmd->add_option("--batch", f.batch, "mini-batch size");
    cmd->add_option("--val-fraction", f.val_fraction,
                    "fraction of training data held out for validation");
    cmd->add_option("--rho", f.rho, "Adadelta decay rate");
    cmd->add_option("--eps", f.epsilon, "Adadelta stabilizer");
    cmd->add_option("--seed", f.seed, "seed for all randomness in the run");
    cmd->add_flag("--finetune-embeddings", f.finetune,
                  "update embedding rows of in-batch tokens");
}

model::ModelConfig make_model_config(const ModelFlags& f, std::size_t classes,
                                     std::size_t dim) {
    model::ModelConfig cfg;
    cfg.filter_heights = f.heights;
    cfg.filters_per_height = f.per_height;
    cfg.nonlinearity = nn::parse_nonlinearity(f.nonlin);
    cfg.dropout_rate = f.dropout;
    cfg.num_classes = classes;
    cfg.embedding_dim = dim;
    return cfg;
}

train::TrainConfig make_train_config(const TrainFlags& f) {
    train::TrainConfig cfg;
    cfg.max_epochs = f.epochs;
    cfg.patience = f.patience;
    cfg.batch_size = f.batch;
    cfg.validation_fraction = f.val_fraction;
    cfg.rho = f.rho;
    cfg.epsilon = f.epsilon;
    cfg.seed = f.seed;
    cfg.finetune_embeddings = f.finetune;
    return cfg;
}

std::string format_heights(const std::vector<std::size_t>& hs) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (i) os << ',';
        os << hs[i];
    }
    os << ']';
    return os.str();
}

int cmd_preprocess(const std::string& in_path, const std::string& out_path) {
    std::istream* in = &std::cin;
    std::ifstream file_in;
    if (in_path != "-") {
        file_in.open(in_path, std::ios::binary);
        if (!file_in) throw ConfigError("cannot open input: " + in_path);
        in = &file_in;
    }
    std::ostream* out = &std::cout;
    std::ofstream file_out;
    if (out_path != "-") {
        file_out.open(out_path, std::ios::binary);
        if (!file_out) throw ConfigError("cannot write output: " + out_path);
        out = &file_out;
    }
    std::string line;
    std::size_t line_no = 0, dropped = 0;
    while (std::getline(*in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto tokens = preprocess::pipeline(line);
        if (tokens.empty()) {
            std::cerr << "warning: line " << line_no
                      << " is empty after preprocessing, dropped\n";
            ++dropped;
            continue;
        }
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) *out << ' ';
            *out << tokens[i];
        }
        *out << '\n';
    }
    if (dropped > 0)
        std::cerr << "dropped " << dropped << " degenerate line(s)\n";
    if (out != &std::cout && !*out) throw DataError("I/O failure writing " + out_path);
    return 0;
}

int cmd_train(const std::string& dataset, const std::string& vectors,
              std::size_t schema_level, const std::string& checkpoint,
              const std::string& history_path, const std::string& save_vectors,
              const ModelFlags& mf, const TrainFlags& tf) {
    auto schema = data::LabelSchema::for_level(schema_level);
    auto [table, vec_report] = embeddings::load_embeddings(vectors, std::nullopt, tf.seed);
    if (vec_report.duplicates_replaced > 0)
        std::cerr << "warning: " << vec_report.duplicates_replaced
                  << " duplicate vector token(s), last occurrence kept\n";
    auto [corpus, load_report] = data::load_dataset(dataset, schema);
    if (load_report.dropped_empty > 0)
        std::cerr << "warning: dropped " << load_report.dropped_empty
                  << " record(s) empty after preprocessing\n";

    model::ModelConfig mcfg = make_model_config(mf, schema_level, table.dimension());
    train::TrainConfig tcfg = make_train_config(tf);
    mcfg.validate();
    tcfg.validate();

    std::cout << "heights=" << format_heights(mcfg.filter_heights)
              << " dim=" << mcfg.embedding_dim << " max_epochs=" << tcfg.max_epochs
              << " dropout=" << mcfg.dropout_rate << " patience=" << tcfg.patience
              << '\n';

    auto result = train::run_training(corpus, mcfg, tcfg, table);
    model::save_checkpoint(result.params, checkpoint);
    if (!history_path.empty())
        train::save_history_csv(result.history, history_path);
    if (!save_vectors.empty())
        embeddings::save_embeddings(result.embeddings, save_vectors);

    const auto& h = result.history;
    std::cout << "best_epoch=" << (h.best_epoch + 1) << " best_val_loss="
              << std::fixed << std::setprecision(6) << h.val_loss[h.best_epoch]
              << " epochs_run=" << h.epochs() << " stop="
              << (h.stop_reason == train::StopReason::EarlyStop ? "early"
                                                                : "max_epochs")
              << '\n';
    return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& dataset,
                 const std::string& vectors, std::size_t jobs) {
    auto model = model::load_checkpoint(checkpoint);
    auto schema = data::LabelSchema::for_level(model.config.num_classes);
    auto [table, vec_report] =
        embeddings::load_embeddings(vectors, model.config.embedding_dim, 0);
    (void)vec_report;
    auto [corpus, load_report] = data::load_dataset(dataset, schema);
    (void)load_report;

    auto report = eval::evaluate(model, corpus, table, jobs);
    std::cout << "auc=" << std::fixed << std::setprecision(6) << report.auc
              << '\n';
    std::cout << "accuracy=" << std::fixed << std::setprecision(6)
              << report.accuracy << '\n';
    std::cout << "documents=" << report.documents << '\n';
    std::cout << "confusion (rows=gold, cols=predicted):\n";
    for (std::size_t g = 0; g < report.confusion.size(); ++g) {
        std::cout << "  " << schema.class_names[g] << ':';
        for (std::size_t p = 0; p < report.confusion[g].size(); ++p)
            std::cout << ' ' << report.confusion[g][p];
        std::cout << '\n';
    }
    return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& vectors,
                std::optional<std::string> text) {
    auto model = model::load_checkpoint(checkpoint);
    auto schema = data::LabelSchema::for_level(model.config.num_classes);
    auto [table, vec_report] =
        embeddings::load_embeddings(vectors, model.config.embedding_dim, 0);
    (void)vec_report;

    std::string line;
    if (text) {
        line = *text;
    } else if (!std::getline(std::cin, line)) {
        throw ConfigError("no input line to classify");
    }
    auto tokens = preprocess::pipeline(line);
    auto d = nn::embed_sentence(tokens, table, model.config.max_height());
    auto probs = model::forward_masked(
        model, d, nn::DropoutMask::identity(model.filters.size()));
    std::size_t pred = static_cast<std::size_t>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    std::cout << "class=" << schema.class_names[pred] << " probs=";
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (i) std::cout << ',';
        std::cout << std::fixed << std::setprecision(6) << probs[i];
    }
    std::cout << '\n';
    return 0;
}

int cmd_grid_search(const std::string& dataset, std::size_t schema_level,
                    const std::vector<std::size_t>& grid_heights,
                    const std::vector<std::string>& grid_vectors,
                    double eval_fraction, const std::string& report_csv,
                    const std::string& report_table, const ModelFlags& mf,
                    const TrainFlags& tf, std::size_t jobs) {
    auto schema = data::LabelSchema::for_level(schema_level);
    auto [corpus, load_report] = data::load_dataset(dataset, schema);
    (void)load_report;

    eval::SweepAxes axes;
    axes.filter_heights = grid_heights;
    for (const auto& spec : grid_vectors) {
        std::size_t eq = spec.find('=');
        if (eq == std::string::npos)
            axes.vectors.push_back({spec, spec});
        else
            axes.vectors.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
    }

    // dim comes from each cell's vector file; classes from the schema.
    model::ModelConfig mcfg = make_model_config(mf, schema_level, 1);
    train::TrainConfig tcfg = make_train_config(tf);
    tcfg.validate();

    auto report = eval::grid_search(corpus, axes, mcfg, tcfg, eval_fraction, jobs);

    std::string table_text = eval::sweep_report_table(report);
    std::cout << table_text;
    if (!report_csv.empty()) {
        std::ofstream out(report_csv, std::ios::binary);
        if (!out) throw ConfigError("cannot write report: " + report_csv);
        out << eval::sweep_report_csv(report);
    }
    if (!report_table.empty()) {
        std::ofstream out(report_table, std::ios::binary);
        if (!out) throw ConfigError("cannot write report: " + report_table);
        out << table_text;
    }
    return 0;
}

int cmd_stats(const std::string& dataset, std::size_t schema_level) {
    auto schema = data::LabelSchema::for_level(schema_level);
    auto [corpus, load_report] = data::load_dataset(dataset, schema);
    if (load_report.dropped_empty > 0)
        std::cerr << "warning: dropped " << load_report.dropped_empty
                  << " record(s) empty after preprocessing\n";
    std::cout << data::render_stats(data::corpus_stats(corpus));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convolutional sentence classifier for Persian social-media "
                 "sentiment, 2- and 5-level"};
    app.require_subcommand(1);

    // preprocess
    std::string pp_in = "-", pp_out = "-";
    auto* pp = app.add_subcommand(
        "preprocess", "normalize and tokenize raw text, one document per line");
    pp->set_config("--config");
    pp->add_option("--input", pp_in, "input file ('-' for stdin)");
    pp->add_option("--output", pp_out, "output file ('-' for stdout)");

    // train
    std::string tr_dataset, tr_vectors, tr_checkpoint, tr_history, tr_save_vectors;
    std::size_t tr_schema = 2;
    ModelFlags tr_mf;
    TrainFlags tr_tf;
    auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
    tr->set_config("--config");
    tr->add_option("--dataset", tr_dataset, "labeled dataset (label<TAB>text)")
        ->required();
    tr->add_option("--vectors", tr_vectors, "pretrained word vector file")
        ->required();
    tr->add_option("--schema", tr_schema, "label schema: 2 or 5 levels")
        ->check(CLI::IsMember({2, 5}));
    tr->add_option("--checkpoint", tr_checkpoint, "checkpoint output path")
        ->required();
    tr->add_option("--history", tr_history, "per-epoch loss CSV output path");
    tr->add_option("--save-vectors", tr_save_vectors,
                   "write the (fine-tuned) vector table here after training");
    add_model_flags(tr, tr_mf);
    add_train_flags(tr, tr_tf);

    // evaluate
    std::string ev_checkpoint, ev_dataset, ev_vectors;
    std::size_t ev_jobs = 1;
    auto* ev = app.add_subcommand("evaluate",
                                  "score a dataset with a trained checkpoint");
    ev->set_config("--config");
    ev->add_option("--checkpoint", ev_checkpoint, "trained checkpoint")->required();
    ev->add_option("--dataset", ev_dataset, "labeled dataset")->required();
    ev->add_option("--vectors", ev_vectors, "word vector file")->required();
    ev->add_option("--jobs", ev_jobs, "worker threads for scoring");

    // predict
    std::string pr_checkpoint, pr_vectors;
    std::optional<std::string> pr_text;
    auto* pr = app.add_subcommand("predict", "classify one line of text");
    pr->set_config("--config");
    pr->add_option("--checkpoint", pr_checkpoint, "trained checkpoint")->required();
    pr->add_option("--vectors", pr_vectors, "word vector file")->required();
    pr->add_option("--text", pr_text, "text to classify (default: read stdin)");

    // grid-search
    std::string gs_dataset, gs_report_csv, gs_report_table;
    std::size_t gs_schema = 2, gs_jobs = 1;
    std::vector<std::size_t> gs_heights{2, 3, 5, 7, 9};
    std::vector<std::string> gs_vectors;
    double gs_eval_fraction = 0.2;
    ModelFlags gs_mf;
    TrainFlags gs_tf;
    auto* gs = app.add_subcommand(
        "grid-search", "train and evaluate one model per parameter combination");
    gs->set_config("--config");
    gs->add_option("--dataset", gs_dataset, "labeled dataset")->required();
    gs->add_option("--schema", gs_schema, "label schema: 2 or 5 levels")
        ->check(CLI::IsMember({2, 5}));
    gs->add_option("--grid-heights", gs_heights, "filter heights to sweep")
        ->delimiter(',');
    gs->add_option("--grid-vectors", gs_vectors,
                   "vector file variants to sweep, each `label=path` or `path`")
        ->required()
        ->delimiter(',');
    gs->add_option("--eval-fraction", gs_eval_fraction,
                   "held-out fraction for per-cell evaluation");
    gs->add_option("--report-csv", gs_report_csv, "sweep report CSV path");
    gs->add_option("--report-table", gs_report_table,
                   "sweep report aligned-text path");
    gs->add_option("--jobs", gs_jobs, "concurrent grid cells");
    add_model_flags(gs, gs_mf);
    add_train_flags(gs, gs_tf);

    // stats
    std::string st_dataset;
    std::size_t st_schema = 2;
    auto* st = app.add_subcommand("stats", "corpus statistics report");
    st->set_config("--config");
    st->add_option("--dataset", st_dataset, "labeled dataset")->required();
    st->add_option("--schema", st_schema, "label schema: 2 or 5 levels")
        ->check(CLI::IsMember({2, 5}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (pp->parsed()) return cmd_preprocess(pp_in, pp_out);
        if (tr->parsed())
            return cmd_train(tr_dataset, tr_vectors, tr_schema, tr_checkpoint,
                             tr_history, tr_save_vectors, tr_mf, tr_tf);
        if (ev->parsed())
            return cmd_evaluate(ev_checkpoint, ev_dataset, ev_vectors, ev_jobs);
        if (pr->parsed()) return cmd_predict(pr_checkpoint, pr_vectors, pr_text);
        if (gs->parsed())
            return cmd_grid_search(gs_dataset, gs_schema, gs_heights, gs_vectors,
                                   gs_eval_fraction, gs_report_csv,
                                   gs_report_table, gs_mf, gs_tf, gs_jobs);
        if (st->parsed()) return cmd_stats(st_dataset, st_schema);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
