#include "lnprobe/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "lnprobe/align.hpp"
#include "lnprobe/classify.hpp"
#include "lnprobe/cluster.hpp"
#include "lnprobe/embstore.hpp"
#include "lnprobe/geometry.hpp"
#include "lnprobe/retrieval.hpp"
#include "lnprobe/synth.hpp"

namespace lnprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage: return kExitUsage;
        case ErrorKind::format:
        case ErrorKind::corruption:
        case ErrorKind::validation:
        case ErrorKind::io: return kExitData;
        case ErrorKind::numeric:
        case ErrorKind::training: return kExitNumeric;
    }
    return kExitData;
}

namespace {

struct Common {
    std::uint64_t seed = 0;
    std::string format = "tsv";
    std::string output;
};

void add_common(CLI::App* cmd, Common& c, const std::string& output_help, bool output_required) {
    cmd->add_option("--seed", c.seed, "Seed for every stochastic step")->capture_default_str();
    cmd->add_option("--format", c.format, "Report format")
        ->check(CLI::IsMember({"tsv", "json"}))
        ->capture_default_str();
    auto* o = cmd->add_option("--output", c.output, output_help);
    if (output_required) o->required();
}

bool as_json(const Common& c) { return c.format == "json"; }

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(fmt::format("cannot create {}", path.string()));
    f << text;
    if (!f) throw IoError(fmt::format("write failed: {}", path.string()));
}

// Report goes to --output when given, else to stdout.
void emit_report(const Common& c, const std::string& text, std::ostream& out) {
    if (c.output.empty()) {
        out << text;
    } else {
        write_text(c.output, text);
    }
}

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw IoError(fmt::format("no such file: {}", path));
}

std::vector<SentenceVector> load_sentences(const std::string& path) {
    require_file(path);
    auto set = load_set(path);
    if (set.kind() != RecordKind::sentence_vectors) {
        throw ValidationError(fmt::format("{}: expected pooled sentence vectors (run 'pool' first)", path));
    }
    return std::move(set.sentences());
}

std::vector<TokenEmbeddingMatrix> load_tokens(const std::string& path) {
    require_file(path);
    auto set = load_set(path);
    if (set.kind() != RecordKind::token_matrices) {
        throw ValidationError(fmt::format("{}: expected token matrices", path));
    }
    return std::move(set.tokens());
}

std::map<std::string, std::vector<SentenceVector>> by_language(const std::vector<std::string>& paths) {
    std::map<std::string, std::vector<SentenceVector>> out;
    for (const auto& p : paths) {
        for (auto& s : load_sentences(p)) {
            auto& bucket = out[s.language];
            bucket.push_back(std::move(s));
        }
    }
    return out;
}

std::map<std::string, LanguageCentroid> centroid_map(const std::string& path) {
    require_file(path);
    std::map<std::string, LanguageCentroid> out;
    for (auto& c : read_centroids(path)) out[c.language] = std::move(c);
    return out;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("bad grid value '{}'", item));
        }
    }
    return grid;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void add_trainer_options(CLI::App* cmd, TrainerConfig& t) {
    cmd->add_option("--lr", t.learning_rate, "Learning rate")->capture_default_str();
    cmd->add_option("--batch-size", t.batch_size, "Mini-batch size")->capture_default_str();
    cmd->add_option("--patience", t.patience, "Early-stopping patience (epochs)")->capture_default_str();
    cmd->add_option("--max-epochs", t.max_epochs, "Maximum epochs")->capture_default_str();
    cmd->add_option("--momentum", t.momentum, "Momentum")->capture_default_str();
}

// ------------------------------------------------------------------ pool

struct PoolArgs {
    Common common;
    std::string input;
    std::string pooling = "mean";
    bool keep_special = false;
};

int cmd_pool(const PoolArgs& a, std::ostream& out) {
    const auto mode = parse_pooling(a.pooling);
    require_file(a.input);
    const auto set = load_set(a.input);
    std::vector<SentenceVector> pooled;
    pooled.reserve(set.size());
    for (const auto& m : set.tokens()) {
        pooled.push_back(mode == Pooling::cls ? pool_cls(m) : pool_mean(m, !a.keep_special));
    }
    const auto n = pooled.size();
    write_dump(make_sentence_set(std::move(pooled), set.dim, set.model_id, set.layer), a.common.output);
    if (as_json(a.common)) {
        out << dump_json({{"command", "pool"}, {"records", n}, {"pooling", a.pooling}, {"dim", set.dim}});
    } else {
        out << fmt::format("records\t{}\npooling\t{}\ndim\t{}\n", n, a.pooling, set.dim);
    }
    return kExitOk;
}

// ------------------------------------------------------------- centroids

struct CentroidsArgs {
    Common common;
    std::vector<std::string> inputs;
};

int cmd_centroids(const CentroidsArgs& a, std::ostream& out) {
    const auto groups = by_language(a.inputs);
    if (groups.empty()) throw ValidationError("centroids: inputs contain no records");
    std::vector<LanguageCentroid> centroids;
    for (const auto& [lang, set] : groups) centroids.push_back(centroid(set));
    write_centroids(centroids, a.common.output);
    if (as_json(a.common)) {
        json counts = json::object();
        for (const auto& c : centroids) counts[c.language] = c.sample_count;
        out << dump_json({{"command", "centroids"}, {"sample_counts", counts}});
    } else {
        out << "language\tsamples\n";
        for (const auto& c : centroids) out << fmt::format("{}\t{}\n", c.language, c.sample_count);
    }
    return kExitOk;
}

// ---------------------------------------------------------------- center

struct CenterArgs {
    Common common;
    std::string input;
    std::string centroids;
};

int cmd_center(const CenterArgs& a, std::ostream& out) {
    require_file(a.input);
    const auto set = load_set(a.input);
    const auto cmap = centroid_map(a.centroids);
    std::vector<SentenceVector> centered;
    centered.reserve(set.size());
    for (const auto& s : set.sentences()) {
        const auto c = cmap.find(s.language);
        if (c == cmap.end()) {
            throw ValidationError(fmt::format("record {}: no centroid for language '{}'", s.sentence_id, s.language));
        }
        centered.push_back(std::move(center(std::span(&s, 1), c->second).front()));
    }
    const auto n = centered.size();
    write_dump(make_sentence_set(std::move(centered), set.dim, set.model_id, set.layer), a.common.output);
    if (as_json(a.common)) {
        out << dump_json({{"command", "center"}, {"records", n}});
    } else {
        out << fmt::format("records\t{}\n", n);
    }
    return kExitOk;
}

// -------------------------------------------------------- fit-projection

struct FitArgs {
    Common common;
    std::string source;
    std::string target;
    bool bias = false;
};

int cmd_fit_projection(const FitArgs& a, std::ostream& out) {
    const auto src = load_sentences(a.source);
    const auto tgt = load_sentences(a.target);
    const auto fit = fit_projection(src, tgt, FitOptions{a.bias});
    write_projection(fit.projection, a.common.output,
                     {{"residual_mse", fit.residual_mse}, {"regularized", fit.regularized}});
    const auto& p = fit.projection;
    if (as_json(a.common)) {
        out << dump_json({{"command", "fit-projection"},
                          {"source_language", p.source_language},
                          {"target_language", p.target_language},
                          {"samples", src.size()},
                          {"residual_mse", fit.residual_mse},
                          {"regularized", fit.regularized},
                          {"bias", a.bias}});
    } else {
        out << fmt::format("source\t{}\ntarget\t{}\nsamples\t{}\nresidual_mse\t{:.6e}\nregularized\t{}\n",
                           p.source_language, p.target_language, src.size(), fit.residual_mse,
                           fit.regularized);
    }
    if (fit.regularized) {
        std::cerr << "warning: normal equations were rank deficient; ridge term added\n";
    }
    return kExitOk;
}

// -------------------------------------------------------------- retrieve

struct RetrieveArgs {
    Common common;
    std::vector<std::string> inputs;
    std::vector<std::string> modes{"plain"};
    std::string centroids;
    std::vector<std::string> projections;
};

int cmd_retrieve(const RetrieveArgs& a, std::ostream& out) {
    RetrievalSuiteInput input;
    input.modes.clear();
    for (const auto& m : a.modes) input.modes.push_back(parse_retrieval_mode(m));
    for (auto mode : input.modes) {
        if (mode == RetrievalMode::centered && a.centroids.empty()) {
            throw ConfigError("centered mode requires --centroids");
        }
        if (mode == RetrievalMode::projected && a.projections.empty()) {
            throw ConfigError("projected mode requires --projection");
        }
    }
    input.sets = by_language(a.inputs);
    if (!a.centroids.empty()) input.centroids = centroid_map(a.centroids);
    for (const auto& path : a.projections) {
        require_file(path);
        auto p = read_projection(path);
        const auto lang = p.source_language;
        input.projections[lang] = std::move(p);
    }
    const auto result = run_retrieval_suite(input);
    if (as_json(a.common)) {
        emit_report(a.common, dump_json(retrieval_summary(result)), out);
    } else {
        std::string text;
        for (auto mode : input.modes) text += accuracy_matrix_tsv(result, mode);
        text += "mode\taverage\n";
        for (const auto& [mode, avg] : result.mode_average) {
            text += fmt::format("{}\t{:.6f}\n", to_string(mode), avg);
        }
        emit_report(a.common, text, out);
    }
    return kExitOk;
}

// ----------------------------------------------------------------- align

struct AlignArgs {
    Common common;
    std::string source;
    std::string target;
    double weight = 0.0;
    std::string penalty = "inverse";
    std::string gold;
    bool one_based = false;
    std::string report;
};

std::string f1_table(std::span<const AlignmentLinkSet> pred, std::span<const GoldAlignment> gold,
                     bool json_format) {
    const auto corpus = evaluate_corpus(pred, gold);
    if (json_format) {
        json pairs = json::array();
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const auto s = evaluate_f1(pred[i], gold[i]);
            pairs.push_back({{"pair", i}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}});
        }
        return dump_json({{"pairs", pairs},
                          {"corpus",
                           {{"precision", corpus.precision}, {"recall", corpus.recall}, {"f1", corpus.f1}}}});
    }
    std::string text = "pair\tprecision\trecall\tf1\n";
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto s = evaluate_f1(pred[i], gold[i]);
        text += fmt::format("{}\t{}\t{}\t{}\n", i, fixed(s.precision), fixed(s.recall), fixed(s.f1));
    }
    text += fmt::format("corpus\t{}\t{}\t{}\n", fixed(corpus.precision), fixed(corpus.recall), fixed(corpus.f1));
    return text;
}

void check_gold_size(std::size_t pairs, std::size_t gold) {
    if (pairs != gold) {
        throw ValidationError(fmt::format("{} sentence pairs but {} gold alignment lines", pairs, gold));
    }
}

int cmd_align(const AlignArgs& a, std::ostream& out) {
    const auto kind = parse_penalty_kind(a.penalty);
    const auto src = load_tokens(a.source);
    const auto tgt = load_tokens(a.target);
    if (src.size() != tgt.size()) {
        throw ValidationError(fmt::format("{} source vs {} target sentences", src.size(), tgt.size()));
    }
    std::vector<GoldAlignment> gold;
    if (!a.gold.empty()) {
        require_file(a.gold);
        gold = read_gold(a.gold, a.one_based);
        check_gold_size(src.size(), gold.size());
    }
    std::vector<AlignmentLinkSet> links;
    links.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) links.push_back(align_pair(src[i], tgt[i], a.weight, kind));

    std::string pharaoh;
    for (const auto& l : links) pharaoh += format_links(l) + "\n";
    std::string table;
    if (!gold.empty()) table = f1_table(links, gold, as_json(a.common));

    write_text(a.common.output, pharaoh);
    if (!table.empty()) {
        if (a.report.empty()) {
            out << table;
        } else {
            write_text(a.report, table);
        }
    }
    return kExitOk;
}

// ------------------------------------------------------------ align-eval

struct AlignEvalArgs {
    Common common;
    std::string pred;
    std::string gold;
    bool one_based = false;
};

int cmd_align_eval(const AlignEvalArgs& a, std::ostream& out) {
    require_file(a.pred);
    require_file(a.gold);
    const auto pred = read_links(a.pred, a.one_based);
    const auto gold = read_gold(a.gold, a.one_based);
    check_gold_size(pred.size(), gold.size());
    emit_report(a.common, f1_table(pred, gold, as_json(a.common)), out);
    return kExitOk;
}

// ------------------------------------------------------- tune-distortion

struct TuneArgs {
    Common common;
    std::string source;
    std::string target;
    std::string gold;
    std::string grid = "0,0.05,0.1,0.2,0.5,1";
    std::string penalty = "inverse";
    bool one_based = false;
};

int cmd_tune_distortion(const TuneArgs& a, std::ostream& out) {
    const auto kind = parse_penalty_kind(a.penalty);
    const auto grid = parse_grid(a.grid);
    const auto src = load_tokens(a.source);
    const auto tgt = load_tokens(a.target);
    require_file(a.gold);
    const auto gold = read_gold(a.gold, a.one_based);
    check_gold_size(src.size(), gold.size());
    const auto tuning = tune_distortion_weight(src, tgt, gold, grid, kind);
    if (as_json(a.common)) {
        json rows = json::array();
        for (const auto& [w, f1] : tuning.mean_f1) rows.push_back({{"weight", w}, {"mean_f1", f1}});
        emit_report(a.common,
                    dump_json({{"penalty", a.penalty}, {"grid", rows}, {"best_weight", tuning.best_weight}}),
                    out);
    } else {
        std::string text = "weight\tmean_f1\n";
        for (const auto& [w, f1] : tuning.mean_f1) text += fmt::format("{}\t{}\n", w, fixed(f1));
        text += fmt::format("best\t{}\n", tuning.best_weight);
        emit_report(a.common, text, out);
    }
    return kExitOk;
}

// ---------------------------------------------------------- langid-train

struct LangIdTrainArgs {
    Common common;
    std::vector<std::string> train;
    std::vector<std::string> valid;
    TrainerConfig trainer;
};

std::vector<SentenceVector> concat_sentences(const std::vector<std::string>& paths) {
    std::vector<SentenceVector> all;
    for (const auto& p : paths) {
        auto part = load_sentences(p);
        all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return all;
}

int cmd_langid_train(LangIdTrainArgs a, std::ostream& out) {
    a.trainer.seed = a.common.seed;
    const auto train = concat_sentences(a.train);
    const auto valid = concat_sentences(a.valid);
    TrainingHistory history;
    const auto model = train_langid(train, valid, a.trainer, &history);
    const double accuracy = langid_accuracy(model, valid);
    write_langid_model(model, a.common.output, {{"training", to_json(a.trainer)}, {"seed", a.common.seed}});
    if (as_json(a.common)) {
        json epochs = json::array();
        for (const auto& e : history.epochs) {
            epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"valid_accuracy", e.valid_metric}});
        }
        out << dump_json({{"command", "langid-train"},
                          {"labels", model.labels},
                          {"parameters", model.parameter_count()},
                          {"best_epoch", history.best_epoch},
                          {"valid_accuracy", accuracy},
                          {"epochs", epochs}});
    } else {
        out << "epoch\ttrain_loss\tvalid_accuracy\n";
        for (const auto& e : history.epochs) {
            out << fmt::format("{}\t{}\t{}\n", e.epoch, fixed(e.train_loss), fixed(e.valid_metric));
        }
        out << fmt::format("best_epoch\t{}\nvalid_accuracy\t{}\nparameters\t{}\n", history.best_epoch,
                           fixed(accuracy), model.parameter_count());
    }
    return kExitOk;
}

// ----------------------------------------------------------- langid-eval

struct LangIdEvalArgs {
    Common common;
    std::string model;
    std::vector<std::string> inputs;
};

int cmd_langid_eval(const LangIdEvalArgs& a, std::ostream& out) {
    require_file(a.model);
    const auto model = read_langid_model(a.model);
    const auto data = concat_sentences(a.inputs);
    if (data.empty()) throw ValidationError("langid-eval: no records");
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_lang;  // hits, total
    std::size_t hits = 0;
    for (const auto& s : data) {
        const bool ok = predict_lang(model, s.vector) == s.language;
        auto& [h, t] = per_lang[s.language];
        h += ok;
        ++t;
        hits += ok;
    }
    const double accuracy = static_cast<double>(hits) / static_cast<double>(data.size());
    if (as_json(a.common)) {
        json langs = json::object();
        for (const auto& [l, ht] : per_lang) {
            langs[l] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
        }
        emit_report(a.common, dump_json({{"accuracy", accuracy}, {"records", data.size()}, {"per_language", langs}}),
                    out);
    } else {
        std::string text = "language\taccuracy\trecords\n";
        for (const auto& [l, ht] : per_lang) {
            text += fmt::format("{}\t{}\t{}\n", l,
                                fixed(static_cast<double>(ht.first) / static_cast<double>(ht.second)), ht.second);
        }
        text += fmt::format("all\t{}\t{}\n", fixed(accuracy), data.size());
        emit_report(a.common, text, out);
    }
    return kExitOk;
}

// --------------------------------------------------------------- cluster

struct ClusterArgs {
    Common common;
    std::string centroids;
    std::string families = LNPROBE_DEFAULT_FAMILIES;
    std::size_t min_family_size = 3;
    std::size_t k = 0;
    std::size_t random_runs = 100;
};

int cmd_cluster(const ClusterArgs& a, std::ostream& out) {
    require_file(a.centroids);
    require_file(a.families);
    const auto all = read_centroids(a.centroids);
    const auto families = read_families(a.families);
    const auto kept = filter_by_family_size(all, families, a.min_family_size);
    if (kept.size() < 2) throw ValidationError("cluster: fewer than two languages after the family filter");
    std::vector<std::string> gold;
    for (const auto& c : kept) gold.push_back(families.at(c.language));
    const std::size_t n_families = std::set<std::string>(gold.begin(), gold.end()).size();
    const std::size_t k = a.k == 0 ? n_families : a.k;

    const auto labels = agglomerate(kept, k);
    const auto score = v_measure(labels, gold);
    const auto random = random_baseline(gold, k, a.random_runs, a.common.seed);
    const auto coords = project_2d(kept);

    std::string assignments = "language\tfamily\tcluster\n";
    std::string coord_tsv = "language\tfamily\tx\ty\n";
    for (std::size_t i = 0; i < kept.size(); ++i) {
        assignments += fmt::format("{}\t{}\t{}\n", kept[i].language, gold[i], labels[i]);
        coord_tsv += fmt::format("{}\t{}\t{:.6f}\t{:.6f}\n", kept[i].language, gold[i], coords[i].first,
                                 coords[i].second);
    }
    auto score_json = [](const ClusterScore& s) {
        return json{{"homogeneity", s.homogeneity}, {"completeness", s.completeness}, {"v_measure", s.v_measure}};
    };
    const json summary{{"languages", kept.size()},
                       {"families", n_families},
                       {"clusters", k},
                       {"score", score_json(score)},
                       {"random", score_json(random)},
                       {"random_runs", a.random_runs}};

    const fs::path prefix = a.common.output;
    write_text(fs::path(prefix.string() + ".assignments.tsv"), assignments);
    write_text(fs::path(prefix.string() + ".score.json"), dump_json(summary));
    write_text(fs::path(prefix.string() + ".coords.tsv"), coord_tsv);
    if (as_json(a.common)) {
        out << dump_json(summary);
    } else {
        out << "system\thomogeneity\tcompleteness\tv_measure\n";
        out << fmt::format("clustering\t{}\t{}\t{}\n", fixed(score.homogeneity), fixed(score.completeness),
                           fixed(score.v_measure));
        out << fmt::format("random\t{}\t{}\t{}\n", fixed(random.homogeneity), fixed(random.completeness),
                           fixed(random.v_measure));
    }
    return kExitOk;
}

// -------------------------------------------------------------------- qe

struct QeArgs {
    Common common;
    std::string source;
    std::string target;
    std::string test;
    std::string train;
    std::string valid;
    std::string variant = "plain";
    std::string centroids;
    std::string projection;
    std::string model_output;
    TrainerConfig trainer;
};

int cmd_qe(QeArgs a, std::ostream& out) {
    a.trainer.seed = a.common.seed;
    const bool regression = a.variant == "src_only" || a.variant == "tgt_only" || a.variant == "full";
    std::optional<QeCosineVariant> cosine;
    std::optional<QeInputMode> input_mode;
    if (regression) {
        input_mode = parse_qe_input_mode(a.variant);
        if (a.train.empty()) throw ConfigError("regression QE requires --train");
    } else {
        cosine = parse_qe_cosine_variant(a.variant);
        if (*cosine == QeCosineVariant::centered && a.centroids.empty()) {
            throw ConfigError("centered QE requires --centroids");
        }
        if (*cosine == QeCosineVariant::projected && a.projection.empty()) {
            throw ConfigError("projected QE requires --projection");
        }
    }
    if (!a.model_output.empty() && !regression) throw ConfigError("--model-output only applies to regression");

    const auto sources = load_sentences(a.source);
    const auto targets = load_sentences(a.target);
    auto samples_from = [&](const std::string& path) {
        require_file(path);
        const auto rows = read_qe_tsv(path);
        return resolve_qe(rows, sources, targets);
    };
    const auto test = samples_from(a.test);
    if (test.size() < 2) throw ValidationError("qe: need at least two test samples");

    json report{{"variant", a.variant}, {"test_samples", test.size()}};
    std::optional<MLPRegressor> model;
    double r = 0.0;
    if (cosine) {
        QeCosineAux aux;
        if (*cosine == QeCosineVariant::centered) {
            const auto cmap = centroid_map(a.centroids);
            const auto& sl = sources.front().language;
            const auto& tl = targets.front().language;
            if (!cmap.contains(sl) || !cmap.contains(tl)) {
                throw ValidationError(fmt::format("qe: centroids for '{}' and '{}' required", sl, tl));
            }
            aux.source_centroid = cmap.at(sl);
            aux.target_centroid = cmap.at(tl);
        }
        if (*cosine == QeCosineVariant::projected) {
            require_file(a.projection);
            aux.projection = read_projection(a.projection);
        }
        r = qe_cosine_score(test, *cosine, aux);
    } else {
        auto train = samples_from(a.train);
        std::vector<QESample> valid;
        if (!a.valid.empty()) {
            valid = samples_from(a.valid);
        } else {
            // Hold out the last tenth of the training rows.
            const std::size_t held = std::max<std::size_t>(1, train.size() / 10);
            if (train.size() < 2) throw ValidationError("qe: need at least two training samples");
            valid.assign(train.end() - static_cast<std::ptrdiff_t>(held), train.end());
            train.resize(train.size() - held);
        }
        TrainingHistory history;
        model = train_qe(train, valid, *input_mode, a.trainer, &history);
        std::vector<double> pred, hter;
        for (const auto& s : test) {
            pred.push_back(qe_predict(*model, s));
            hter.push_back(s.hter);
        }
        r = pearson(pred, hter);
        report["train_samples"] = train.size();
        report["valid_samples"] = valid.size();
        report["best_epoch"] = history.best_epoch;
        report["parameters"] = model->parameter_count();
    }
    report["pearson"] = r;

    if (model && !a.model_output.empty()) {
        write_qe_model(*model, a.model_output, {{"training", to_json(a.trainer)}, {"seed", a.common.seed}});
    }
    if (as_json(a.common)) {
        emit_report(a.common, dump_json(report), out);
    } else {
        emit_report(a.common, fmt::format("variant\t{}\nsamples\t{}\npearson\t{}\n", a.variant, test.size(), fixed(r)),
                    out);
    }
    return kExitOk;
}

// ----------------------------------------------------------------- synth

struct SynthArgs {
    Common common;
    std::string languages = "cs,de,en,es,fr,ru";
    AdditiveModelConfig config;
};

int cmd_synth(SynthArgs a, std::ostream& out) {
    a.config.languages = split_list(a.languages);
    a.config.seed = a.common.seed;
    const auto corpus = generate_additive(a.config);
    const fs::path dir = a.common.output;
    fs::create_directories(dir);
    for (const auto& [lang, set] : corpus.dumps) write_dump(set, dir / (lang + ".memb"));
    if (as_json(a.common)) {
        out << dump_json({{"command", "synth"},
                          {"languages", a.config.languages},
                          {"sentences", a.config.sentences},
                          {"dim", a.config.dim},
                          {"tokens", a.config.tokens},
                          {"offset_scale", a.config.offset_scale},
                          {"noise", a.config.noise},
                          {"seed", a.config.seed}});
    } else {
        out << "language\tfile\trecords\n";
        for (const auto& [lang, set] : corpus.dumps) out << fmt::format("{}\t{}.memb\t{}\n", lang, lang, set.size());
    }
    return kExitOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Language-neutrality probes for multilingual embeddings", "lnprobe"};
    app.require_subcommand(1);

    PoolArgs pool;
    auto* c_pool = app.add_subcommand("pool", "Pool token matrices into sentence vectors");
    add_common(c_pool, pool.common, "Sentence-vector dump to write", true);
    c_pool->add_option("--input", pool.input, "Token-matrix dump")->required();
    c_pool->add_option("--pooling", pool.pooling, "mean or cls")
        ->check(CLI::IsMember({"mean", "cls"}))
        ->capture_default_str();
    c_pool->add_flag("--keep-special", pool.keep_special, "Include flagged special rows in the mean");

    CentroidsArgs cents;
    auto* c_cent = app.add_subcommand("centroids", "Per-language centroids of sentence vectors");
    add_common(c_cent, cents.common, "Centroid dump to write", true);
    c_cent->add_option("--input", cents.inputs, "Sentence-vector dumps")->required();

    CenterArgs ctr;
    auto* c_ctr = app.add_subcommand("center", "Subtract language centroids");
    add_common(c_ctr, ctr.common, "Centered dump to write", true);
    c_ctr->add_option("--input", ctr.input, "Sentence-vector dump")->required();
    c_ctr->add_option("--centroids", ctr.centroids, "Centroid dump")->required();

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit-projection", "Least-squares projection source -> target");
    add_common(c_fit, fit.common, "Projection dump to write", true);
    c_fit->add_option("--source", fit.source, "Source-language sentence vectors")->required();
    c_fit->add_option("--target", fit.target, "Target-language sentence vectors, same order")->required();
    c_fit->add_flag("--bias", fit.bias, "Fit an intercept as well");

    RetrieveArgs ret;
    auto* c_ret = app.add_subcommand("retrieve", "Parallel sentence retrieval over all language pairs");
    add_common(c_ret, ret.common, "Report file (default stdout)", false);
    c_ret->add_option("--input", ret.inputs, "Sentence-vector dumps, one per language")->required();
    c_ret->add_option("--mode", ret.modes, "plain, centered, projected (repeatable)")
        ->check(CLI::IsMember({"plain", "centered", "projected"}));
    c_ret->add_option("--centroids", ret.centroids, "Centroid dump for centered mode");
    c_ret->add_option("--projection", ret.projections, "Projection dumps into the pivot language");

    AlignArgs aln;
    auto* c_aln = app.add_subcommand("align", "Word alignment by minimum-weight edge cover");
    add_common(c_aln, aln.common, "Pharaoh link file to write", true);
    c_aln->add_option("--source", aln.source, "Source token dump with word spans")->required();
    c_aln->add_option("--target", aln.target, "Target token dump with word spans")->required();
    c_aln->add_option("--weight", aln.weight, "Distortion penalty weight")->capture_default_str();
    c_aln->add_option("--penalty", aln.penalty, "none, inverse, linear")
        ->check(CLI::IsMember({"none", "inverse", "linear"}))
        ->capture_default_str();
    c_aln->add_option("--gold", aln.gold, "Gold alignment file (Pharaoh, i-j sure, i?j possible)");
    c_aln->add_flag("--one-based", aln.one_based, "Gold indices start at 1");
    c_aln->add_option("--report", aln.report, "P/R/F1 table file (default stdout)");

    AlignEvalArgs ae;
    auto* c_ae = app.add_subcommand("align-eval", "Score predicted links against gold");
    add_common(c_ae, ae.common, "Report file (default stdout)", false);
    c_ae->add_option("--pred", ae.pred, "Predicted Pharaoh links")->required();
    c_ae->add_option("--gold", ae.gold, "Gold alignment file")->required();
    c_ae->add_flag("--one-based", ae.one_based, "Indices start at 1");

    TuneArgs tune;
    auto* c_tune = app.add_subcommand("tune-distortion", "Pick the distortion weight on a dev set");
    add_common(c_tune, tune.common, "Report file (default stdout)", false);
    c_tune->add_option("--source", tune.source, "Source token dump")->required();
    c_tune->add_option("--target", tune.target, "Target token dump")->required();
    c_tune->add_option("--gold", tune.gold, "Gold alignment file")->required();
    c_tune->add_option("--grid", tune.grid, "Comma-separated weights")->capture_default_str();
    c_tune->add_option("--penalty", tune.penalty, "none, inverse, linear")
        ->check(CLI::IsMember({"none", "inverse", "linear"}))
        ->capture_default_str();
    c_tune->add_flag("--one-based", tune.one_based, "Gold indices start at 1");

    LangIdTrainArgs lt;
    auto* c_lt = app.add_subcommand("langid-train", "Train the linear language-ID probe");
    add_common(c_lt, lt.common, "Model dump to write", true);
    c_lt->add_option("--train", lt.train, "Training sentence vectors")->required();
    c_lt->add_option("--valid", lt.valid, "Validation sentence vectors")->required();
    add_trainer_options(c_lt, lt.trainer);

    LangIdEvalArgs le;
    auto* c_le = app.add_subcommand("langid-eval", "Evaluate a language-ID probe");
    add_common(c_le, le.common, "Report file (default stdout)", false);
    c_le->add_option("--model", le.model, "Model dump")->required();
    c_le->add_option("--input", le.inputs, "Sentence-vector dumps")->required();

    ClusterArgs cl;
    auto* c_cl = app.add_subcommand("cluster", "Cluster language centroids and score against families");
    add_common(c_cl, cl.common, "Output prefix for .assignments.tsv, .score.json, .coords.tsv", true);
    c_cl->add_option("--centroids", cl.centroids, "Centroid dump")->required();
    c_cl->add_option("--families", cl.families, "language<TAB>family file")->capture_default_str();
    c_cl->add_option("--min-family-size", cl.min_family_size, "Drop families with fewer languages")
        ->capture_default_str();
    c_cl->add_option("--k", cl.k, "Cluster count (default: number of families)");
    c_cl->add_option("--random-runs", cl.random_runs, "Seeds for the random baseline")->capture_default_str();

    QeArgs qe;
    auto* c_qe = app.add_subcommand("qe", "MT quality estimation against HTER");
    add_common(c_qe, qe.common, "Report file (default stdout)", false);
    c_qe->add_option("--source", qe.source, "Source sentence vectors")->required();
    c_qe->add_option("--target", qe.target, "MT output sentence vectors")->required();
    c_qe->add_option("--test", qe.test, "Test TSV: source_id, target_id, hter")->required();
    c_qe->add_option("--variant", qe.variant, "plain, centered, projected, src_only, tgt_only, full")
        ->check(CLI::IsMember({"plain", "centered", "projected", "src_only", "tgt_only", "full"}))
        ->capture_default_str();
    c_qe->add_option("--centroids", qe.centroids, "Centroid dump (centered)");
    c_qe->add_option("--projection", qe.projection, "Projection dump (projected)");
    c_qe->add_option("--train", qe.train, "Training TSV (regression)");
    c_qe->add_option("--valid", qe.valid, "Validation TSV (regression; default last 10% of train)");
    c_qe->add_option("--model-output", qe.model_output, "Write the trained regressor here");
    add_trainer_options(c_qe, qe.trainer);

    SynthArgs syn;
    auto* c_syn = app.add_subcommand("synth", "Generate additive-model synthetic dumps");
    add_common(c_syn, syn.common, "Output directory", true);
    c_syn->add_option("--languages", syn.languages, "Comma-separated language codes")->capture_default_str();
    c_syn->add_option("--sentences", syn.config.sentences, "Sentences per language")->capture_default_str();
    c_syn->add_option("--dim", syn.config.dim, "Dimension")->capture_default_str();
    c_syn->add_option("--tokens", syn.config.tokens, "Word rows per sentence")->capture_default_str();
    c_syn->add_option("--offset-scale", syn.config.offset_scale, "Language offset scale")->capture_default_str();
    c_syn->add_option("--noise", syn.config.noise, "Noise scale")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (c_pool->parsed()) return cmd_pool(pool, out);
        if (c_cent->parsed()) return cmd_centroids(cents, out);
        if (c_ctr->parsed()) return cmd_center(ctr, out);
        if (c_fit->parsed()) return cmd_fit_projection(fit, out);
        if (c_ret->parsed()) return cmd_retrieve(ret, out);
        if (c_aln->parsed()) return cmd_align(aln, out);
        if (c_ae->parsed()) return cmd_align_eval(ae, out);
        if (c_tune->parsed()) return cmd_tune_distortion(tune, out);
        if (c_lt->parsed()) return cmd_langid_train(lt, out);
        if (c_le->parsed()) return cmd_langid_eval(le, out);
        if (c_cl->parsed()) return cmd_cluster(cl, out);
        if (c_qe->parsed()) return cmd_qe(qe, out);
        if (c_syn->parsed()) return cmd_synth(syn, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    err << "error: no command\n";
    return kExitUsage;
}

}  // namespace lnprobe::cli
