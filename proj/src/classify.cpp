#include "lnprobe/classify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "lnprobe/errors.hpp"
#include "lnprobe/random.hpp"

namespace lnprobe {

namespace {

Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

void require_dim(std::size_t got, std::size_t want, std::string_view what) {
    if (got != want) throw ValidationError(fmt::format("{}: dimension {} but model expects {}", what, got, want));
}

// Visits `order` in consecutive chunks of at most batch_size indices.
template <typename Fn>
void for_each_batch(const std::vector<std::size_t>& order, std::size_t batch_size, Fn&& fn) {
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t stop = std::min(order.size(), start + batch_size);
        fn(std::span<const std::size_t>(order.data() + start, stop - start));
    }
}

void check_trainer_config(const TrainerConfig& c) {
    if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
        throw ConfigError("learning rate must be positive");
    }
    if (c.batch_size == 0) throw ConfigError("batch size must be positive");
    if (c.max_epochs == 0) throw ConfigError("max epochs must be positive");
    if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
}

// ---- softmax internals, over an index subset of the data

SoftmaxGradient softmax_accumulate(const LinearSoftmaxModel& model, std::span<const Vector> inputs,
                                   std::span<const std::size_t> targets,
                                   std::span<const std::size_t> rows) {
    const auto n_labels = static_cast<Eigen::Index>(model.labels.size());
    SoftmaxGradient g;
    g.weights = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
    g.biases = Eigen::VectorXd::Zero(n_labels);
    const double scale = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
        const auto x = as_eigen(inputs[r]);
        Eigen::VectorXd z = model.weights.transpose() * x + model.biases;
        const double zmax = z.maxCoeff();
        Eigen::VectorXd p = (z.array() - zmax).exp();
        const double total = p.sum();
        p /= total;
        const auto y = static_cast<Eigen::Index>(targets[r]);
        g.loss -= (z(y) - zmax - std::log(total)) * scale;
        p(y) -= 1.0;
        p *= scale;
        g.weights.noalias() += x * p.transpose();
        g.biases += p;
    }
    return g;
}

std::size_t argmax_first(const Eigen::VectorXd& z) {
    std::size_t best = 0;
    for (Eigen::Index i = 1; i < z.size(); ++i) {
        if (z(i) > z(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
    }
    return best;
}

// ---- MLP internals

MlpGradient mlp_accumulate(const MLPRegressor& model, std::span<const Vector> inputs,
                           std::span<const double> targets, std::span<const std::size_t> rows) {
    MlpGradient g;
    g.w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
    g.b1 = Eigen::VectorXd::Zero(model.b1.size());
    g.w2 = Eigen::VectorXd::Zero(model.w2.size());
    const double scale = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
        const auto x = as_eigen(inputs[r]);
        const Eigen::VectorXd pre = model.w1.transpose() * x + model.b1;
        const Eigen::VectorXd h = pre.cwiseMax(0.0);
        const double err = model.w2.dot(h) + model.b2 - targets[r];
        g.loss += err * err * scale;
        const double dy = 2.0 * err * scale;
        g.w2 += dy * h;
        g.b2 += dy;
        const Eigen::VectorXd dh = (pre.array() > 0.0).select(dy * model.w2, 0.0);
        g.w1.noalias() += x * dh.transpose();
        g.b1 += dh;
    }
    return g;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

double mse_of(const MLPRegressor& model, std::span<const Vector> inputs, std::span<const double> targets) {
    double s = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double e = mlp_predict(model, inputs[i]) - targets[i];
        s += e * e;
    }
    return s / static_cast<double>(inputs.size());
}

std::vector<double> doubles_of(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd vector_from(const nlohmann::json& j, const char* key, std::size_t expect,
                            const std::filesystem::path& path) {
    const auto values = j.value(key, std::vector<double>{});
    if (values.size() != expect) {
        throw CorruptionError(fmt::format("{}: sidecar field '{}' has {} entries, expected {}",
                                          path.string(), key, values.size(), expect));
    }
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

nlohmann::json to_json(const TrainerConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
            {"patience", c.patience},           {"max_epochs", c.max_epochs},
            {"momentum", c.momentum},           {"seed", c.seed}};
}

// ---------------------------------------------------------------- language ID

Eigen::VectorXd LinearSoftmaxModel::logits(std::span<const double> x) const {
    require_dim(x.size(), dim(), "logits");
    return weights.transpose() * as_eigen(x) + biases;
}

SoftmaxGradient softmax_loss_gradient(const LinearSoftmaxModel& model, std::span<const Vector> inputs,
                                      std::span<const std::size_t> targets) {
    if (inputs.empty() || inputs.size() != targets.size()) {
        throw ValidationError("softmax_loss_gradient: inputs and targets must be non-empty and aligned");
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        require_dim(inputs[i].size(), model.dim(), "softmax_loss_gradient");
        if (targets[i] >= model.labels.size()) throw ValidationError("softmax_loss_gradient: bad target");
    }
    const auto rows = iota_indices(inputs.size());
    return softmax_accumulate(model, inputs, targets, rows);
}

const std::string& predict_lang(const LinearSoftmaxModel& model, std::span<const double> x) {
    return model.labels[argmax_first(model.logits(x))];
}

double langid_accuracy(const LinearSoftmaxModel& model, std::span<const SentenceVector> data) {
    if (data.empty()) throw ValidationError("langid_accuracy: empty data");
    std::size_t hits = 0;
    for (const auto& s : data) {
        if (predict_lang(model, s.vector) == s.language) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

LinearSoftmaxModel train_langid(std::span<const SentenceVector> train,
                                std::span<const SentenceVector> valid, const TrainerConfig& config,
                                TrainingHistory* history) {
    check_trainer_config(config);
    if (train.empty() || valid.empty()) throw ValidationError("train_langid: empty train or valid set");
    std::vector<std::string> labels;
    for (const auto& s : train) labels.push_back(s.language);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (labels.size() < 2) throw ValidationError("train_langid: need at least two distinct languages");
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;

    const std::size_t dim = train.front().vector.size();
    std::vector<Vector> xs;
    std::vector<std::size_t> ys;
    for (const auto& s : train) {
        require_dim(s.vector.size(), dim, fmt::format("train record {}", s.sentence_id));
        xs.push_back(s.vector);
        ys.push_back(index.at(s.language));
    }
    for (const auto& s : valid) {
        require_dim(s.vector.size(), dim, fmt::format("valid record {}", s.sentence_id));
        if (!index.contains(s.language)) {
            throw ValidationError(fmt::format("valid record {}: language '{}' not in training data",
                                              s.sentence_id, s.language));
        }
    }

    const auto d = static_cast<Eigen::Index>(dim);
    const auto l = static_cast<Eigen::Index>(labels.size());
    LinearSoftmaxModel model{Eigen::MatrixXd::Zero(d, l), Eigen::VectorXd::Zero(l), labels};
    Eigen::MatrixXd vel_w = Eigen::MatrixXd::Zero(d, l);
    Eigen::VectorXd vel_b = Eigen::VectorXd::Zero(l);

    LinearSoftmaxModel best = model;
    double best_accuracy = langid_accuracy(model, valid);
    TrainingHistory local;
    std::size_t stale = 0;
    Rng rng(config.seed);
    auto order = iota_indices(xs.size());
    const auto all = iota_indices(xs.size());

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for_each_batch(order, config.batch_size, [&](std::span<const std::size_t> batch) {
            const auto g = softmax_accumulate(model, xs, ys, batch);
            vel_w = config.momentum * vel_w - config.learning_rate * g.weights;
            vel_b = config.momentum * vel_b - config.learning_rate * g.biases;
            model.weights += vel_w;
            model.biases += vel_b;
        });
        const double loss = softmax_accumulate(model, xs, ys, all).loss;
        if (!std::isfinite(loss) || !model.weights.allFinite()) {
            throw TrainingError(fmt::format("train_langid: loss diverged at epoch {}", epoch));
        }
        const double accuracy = langid_accuracy(model, valid);
        local.epochs.push_back({epoch, loss, accuracy});
        if (accuracy > best_accuracy) {
            best_accuracy = accuracy;
            best = model;
            local.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    if (history) *history = std::move(local);
    return best;
}

void write_langid_model(const LinearSoftmaxModel& model, const std::filesystem::path& path,
                        const nlohmann::json& extra) {
    std::vector<SentenceVector> rows;
    for (std::size_t l = 0; l < model.labels.size(); ++l) {
        const Eigen::VectorXd col = model.weights.col(static_cast<Eigen::Index>(l));
        rows.push_back({model.labels[l], model.labels[l], Pooling::mean, doubles_of(col)});
    }
    write_dump(make_sentence_set(std::move(rows), model.dim()), path);
    nlohmann::json meta = extra;
    meta["type"] = "langid";
    meta["model_id"] = "";
    meta["layer"] = 0;
    meta["labels"] = model.labels;
    meta["biases"] = doubles_of(model.biases);
    meta["parameters"] = model.parameter_count();
    write_sidecar(path, meta);
}

LinearSoftmaxModel read_langid_model(const std::filesystem::path& path) {
    const auto set = read_dump(path);
    const auto meta = read_sidecar(path);
    if (meta.value("type", std::string{}) != "langid") {
        throw FormatError(fmt::format("{}: not a language-ID model", path.string()));
    }
    const auto& rows = set.sentences();
    LinearSoftmaxModel m;
    m.weights.resize(static_cast<Eigen::Index>(set.dim), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t l = 0; l < rows.size(); ++l) {
        m.labels.push_back(rows[l].sentence_id);
        m.weights.col(static_cast<Eigen::Index>(l)) = as_eigen(rows[l].vector);
    }
    m.biases = vector_from(meta, "biases", rows.size(), path);
    return m;
}

// ------------------------------------------------------ quality estimation

std::string_view to_string(QeInputMode m) {
    switch (m) {
        case QeInputMode::src_only: return "src_only";
        case QeInputMode::tgt_only: return "tgt_only";
        case QeInputMode::full: return "full";
    }
    return "?";
}

QeInputMode parse_qe_input_mode(std::string_view s) {
    if (s == "src_only") return QeInputMode::src_only;
    if (s == "tgt_only") return QeInputMode::tgt_only;
    if (s == "full") return QeInputMode::full;
    throw ConfigError(fmt::format("unknown QE input mode '{}'", s));
}

std::size_t qe_input_dim(QeInputMode mode, std::size_t dim) {
    return mode == QeInputMode::full ? 2 * dim : dim;
}

Vector qe_input(const QESample& s, QeInputMode mode) {
    switch (mode) {
        case QeInputMode::src_only: return s.source;
        case QeInputMode::tgt_only: return s.target;
        case QeInputMode::full: {
            Vector v = s.source;
            v.insert(v.end(), s.target.begin(), s.target.end());
            return v;
        }
    }
    return {};
}

MLPRegressor init_mlp(std::size_t input_dim, QeInputMode mode, std::uint64_t seed) {
    if (input_dim == 0) throw ValidationError("init_mlp: input dimension is 0");
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(input_dim);
    const auto h = static_cast<Eigen::Index>(kQeHiddenWidth);
    MLPRegressor m;
    m.input_mode = mode;
    m.w1.resize(d, h);
    const double s1 = std::sqrt(2.0 / static_cast<double>(input_dim));
    for (Eigen::Index j = 0; j < h; ++j) {
        for (Eigen::Index i = 0; i < d; ++i) m.w1(i, j) = s1 * rng.normal();
    }
    m.b1 = Eigen::VectorXd::Zero(h);
    m.w2.resize(h);
    const double s2 = std::sqrt(1.0 / static_cast<double>(kQeHiddenWidth));
    for (Eigen::Index j = 0; j < h; ++j) m.w2(j) = s2 * rng.normal();
    m.b2 = 0.0;
    return m;
}

double mlp_predict(const MLPRegressor& model, std::span<const double> input) {
    require_dim(input.size(), model.input_dim(), "mlp_predict");
    const Eigen::VectorXd h = (model.w1.transpose() * as_eigen(input) + model.b1).cwiseMax(0.0);
    return model.w2.dot(h) + model.b2;
}

double qe_predict(const MLPRegressor& model, const QESample& sample) {
    return mlp_predict(model, qe_input(sample, model.input_mode));
}

MlpGradient mlp_loss_gradient(const MLPRegressor& model, std::span<const Vector> inputs,
                              std::span<const double> targets) {
    if (inputs.empty() || inputs.size() != targets.size()) {
        throw ValidationError("mlp_loss_gradient: inputs and targets must be non-empty and aligned");
    }
    for (const auto& x : inputs) require_dim(x.size(), model.input_dim(), "mlp_loss_gradient");
    const auto rows = iota_indices(inputs.size());
    return mlp_accumulate(model, inputs, targets, rows);
}

MLPRegressor train_qe(std::span<const QESample> train, std::span<const QESample> valid,
                      QeInputMode mode, const TrainerConfig& config, TrainingHistory* history) {
    check_trainer_config(config);
    if (train.empty() || valid.empty()) throw ValidationError("train_qe: empty train or valid set");
    const std::size_t dim = train.front().source.size();
    auto inputs_of = [&](std::span<const QESample> data, std::vector<Vector>& xs, std::vector<double>& ys) {
        for (const auto& s : data) {
            if (s.source.size() != dim || s.target.size() != dim) {
                throw ValidationError("train_qe: samples have inconsistent dimensions");
            }
            if (!std::isfinite(s.hter)) throw ValidationError("train_qe: non-finite HTER");
            xs.push_back(qe_input(s, mode));
            ys.push_back(s.hter);
        }
    };
    std::vector<Vector> xs, vxs;
    std::vector<double> ys, vys;
    inputs_of(train, xs, ys);
    inputs_of(valid, vxs, vys);

    MLPRegressor model = init_mlp(qe_input_dim(mode, dim), mode, config.seed);
    model.b2 = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());

    Eigen::MatrixXd vel_w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
    Eigen::VectorXd vel_b1 = Eigen::VectorXd::Zero(model.b1.size());
    Eigen::VectorXd vel_w2 = Eigen::VectorXd::Zero(model.w2.size());
    double vel_b2 = 0.0;

    MLPRegressor best = model;
    double best_mse = mse_of(model, vxs, vys);
    TrainingHistory local;
    std::size_t stale = 0;
    // Shuffling uses a stream separate from initialization.
    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    auto order = iota_indices(xs.size());
    const auto all = iota_indices(xs.size());
    const double lr = config.learning_rate;
    const double mu = config.momentum;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for_each_batch(order, config.batch_size, [&](std::span<const std::size_t> batch) {
            const auto g = mlp_accumulate(model, xs, ys, batch);
            vel_w1 = mu * vel_w1 - lr * g.w1;
            vel_b1 = mu * vel_b1 - lr * g.b1;
            vel_w2 = mu * vel_w2 - lr * g.w2;
            vel_b2 = mu * vel_b2 - lr * g.b2;
            model.w1 += vel_w1;
            model.b1 += vel_b1;
            model.w2 += vel_w2;
            model.b2 += vel_b2;
        });
        const double loss = mlp_accumulate(model, xs, ys, all).loss;
        if (!std::isfinite(loss)) {
            throw TrainingError(fmt::format("train_qe: loss diverged at epoch {}", epoch));
        }
        const double valid_mse = mse_of(model, vxs, vys);
        local.epochs.push_back({epoch, loss, valid_mse});
        if (valid_mse < best_mse) {
            best_mse = valid_mse;
            best = model;
            local.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    if (history) *history = std::move(local);
    return best;
}

void write_qe_model(const MLPRegressor& model, const std::filesystem::path& path,
                    const nlohmann::json& extra) {
    std::vector<SentenceVector> rows;
    for (Eigen::Index k = 0; k < model.w1.cols(); ++k) {
        const Eigen::VectorXd col = model.w1.col(k);
        rows.push_back({fmt::format("h{}", k), "", Pooling::mean, doubles_of(col)});
    }
    write_dump(make_sentence_set(std::move(rows), model.input_dim()), path);
    nlohmann::json meta = extra;
    meta["type"] = "qe-mlp";
    meta["model_id"] = "";
    meta["layer"] = 0;
    meta["input_mode"] = to_string(model.input_mode);
    meta["activation"] = "relu";
    meta["hidden"] = kQeHiddenWidth;
    meta["b1"] = doubles_of(model.b1);
    meta["w2"] = doubles_of(model.w2);
    meta["b2"] = model.b2;
    meta["parameters"] = model.parameter_count();
    write_sidecar(path, meta);
}

MLPRegressor read_qe_model(const std::filesystem::path& path) {
    const auto set = read_dump(path);
    const auto meta = read_sidecar(path);
    if (meta.value("type", std::string{}) != "qe-mlp") {
        throw FormatError(fmt::format("{}: not a QE regressor", path.string()));
    }
    const auto& rows = set.sentences();
    if (rows.size() != kQeHiddenWidth) {
        throw CorruptionError(fmt::format("{}: {} hidden units, expected {}", path.string(), rows.size(),
                                          kQeHiddenWidth));
    }
    MLPRegressor m;
    m.input_mode = parse_qe_input_mode(meta.value("input_mode", std::string{"full"}));
    m.w1.resize(static_cast<Eigen::Index>(set.dim), static_cast<Eigen::Index>(kQeHiddenWidth));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        m.w1.col(static_cast<Eigen::Index>(k)) = as_eigen(rows[k].vector);
    }
    m.b1 = vector_from(meta, "b1", kQeHiddenWidth, path);
    m.w2 = vector_from(meta, "w2", kQeHiddenWidth, path);
    m.b2 = meta.value("b2", 0.0);
    return m;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ValidationError(fmt::format("pearson: lengths differ ({} vs {})", x.size(), y.size()));
    }
    if (x.size() < 2) throw ValidationError("pearson: need at least two observations");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw NumericError("pearson: correlation undefined for a constant sequence");
    return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

std::string_view to_string(QeCosineVariant v) {
    switch (v) {
        case QeCosineVariant::plain: return "plain";
        case QeCosineVariant::centered: return "centered";
        case QeCosineVariant::projected: return "projected";
    }
    return "?";
}

QeCosineVariant parse_qe_cosine_variant(std::string_view s) {
    if (s == "plain") return QeCosineVariant::plain;
    if (s == "centered") return QeCosineVariant::centered;
    if (s == "projected") return QeCosineVariant::projected;
    throw ConfigError(fmt::format("unknown QE variant '{}'", s));
}

std::vector<double> qe_distances(std::span<const QESample> samples, QeCosineVariant variant,
                                 const QeCosineAux& aux) {
    if (variant == QeCosineVariant::centered && (!aux.source_centroid || !aux.target_centroid)) {
        throw ConfigError("centered QE needs source and target centroids");
    }
    if (variant == QeCosineVariant::projected && !aux.projection) {
        throw ConfigError("projected QE needs a projection");
    }
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        switch (variant) {
            case QeCosineVariant::plain: out.push_back(cosine_distance(s.source, s.target)); break;
            case QeCosineVariant::centered: {
                const std::vector<Vector> src{s.source}, tgt{s.target};
                const auto cs = subtract(src, aux.source_centroid->vector);
                const auto ct = subtract(tgt, aux.target_centroid->vector);
                out.push_back(cosine_distance(cs.front(), ct.front()));
                break;
            }
            case QeCosineVariant::projected:
                out.push_back(cosine_distance(apply_projection(*aux.projection, s.source), s.target));
                break;
        }
    }
    return out;
}

double qe_cosine_score(std::span<const QESample> samples, QeCosineVariant variant,
                       const QeCosineAux& aux) {
    const auto distances = qe_distances(samples, variant, aux);
    std::vector<double> hter;
    hter.reserve(samples.size());
    for (const auto& s : samples) hter.push_back(s.hter);
    return pearson(distances, hter);
}

std::vector<QeRow> read_qe_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    std::vector<QeRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("source_id", 0) == 0) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (;;) {
            const auto tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (cols.size() != 3) {
            throw FormatError(fmt::format("{}:{}: expected 3 tab-separated columns", path.string(), line_no));
        }
        QeRow row{cols[0], cols[1], 0.0};
        const auto& h = cols[2];
        const auto [ptr, ec] = std::from_chars(h.data(), h.data() + h.size(), row.hter);
        if (ec != std::errc{} || ptr != h.data() + h.size() || !std::isfinite(row.hter) || row.hter < 0.0) {
            throw FormatError(fmt::format("{}:{}: bad HTER value '{}'", path.string(), line_no, h));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<QESample> resolve_qe(std::span<const QeRow> rows, std::span<const SentenceVector> sources,
                                 std::span<const SentenceVector> targets) {
    std::unordered_map<std::string, const SentenceVector*> src_by_id, tgt_by_id;
    for (const auto& s : sources) src_by_id.emplace(s.sentence_id, &s);
    for (const auto& t : targets) tgt_by_id.emplace(t.sentence_id, &t);
    std::vector<QESample> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        const auto s = src_by_id.find(r.source_id);
        if (s == src_by_id.end()) throw ValidationError(fmt::format("QE: unknown source id '{}'", r.source_id));
        const auto t = tgt_by_id.find(r.target_id);
        if (t == tgt_by_id.end()) throw ValidationError(fmt::format("QE: unknown target id '{}'", r.target_id));
        out.push_back({s->second->vector, t->second->vector, r.hter});
    }
    return out;
}

}  // namespace lnprobe
