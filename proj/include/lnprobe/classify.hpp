#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lnprobe/embstore.hpp"
#include "lnprobe/geometry.hpp"

namespace lnprobe {

// Mini-batch gradient descent settings shared by both probes.
struct TrainerConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 64;
    std::size_t patience = 5;  // epochs without validation improvement before stopping
    std::size_t max_epochs = 100;
    double momentum = 0.0;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const TrainerConfig& c);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;    // full training-set loss after the epoch
    double valid_metric = 0.0;  // accuracy (language ID) or MSE (QE)
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // 0 = the initial parameters were never beaten
};

// ---------------------------------------------------------------- language ID

struct LinearSoftmaxModel {
    Eigen::MatrixXd weights;  // dim x L
    Eigen::VectorXd biases;   // L
    std::vector<std::string> labels;

    std::size_t dim() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t parameter_count() const {
        return static_cast<std::size_t>(weights.size() + biases.size());
    }
    Eigen::VectorXd logits(std::span<const double> x) const;
};

struct SoftmaxGradient {
    double loss = 0.0;  // mean cross-entropy
    Eigen::MatrixXd weights;
    Eigen::VectorXd biases;
};

// Mean cross-entropy over the batch and its gradient. `targets` index into model.labels.
SoftmaxGradient softmax_loss_gradient(const LinearSoftmaxModel& model, std::span<const Vector> inputs,
                                      std::span<const std::size_t> targets);

// Labels are the sorted distinct languages of `train`. Returns the snapshot
// with the best validation accuracy; deterministic for a fixed seed.
LinearSoftmaxModel train_langid(std::span<const SentenceVector> train,
                                std::span<const SentenceVector> valid, const TrainerConfig& config,
                                TrainingHistory* history = nullptr);

// Argmax of the logits; ties go to the label listed first.
const std::string& predict_lang(const LinearSoftmaxModel& model, std::span<const double> x);

double langid_accuracy(const LinearSoftmaxModel& model, std::span<const SentenceVector> data);

void write_langid_model(const LinearSoftmaxModel& model, const std::filesystem::path& path,
                        const nlohmann::json& extra = nlohmann::json::object());
LinearSoftmaxModel read_langid_model(const std::filesystem::path& path);

// ------------------------------------------------------ quality estimation

struct QESample {
    Vector source;
    Vector target;
    double hter = 0.0;
};

enum class QeInputMode { src_only, tgt_only, full };

std::string_view to_string(QeInputMode m);
QeInputMode parse_qe_input_mode(std::string_view s);

inline constexpr std::size_t kQeHiddenWidth = 256;

// One hidden rectifier layer of width 256 and a scalar output.
struct MLPRegressor {
    Eigen::MatrixXd w1;  // dim_in x 256
    Eigen::VectorXd b1;  // 256
    Eigen::VectorXd w2;  // 256
    double b2 = 0.0;
    QeInputMode input_mode = QeInputMode::full;

    std::size_t input_dim() const { return static_cast<std::size_t>(w1.rows()); }
    std::size_t parameter_count() const {
        return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + 1);
    }
};

std::size_t qe_input_dim(QeInputMode mode, std::size_t dim);
Vector qe_input(const QESample& s, QeInputMode mode);

// Random initialization (scaled normal weights, zero hidden bias).
MLPRegressor init_mlp(std::size_t input_dim, QeInputMode mode, std::uint64_t seed);

double mlp_predict(const MLPRegressor& model, std::span<const double> input);
double qe_predict(const MLPRegressor& model, const QESample& sample);

struct MlpGradient {
    double loss = 0.0;  // mean squared error
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::VectorXd w2;
    double b2 = 0.0;
};

MlpGradient mlp_loss_gradient(const MLPRegressor& model, std::span<const Vector> inputs,
                              std::span<const double> targets);

// Early stopping on validation MSE; returns the best snapshot.
MLPRegressor train_qe(std::span<const QESample> train, std::span<const QESample> valid,
                      QeInputMode mode, const TrainerConfig& config,
                      TrainingHistory* history = nullptr);

void write_qe_model(const MLPRegressor& model, const std::filesystem::path& path,
                    const nlohmann::json& extra = nlohmann::json::object());
MLPRegressor read_qe_model(const std::filesystem::path& path);

// Sample Pearson correlation. Throws NumericError when either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

enum class QeCosineVariant { plain, centered, projected };

std::string_view to_string(QeCosineVariant v);
QeCosineVariant parse_qe_cosine_variant(std::string_view s);

struct QeCosineAux {
    std::optional<LanguageCentroid> source_centroid;  // centered
    std::optional<LanguageCentroid> target_centroid;  // centered
    std::optional<LinearProjection> projection;       // projected: source -> target space
};

// Cosine distance between source and hypothesis per sample, after the variant's transform.
std::vector<double> qe_distances(std::span<const QESample> samples, QeCosineVariant variant,
                                 const QeCosineAux& aux);

// pearson(qe_distances(...), hter)
double qe_cosine_score(std::span<const QESample> samples, QeCosineVariant variant,
                       const QeCosineAux& aux);

// QE data file: TSV with columns source_id, target_id, hter (an optional header
// line starting with "source_id" is skipped).
struct QeRow {
    std::string source_id;
    std::string target_id;
    double hter = 0.0;
};

std::vector<QeRow> read_qe_tsv(const std::filesystem::path& path);

// Looks each id up in the given sentence-vector sets.
std::vector<QESample> resolve_qe(std::span<const QeRow> rows, std::span<const SentenceVector> sources,
                                 std::span<const SentenceVector> targets);

}  // namespace lnprobe
