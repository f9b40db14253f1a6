#pragma once

#include "mcpd/bocpd.hpp"
#include "mcpd/data_model.hpp"
#include "mcpd/evalkit.hpp"
#include "mcpd/neural.hpp"
#include "mcpd/text_embed.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace mcpd {

// Full risk model: standardized grades through a small feedforward encoder,
// hashed behavior-summary embeddings, per-period fusion, changepoint-derived
// attention weights, an LSTM over the weighted sequence and a sigmoid head.

enum class CpdInput { raw, encoded };

CpdInput cpd_input_from_string(const std::string& s);
const char* to_string(CpdInput input);

enum class PosWeightMode { auto_ratio, fixed };

struct McpdConfig {
    int d_text = 64;
    int d_num = 8;
    int ffn_hidden = 16;
    int lstm_hidden = 32;
    CpdConfig cpd;
    WeightMode weight_mode = WeightMode::affine;
    double gamma = 1.0;
    double temperature = 1.0;
    CpdInput cpd_input = CpdInput::raw;
    double lr = 1e-3;
    int epochs = 60;
    int batch_size = 32;
    uint64_t seed = 0;
    PosWeightMode pos_weight_mode = PosWeightMode::auto_ratio;
    double pos_weight_value = 1.0;
    uint64_t embed_hash_seed = 0;
    bool embed_signed = true;

    EmbedderConfig embedder() const { return EmbedderConfig{d_text, embed_hash_seed, embed_signed}; }
};

void validate(const McpdConfig& config);

// Per-subject statistics fitted on the training split only. Missing scores
// are imputed with the training mean before standardization.
struct Standardizer {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d stddev = Eigen::Vector3d::Ones();  // zero-variance features get 1
};

Standardizer fit_standardizer(const Cohort& cohort, const std::vector<int>& ids);
Eigen::Vector3d standardize_scores(const SubjectScores& scores, const Standardizer& std);

struct McpdModel {
    McpdConfig config;
    Standardizer standardizer;
    NetParams net;
};

// One raw feature vector per period: [3 standardized grades] ++ [d_text
// embedding of the period's behavior summary]. Precomputed embeddings, when
// given, override the hashing embedder per (student, period) key.
std::vector<Eigen::VectorXd> featurize(const StudentRecord& record, const Standardizer& std,
                                       const EmbedderConfig& embedder,
                                       const EmbeddingMap* precomputed = nullptr);

struct ForwardResult {
    double probability = 0.0;
    Eigen::VectorXd change_probs;      // per period
    Eigen::VectorXd attention;         // per period
};

// Encodes, fuses, weights and classifies one record's six raw vectors.
// Changepoint probabilities never carry gradients; with affine weights and
// gamma 0 the result is bit-identical to a pipeline without detection.
ForwardResult forward(const McpdModel& model, const std::vector<Eigen::VectorXd>& raw);

struct TrainingReport {
    std::vector<double> train_loss;  // per-epoch mean loss
    MetricsReport validation;
    double wall_clock_seconds = 0.0;  // logged, never serialized
    uint64_t seed = 0;
    double pos_weight = 1.0;
};

struct FitResult {
    McpdModel model;
    TrainingReport report;
};

// Mini-batch Adam over seeded shuffles. The standardizer and the automatic
// pos_weight come from the given cohort only. When a validation set is
// passed the report's metrics are computed there, otherwise on the training
// data.
FitResult fit(const Cohort& cohort, const std::vector<int>& labels, const McpdConfig& config,
              const Cohort* val_cohort = nullptr, const std::vector<int>* val_labels = nullptr,
              const EmbeddingMap* precomputed = nullptr);

ForwardResult predict(const McpdModel& model, const StudentRecord& record,
                      const EmbeddingMap* precomputed = nullptr);

// Checkpoint round-trip: schema version, config echo, standardizer and every
// parameter tensor as a flat row-major array with its shape.
void save_checkpoint(const McpdModel& model, const std::string& path);
McpdModel load_checkpoint(const std::string& path);

std::string format_training_report(const TrainingReport& report);

// CSV with header student_id,risk_probability,p_1..p_6.
std::string format_prediction_csv(const Cohort& cohort, const McpdModel& model,
                                  const EmbeddingMap* precomputed = nullptr);

// CSV with header student_id,period_index,changepoint_probability,attention_weight.
std::string format_cpd_csv(const Cohort& cohort, const McpdModel& model,
                           const EmbeddingMap* precomputed = nullptr);

}  // namespace mcpd
