#include "mcpd/mcpd_pipeline.hpp"

#include "mcpd/errors.hpp"
#include "mcpd/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mcpd {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kGradeDim = 3;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

bool skip_detection(const McpdConfig& config) {
    // affine weights with gamma 0 are exactly 1 regardless of the
    // probabilities, so detection is pure overhead during training.
    return config.weight_mode == WeightMode::affine && config.gamma == 0.0;
}

struct Featurized {
    std::vector<Eigen::VectorXd> raw;  // kPeriodsPerYear entries
};

Eigen::VectorXd weights_for(const McpdModel& model, const std::vector<Eigen::VectorXd>& raw,
                            Eigen::VectorXd* probs_out) {
    const McpdConfig& config = model.config;
    std::vector<Eigen::VectorXd> series;
    if (config.cpd_input == CpdInput::raw) {
        // Detect on the standardized score slice only. Folding the hashed
        // text block into the detector is counterproductive: every extra
        // dimension multiplies the growth hypothesis' likelihood edge, so at
        // d_text=64 the changepoint mass never leaves the hazard floor.
        series.reserve(raw.size());
        for (const Eigen::VectorXd& r : raw) series.push_back(r.head(kGradeDim));
    } else {
        series.reserve(raw.size());
        for (const Eigen::VectorXd& r : raw) {
            Eigen::VectorXd fused(config.d_num + config.d_text);
            fused.head(config.d_num) =
                ffn_forward(r.head(kGradeDim), model.net.enc1, model.net.enc2);
            fused.tail(config.d_text) = r.tail(config.d_text);
            series.push_back(std::move(fused));
        }
    }
    const Eigen::VectorXd probs = changepoint_probabilities(series, config.cpd);
    if (probs_out) {
        *probs_out = probs;
    }
    return attention_weights(probs, config.weight_mode, config.gamma, config.temperature);
}

void check_model(const McpdModel& model) {
    validate(model.config);
    const NetParams& net = model.net;
    if (net.grade_dim() != kGradeDim || net.enc1.W.rows() != model.config.ffn_hidden ||
        net.num_dim() != model.config.d_num || net.text_dim() != model.config.d_text ||
        net.hidden_dim() != model.config.lstm_hidden) {
        throw ArgumentError("model parameters do not match the configured dimension chain");
    }
}

ordered_json metrics_to_json(const MetricsReport& m) {
    ordered_json j;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["tn"] = m.tn;
    j["fn"] = m.fn;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["threshold"] = m.threshold;
    return j;
}

ordered_json config_to_json(const McpdConfig& c) {
    ordered_json j;
    j["d_text"] = c.d_text;
    j["d_num"] = c.d_num;
    j["ffn_hidden"] = c.ffn_hidden;
    j["lstm_hidden"] = c.lstm_hidden;
    j["hazard_lambda"] = c.cpd.hazard_lambda;
    j["prior_mu"] = c.cpd.prior_mu;
    j["prior_kappa"] = c.cpd.prior_kappa;
    j["prior_alpha"] = c.cpd.prior_alpha;
    j["prior_beta"] = c.cpd.prior_beta;
    j["max_run"] = c.cpd.max_run;
    j["weight_mode"] = to_string(c.weight_mode);
    j["gamma"] = c.gamma;
    j["temperature"] = c.temperature;
    j["cpd_input"] = to_string(c.cpd_input);
    j["lr"] = c.lr;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    j["pos_weight_mode"] = c.pos_weight_mode == PosWeightMode::auto_ratio ? "auto" : "fixed";
    j["pos_weight_value"] = c.pos_weight_value;
    j["embed_hash_seed"] = c.embed_hash_seed;
    j["embed_signed"] = c.embed_signed;
    return j;
}

McpdConfig config_from_json(const ordered_json& j) {
    McpdConfig c;
    try {
        c.d_text = j.at("d_text").get<int>();
        c.d_num = j.at("d_num").get<int>();
        c.ffn_hidden = j.at("ffn_hidden").get<int>();
        c.lstm_hidden = j.at("lstm_hidden").get<int>();
        c.cpd.hazard_lambda = j.at("hazard_lambda").get<double>();
        c.cpd.prior_mu = j.at("prior_mu").get<double>();
        c.cpd.prior_kappa = j.at("prior_kappa").get<double>();
        c.cpd.prior_alpha = j.at("prior_alpha").get<double>();
        c.cpd.prior_beta = j.at("prior_beta").get<double>();
        c.cpd.max_run = j.at("max_run").get<int>();
        c.weight_mode = weight_mode_from_string(j.at("weight_mode").get<std::string>());
        c.gamma = j.at("gamma").get<double>();
        c.temperature = j.at("temperature").get<double>();
        c.cpd_input = cpd_input_from_string(j.at("cpd_input").get<std::string>());
        c.lr = j.at("lr").get<double>();
        c.epochs = j.at("epochs").get<int>();
        c.batch_size = j.at("batch_size").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        const std::string pw = j.at("pos_weight_mode").get<std::string>();
        if (pw == "auto") {
            c.pos_weight_mode = PosWeightMode::auto_ratio;
        } else if (pw == "fixed") {
            c.pos_weight_mode = PosWeightMode::fixed;
        } else {
            throw SchemaError("unknown pos_weight_mode: " + pw);
        }
        c.pos_weight_value = j.at("pos_weight_value").get<double>();
        c.embed_hash_seed = j.at("embed_hash_seed").get<std::uint64_t>();
        c.embed_signed = j.at("embed_signed").get<bool>();
    } catch (const ordered_json::exception& e) {
        throw SchemaError(std::string("checkpoint config: ") + e.what());
    }
    return c;
}

}  // namespace

CpdInput cpd_input_from_string(const std::string& s) {
    if (s == "raw") return CpdInput::raw;
    if (s == "encoded") return CpdInput::encoded;
    throw ArgumentError("unknown cpd_input: " + s);
}

const char* to_string(CpdInput input) {
    return input == CpdInput::raw ? "raw" : "encoded";
}

void validate(const McpdConfig& config) {
    if (config.d_text <= 0 || config.d_num <= 0 || config.ffn_hidden <= 0 ||
        config.lstm_hidden <= 0) {
        throw ArgumentError("model dimensions must be positive");
    }
    if (config.gamma < 0.0 || !std::isfinite(config.gamma)) {
        throw ArgumentError("gamma must be finite and non-negative");
    }
    if (config.weight_mode == WeightMode::softmax &&
        (!(config.temperature > 0.0) || !std::isfinite(config.temperature))) {
        throw ArgumentError("temperature must be positive");
    }
    if (!(config.lr > 0.0) || !std::isfinite(config.lr)) {
        throw ArgumentError("learning rate must be positive");
    }
    if (config.epochs <= 0 || config.batch_size <= 0) {
        throw ArgumentError("epochs and batch_size must be positive");
    }
    if (config.pos_weight_mode == PosWeightMode::fixed &&
        (!(config.pos_weight_value >= 1.0) || !std::isfinite(config.pos_weight_value))) {
        throw ArgumentError("fixed pos_weight must be at least 1");
    }
    validate(config.cpd);
}

Standardizer fit_standardizer(const Cohort& cohort, const std::vector<int>& ids) {
    if (ids.empty()) {
        throw ArgumentError("cannot fit a standardizer on an empty id list");
    }
    Standardizer std_out;
    for (int subject = 0; subject < kGradeDim; ++subject) {
        double sum = 0.0;
        double sumsq = 0.0;
        long count = 0;
        for (int id : ids) {
            if (id < 0 || static_cast<std::size_t>(id) >= cohort.size()) {
                throw ArgumentError("standardizer id out of range");
            }
            for (const PeriodRecord& period : cohort.records[static_cast<std::size_t>(id)].periods) {
                const std::optional<double>& score =
                    subject == 0 ? period.scores.chinese
                                 : (subject == 1 ? period.scores.math : period.scores.english);
                if (score) {
                    sum += *score;
                    sumsq += *score * *score;
                    ++count;
                }
            }
        }
        if (count == 0) {
            std_out.mean[subject] = 0.0;
            std_out.stddev[subject] = 1.0;
            continue;
        }
        const double mean = sum / static_cast<double>(count);
        const double var = std::max(0.0, sumsq / static_cast<double>(count) - mean * mean);
        const double sd = std::sqrt(var);
        std_out.mean[subject] = mean;
        std_out.stddev[subject] = sd > 0.0 ? sd : 1.0;
    }
    return std_out;
}

Eigen::Vector3d standardize_scores(const SubjectScores& scores, const Standardizer& std) {
    Eigen::Vector3d out;
    const std::optional<double>* fields[kGradeDim] = {&scores.chinese, &scores.math,
                                                      &scores.english};
    for (int i = 0; i < kGradeDim; ++i) {
        // Missing marks impute the training mean, standardizing to zero.
        const double v = fields[i]->has_value() ? **fields[i] : std.mean[i];
        out[i] = (v - std.mean[i]) / std.stddev[i];
    }
    return out;
}

std::vector<Eigen::VectorXd> featurize(const StudentRecord& record, const Standardizer& std,
                                       const EmbedderConfig& embedder,
                                       const EmbeddingMap* precomputed) {
    std::vector<Eigen::VectorXd> raw;
    raw.reserve(kPeriodsPerYear);
    for (const PeriodRecord& period : record.periods) {
        Eigen::VectorXd v(kGradeDim + embedder.dim);
        v.head(kGradeDim) = standardize_scores(period.scores, std);
        const EmbeddingMap::const_iterator hit =
            precomputed ? precomputed->find({record.student_id, period.index})
                        : EmbeddingMap::const_iterator{};
        if (precomputed && hit != precomputed->end()) {
            v.tail(embedder.dim) = hit->second;
        } else {
            v.tail(embedder.dim) = embed_text(render_period_summary(period), embedder);
        }
        raw.push_back(std::move(v));
    }
    return raw;
}

ForwardResult forward(const McpdModel& model, const std::vector<Eigen::VectorXd>& raw) {
    check_model(model);
    if (raw.size() != static_cast<std::size_t>(kPeriodsPerYear)) {
        throw ArgumentError("forward expects one raw vector per period");
    }
    const Eigen::Index want = kGradeDim + model.config.d_text;
    for (const Eigen::VectorXd& r : raw) {
        if (r.size() != want) {
            throw ArgumentError("raw feature vector length does not match the model");
        }
    }

    ForwardResult result;
    result.attention = weights_for(model, raw, &result.change_probs);

    std::vector<Eigen::MatrixXd> grades(raw.size());
    std::vector<Eigen::MatrixXd> text(raw.size());
    Eigen::MatrixXd weights(static_cast<Eigen::Index>(raw.size()), 1);
    for (std::size_t t = 0; t < raw.size(); ++t) {
        grades[t] = raw[t].head(kGradeDim);
        text[t] = raw[t].tail(model.config.d_text);
        weights(static_cast<Eigen::Index>(t), 0) = result.attention[static_cast<Eigen::Index>(t)];
    }
    result.probability = stack_forward(model.net, grades, text, weights)[0];
    return result;
}

FitResult fit(const Cohort& cohort, const std::vector<int>& labels, const McpdConfig& config,
              const Cohort* val_cohort, const std::vector<int>* val_labels,
              const EmbeddingMap* precomputed) {
    validate(config);
    const std::size_t n = cohort.size();
    if (labels.size() != n) {
        throw ArgumentError("label vector length does not match the cohort");
    }
    if (n < 20) {
        throw TrainingError("training requires at least 20 records, got " + std::to_string(n));
    }
    long positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw ArgumentError("labels must be 0 or 1");
        }
        positives += y;
    }
    const long negatives = static_cast<long>(n) - positives;
    if (positives == 0 || negatives == 0) {
        throw TrainingError("training cohort must contain both classes");
    }
    if (val_cohort && (!val_labels || val_labels->size() != val_cohort->size())) {
        throw ArgumentError("validation labels do not match the validation cohort");
    }

    const auto start = std::chrono::steady_clock::now();

    McpdModel model;
    model.config = config;
    std::vector<int> all_ids(n);
    std::iota(all_ids.begin(), all_ids.end(), 0);
    model.standardizer = fit_standardizer(cohort, all_ids);

    const double pos_weight = config.pos_weight_mode == PosWeightMode::auto_ratio
                                  ? static_cast<double>(negatives) / static_cast<double>(positives)
                                  : config.pos_weight_value;

    const EmbedderConfig embedder = config.embedder();
    std::vector<Featurized> feats(n);
    for (std::size_t i = 0; i < n; ++i) {
        feats[i].raw = featurize(cohort.records[i], model.standardizer, embedder, precomputed);
    }

    Rng rng(config.seed);
    model.net = init_net(kGradeDim, config.ffn_hidden, config.d_num, config.d_text,
                         config.lstm_hidden, rng);

    // With raw detection input the attention weights do not depend on the
    // trainable parameters, so they are computed once up front.
    const bool fixed_weights = config.cpd_input == CpdInput::raw || skip_detection(config);
    std::vector<Eigen::VectorXd> attn(n);
    if (fixed_weights) {
        for (std::size_t i = 0; i < n; ++i) {
            attn[i] = skip_detection(config)
                          ? Eigen::VectorXd::Ones(kPeriodsPerYear).eval()
                          : weights_for(model, feats[i].raw, nullptr);
        }
    }

    AdamState adam = init_adam(model.net);
    TrainingReport report;
    report.seed = config.seed;
    report.pos_weight = pos_weight;
    report.train_loss.reserve(static_cast<std::size_t>(config.epochs));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(n, begin + static_cast<std::size_t>(config.batch_size));
            const Eigen::Index B = static_cast<Eigen::Index>(end - begin);

            std::vector<Eigen::MatrixXd> grades(kPeriodsPerYear, Eigen::MatrixXd(kGradeDim, B));
            std::vector<Eigen::MatrixXd> text(kPeriodsPerYear, Eigen::MatrixXd(config.d_text, B));
            Eigen::MatrixXd weights(kPeriodsPerYear, B);
            Eigen::VectorXd y(B);
            for (Eigen::Index j = 0; j < B; ++j) {
                const int idx = order[begin + static_cast<std::size_t>(j)];
                const Featurized& f = feats[static_cast<std::size_t>(idx)];
                const Eigen::VectorXd w = fixed_weights
                                              ? attn[static_cast<std::size_t>(idx)]
                                              : weights_for(model, f.raw, nullptr);
                for (int t = 0; t < kPeriodsPerYear; ++t) {
                    grades[static_cast<std::size_t>(t)].col(j) = f.raw[static_cast<std::size_t>(t)].head(kGradeDim);
                    text[static_cast<std::size_t>(t)].col(j) = f.raw[static_cast<std::size_t>(t)].tail(config.d_text);
                    weights(t, j) = w[t];
                }
                y[j] = labels[static_cast<std::size_t>(idx)];
            }

            StackCache cache;
            const Eigen::VectorXd p = stack_forward(model.net, grades, text, weights, &cache);
            const double batch_loss = stack_loss(p, y, pos_weight);
            if (!std::isfinite(batch_loss)) {
                throw TrainingError("epoch " + std::to_string(epoch) + ": loss became non-finite");
            }
            loss_sum += batch_loss;

            NetParams grads = stack_backward(model.net, cache, y, pos_weight);
            const double scale = 1.0 / static_cast<double>(B);
            for (ParamBlock& block : param_blocks(grads)) {
                block.value *= scale;
            }
            adam_step(model.net, grads, adam, config.lr);
        }
        report.train_loss.push_back(loss_sum / static_cast<double>(n));
    }

    const Cohort& eval_cohort = val_cohort ? *val_cohort : cohort;
    const std::vector<int>& eval_labels = val_labels && val_cohort ? *val_labels : labels;
    Eigen::VectorXd probs(static_cast<Eigen::Index>(eval_cohort.size()));
    for (std::size_t i = 0; i < eval_cohort.size(); ++i) {
        probs[static_cast<Eigen::Index>(i)] =
            predict(model, eval_cohort.records[i], precomputed).probability;
    }
    report.validation = compute_metrics(probs, eval_labels);

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return FitResult{std::move(model), std::move(report)};
}

ForwardResult predict(const McpdModel& model, const StudentRecord& record,
                      const EmbeddingMap* precomputed) {
    return forward(model,
                   featurize(record, model.standardizer, model.config.embedder(), precomputed));
}

void save_checkpoint(const McpdModel& model, const std::string& path) {
    check_model(model);
    ordered_json j;
    j["schema_version"] = 1;
    j["config"] = config_to_json(model.config);
    j["standardizer"]["mean"] = {model.standardizer.mean[0], model.standardizer.mean[1],
                                 model.standardizer.mean[2]};
    j["standardizer"]["stddev"] = {model.standardizer.stddev[0], model.standardizer.stddev[1],
                                   model.standardizer.stddev[2]};
    ordered_json params = ordered_json::array();
    for (const ConstParamBlock& block : param_blocks(model.net)) {
        ordered_json entry;
        entry["name"] = block.name;
        entry["rows"] = block.value.rows();
        entry["cols"] = block.value.cols();
        ordered_json data = ordered_json::array();
        for (Eigen::Index r = 0; r < block.value.rows(); ++r) {
            for (Eigen::Index c = 0; c < block.value.cols(); ++c) {
                data.push_back(block.value(r, c));
            }
        }
        entry["data"] = std::move(data);
        params.push_back(std::move(entry));
    }
    j["params"] = std::move(params);

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open checkpoint for writing: " + path);
    }
    out << j.dump(2) << "\n";
    if (!out) {
        throw IoError("failed writing checkpoint: " + path);
    }
}

McpdModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path);
    }
    ordered_json j;
    try {
        in >> j;
    } catch (const ordered_json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }

    McpdModel model;
    try {
        if (j.at("schema_version").get<int>() != 1) {
            throw SchemaError("unsupported checkpoint schema_version");
        }
        model.config = config_from_json(j.at("config"));
        const auto& st = j.at("standardizer");
        for (int i = 0; i < kGradeDim; ++i) {
            model.standardizer.mean[i] = st.at("mean").at(static_cast<std::size_t>(i)).get<double>();
            model.standardizer.stddev[i] =
                st.at("stddev").at(static_cast<std::size_t>(i)).get<double>();
        }
        if (!(model.standardizer.stddev.array() > 0.0).all()) {
            throw SchemaError("checkpoint standardizer stddev must be positive");
        }

        Rng rng(0);
        model.net = init_net(kGradeDim, model.config.ffn_hidden, model.config.d_num,
                             model.config.d_text, model.config.lstm_hidden, rng);
        std::vector<ParamBlock> blocks = param_blocks(model.net);
        const auto& params = j.at("params");
        if (params.size() != blocks.size()) {
            throw SchemaError("checkpoint parameter block count mismatch");
        }
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const auto& entry = params.at(b);
            if (entry.at("name").get<std::string>() != blocks[b].name) {
                throw SchemaError("unexpected checkpoint parameter block: " +
                                  entry.at("name").get<std::string>());
            }
            const Eigen::Index rows = entry.at("rows").get<Eigen::Index>();
            const Eigen::Index cols = entry.at("cols").get<Eigen::Index>();
            if (rows != blocks[b].value.rows() || cols != blocks[b].value.cols()) {
                throw SchemaError("shape mismatch in checkpoint block " + blocks[b].name);
            }
            const auto& data = entry.at("data");
            if (data.size() != static_cast<std::size_t>(rows * cols)) {
                throw SchemaError("data length mismatch in checkpoint block " + blocks[b].name);
            }
            std::size_t k = 0;
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index c = 0; c < cols; ++c) {
                    const double v = data.at(k++).get<double>();
                    if (!std::isfinite(v)) {
                        throw SchemaError("non-finite value in checkpoint block " + blocks[b].name);
                    }
                    blocks[b].value(r, c) = v;
                }
            }
        }
    } catch (const ordered_json::exception& e) {
        throw SchemaError(std::string("checkpoint: ") + e.what());
    }
    check_model(model);
    return model;
}

std::string format_training_report(const TrainingReport& report) {
    ordered_json j;
    j["schema_version"] = 1;
    j["seed"] = report.seed;
    j["pos_weight"] = report.pos_weight;
    j["epochs"] = report.train_loss.size();
    j["train_loss"] = report.train_loss;
    j["validation"] = metrics_to_json(report.validation);
    return j.dump(2) + "\n";
}

std::string format_prediction_csv(const Cohort& cohort, const McpdModel& model,
                                  const EmbeddingMap* precomputed) {
    std::ostringstream out;
    out << "student_id,risk_probability";
    for (int t = 1; t <= kPeriodsPerYear; ++t) {
        out << ",p_" << t;
    }
    out << "\n";
    for (const StudentRecord& record : cohort.records) {
        const ForwardResult r = predict(model, record, precomputed);
        out << record.student_id << "," << fmt_double(r.probability);
        for (int t = 0; t < kPeriodsPerYear; ++t) {
            out << "," << fmt_double(r.change_probs[t]);
        }
        out << "\n";
    }
    return out.str();
}

std::string format_cpd_csv(const Cohort& cohort, const McpdModel& model,
                           const EmbeddingMap* precomputed) {
    std::ostringstream out;
    out << "student_id,period_index,changepoint_probability,attention_weight\n";
    for (const StudentRecord& record : cohort.records) {
        const ForwardResult r = predict(model, record, precomputed);
        for (int t = 0; t < kPeriodsPerYear; ++t) {
            out << record.student_id << "," << (t + 1) << "," << fmt_double(r.change_probs[t])
                << "," << fmt_double(r.attention[t]) << "\n";
        }
    }
    return out.str();
}

}  // namespace mcpd
