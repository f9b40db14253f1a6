#include "mcpd/cli.hpp"

#include "mcpd/errors.hpp"
#include "mcpd/labeling.hpp"
#include "mcpd/rng.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mcpd {

namespace {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("MCPD_LOG");
        if (!env) return LogLevel::error;
        const std::string s = env;
        if (s == "debug") return LogLevel::debug;
        if (s == "info") return LogLevel::info;
        return LogLevel::error;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) {
        std::cerr << "[info] " << msg << "\n";
    }
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) {
        std::cerr << "[debug] " << msg << "\n";
    }
}

std::string trim(const std::string& s) {
    const std::size_t first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const std::size_t last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

long parse_long(const std::string& value, long line) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected an integer, got \"" + value + "\"", line);
    }
}

std::uint64_t parse_u64(const std::string& value, long line) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size() || value.empty() || value[0] == '-') {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected a non-negative integer, got \"" + value + "\"", line);
    }
}

double parse_double(const std::string& value, long line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected a number, got \"" + value + "\"", line);
    }
}

bool parse_bool(const std::string& value, long line) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ParseError("expected true/false, got \"" + value + "\"", line);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << content;
    if (!out) {
        throw IoError("failed writing: " + path);
    }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) {
            continue;
        }
        try {
            seeds.push_back(parse_u64(t, 0));
        } catch (const ParseError&) {
            throw ArgumentError("bad seed list entry: \"" + t + "\"");
        }
    }
    if (seeds.empty()) {
        throw ArgumentError("seed list is empty: \"" + spec + "\"");
    }
    return seeds;
}

std::vector<int> labels_for_target(const Cohort& cohort, const std::string& target,
                                   double fraction) {
    const LabelTarget t = label_target_from_string(target);
    const std::vector<bool> flags = select_labels(compute_labels(cohort, fraction), t);
    std::vector<int> labels(flags.size());
    for (std::size_t i = 0; i < flags.size(); ++i) {
        labels[i] = flags[i] ? 1 : 0;
    }
    return labels;
}

EmbeddingMap load_embeddings_if_any(const std::string& path, int d_text) {
    EmbeddingMap map;
    if (!path.empty()) {
        map = load_precomputed(path, d_text);
        log_info("loaded " + std::to_string(map.size()) + " precomputed embeddings");
    }
    return map;
}

void do_gen_data(const RunConfig& cfg) {
    if (cfg.out_path.empty()) {
        throw ArgumentError("gen-data requires --out");
    }
    const SyntheticCohort synth = generate_synthetic(cfg.synth);
    save_records(synth.cohort, cfg.out_path);
    long positives = 0;
    for (int y : synth.labels) positives += y;
    log_info("wrote " + std::to_string(synth.cohort.size()) + " records (" +
             std::to_string(positives) + " positive) to " + cfg.out_path);
}

void do_label(const RunConfig& cfg) {
    if (cfg.in_path.empty() || cfg.out_path.empty()) {
        throw ArgumentError("label requires --in and --out");
    }
    const Cohort cohort = load_records(cfg.in_path);
    write_file(cfg.out_path, format_label_csv(compute_labels(cohort, cfg.fraction)));
    log_info("labeled " + std::to_string(cohort.size()) + " students");
}

void do_train(const RunConfig& cfg) {
    if (cfg.in_path.empty() || cfg.model_path.empty()) {
        throw ArgumentError("train requires --in and --model");
    }
    const Cohort cohort = load_records(cfg.in_path);
    const std::vector<int> labels = labels_for_target(cohort, cfg.target, cfg.fraction);
    const EmbeddingMap embeddings = load_embeddings_if_any(cfg.embeddings_path, cfg.model.d_text);
    const EmbeddingMap* map = cfg.embeddings_path.empty() ? nullptr : &embeddings;

    FitResult result;
    if (cfg.val_fraction > 0.0) {
        const Split split = stratified_split(labels, cfg.val_fraction, cfg.seed);
        Cohort train, val;
        std::vector<int> train_labels, val_labels;
        for (int id : split.train_ids) {
            train.records.push_back(cohort.records[static_cast<std::size_t>(id)]);
            train_labels.push_back(labels[static_cast<std::size_t>(id)]);
        }
        for (int id : split.test_ids) {
            val.records.push_back(cohort.records[static_cast<std::size_t>(id)]);
            val_labels.push_back(labels[static_cast<std::size_t>(id)]);
        }
        result = fit(train, train_labels, cfg.model, &val, &val_labels, map);
    } else {
        result = fit(cohort, labels, cfg.model, nullptr, nullptr, map);
    }

    save_checkpoint(result.model, cfg.model_path);
    if (!cfg.report_path.empty()) {
        write_file(cfg.report_path, format_training_report(result.report));
    }
    log_info("trained in " + std::to_string(result.report.wall_clock_seconds) + " s, final loss " +
             std::to_string(result.report.train_loss.back()));
    for (std::size_t e = 0; e < result.report.train_loss.size(); ++e) {
        log_debug("epoch " + std::to_string(e + 1) + " loss " +
                  std::to_string(result.report.train_loss[e]));
    }
}

void do_predict(const RunConfig& cfg) {
    if (cfg.in_path.empty() || cfg.model_path.empty() || cfg.out_path.empty()) {
        throw ArgumentError("predict requires --model, --in and --out");
    }
    const McpdModel model = load_checkpoint(cfg.model_path);
    const Cohort cohort = load_records(cfg.in_path);
    const EmbeddingMap embeddings =
        load_embeddings_if_any(cfg.embeddings_path, model.config.d_text);
    const EmbeddingMap* map = cfg.embeddings_path.empty() ? nullptr : &embeddings;
    write_file(cfg.out_path, format_prediction_csv(cohort, model, map));
    log_info("predicted " + std::to_string(cohort.size()) + " students");
}

void do_evaluate(const RunConfig& cfg) {
    if (cfg.in_path.empty() || cfg.out_path.empty()) {
        throw ArgumentError("evaluate requires --in and --out");
    }
    const Cohort cohort = load_records(cfg.in_path);
    const std::vector<int> labels = labels_for_target(cohort, cfg.target, cfg.fraction);
    std::vector<std::pair<std::uint64_t, std::vector<ComparisonRow>>> runs;
    for (std::uint64_t seed : parse_seed_list(cfg.seeds)) {
        log_info("comparison run, seed " + std::to_string(seed));
        runs.emplace_back(seed, run_comparison(cohort, labels, cfg.model, cfg.test_fraction, seed,
                                               cfg.threshold));
    }
    write_file(cfg.out_path, format_comparison_csv(runs));
    log_info("wrote comparison over " + std::to_string(runs.size()) + " seeds to " + cfg.out_path);
}

void do_report(const RunConfig& cfg) {
    if (cfg.in_path.empty() || (cfg.diff_path.empty() && cfg.cpd_path.empty())) {
        throw ArgumentError("report requires --in and at least one of --out-diff/--out-cpd");
    }
    const Cohort cohort = load_records(cfg.in_path);
    if (!cfg.diff_path.empty()) {
        write_file(cfg.diff_path, format_difference_report(cohort_report(cohort)));
    }
    if (!cfg.cpd_path.empty()) {
        McpdModel model;
        if (!cfg.model_path.empty()) {
            model = load_checkpoint(cfg.model_path);
        } else {
            // No checkpoint: raw-input detection only needs the standardizer,
            // so an untrained model with the run config works.
            model.config = cfg.model;
            std::vector<int> ids(cohort.size());
            for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
            model.standardizer = fit_standardizer(cohort, ids);
            Rng rng(cfg.seed);
            model.net = init_net(3, cfg.model.ffn_hidden, cfg.model.d_num, cfg.model.d_text,
                                 cfg.model.lstm_hidden, rng);
        }
        const EmbeddingMap embeddings =
            load_embeddings_if_any(cfg.embeddings_path, model.config.d_text);
        const EmbeddingMap* map = cfg.embeddings_path.empty() ? nullptr : &embeddings;
        write_file(cfg.cpd_path, format_cpd_csv(cohort, model, map));
    }
    log_info("report written for " + std::to_string(cohort.size()) + " students");
}

}  // namespace

void apply_config_line(RunConfig& config, const std::string& key, const std::string& value,
                       long line) {
    if (key == "d_text") config.model.d_text = static_cast<int>(parse_long(value, line));
    else if (key == "d_num") config.model.d_num = static_cast<int>(parse_long(value, line));
    else if (key == "ffn_hidden") config.model.ffn_hidden = static_cast<int>(parse_long(value, line));
    else if (key == "lstm_hidden") config.model.lstm_hidden = static_cast<int>(parse_long(value, line));
    else if (key == "hazard_lambda") config.model.cpd.hazard_lambda = parse_double(value, line);
    else if (key == "prior_mu") config.model.cpd.prior_mu = parse_double(value, line);
    else if (key == "prior_kappa") config.model.cpd.prior_kappa = parse_double(value, line);
    else if (key == "prior_alpha") config.model.cpd.prior_alpha = parse_double(value, line);
    else if (key == "prior_beta") config.model.cpd.prior_beta = parse_double(value, line);
    else if (key == "max_run") config.model.cpd.max_run = static_cast<int>(parse_long(value, line));
    else if (key == "weight_mode") {
        try {
            config.model.weight_mode = weight_mode_from_string(value);
        } catch (const ArgumentError& e) {
            throw ParseError(e.what(), line);
        }
    } else if (key == "gamma") config.model.gamma = parse_double(value, line);
    else if (key == "temperature") config.model.temperature = parse_double(value, line);
    else if (key == "cpd_input") {
        try {
            config.model.cpd_input = cpd_input_from_string(value);
        } catch (const ArgumentError& e) {
            throw ParseError(e.what(), line);
        }
    } else if (key == "lr") config.model.lr = parse_double(value, line);
    else if (key == "epochs") config.model.epochs = static_cast<int>(parse_long(value, line));
    else if (key == "batch_size") config.model.batch_size = static_cast<int>(parse_long(value, line));
    else if (key == "pos_weight_mode") {
        if (value == "auto") config.model.pos_weight_mode = PosWeightMode::auto_ratio;
        else if (value == "fixed") config.model.pos_weight_mode = PosWeightMode::fixed;
        else throw ParseError("unknown pos_weight_mode: " + value, line);
    } else if (key == "pos_weight_value") config.model.pos_weight_value = parse_double(value, line);
    else if (key == "embed_hash_seed") config.model.embed_hash_seed = parse_u64(value, line);
    else if (key == "embed_signed") config.model.embed_signed = parse_bool(value, line);
    else if (key == "n_students") config.synth.n_students = static_cast<int>(parse_long(value, line));
    else if (key == "positive_rate") config.synth.positive_rate = parse_double(value, line);
    else if (key == "shift_magnitude") config.synth.shift_magnitude = parse_double(value, line);
    else if (key == "change_lo") config.synth.change_lo = static_cast<int>(parse_long(value, line));
    else if (key == "change_hi") config.synth.change_hi = static_cast<int>(parse_long(value, line));
    else if (key == "vocab_shift") config.synth.vocab_shift = parse_bool(value, line);
    else if (key == "in") config.in_path = value;
    else if (key == "out") config.out_path = value;
    else if (key == "model") config.model_path = value;
    else if (key == "report") config.report_path = value;
    else if (key == "embeddings") config.embeddings_path = value;
    else if (key == "out_diff") config.diff_path = value;
    else if (key == "out_cpd") config.cpd_path = value;
    else if (key == "target") config.target = value;
    else if (key == "seeds") config.seeds = value;
    else if (key == "fraction") config.fraction = parse_double(value, line);
    else if (key == "test_fraction") config.test_fraction = parse_double(value, line);
    else if (key == "val_fraction") config.val_fraction = parse_double(value, line);
    else if (key == "threshold") config.threshold = parse_double(value, line);
    else if (key == "seed") config.seed = parse_u64(value, line);
    else throw ParseError("unknown config key: " + key, line);
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path);
    }
    RunConfig config;
    std::string raw;
    long line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string stripped = trim(raw);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected key=value, got \"" + stripped + "\"", line);
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ParseError("empty config key", line);
        }
        apply_config_line(config, key, value, line);
    }
    return config;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"student risk toolkit: changepoint-weighted sequence model over grades and "
                 "behavior summaries"};
    app.require_subcommand(1);

    std::string config_path;

    // Flag targets shared across subcommands; only the active subcommand
    // parses, and overrides are applied by looking options up on it by name.
    struct Vals {
        std::string in, out, model, report, embeddings, diff, cpd, target, seeds;
        std::string weight_mode, cpd_input, pos_weight_mode;
        double fraction = 0, test_fraction = 0, val_fraction = 0, threshold = 0;
        double hazard_lambda = 0, prior_mu = 0, prior_kappa = 0, prior_alpha = 0, prior_beta = 0;
        double gamma = 0, temperature = 0, lr = 0, pos_weight_value = 0, rate = 0, shift = 0;
        int d_text = 0, d_num = 0, ffn_hidden = 0, lstm_hidden = 0, max_run = 0, epochs = 0;
        int batch_size = 0, n = 0, change_lo = 0, change_hi = 0;
        bool vocab_shift = true, embed_signed = true;
        std::uint64_t seed = 0, embed_hash_seed = 0;
    } v;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value run-config file");
        cmd->add_option("--seed", v.seed, "seed for all randomness");
    };
    auto add_model_flags = [&](CLI::App* cmd) {
        cmd->add_option("--d-text", v.d_text, "text embedding dimension");
        cmd->add_option("--d-num", v.d_num, "encoded grade feature dimension");
        cmd->add_option("--ffn-hidden", v.ffn_hidden, "grade encoder hidden width");
        cmd->add_option("--lstm-hidden", v.lstm_hidden, "LSTM hidden size");
        cmd->add_option("--hazard-lambda", v.hazard_lambda,
                        "expected run length (hazard = 1/lambda)");
        cmd->add_option("--prior-mu", v.prior_mu, "conjugate prior location");
        cmd->add_option("--prior-kappa", v.prior_kappa, "conjugate prior pseudo-count");
        cmd->add_option("--prior-alpha", v.prior_alpha, "conjugate prior shape");
        cmd->add_option("--prior-beta", v.prior_beta, "conjugate prior scale");
        cmd->add_option("--max-run", v.max_run, "run-length cap, 0 = sequence length");
        cmd->add_option("--weight-mode", v.weight_mode, "attention mode: affine|direct|softmax");
        cmd->add_option("--gamma", v.gamma, "affine attention strength, 0 disables");
        cmd->add_option("--temperature", v.temperature, "softmax temperature");
        cmd->add_option("--cpd-input", v.cpd_input, "detection input: raw|encoded");
        cmd->add_option("--lr", v.lr, "Adam learning rate");
        cmd->add_option("--epochs", v.epochs, "training epochs");
        cmd->add_option("--batch-size", v.batch_size, "mini-batch size");
        cmd->add_option("--pos-weight-mode", v.pos_weight_mode,
                        "positive-class weight: auto|fixed");
        cmd->add_option("--pos-weight-value", v.pos_weight_value, "weight used in fixed mode");
        cmd->add_option("--embed-hash-seed", v.embed_hash_seed, "seed of the hashing text embedder");
        cmd->add_option("--embed-signed", v.embed_signed, "signed feature hashing (true|false)");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic cohort record file");
    add_common(gen);
    gen->add_option("--out", v.out, "output record file (JSONL)");
    gen->add_option("--n", v.n, "number of students");
    gen->add_option("--rate", v.rate, "positive-class rate");
    gen->add_option("--shift", v.shift, "mean-shift magnitude");
    gen->add_option("--change-lo", v.change_lo, "earliest change period");
    gen->add_option("--change-hi", v.change_hi, "latest change period");
    gen->add_option("--vocab-shift", v.vocab_shift, "inject at-risk vocabulary (true|false)");

    CLI::App* label = app.add_subcommand("label", "emit the rule-based label CSV");
    add_common(label);
    label->add_option("--in", v.in, "input record file");
    label->add_option("--out", v.out, "output CSV");
    label->add_option("--fraction", v.fraction, "bottom-percentile quota fraction");

    CLI::App* train = app.add_subcommand("train", "fit the risk model and write a checkpoint");
    add_common(train);
    train->add_option("--in", v.in, "input record file");
    train->add_option("--model", v.model, "output checkpoint path");
    train->add_option("--report", v.report, "training report path");
    train->add_option("--embeddings", v.embeddings, "precomputed embedding CSV");
    train->add_option("--target", v.target, "label target: dropout|academic|behavioral|time");
    train->add_option("--fraction", v.fraction, "bottom-percentile quota fraction");
    train->add_option("--val-fraction", v.val_fraction, "held-out share for the report");
    add_model_flags(train);

    CLI::App* predict_cmd = app.add_subcommand("predict", "score records with a trained model");
    add_common(predict_cmd);
    predict_cmd->add_option("--model", v.model, "checkpoint path");
    predict_cmd->add_option("--in", v.in, "input record file");
    predict_cmd->add_option("--out", v.out, "output prediction CSV");
    predict_cmd->add_option("--embeddings", v.embeddings, "precomputed embedding CSV");

    CLI::App* evaluate = app.add_subcommand("evaluate", "compare the model against its baselines");
    add_common(evaluate);
    evaluate->add_option("--in", v.in, "input record file");
    evaluate->add_option("--out", v.out, "output comparison CSV");
    evaluate->add_option("--target", v.target, "label target: dropout|academic|behavioral|time");
    evaluate->add_option("--fraction", v.fraction, "bottom-percentile quota fraction");
    evaluate->add_option("--test-fraction", v.test_fraction, "held-out test share");
    evaluate->add_option("--threshold", v.threshold, "decision threshold");
    evaluate->add_option("--seeds", v.seeds, "comma-separated comparison seeds");
    add_model_flags(evaluate);

    CLI::App* report = app.add_subcommand("report", "cohort difference and changepoint CSVs");
    add_common(report);
    report->add_option("--in", v.in, "input record file");
    report->add_option("--out-diff", v.diff, "group difference CSV path");
    report->add_option("--out-cpd", v.cpd, "per-period changepoint CSV path");
    report->add_option("--model", v.model, "optional checkpoint for the cpd CSV");
    report->add_option("--embeddings", v.embeddings, "precomputed embedding CSV");
    add_model_flags(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            cfg = parse_config_file(config_path);
        }
        CLI::App* active = app.get_subcommands().front();
        auto given = [&](const char* name) {
            const CLI::Option* opt = active->get_option_no_throw(name);
            return opt && opt->count() > 0;
        };

        if (given("--seed")) cfg.seed = v.seed;
        cfg.model.seed = cfg.seed;
        cfg.synth.seed = cfg.seed;
        if (given("--in")) cfg.in_path = v.in;
        if (given("--out")) cfg.out_path = v.out;
        if (given("--model")) cfg.model_path = v.model;
        if (given("--report")) cfg.report_path = v.report;
        if (given("--embeddings")) cfg.embeddings_path = v.embeddings;
        if (given("--out-diff")) cfg.diff_path = v.diff;
        if (given("--out-cpd")) cfg.cpd_path = v.cpd;
        if (given("--target")) cfg.target = v.target;
        if (given("--seeds")) cfg.seeds = v.seeds;
        if (given("--fraction")) cfg.fraction = v.fraction;
        if (given("--test-fraction")) cfg.test_fraction = v.test_fraction;
        if (given("--val-fraction")) cfg.val_fraction = v.val_fraction;
        if (given("--threshold")) cfg.threshold = v.threshold;
        if (given("--n")) cfg.synth.n_students = v.n;
        if (given("--rate")) cfg.synth.positive_rate = v.rate;
        if (given("--shift")) cfg.synth.shift_magnitude = v.shift;
        if (given("--change-lo")) cfg.synth.change_lo = v.change_lo;
        if (given("--change-hi")) cfg.synth.change_hi = v.change_hi;
        if (given("--vocab-shift")) cfg.synth.vocab_shift = v.vocab_shift;
        if (given("--d-text")) cfg.model.d_text = v.d_text;
        if (given("--d-num")) cfg.model.d_num = v.d_num;
        if (given("--ffn-hidden")) cfg.model.ffn_hidden = v.ffn_hidden;
        if (given("--lstm-hidden")) cfg.model.lstm_hidden = v.lstm_hidden;
        if (given("--hazard-lambda")) cfg.model.cpd.hazard_lambda = v.hazard_lambda;
        if (given("--prior-mu")) cfg.model.cpd.prior_mu = v.prior_mu;
        if (given("--prior-kappa")) cfg.model.cpd.prior_kappa = v.prior_kappa;
        if (given("--prior-alpha")) cfg.model.cpd.prior_alpha = v.prior_alpha;
        if (given("--prior-beta")) cfg.model.cpd.prior_beta = v.prior_beta;
        if (given("--max-run")) cfg.model.cpd.max_run = v.max_run;
        if (given("--weight-mode")) cfg.model.weight_mode = weight_mode_from_string(v.weight_mode);
        if (given("--gamma")) cfg.model.gamma = v.gamma;
        if (given("--temperature")) cfg.model.temperature = v.temperature;
        if (given("--cpd-input")) cfg.model.cpd_input = cpd_input_from_string(v.cpd_input);
        if (given("--lr")) cfg.model.lr = v.lr;
        if (given("--epochs")) cfg.model.epochs = v.epochs;
        if (given("--batch-size")) cfg.model.batch_size = v.batch_size;
        if (given("--pos-weight-mode")) {
            if (v.pos_weight_mode == "auto") {
                cfg.model.pos_weight_mode = PosWeightMode::auto_ratio;
            } else if (v.pos_weight_mode == "fixed") {
                cfg.model.pos_weight_mode = PosWeightMode::fixed;
            } else {
                throw ArgumentError("unknown pos_weight_mode: " + v.pos_weight_mode);
            }
        }
        if (given("--pos-weight-value")) cfg.model.pos_weight_value = v.pos_weight_value;
        if (given("--embed-hash-seed")) cfg.model.embed_hash_seed = v.embed_hash_seed;
        if (given("--embed-signed")) cfg.model.embed_signed = v.embed_signed;

        if (active == gen) {
            do_gen_data(cfg);
        } else if (active == label) {
            do_label(cfg);
        } else if (active == train) {
            do_train(cfg);
        } else if (active == predict_cmd) {
            do_predict(cfg);
        } else if (active == evaluate) {
            do_evaluate(cfg);
        } else if (active == report) {
            do_report(cfg);
        }
        return 0;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const TrainingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mcpd
