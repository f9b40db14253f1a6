#pragma once

#include "mcpd/evalkit.hpp"
#include "mcpd/mcpd_pipeline.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mcpd {

// One bag of knobs shared by every subcommand; a key=value config file fills
// it first, then explicit command-line flags override individual fields.
struct RunConfig {
    McpdConfig model;
    SyntheticConfig synth;
    std::string in_path;
    std::string out_path;
    std::string model_path;
    std::string report_path;
    std::string embeddings_path;
    std::string diff_path;
    std::string cpd_path;
    std::string target = "dropout";
    std::string seeds = "0";       // evaluate: comma-separated list
    double fraction = 0.15;        // bottom-percentile quota for rule labels
    double test_fraction = 0.2;
    double val_fraction = 0.0;     // train: held-out share for the report
    double threshold = 0.5;
    std::uint64_t seed = 0;
};

// Parses one `key=value` line (comments and blank lines are the caller's
// concern); unknown keys or unparsable values raise ParseError with the line
// number.
void apply_config_line(RunConfig& config, const std::string& key, const std::string& value,
                       long line);

RunConfig parse_config_file(const std::string& path);

// Entry point behind the executable: dispatches the subcommand and maps
// errors onto exit codes (1 usage, 2 data/schema/io, 3 training).
int run(int argc, const char* const* argv);

}  // namespace mcpd
