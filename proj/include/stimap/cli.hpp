#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stimap/core.hpp"

namespace stimap::cli {

struct SourceConfig {
    std::string mode = "fixture";  // "fixture" or "http"
    std::filesystem::path fixture_dir;
    std::string base_url;
    std::size_t page_size = 25;
    double rate_per_sec = 5.0;
    std::optional<std::string> result_type;  // openaire result-type filter
};

struct PipelineConfig {
    std::map<Source, SourceConfig> sources;
    std::string country_code = "DK";
    int year_from = 2014;
    int year_to = 2019;
    std::optional<std::size_t> max_records;

    std::filesystem::path vocabulary_path;
    std::filesystem::path lexicon_path;

    // classifier
    int epochs = 300;
    double learning_rate = 0.1;
    double l2 = 1e-4;
    std::size_t min_df = 2;
    std::size_t max_vocab = 50000;
    double threshold = 0.10;
    std::uint64_t classifier_seed = 0;

    // topics
    int topic_count = 30;
    std::optional<double> alpha;  // defaults to 50/K
    double beta = 0.01;
    int sweeps = 1000;
    std::uint64_t topics_seed = 13;
    std::size_t topics_min_df = 2;
    std::size_t min_doc_len = 3;
    std::filesystem::path stopwords_path;
    std::optional<Source> topics_source;  // restrict topic fitting to one source

    // embed
    double perplexity = 30.0;
    int iterations = 1000;
    double tsne_learning_rate = 200.0;
    std::uint64_t embed_seed = 17;

    std::filesystem::path output_dir;
    std::filesystem::path cache_dir;
    bool offline = false;
    bool normalized_histogram = false;  // also emit the per-source-share figure

    double effective_alpha() const;
};

/// Parses and validates the JSON config; relative paths resolve against the
/// config file's directory. Throws ConfigError on any violation.
PipelineConfig load_config(const std::filesystem::path& path);

// Stage entry points. Each writes its outputs plus a completion marker into
// output_dir and throws on failure (ConfigError for missing inputs).
void cmd_harvest(const PipelineConfig& config, const std::optional<Source>& only = std::nullopt);
void cmd_tag(const PipelineConfig& config);
void cmd_classify(const PipelineConfig& config);
void cmd_topics(const PipelineConfig& config);
void cmd_embed(const PipelineConfig& config);
void cmd_report(const PipelineConfig& config);

/// Runs every stage in order, skipping those whose completion marker exists.
/// Returns the names of the stages that actually executed.
std::vector<std::string> cmd_pipeline(const PipelineConfig& config);

/// Full argv-level entry point; maps errors to exit codes
/// (0 success, 1 runtime failure, 2 usage or configuration error).
int run(int argc, const char* const* argv);

}  // namespace stimap::cli
