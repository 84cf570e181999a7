#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "stimap/core.hpp"

namespace stimap::topics {

struct BowCorpus {
    std::vector<std::string> vocabulary;        // index -> token, first-appearance order
    std::vector<std::vector<int>> documents;    // token index sequences
    std::vector<std::string> doc_ids;           // parallel to documents
    std::vector<std::string> dropped_doc_ids;   // fell below min_doc_len
    std::size_t min_df = 1;
    std::size_t stopwords_applied = 0;
};

std::set<std::string> load_stopwords(const std::filesystem::path& path);

/// Tokenizes, drops stopwords / short tokens / rare tokens, drops documents
/// that end up shorter than min_doc_len.
BowCorpus build_bow(const std::vector<std::pair<std::string, std::string>>& id_texts,
                    const std::set<std::string>& stopwords, std::size_t min_df,
                    std::size_t min_doc_len);

struct TopicModel {
    int k = 0;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<std::vector<double>> phi;    // k x V, rows sum to 1
    std::vector<std::vector<double>> theta;  // D x k, rows sum to 1
    std::vector<std::vector<int>> assignments;  // per-token topics at the final sweep
    std::uint64_t seed = 0;
    int sweeps = 0;
    std::vector<std::string> vocabulary;
    std::vector<std::string> doc_ids;
};

/// Count state exposed to sweep observers (tests verify conservation).
struct GibbsCounts {
    std::vector<std::vector<int>> doc_topic;    // D x K
    std::vector<std::vector<int>> topic_word;   // K x V
    std::vector<int> topic_total;               // K
    std::vector<int> doc_total;                 // D
};

using SweepObserver = std::function<void(int sweep, const GibbsCounts& counts)>;

/// Collapsed Gibbs sampling; point estimates from the final sweep only.
/// All randomness comes from the pinned generator seeded with `seed`.
TopicModel lda_fit(const BowCorpus& bow, int k, double alpha, double beta, int sweeps,
                   std::uint64_t seed, const SweepObserver& observer = {});

/// The n highest-phi tokens of a topic, ties broken lexicographically.
std::vector<std::string> top_words(const TopicModel& model, int topic, std::size_t n);

/// Argmax over the theta row, ties broken by lowest topic index.
int dominant_topic(const TopicModel& model, std::size_t doc);

// Persistence: matrices stored as full-precision decimal strings.
void save_topic_model(const std::filesystem::path& path, const TopicModel& model);
TopicModel load_topic_model(const std::filesystem::path& path);

}  // namespace stimap::topics
