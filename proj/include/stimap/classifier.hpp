#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stimap/core.hpp"

namespace stimap::classifier {

inline constexpr std::size_t kPanelCount = 25;

enum class DomainGroup { PE, LS, SH };

struct ERCPanel {
    std::string_view code;
    DomainGroup group;
};

/// The 25 panels in canonical order: PE1..PE10, LS1..LS9, SH1..SH6.
const std::array<ERCPanel, kPanelCount>& erc_panels();
int panel_index(std::string_view code);  // -1 when unknown
std::string_view panel_code(int index);

/// Seed surface forms per panel code; a surface may appear in one panel only.
using SeedLexicons = std::map<std::string, std::vector<std::string>>;
SeedLexicons load_seed_lexicons(const std::filesystem::path& path);
void validate_seed_lexicons(const SeedLexicons& lexicons);

/// Distant labeling: a record gets panel p when it holds at least two distinct
/// seed-term hits for p and strictly more than for any other panel.
/// Returns record_id -> panel index for the labeled subset.
std::map<std::string, int> weak_label(const std::vector<STIRecord>& records,
                                      const SeedLexicons& lexicons);

struct FeatureSpace {
    std::vector<std::string> tokens;  // index -> token
    std::unordered_map<std::string, int> index;
    std::vector<std::size_t> df;
    std::size_t corpus_size = 0;

    double idf(int token_index) const;
};

FeatureSpace fit_feature_space(const std::vector<std::string>& texts, std::size_t min_df,
                               std::size_t max_vocab);

/// Sparse vector sorted by feature index.
using SparseVec = std::vector<std::pair<int, double>>;

/// Sublinear tf-idf, scaled to unit Euclidean norm (zero vector when no
/// in-vocabulary token survives).
SparseVec featurize(const FeatureSpace& space, std::string_view text);

struct TrainHyperparams {
    int epochs = 300;
    double learning_rate = 0.1;
    double l2 = 1e-4;
    std::uint64_t seed = 0;
};

struct PanelModel {
    std::vector<double> weights;  // kPanelCount x feature_dim, row-major
    std::vector<double> bias;     // kPanelCount
    std::size_t feature_dim = 0;
    TrainHyperparams hyper;
    double final_loss = 0.0;
    std::vector<double> loss_history;  // loss before each epoch's update
};

struct Example {
    SparseVec x;
    int label = 0;  // panel index
};

/// Mean cross-entropy + (l2/2)*||W||^2 at the given parameters; writes the
/// analytic gradient (same layout as weights then bias) when grad is non-empty.
double loss_and_gradient(std::span<const double> weights, std::span<const double> bias,
                         std::size_t feature_dim, const std::vector<Example>& examples,
                         double l2, std::span<double> grad);

/// Full-batch gradient descent from zero-initialized parameters.
PanelModel train(const std::vector<Example>& examples, std::size_t feature_dim,
                 const TrainHyperparams& hyper);

struct PanelDistribution {
    std::string record_id;
    std::array<double, kPanelCount> probabilities{};
    std::optional<int> assigned;  // argmax when max prob >= threshold
};

PanelDistribution predict(const PanelModel& model, const SparseVec& vec, double threshold,
                          std::string record_id = {});

/// Pipeline-facing backend seam: train on labeled texts, score raw text.
/// The linear tf-idf softmax backend is the desk-scale implementation; an
/// encoder-based backend can be swapped in without touching the stages.
class ClassifierBackend {
  public:
    virtual ~ClassifierBackend() = default;

    struct LabeledText {
        std::string text;
        int label = 0;
    };

    virtual void fit(const std::vector<LabeledText>& examples, const TrainHyperparams& hyper,
                     std::size_t min_df, std::size_t max_vocab) = 0;
    virtual PanelDistribution score(const std::string& record_id, const std::string& text,
                                    double threshold) const = 0;
};

class LinearSoftmaxBackend : public ClassifierBackend {
  public:
    void fit(const std::vector<LabeledText>& examples, const TrainHyperparams& hyper,
             std::size_t min_df, std::size_t max_vocab) override;
    PanelDistribution score(const std::string& record_id, const std::string& text,
                            double threshold) const override;

    const FeatureSpace& feature_space() const { return space_; }
    const PanelModel& model() const { return model_; }

    void save(const std::filesystem::path& path) const;
    static LinearSoftmaxBackend load(const std::filesystem::path& path);

  private:
    FeatureSpace space_;
    PanelModel model_;
};

}  // namespace stimap::classifier
