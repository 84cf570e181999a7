#include "stimap/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "stimap/vocab.hpp"

namespace stimap::classifier {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> tokenize(std::string_view text) {
    std::string normalized = vocab::normalize_text(text).text;
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start < normalized.size()) {
        auto end = normalized.find(' ', start);
        if (end == std::string::npos) end = normalized.size();
        if (end > start) tokens.push_back(normalized.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

// Shortest decimal form that parses back to the same double.
std::string double_to_string(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ptr);
}

double double_from_string(const std::string& text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError("bad decimal string in model file: '" + text + "'");
    return value;
}

}  // namespace

const std::array<ERCPanel, kPanelCount>& erc_panels() {
    static const std::array<ERCPanel, kPanelCount> panels = {{
        {"PE1", DomainGroup::PE},  {"PE2", DomainGroup::PE},  {"PE3", DomainGroup::PE},
        {"PE4", DomainGroup::PE},  {"PE5", DomainGroup::PE},  {"PE6", DomainGroup::PE},
        {"PE7", DomainGroup::PE},  {"PE8", DomainGroup::PE},  {"PE9", DomainGroup::PE},
        {"PE10", DomainGroup::PE}, {"LS1", DomainGroup::LS},  {"LS2", DomainGroup::LS},
        {"LS3", DomainGroup::LS},  {"LS4", DomainGroup::LS},  {"LS5", DomainGroup::LS},
        {"LS6", DomainGroup::LS},  {"LS7", DomainGroup::LS},  {"LS8", DomainGroup::LS},
        {"LS9", DomainGroup::LS},  {"SH1", DomainGroup::SH},  {"SH2", DomainGroup::SH},
        {"SH3", DomainGroup::SH},  {"SH4", DomainGroup::SH},  {"SH5", DomainGroup::SH},
        {"SH6", DomainGroup::SH},
    }};
    return panels;
}

int panel_index(std::string_view code) {
    const auto& panels = erc_panels();
    for (std::size_t i = 0; i < panels.size(); ++i)
        if (panels[i].code == code) return static_cast<int>(i);
    return -1;
}

std::string_view panel_code(int index) {
    if (index < 0 || index >= static_cast<int>(kPanelCount))
        throw Error("panel index out of range: " + std::to_string(index));
    return erc_panels()[static_cast<std::size_t>(index)].code;
}

void validate_seed_lexicons(const SeedLexicons& lexicons) {
    for (const auto& panel : erc_panels()) {
        auto it = lexicons.find(std::string(panel.code));
        if (it == lexicons.end() || it->second.empty())
            throw ConfigError("seed lexicon is missing panel " + std::string(panel.code));
    }
    for (const auto& [code, seeds] : lexicons) {
        if (panel_index(code) < 0) throw ConfigError("seed lexicon names unknown panel " + code);
    }
    std::map<std::string, std::string> owner;
    for (const auto& [code, seeds] : lexicons) {
        for (const auto& seed : seeds) {
            std::string normalized = vocab::normalize_text(seed).text;
            if (normalized.empty())
                throw ConfigError("panel " + code + " has a seed empty after normalization: '" +
                                  seed + "'");
            auto [it, inserted] = owner.emplace(normalized, code);
            if (!inserted && it->second != code)
                throw ConfigError("seed '" + seed + "' appears in both " + it->second + " and " +
                                  code);
        }
    }
}

SeedLexicons load_seed_lexicons(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open seed lexicon file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("seed lexicon file is not valid JSON: " + std::string(e.what()));
    }
    SeedLexicons lexicons;
    for (const auto& [code, seeds] : j.items())
        lexicons[code] = seeds.get<std::vector<std::string>>();
    validate_seed_lexicons(lexicons);
    return lexicons;
}

std::map<std::string, int> weak_label(const std::vector<STIRecord>& records,
                                      const SeedLexicons& lexicons) {
    validate_seed_lexicons(lexicons);
    // One matcher over all seeds; term ids carry the panel and the seed index
    // so distinct-seed hits can be counted per panel.
    std::map<std::string, std::vector<std::string>> terms;
    for (const auto& [code, seeds] : lexicons) {
        for (std::size_t i = 0; i < seeds.size(); ++i)
            terms[code + "#" + std::to_string(i)] = {seeds[i]};
    }
    vocab::CompiledMatcher matcher = vocab::CompiledMatcher::compile(terms);

    std::map<std::string, int> labels;
    for (const auto& record : records) {
        std::set<std::string> hits = matcher.find_term_ids(record.text());
        std::array<int, kPanelCount> distinct_hits{};
        for (const auto& id : hits) {
            auto sep = id.find('#');
            int panel = panel_index(std::string_view(id).substr(0, sep));
            if (panel >= 0) ++distinct_hits[static_cast<std::size_t>(panel)];
        }
        int best = -1;
        bool tied = false;
        for (std::size_t p = 0; p < kPanelCount; ++p) {
            if (best < 0 || distinct_hits[p] > distinct_hits[static_cast<std::size_t>(best)]) {
                best = static_cast<int>(p);
                tied = false;
            } else if (distinct_hits[p] == distinct_hits[static_cast<std::size_t>(best)]) {
                tied = true;
            }
        }
        if (best >= 0 && !tied && distinct_hits[static_cast<std::size_t>(best)] >= 2)
            labels[record.record_id] = best;
    }
    return labels;
}

double FeatureSpace::idf(int token_index) const {
    return std::log((1.0 + static_cast<double>(corpus_size)) /
                    (1.0 + static_cast<double>(df[static_cast<std::size_t>(token_index)]))) +
           1.0;
}

FeatureSpace fit_feature_space(const std::vector<std::string>& texts, std::size_t min_df,
                               std::size_t max_vocab) {
    if (texts.empty()) throw Error("fit_feature_space: no texts");
    std::map<std::string, std::size_t> df_by_token;
    for (const auto& text : texts) {
        std::set<std::string> seen;
        for (auto& token : tokenize(text)) seen.insert(std::move(token));
        for (const auto& token : seen) ++df_by_token[token];
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [token, df] : df_by_token)
        if (df >= min_df) kept.emplace_back(token, df);
    if (kept.empty()) throw Error("fit_feature_space: every token fell below min_df");
    if (kept.size() > max_vocab) {
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        kept.resize(max_vocab);
    }
    std::sort(kept.begin(), kept.end());

    FeatureSpace space;
    space.corpus_size = texts.size();
    space.tokens.reserve(kept.size());
    space.df.reserve(kept.size());
    for (auto& [token, df] : kept) {
        space.index.emplace(token, static_cast<int>(space.tokens.size()));
        space.tokens.push_back(std::move(token));
        space.df.push_back(df);
    }
    return space;
}

SparseVec featurize(const FeatureSpace& space, std::string_view text) {
    std::map<int, std::size_t> tf;
    for (const auto& token : tokenize(text)) {
        auto it = space.index.find(token);
        if (it != space.index.end()) ++tf[it->second];
    }
    SparseVec vec;
    vec.reserve(tf.size());
    double norm_sq = 0.0;
    for (const auto& [idx, count] : tf) {
        double value = (1.0 + std::log(static_cast<double>(count))) * space.idf(idx);
        vec.emplace_back(idx, value);
        norm_sq += value * value;
    }
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& [idx, value] : vec) value *= inv;
    }
    return vec;
}

double loss_and_gradient(std::span<const double> weights, std::span<const double> bias,
                         std::size_t feature_dim, const std::vector<Example>& examples,
                         double l2, std::span<double> grad) {
    const std::size_t k = kPanelCount;
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

    double loss = 0.0;
    std::array<double, kPanelCount> logits;
    for (const auto& example : examples) {
        for (std::size_t c = 0; c < k; ++c) {
            double z = bias[c];
            for (const auto& [idx, value] : example.x)
                z += weights[c * feature_dim + static_cast<std::size_t>(idx)] * value;
            logits[c] = z;
        }
        double max_logit = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            logits[c] = std::exp(logits[c] - max_logit);
            sum += logits[c];
        }
        auto label = static_cast<std::size_t>(example.label);
        loss -= std::log(logits[label] / sum);
        if (want_grad) {
            for (std::size_t c = 0; c < k; ++c) {
                double residual = logits[c] / sum - (c == label ? 1.0 : 0.0);
                for (const auto& [idx, value] : example.x)
                    grad[c * feature_dim + static_cast<std::size_t>(idx)] += residual * value;
                grad[k * feature_dim + c] += residual;
            }
        }
    }
    double inv_n = 1.0 / static_cast<double>(examples.size());
    loss *= inv_n;
    double penalty = 0.0;
    for (double w : weights) penalty += w * w;
    loss += 0.5 * l2 * penalty;
    if (want_grad) {
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= inv_n;
        for (std::size_t i = 0; i < weights.size(); ++i) grad[i] += l2 * weights[i];
    }
    return loss;
}

PanelModel train(const std::vector<Example>& examples, std::size_t feature_dim,
                 const TrainHyperparams& hyper) {
    std::set<int> labels;
    for (const auto& example : examples) {
        if (example.label < 0 || example.label >= static_cast<int>(kPanelCount))
            throw Error("train: label out of panel range");
        labels.insert(example.label);
    }
    if (labels.size() < 2) throw Error("train: need at least two distinct labels");

    PanelModel model;
    model.feature_dim = feature_dim;
    model.hyper = hyper;
    model.weights.assign(kPanelCount * feature_dim, 0.0);
    model.bias.assign(kPanelCount, 0.0);
    model.loss_history.reserve(static_cast<std::size_t>(hyper.epochs));

    std::vector<double> grad(kPanelCount * feature_dim + kPanelCount, 0.0);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        double loss = loss_and_gradient(model.weights, model.bias, feature_dim, examples,
                                        hyper.l2, grad);
        if (!std::isfinite(loss))
            throw Error("train: non-finite loss at epoch " + std::to_string(epoch));
        model.loss_history.push_back(loss);
        for (std::size_t i = 0; i < model.weights.size(); ++i)
            model.weights[i] -= hyper.learning_rate * grad[i];
        for (std::size_t c = 0; c < kPanelCount; ++c)
            model.bias[c] -= hyper.learning_rate * grad[kPanelCount * feature_dim + c];
    }
    model.final_loss = loss_and_gradient(model.weights, model.bias, feature_dim, examples,
                                         hyper.l2, {});
    if (!std::isfinite(model.final_loss))
        throw Error("train: non-finite loss after epoch " + std::to_string(hyper.epochs));
    return model;
}

PanelDistribution predict(const PanelModel& model, const SparseVec& vec, double threshold,
                          std::string record_id) {
    for (const auto& [idx, value] : vec) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= model.feature_dim)
            throw Error("predict: feature index " + std::to_string(idx) +
                        " outside model dimension " + std::to_string(model.feature_dim));
    }
    PanelDistribution dist;
    dist.record_id = std::move(record_id);
    std::array<double, kPanelCount> logits;
    for (std::size_t c = 0; c < kPanelCount; ++c) {
        double z = model.bias[c];
        for (const auto& [idx, value] : vec)
            z += model.weights[c * model.feature_dim + static_cast<std::size_t>(idx)] * value;
        logits[c] = z;
    }
    double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < kPanelCount; ++c) {
        logits[c] = std::exp(logits[c] - max_logit);
        sum += logits[c];
    }
    int best = 0;
    for (std::size_t c = 0; c < kPanelCount; ++c) {
        dist.probabilities[c] = logits[c] / sum;
        if (dist.probabilities[c] > dist.probabilities[static_cast<std::size_t>(best)])
            best = static_cast<int>(c);
    }
    if (dist.probabilities[static_cast<std::size_t>(best)] >= threshold) dist.assigned = best;
    return dist;
}

void LinearSoftmaxBackend::fit(const std::vector<LabeledText>& examples,
                               const TrainHyperparams& hyper, std::size_t min_df,
                               std::size_t max_vocab) {
    std::vector<std::string> texts;
    texts.reserve(examples.size());
    for (const auto& example : examples) texts.push_back(example.text);
    space_ = fit_feature_space(texts, min_df, max_vocab);
    std::vector<Example> vectors;
    vectors.reserve(examples.size());
    for (const auto& example : examples)
        vectors.push_back({featurize(space_, example.text), example.label});
    model_ = train(vectors, space_.tokens.size(), hyper);
}

PanelDistribution LinearSoftmaxBackend::score(const std::string& record_id,
                                              const std::string& text, double threshold) const {
    return predict(model_, featurize(space_, text), threshold, record_id);
}

void LinearSoftmaxBackend::save(const std::filesystem::path& path) const {
    ordered_json j;
    j["format"] = "sti-mapper-panel-model/1";
    j["hyperparams"] = {{"epochs", model_.hyper.epochs},
                        {"learning_rate", double_to_string(model_.hyper.learning_rate)},
                        {"l2", double_to_string(model_.hyper.l2)},
                        {"seed", model_.hyper.seed}};
    j["feature_space"] = {{"corpus_size", space_.corpus_size},
                          {"tokens", space_.tokens},
                          {"df", space_.df}};
    std::vector<std::string> weights;
    weights.reserve(model_.weights.size());
    for (double w : model_.weights) weights.push_back(double_to_string(w));
    std::vector<std::string> bias;
    bias.reserve(model_.bias.size());
    for (double b : model_.bias) bias.push_back(double_to_string(b));
    j["weights"] = weights;
    j["bias"] = bias;
    j["final_loss"] = double_to_string(model_.final_loss);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path.string());
    out << j.dump(2) << '\n';
}

LinearSoftmaxBackend LinearSoftmaxBackend::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file is not valid JSON: " + std::string(e.what()));
    }
    LinearSoftmaxBackend backend;
    backend.space_.corpus_size = j.at("feature_space").at("corpus_size").get<std::size_t>();
    backend.space_.tokens = j.at("feature_space").at("tokens").get<std::vector<std::string>>();
    backend.space_.df = j.at("feature_space").at("df").get<std::vector<std::size_t>>();
    for (std::size_t i = 0; i < backend.space_.tokens.size(); ++i)
        backend.space_.index.emplace(backend.space_.tokens[i], static_cast<int>(i));

    backend.model_.feature_dim = backend.space_.tokens.size();
    backend.model_.hyper.epochs = j.at("hyperparams").at("epochs").get<int>();
    backend.model_.hyper.learning_rate =
        double_from_string(j.at("hyperparams").at("learning_rate").get<std::string>());
    backend.model_.hyper.l2 = double_from_string(j.at("hyperparams").at("l2").get<std::string>());
    backend.model_.hyper.seed = j.at("hyperparams").at("seed").get<std::uint64_t>();
    for (const auto& w : j.at("weights"))
        backend.model_.weights.push_back(double_from_string(w.get<std::string>()));
    for (const auto& b : j.at("bias"))
        backend.model_.bias.push_back(double_from_string(b.get<std::string>()));
    backend.model_.final_loss = double_from_string(j.at("final_loss").get<std::string>());
    if (backend.model_.weights.size() != kPanelCount * backend.model_.feature_dim ||
        backend.model_.bias.size() != kPanelCount)
        throw ParseError("model file dimensions are inconsistent: " + path.string());
    return backend;
}

}  // namespace stimap::classifier
