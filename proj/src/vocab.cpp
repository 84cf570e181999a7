#include "stimap/vocab.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include <json.hpp>

namespace stimap::vocab {

namespace {

// Simple case folding for the Latin script blocks the sources use
// (ASCII, Latin-1 Supplement, Latin Extended-A). Other codepoints pass
// through unchanged.
char32_t fold_codepoint(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp >= 0x100 && cp <= 0x137 && cp % 2 == 0 && cp != 0x130) return cp + 1;
    if (cp >= 0x139 && cp <= 0x147 && cp % 2 == 1) return cp + 1;
    if (cp >= 0x14A && cp <= 0x177 && cp % 2 == 0) return cp + 1;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17D && cp % 2 == 1) return cp + 1;
    if (cp == 0x17F) return 0x73;  // long s
    if (cp == 0x1E9E) return 0xDF;
    return cp;
}

// Everything that is not a letter or digit becomes a space. ASCII is decided
// exactly; beyond that, known punctuation blocks are treated as separators.
bool is_separator(char32_t cp) {
    if (cp < 0x80)
        return !((cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z'));
    if (cp >= 0x80 && cp <= 0xBF) return true;   // C1 controls, Latin-1 punctuation
    if (cp == 0xD7 || cp == 0xF7) return true;   // multiplication / division signs
    if (cp >= 0x2000 && cp <= 0x206F) return true;  // general punctuation
    return false;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Decodes one codepoint starting at i; returns (codepoint, bytes consumed).
// Invalid sequences decode as U+FFFD over a single byte.
std::pair<char32_t, std::size_t> decode_utf8(std::string_view s, std::size_t i) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    auto cont = [&](std::size_t k) {
        return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t cp = (char32_t(b0 & 0x1F) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3F);
        return cp < 0x80 ? std::pair<char32_t, std::size_t>{0xFFFD, 1}
                         : std::pair<char32_t, std::size_t>{cp, 2};
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t cp = (char32_t(b0 & 0x0F) << 12) |
                      (char32_t(static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6) |
                      (static_cast<unsigned char>(s[i + 2]) & 0x3F);
        return cp < 0x800 ? std::pair<char32_t, std::size_t>{0xFFFD, 1}
                          : std::pair<char32_t, std::size_t>{cp, 3};
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t cp = (char32_t(b0 & 0x07) << 18) |
                      (char32_t(static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12) |
                      (char32_t(static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6) |
                      (static_cast<unsigned char>(s[i + 3]) & 0x3F);
        return cp < 0x10000 ? std::pair<char32_t, std::size_t>{0xFFFD, 1}
                            : std::pair<char32_t, std::size_t>{cp, 4};
    }
    return {0xFFFD, 1};
}

}  // namespace

NormalizedText normalize_text(std::string_view raw) {
    NormalizedText out;
    out.text.reserve(raw.size());
    bool pending_space = false;
    std::size_t pending_begin = 0;

    std::size_t i = 0;
    while (i < raw.size()) {
        auto [cp, len] = decode_utf8(raw, i);
        std::size_t begin = i;
        std::size_t end = i + len;
        i = end;
        char32_t folded = fold_codepoint(cp);
        if (cp == 0xFFFD || is_separator(folded)) {
            if (!pending_space) {
                pending_space = true;
                pending_begin = begin;
            }
            continue;
        }
        if (pending_space && !out.text.empty()) {
            out.text += ' ';
            out.origin_begin.push_back(pending_begin);
            out.origin_end.push_back(pending_begin + 1);
        }
        pending_space = false;
        std::size_t before = out.text.size();
        encode_utf8(folded, out.text);
        for (std::size_t b = before; b < out.text.size(); ++b) {
            out.origin_begin.push_back(begin);
            out.origin_end.push_back(end);
        }
    }
    return out;
}

void Vocabulary::validate() const {
    if (terms.empty()) throw VocabError("vocabulary has no terms");
    for (const auto& [term_id, surfaces] : terms) {
        if (term_id.empty()) throw VocabError("vocabulary contains an empty term_id");
        if (surfaces.empty())
            throw VocabError("term '" + term_id + "' has no surface forms");
        for (const auto& surface : surfaces) {
            if (normalize_text(surface).text.empty())
                throw VocabError("term '" + term_id + "' has a surface form that is empty after normalization: '" +
                                 surface + "'");
        }
    }
    std::set<std::string_view> rule_ids;
    for (const auto& rule : rules) {
        if (rule.rule_id.empty()) throw VocabError("vocabulary contains a rule with empty rule_id");
        if (!rule_ids.insert(rule.rule_id).second)
            throw VocabError("duplicate rule_id '" + rule.rule_id + "'");
        if (rule.all_of.empty() && rule.any_of.empty())
            throw VocabError("rule '" + rule.rule_id + "' requires nothing (all_of and any_of both empty)");
        auto check_refs = [&](const std::set<std::string>& ids) {
            for (const auto& id : ids) {
                if (!terms.contains(id))
                    throw VocabError("rule '" + rule.rule_id + "' references unknown term '" + id + "'");
            }
        };
        check_refs(rule.all_of);
        check_refs(rule.any_of);
        check_refs(rule.none_of);
        auto disjoint = [](const std::set<std::string>& a, const std::set<std::string>& b) {
            return std::none_of(a.begin(), a.end(),
                                [&](const std::string& id) { return b.contains(id); });
        };
        if (!disjoint(rule.all_of, rule.any_of) || !disjoint(rule.all_of, rule.none_of) ||
            !disjoint(rule.any_of, rule.none_of))
            throw VocabError("rule '" + rule.rule_id + "' has overlapping all_of/any_of/none_of sets");
    }
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw VocabError("cannot open vocabulary file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw VocabError("vocabulary file is not valid JSON: " + std::string(e.what()));
    }
    Vocabulary v;
    try {
        v.sdg_id = j.at("sdg_id").get<std::string>();
        for (const auto& [term_id, surfaces] : j.at("terms").items())
            v.terms[term_id] = surfaces.get<std::vector<std::string>>();
        for (const auto& rj : j.at("rules")) {
            MatchRule rule;
            rule.rule_id = rj.at("rule_id").get<std::string>();
            auto read_set = [&](const char* key) {
                std::set<std::string> ids;
                if (rj.contains(key))
                    for (const auto& id : rj.at(key)) ids.insert(id.get<std::string>());
                return ids;
            };
            rule.all_of = read_set("all_of");
            rule.any_of = read_set("any_of");
            rule.none_of = read_set("none_of");
            v.rules.push_back(std::move(rule));
        }
    } catch (const nlohmann::json::exception& e) {
        throw VocabError("vocabulary schema violation: " + std::string(e.what()));
    }
    v.validate();
    return v;
}

void CompiledMatcher::add_pattern(std::string_view normalized, const std::string& term_id) {
    int node = 0;
    for (char c : normalized) {
        auto key = static_cast<unsigned char>(c);
        auto it = nodes_[node].next.find(key);
        if (it == nodes_[node].next.end()) {
            nodes_.emplace_back();
            it = nodes_[node].next.emplace(key, static_cast<int>(nodes_.size() - 1)).first;
        }
        node = it->second;
    }
    // Identical normalized surfaces may serve several terms; keep one pattern per term.
    for (int p : nodes_[node].outputs) {
        if (patterns_[p].term_id == term_id) return;
    }
    patterns_.push_back({term_id, normalized.size()});
    nodes_[node].outputs.push_back(static_cast<int>(patterns_.size() - 1));
}

void CompiledMatcher::build_links() {
    std::deque<int> queue;
    for (auto& [c, child] : nodes_[0].next) {
        nodes_[child].fail = 0;
        queue.push_back(child);
    }
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        for (auto& [c, child] : nodes_[node].next) {
            int f = nodes_[node].fail;
            while (f != 0 && !nodes_[f].next.contains(c)) f = nodes_[f].fail;
            auto it = nodes_[f].next.find(c);
            nodes_[child].fail = (it != nodes_[f].next.end() && it->second != child) ? it->second : 0;
            const auto& inherited = nodes_[nodes_[child].fail].outputs;
            nodes_[child].outputs.insert(nodes_[child].outputs.end(), inherited.begin(),
                                         inherited.end());
            queue.push_back(child);
        }
    }
}

CompiledMatcher CompiledMatcher::compile(const Vocabulary& vocabulary) {
    vocabulary.validate();
    return compile(vocabulary.terms);
}

CompiledMatcher CompiledMatcher::compile(const std::map<std::string, std::vector<std::string>>& terms) {
    CompiledMatcher m;
    for (const auto& [term_id, surfaces] : terms) {
        for (const auto& surface : surfaces) {
            auto normalized = normalize_text(surface);
            if (normalized.text.empty())
                throw VocabError("surface form empty after normalization for term '" + term_id + "'");
            m.add_pattern(normalized.text, term_id);
        }
    }
    m.build_links();
    return m;
}

std::vector<TermMatch> CompiledMatcher::find(std::string_view text) const {
    NormalizedText norm = normalize_text(text);
    const std::string& t = norm.text;
    std::set<TermMatch> found;
    int node = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        auto c = static_cast<unsigned char>(t[i]);
        while (node != 0 && !nodes_[node].next.contains(c)) node = nodes_[node].fail;
        auto it = nodes_[node].next.find(c);
        node = it == nodes_[node].next.end() ? 0 : it->second;
        for (int p : nodes_[node].outputs) {
            std::size_t end = i + 1;
            std::size_t begin = end - patterns_[p].length;
            bool left_ok = begin == 0 || t[begin - 1] == ' ';
            bool right_ok = end == t.size() || t[end] == ' ';
            if (!left_ok || !right_ok) continue;
            found.insert({patterns_[p].term_id, norm.origin_begin[begin], norm.origin_end[end - 1]});
        }
    }
    return {found.begin(), found.end()};
}

std::set<std::string> CompiledMatcher::find_term_ids(std::string_view text) const {
    std::set<std::string> ids;
    for (auto& match : find(text)) ids.insert(std::move(match.term_id));
    return ids;
}

std::vector<std::string> evaluate_rules(const Vocabulary& vocabulary,
                                        const std::set<std::string>& found_terms) {
    std::vector<std::string> satisfied;
    for (const auto& rule : vocabulary.rules) {
        bool all = std::all_of(rule.all_of.begin(), rule.all_of.end(),
                               [&](const std::string& id) { return found_terms.contains(id); });
        bool any = rule.any_of.empty() ||
                   std::any_of(rule.any_of.begin(), rule.any_of.end(),
                               [&](const std::string& id) { return found_terms.contains(id); });
        bool none = std::none_of(rule.none_of.begin(), rule.none_of.end(),
                                 [&](const std::string& id) { return found_terms.contains(id); });
        if (all && any && none) satisfied.push_back(rule.rule_id);
    }
    return satisfied;
}

TagOutcome tag_corpus(const Corpus& corpus, const Vocabulary& vocabulary) {
    CompiledMatcher matcher = CompiledMatcher::compile(vocabulary);
    TagOutcome outcome;
    for (Source s : all_sources()) outcome.by_source[s];
    for (const auto& record : corpus.records) {
        SDGTagResult result;
        result.record_id = record.record_id;
        result.matched_terms = matcher.find(record.text());
        std::set<std::string> found;
        for (const auto& m : result.matched_terms) found.insert(m.term_id);
        result.matched_rules = evaluate_rules(vocabulary, found);
        result.is_sdg13 = !result.matched_rules.empty();
        auto& summary = outcome.by_source[record.source];
        ++summary.total;
        if (result.is_sdg13) ++summary.tagged;
        outcome.results.push_back(std::move(result));
    }
    std::sort(outcome.results.begin(), outcome.results.end(),
              [](const SDGTagResult& a, const SDGTagResult& b) { return a.record_id < b.record_id; });
    return outcome;
}

}  // namespace stimap::vocab
