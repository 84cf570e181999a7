#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stimap/core.hpp"

namespace stimap::vocab {

struct VocabError : Error {
    using Error::Error;
};

/// Boolean co-occurrence rule over document-level term presence.
struct MatchRule {
    std::string rule_id;
    std::set<std::string> all_of;   // every term must occur
    std::set<std::string> any_of;   // at least one must occur; empty = no constraint
    std::set<std::string> none_of;  // none may occur
};

struct Vocabulary {
    std::string sdg_id;
    std::map<std::string, std::vector<std::string>> terms;  // term_id -> surface forms
    std::vector<MatchRule> rules;

    /// Throws VocabError naming the offending rule/term on invariant violations.
    void validate() const;
};

/// Loads and validates the JSON vocabulary file format.
Vocabulary load_vocabulary(const std::filesystem::path& path);

/// Normalized text plus per-byte maps back into the original string.
struct NormalizedText {
    std::string text;
    std::vector<std::size_t> origin_begin;  // normalized byte -> original byte begin
    std::vector<std::size_t> origin_end;    // normalized byte -> one past original byte end
};

/// Case-folds (Latin script blocks), maps punctuation to spaces, collapses
/// whitespace runs, trims. Offset maps allow reporting matches in original bytes.
NormalizedText normalize_text(std::string_view raw);

/// Multi-pattern matcher over normalized surface forms (Aho-Corasick automaton).
/// Immutable after compilation; safe for concurrent matching.
class CompiledMatcher {
  public:
    static CompiledMatcher compile(const Vocabulary& vocabulary);
    static CompiledMatcher compile(const std::map<std::string, std::vector<std::string>>& terms);

    /// Every token-boundary-aligned occurrence of every surface form,
    /// offsets in original-text bytes, deduplicated and sorted.
    std::vector<TermMatch> find(std::string_view text) const;

    /// Distinct term ids present in the text.
    std::set<std::string> find_term_ids(std::string_view text) const;

  private:
    struct Node {
        std::map<unsigned char, int> next;
        int fail = 0;
        std::vector<int> outputs;  // pattern indices ending here
    };

    struct Pattern {
        std::string term_id;
        std::size_t length = 0;  // bytes in normalized form
    };

    void add_pattern(std::string_view normalized, const std::string& term_id);
    void build_links();

    std::vector<Node> nodes_{1};
    std::vector<Pattern> patterns_;
};

/// Rule ids satisfied by the given set of present terms, in rule file order.
std::vector<std::string> evaluate_rules(const Vocabulary& vocabulary,
                                        const std::set<std::string>& found_terms);

struct SourceTagSummary {
    std::size_t total = 0;
    std::size_t tagged = 0;
};

struct TagOutcome {
    std::vector<SDGTagResult> results;  // sorted by record_id
    std::map<Source, SourceTagSummary> by_source;
};

/// Tags every record (title + newline + body) against the vocabulary.
TagOutcome tag_corpus(const Corpus& corpus, const Vocabulary& vocabulary);

}  // namespace stimap::vocab
