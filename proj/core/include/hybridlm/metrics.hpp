#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hybridlm::metrics {

// Whitespace tokenization; sentences split on '.', '!', '?'. Fixed choices
// so scores stay comparable across runs.
std::vector<std::string> whitespace_tokens(const std::string& text);
std::vector<std::string> split_sentences(const std::string& text);

// Percent of unique trigrams among all trigrams; absent under 3 tokens.
std::optional<double> distinct3(const std::string& text);

// Percent of sentences containing at least one 4-gram that occurs more than
// once within the sentence; sentences shorter than 4 tokens count with I=0.
// Absent when no sentence has at least 4 tokens.
std::optional<double> repetition4(const std::string& text);

// Percent of corpus 4-gram types occurring at least n times (n >= 2).
// token_denominator switches the denominator to the total 4-gram count; the
// type-count reading is the default.
double lexical_repetition(const std::vector<std::string>& corpus, int n, bool token_denominator = false);

struct RepetitionReport {
    std::optional<double> d3;   // mean over texts with a defined score
    std::optional<double> r4;   // mean over texts with a defined score
    double lr_n = 0.0;
    int n = 2;
    int texts = 0;

    nlohmann::json to_json() const;
};

RepetitionReport repetition_report(const std::vector<std::string>& texts, int n = 2);

}  // namespace hybridlm::metrics
