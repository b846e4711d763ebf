#include "hybridlm/metrics.hpp"

#include <cctype>
#include <map>

#include "hybridlm/errors.hpp"

namespace hybridlm::metrics {

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?') {
            if (!whitespace_tokens(cur).empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!whitespace_tokens(cur).empty()) out.push_back(cur);
    return out;
}

namespace {

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n) {
    std::vector<std::string> out;
    if (static_cast<int>(tokens.size()) < n) return out;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g = tokens[i];
        for (int k = 1; k < n; ++k) {
            g += '\x1f';
            g += tokens[i + k];
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace

std::optional<double> distinct3(const std::string& text) {
    const auto tokens = whitespace_tokens(text);
    const auto grams = ngrams(tokens, 3);
    if (grams.empty()) return std::nullopt;
    std::map<std::string, int> counts;
    for (const auto& g : grams) ++counts[g];
    return 100.0 * static_cast<double>(counts.size()) / static_cast<double>(grams.size());
}

std::optional<double> repetition4(const std::string& text) {
    const auto sentences = split_sentences(text);
    int long_enough = 0;
    int repeated = 0;
    int total = 0;
    for (const auto& s : sentences) {
        ++total;
        const auto grams = ngrams(whitespace_tokens(s), 4);
        if (grams.empty()) continue;
        ++long_enough;
        std::map<std::string, int> counts;
        bool hit = false;
        for (const auto& g : grams) {
            if (++counts[g] >= 2) hit = true;
        }
        repeated += hit ? 1 : 0;
    }
    if (long_enough == 0) return std::nullopt;
    return 100.0 * static_cast<double>(repeated) / static_cast<double>(total);
}

double lexical_repetition(const std::vector<std::string>& corpus, int n, bool token_denominator) {
    if (n < 2) throw ConfigError("lexical_repetition: n must be >= 2");
    std::map<std::string, int> counts;
    size_t total_windows = 0;
    for (const auto& text : corpus) {
        const auto grams = ngrams(whitespace_tokens(text), 4);
        total_windows += grams.size();
        for (const auto& g : grams) ++counts[g];
    }
    const double denom = token_denominator ? static_cast<double>(total_windows) : static_cast<double>(counts.size());
    if (denom == 0.0) return 0.0;
    int hits = 0;
    for (const auto& [g, c] : counts) {
        if (c >= n) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / denom;
}

nlohmann::json RepetitionReport::to_json() const {
    nlohmann::json j{{"lr_n", lr_n}, {"n", n}, {"texts", texts}};
    j["d3"] = d3 ? nlohmann::json(*d3) : nlohmann::json(nullptr);
    j["r4"] = r4 ? nlohmann::json(*r4) : nlohmann::json(nullptr);
    return j;
}

RepetitionReport repetition_report(const std::vector<std::string>& texts, int n) {
    RepetitionReport rep;
    rep.n = n;
    rep.texts = static_cast<int>(texts.size());
    double d3_sum = 0.0, r4_sum = 0.0;
    int d3_count = 0, r4_count = 0;
    for (const auto& t : texts) {
        if (auto d = distinct3(t)) {
            d3_sum += *d;
            ++d3_count;
        }
        if (auto r = repetition4(t)) {
            r4_sum += *r;
            ++r4_count;
        }
    }
    if (d3_count) rep.d3 = d3_sum / d3_count;
    if (r4_count) rep.r4 = r4_sum / r4_count;
    rep.lr_n = lexical_repetition(texts, n);
    return rep;
}

}  // namespace hybridlm::metrics
