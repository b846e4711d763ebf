#include "hybridlm/prompts.hpp"

#include <cctype>

#include "hybridlm/errors.hpp"

namespace hybridlm::prompts {

namespace {

// \xE2\x80\x9C / \x9D are the curly quotes, \xE2\x80\x93 the en dash; several
// lines carry a trailing space. All byte-exact.
const std::string kPlannerTemplate =
    "You are a careful problem-solving planner.\n"
    "\n"
    "Task: Produce ONLY a short list of HINTS that help solve the question. \n"
    "Do NOT state or imply the final answer. Do NOT mention any option letter \n"
    "(A, B, C, or D). Do NOT quote any option text verbatim. \n"
    "If you find yourself about to reveal a specific option or an answer, \n"
    "replace it with \xE2\x80\x9C[HIDDEN]\xE2\x80\x9D.\n"
    "\n"
    "Format:\n"
    "- Key facts to recall (2\xE2\x80\x93" "4 bullets)\n"
    "- Reasoning steps or elimination rules (2\xE2\x80\x93" "5 bullets)\n"
    "- Useful equations or definitions (if relevant)\n"
    "- Edge cases or common traps (optional)\n"
    "\n"
    "Be concise (<=120 words). No \xE2\x80\x9C" "Answer:\xE2\x80\x9D line. No letters A\xE2\x80\x93" "D.\n"
    "\n"
    "Question (stem only):\n"
    "{question}";

const std::string kExecutorTemplate =
    "You are an expert in solving multiple-choice questions.\n"
    "Given the following plan or reasoning, please solve the question. \n"
    "If the plan contains any explicit answer or option letter, ignore it and \n"
    "solve from the hints + question only.\n"
    "\n"
    "Plan:\n"
    "{plan}\n"
    "{question}";

// Substitute each placeholder at most once, scanning the template left to
// right. Substituted text is never rescanned, so braces in questions or
// plans pass through verbatim.
std::string substitute(const std::string& tmpl, const std::vector<std::pair<std::string, std::string>>& slots) {
    std::string out;
    out.reserve(tmpl.size() + 64);
    size_t pos = 0;
    for (const auto& [key, value] : slots) {
        const size_t hit = tmpl.find(key, pos);
        if (hit == std::string::npos) {
            throw ValidationError("prompt template missing placeholder " + key);
        }
        out.append(tmpl, pos, hit - pos);
        out.append(value);
        pos = hit + key.size();
    }
    out.append(tmpl, pos, std::string::npos);
    return out;
}

}  // namespace

const std::string& planner_template() { return kPlannerTemplate; }
const std::string& executor_template() { return kExecutorTemplate; }

std::string render_planner_prompt(const std::string& question) {
    return substitute(kPlannerTemplate, {{"{question}", question}});
}

std::string render_executor_prompt(const std::string& plan, const std::string& question) {
    return substitute(kExecutorTemplate, {{"{plan}", plan}, {"{question}", question}});
}

std::vector<int> planner_input(const VocabSpec& vocab, const std::string& question) {
    std::vector<int> ids;
    ids.push_back(vocab.bos_id);
    const auto q = vocab.encode(question);
    ids.insert(ids.end(), q.begin(), q.end());
    ids.push_back(vocab.sep_id);
    return ids;
}

std::vector<int> executor_input(const VocabSpec& vocab, const std::string& plan, const std::string& question) {
    std::vector<int> ids;
    ids.push_back(vocab.bos_id);
    const auto p = vocab.encode(plan);
    ids.insert(ids.end(), p.begin(), p.end());
    ids.push_back(vocab.sep_id);
    const auto q = vocab.encode(question);
    ids.insert(ids.end(), q.begin(), q.end());
    return ids;
}

std::string normalize_integer(const std::string& digits) {
    // strip leading zeros, normalize -0 to 0
    bool neg = false;
    size_t i = 0;
    if (i < digits.size() && (digits[i] == '-' || digits[i] == '+')) {
        neg = digits[i] == '-';
        ++i;
    }
    while (i + 1 < digits.size() && digits[i] == '0') ++i;
    std::string body = digits.substr(i);
    if (body.empty()) return digits;
    if (body == "0") return "0";
    return neg ? "-" + body : body;
}

Extracted extract_answer(const std::string& raw, taskbench::TaskKind kind) {
    Extracted res;
    if (kind == taskbench::TaskKind::mcq) {
        // final standalone option letter; letters inside words do not count
        auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)); };
        const int n = static_cast<int>(raw.size());
        for (int i = n - 1; i >= 0; --i) {
            const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(raw[i])));
            if (up < 'A' || up > 'D') continue;
            const bool left_ok = i == 0 || !is_word(raw[i - 1]);
            const bool right_ok = i + 1 == n || !is_word(raw[i + 1]);
            if (left_ok && right_ok) {
                res.answer = std::string(1, up);
                return res;
            }
        }
        res.unparseable = true;
        return res;
    }
    // final signed integer run
    int end = -1;
    for (int i = static_cast<int>(raw.size()) - 1; i >= 0; --i) {
        if (std::isdigit(static_cast<unsigned char>(raw[i]))) {
            end = i;
            break;
        }
    }
    if (end < 0) {
        res.unparseable = true;
        return res;
    }
    int begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(raw[begin - 1]))) --begin;
    if (begin > 0 && raw[begin - 1] == '-') --begin;
    res.answer = normalize_integer(raw.substr(begin, end - begin + 1));
    return res;
}

}  // namespace hybridlm::prompts
