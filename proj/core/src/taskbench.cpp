#include "hybridlm/taskbench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hybridlm/errors.hpp"
#include "hybridlm/rng.hpp"

namespace hybridlm::taskbench {

std::string kind_name(TaskKind k) { return k == TaskKind::arith_chain ? "arith-chain" : "mcq"; }

TaskKind kind_from_name(const std::string& name) {
    if (name == "arith-chain") return TaskKind::arith_chain;
    if (name == "mcq") return TaskKind::mcq;
    throw ConfigError("unknown task kind '" + name + "'");
}

void TaskSpec::validate() const {
    if (level < 1 || level > 5) throw ConfigError("task level must be in 1..5, got " + std::to_string(level));
    if (size < 1) throw ConfigError("task size must be >= 1, got " + std::to_string(size));
}

namespace {

constexpr int64_t kGoldBound = 1000000000000000LL;  // 1e15, regeneration guard

int64_t apply_op(int64_t a, char op, int64_t b) {
    switch (op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        default: throw ValidationError(std::string("unknown operator '") + op + "'");
    }
}

struct Chain {
    std::vector<int64_t> operands;
    std::vector<char> ops;
};

Chain random_chain(Rng& rng, int level) {
    // The head operand carries the level's magnitude (<= 10^level); the rest
    // stay single-digit so every fold step is one small edit of a running
    // value. The final operator is + or -, keeping the last step the easiest.
    const int n_operands = level + 1;
    const int64_t bound = static_cast<int64_t>(std::llround(std::pow(10.0, level)));
    Chain c;
    c.operands.reserve(n_operands);
    c.operands.push_back(static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(bound) + 1)));
    for (int i = 1; i < n_operands; ++i) {
        c.operands.push_back(static_cast<int64_t>(rng.next_below(10)));
    }
    const int n_ops = n_operands - 1;
    for (int i = 0; i < n_ops; ++i) {
        const bool last = (i == n_ops - 1) && n_ops > 1;
        char op;
        if (last) {
            op = rng.next_below(2) == 0 ? '+' : '-';
        } else {
            const uint64_t pick = rng.next_below(3);
            op = pick == 0 ? '+' : (pick == 1 ? '-' : '*');
        }
        c.ops.push_back(op);
    }
    return c;
}

std::string render_chain(const Chain& c) {
    std::string s = std::to_string(c.operands[0]);
    for (size_t i = 0; i < c.ops.size(); ++i) {
        s += c.ops[i];
        s += std::to_string(c.operands[i + 1]);
    }
    return s;
}

int64_t fold_chain(const Chain& c, bool* overflow) {
    int64_t acc = c.operands[0];
    for (size_t i = 0; i < c.ops.size(); ++i) {
        acc = apply_op(acc, c.ops[i], c.operands[i + 1]);
        if (acc > kGoldBound || acc < -kGoldBound) {
            if (overflow) *overflow = true;
            return 0;
        }
    }
    if (overflow) *overflow = false;
    return acc;
}

}  // namespace

std::string question_stem(const std::string& question) {
    const size_t bar = question.find('|');
    return bar == std::string::npos ? question : question.substr(0, bar);
}

int64_t eval_chain(const std::string& expr) {
    size_t i = 0;
    auto read_int = [&]() -> int64_t {
        bool neg = false;
        if (i < expr.size() && expr[i] == '-') {
            neg = true;
            ++i;
        }
        if (i >= expr.size() || !std::isdigit(static_cast<unsigned char>(expr[i]))) {
            throw ValidationError("eval_chain: expected digit at position " + std::to_string(i) + " of '" + expr + "'");
        }
        int64_t v = 0;
        while (i < expr.size() && std::isdigit(static_cast<unsigned char>(expr[i]))) {
            v = v * 10 + (expr[i] - '0');
            ++i;
        }
        return neg ? -v : v;
    };
    int64_t acc = read_int();
    while (i < expr.size()) {
        const char op = expr[i];
        if (op != '+' && op != '-' && op != '*') {
            throw ValidationError(std::string("eval_chain: unexpected character '") + op + "'");
        }
        ++i;
        acc = apply_op(acc, op, read_int());
    }
    return acc;
}

std::string derivation_plan(const std::string& question) {
    const std::string expr = question_stem(question);
    // re-parse into operands and ops
    std::vector<int64_t> operands;
    std::vector<char> ops;
    size_t i = 0;
    auto read_int = [&]() -> int64_t {
        int64_t v = 0;
        while (i < expr.size() && std::isdigit(static_cast<unsigned char>(expr[i]))) {
            v = v * 10 + (expr[i] - '0');
            ++i;
        }
        return v;
    };
    operands.push_back(read_int());
    while (i < expr.size()) {
        ops.push_back(expr[i]);
        ++i;
        operands.push_back(read_int());
    }
    std::string plan;
    int64_t acc = operands[0];
    for (size_t k = 0; k < ops.size(); ++k) {
        if (!plan.empty()) plan += ";";
        const std::string lhs = std::to_string(acc) + ops[k] + std::to_string(operands[k + 1]);
        if (k + 1 == ops.size()) {
            plan += lhs + "=?";
        } else {
            acc = apply_op(acc, ops[k], operands[k + 1]);
            plan += lhs + "=" + std::to_string(acc);
        }
    }
    return plan;
}

std::string final_step_question(const std::string& question) {
    const std::string plan = derivation_plan(question);
    const size_t semi = plan.rfind(';');
    std::string last = semi == std::string::npos ? plan : plan.substr(semi + 1);
    const size_t eq = last.rfind('=');
    if (eq != std::string::npos) last.resize(eq);
    return last;
}

std::vector<Sample> generate(const TaskSpec& spec) {
    spec.validate();
    const VocabSpec vocab = VocabSpec::char_vocab();
    Rng rng(mix_seed(spec.seed, (static_cast<uint64_t>(spec.level) << 8) | (spec.kind == TaskKind::mcq ? 1 : 0)));

    std::vector<Sample> out;
    std::set<std::string> seen;
    int consecutive_failures = 0;
    while (static_cast<int>(out.size()) < spec.size) {
        if (consecutive_failures >= 100) {
            throw ValidationError("taskbench: failed to generate a fresh encodable sample after 100 retries");
        }
        Chain chain = random_chain(rng, spec.level);
        bool overflow = false;
        const int64_t gold_value = fold_chain(chain, &overflow);
        if (overflow) {
            ++consecutive_failures;
            continue;
        }
        const std::string stem = render_chain(chain);

        Sample s;
        s.level = spec.level;
        if (spec.kind == TaskKind::arith_chain) {
            s.question = stem;
            s.gold = std::to_string(gold_value);
        } else {
            // distractor distance shrinks as the level rises
            const int64_t d_bound = std::max<int64_t>(3, static_cast<int64_t>(std::llround(std::pow(10.0, 5 - spec.level))));
            std::set<int64_t> values = {gold_value};
            int guard = 0;
            while (values.size() < 4 && guard < 1000) {
                int64_t delta = 1 + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(d_bound)));
                if (rng.next_below(2) == 0) delta = -delta;
                values.insert(gold_value + delta);
                ++guard;
            }
            if (values.size() < 4) {
                ++consecutive_failures;
                continue;
            }
            std::vector<int64_t> opts(values.begin(), values.end());
            // deterministic shuffle
            for (size_t k = opts.size(); k > 1; --k) {
                std::swap(opts[k - 1], opts[rng.next_below(k)]);
            }
            static const char* letters = "ABCD";
            std::string q = stem;
            std::string gold_letter;
            for (int k = 0; k < 4; ++k) {
                q += "|";
                q += letters[k];
                q += ":";
                q += std::to_string(opts[k]);
                if (opts[k] == gold_value) gold_letter = std::string(1, letters[k]);
            }
            s.question = q;
            s.gold = gold_letter;
        }

        if (!vocab.can_encode(s.question) || !vocab.can_encode(s.gold)) {
            ++consecutive_failures;
            continue;
        }
        if (seen.count(s.question)) {
            ++consecutive_failures;
            continue;
        }
        // oracle soundness: the emitted text must evaluate back to the gold
        if (eval_chain(stem) != gold_value) {
            throw ValidationError("taskbench: generator/evaluator disagree on '" + stem + "'");
        }
        seen.insert(s.question);
        out.push_back(std::move(s));
        consecutive_failures = 0;
    }
    return out;
}

bool is_holdout_index(size_t index) { return splitmix64(static_cast<uint64_t>(index) + 0x5eed5eedULL) % 10 == 0; }

void write_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& s : samples) {
        nlohmann::json j{{"question", s.question}, {"gold", s.gold}, {"level", s.level}};
        os << j.dump() << "\n";
    }
    if (!os) throw IoError("failed writing dataset '" + path.string() + "'");
}

std::vector<Sample> read_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    std::vector<Sample> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw IoError("malformed dataset line " + std::to_string(lineno) + " in '" + path.string() + "'");
        }
        Sample s;
        s.question = j.at("question").get<std::string>();
        s.gold = j.at("gold").get<std::string>();
        s.level = j.at("level").get<int>();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace hybridlm::taskbench
