#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hybridlm/vocab.hpp"

namespace hybridlm::taskbench {

enum class TaskKind { arith_chain, mcq };

std::string kind_name(TaskKind k);
TaskKind kind_from_name(const std::string& name);

struct TaskSpec {
    TaskKind kind = TaskKind::arith_chain;
    int level = 1;      // 1..5
    int size = 100;
    uint64_t seed = 0;

    void validate() const;
};

struct Sample {
    std::string question;
    std::string gold;   // normalized answer: canonical integer or option letter
    int level = 1;
};

// Pure function of the spec: same spec, same list. Arithmetic chains are
// level+1 operands with magnitudes <= 10^level, evaluated left to right; the
// final operator is + or - and at most one * appears, which keeps gold values
// exact in 64 bits and the final step executable without the full chain.
std::vector<Sample> generate(const TaskSpec& spec);

// Left-to-right fold of "a1 op a2 op a3 ..." parsed from text. This is the
// evaluator that re-verifies every emitted gold at generation time.
int64_t eval_chain(const std::string& expr);

// Derivation used as the teacher plan: every fold step written out, with the
// final step left unresolved ("x+y=?") so the plan never states the answer.
std::string derivation_plan(const std::string& question);

// Stem of a question (text before the option list, if any).
std::string question_stem(const std::string& question);

// The unresolved final fold step of a question's derivation ("492+5" for a
// plan ending in "492+5=?"); it evaluates to the question's gold.
std::string final_step_question(const std::string& question);

// Deterministic 90/10 split by sample-index hash; true = held out.
bool is_holdout_index(size_t index);

void write_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples);
std::vector<Sample> read_dataset(const std::filesystem::path& path);

}  // namespace hybridlm::taskbench
