#pragma once

#include <string>
#include <vector>

#include "hybridlm/taskbench.hpp"
#include "hybridlm/vocab.hpp"

namespace hybridlm::prompts {

// Canonical planner/executor prompt templates, instantiated verbatim with a
// single non-recursive substitution pass. These rendered strings are what
// transcripts record as the text-channel contract.
const std::string& planner_template();
const std::string& executor_template();

std::string render_planner_prompt(const std::string& question);
std::string render_executor_prompt(const std::string& plan, const std::string& question);

// Model-facing token layouts. The toy vocabulary spans questions and plans,
// not instruction prose, so the models consume a compact structural encoding
// of the same fields the rendered templates carry:
//   planner:  [bos] question [sep]                 -> plan
//   executor: [bos] plan [sep] question            -> answer
//   direct:   [bos] [sep] question                 -> answer (empty plan)
std::vector<int> planner_input(const VocabSpec& vocab, const std::string& question);
std::vector<int> executor_input(const VocabSpec& vocab, const std::string& plan, const std::string& question);

// Task-defined answer extraction: final signed integer run for arithmetic,
// final option letter for MCQ. Unparseable output scores incorrect.
struct Extracted {
    std::string answer;
    bool unparseable = false;
};
Extracted extract_answer(const std::string& raw, taskbench::TaskKind kind);

// Canonical integer rendering used to compare answers.
std::string normalize_integer(const std::string& digits);

}  // namespace hybridlm::prompts
