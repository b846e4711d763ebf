#include <doctest.h>

#include "hybridlm/prompts.hpp"

using namespace hybridlm;
using namespace hybridlm::prompts;

TEST_CASE("planner prompt renders the canonical template") {
    const std::string p = render_planner_prompt("Q?");
    CHECK(p.find("You are a careful problem-solving planner.") == 0);
    CHECK(p.find("Task: Produce ONLY a short list of HINTS that help solve the question. \n") != std::string::npos);
    CHECK(p.find("Do NOT state or imply the final answer.") != std::string::npos);
    CHECK(p.find("Do NOT mention any option letter \n(A, B, C, or D).") != std::string::npos);
    CHECK(p.find("replace it with \xE2\x80\x9C[HIDDEN]\xE2\x80\x9D.") != std::string::npos);
    CHECK(p.find("- Key facts to recall (2\xE2\x80\x93" "4 bullets)") != std::string::npos);
    CHECK(p.find("- Reasoning steps or elimination rules (2\xE2\x80\x93" "5 bullets)") != std::string::npos);
    CHECK(p.find("Be concise (<=120 words). No \xE2\x80\x9C" "Answer:\xE2\x80\x9D line. No letters A\xE2\x80\x93"
                 "D.") != std::string::npos);
    CHECK(p.find("Question (stem only):\n") != std::string::npos);
    // ends with the substituted question
    CHECK(p.size() >= 2);
    CHECK(p.substr(p.size() - 2) == "Q?");
    // the placeholder is gone
    CHECK(p.find("{question}") == std::string::npos);
}

TEST_CASE("planner prompt edge cases") {
    // empty question: allowed, the slot is simply empty
    const std::string p = render_planner_prompt("");
    CHECK(p.substr(p.size() - std::string("Question (stem only):\n").size()) == "Question (stem only):\n");

    // braces pass through verbatim, no re-substitution
    const std::string q = render_planner_prompt("solve {question} twice");
    CHECK(q.find("solve {question} twice") != std::string::npos);
    CHECK(q.rfind("{question}") > q.find("Question (stem only):"));
}

TEST_CASE("executor prompt renders the canonical template") {
    const std::string p = render_executor_prompt("P", "Q");
    CHECK(p.find("You are an expert in solving multiple-choice questions.") == 0);
    CHECK(p.find("Given the following plan or reasoning, please solve the question. \n") != std::string::npos);
    CHECK(p.find("If the plan contains any explicit answer or option letter, ignore it and \n") !=
          std::string::npos);
    CHECK(p.find("solve from the hints + question only.") != std::string::npos);
    const std::string suffix = "Plan:\nP\nQ";
    REQUIRE(p.size() >= suffix.size());
    CHECK(p.substr(p.size() - suffix.size()) == suffix);
}

TEST_CASE("executor prompt edge cases") {
    const std::string empty_plan = render_executor_prompt("", "Q");
    CHECK(empty_plan.find("Plan:\n\nQ") != std::string::npos);

    // a plan containing the question placeholder is not re-substituted
    const std::string inj = render_executor_prompt("{question}", "REAL");
    const std::string suffix = "Plan:\n{question}\nREAL";
    CHECK(inj.substr(inj.size() - suffix.size()) == suffix);
}

TEST_CASE("model-facing layouts keep plan and question separated") {
    const VocabSpec v = VocabSpec::char_vocab();
    const auto planner = planner_input(v, "3+4");
    CHECK(planner.front() == v.bos_id);
    CHECK(planner.back() == v.sep_id);
    CHECK(v.decode(planner) == "3+4");

    const auto exec = executor_input(v, "3+4=?", "3+4");
    CHECK(exec.front() == v.bos_id);
    // exactly one separator between plan and question
    int seps = 0;
    for (int id : exec) seps += id == v.sep_id ? 1 : 0;
    CHECK(seps == 1);
    CHECK(v.decode(exec) == "3+4=?3+4");

    // direct mode is the degenerate executor layout
    const auto direct = executor_input(v, "", "3+4");
    CHECK(direct[0] == v.bos_id);
    CHECK(direct[1] == v.sep_id);
    CHECK(v.decode(direct) == "3+4");
}

TEST_CASE("answer extraction") {
    using taskbench::TaskKind;
    auto arith = [](const std::string& raw) { return extract_answer(raw, TaskKind::arith_chain); };
    auto mcq = [](const std::string& raw) { return extract_answer(raw, TaskKind::mcq); };

    CHECK(arith("the answer is 19.").answer == "19");
    CHECK(arith("19").answer == "19");
    CHECK(arith("maybe 12 or 14").answer == "14");
    CHECK(arith("-42").answer == "-42");
    CHECK(arith("007").answer == "7");
    CHECK(arith("x-0").answer == "0");
    CHECK(arith("no idea").unparseable);
    CHECK(arith("").unparseable);

    CHECK(mcq("B) because ...").answer == "B");
    CHECK(mcq("i pick d").answer == "D");
    CHECK(mcq("42").unparseable);
    CHECK(!arith("the answer is 19.").unparseable);
}

TEST_CASE("integer normalization") {
    CHECK(normalize_integer("007") == "7");
    CHECK(normalize_integer("-007") == "-7");
    CHECK(normalize_integer("0") == "0");
    CHECK(normalize_integer("-0") == "0");
    CHECK(normalize_integer("120") == "120");
}
