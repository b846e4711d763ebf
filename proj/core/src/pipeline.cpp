#include "hybridlm/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include "hybridlm/errors.hpp"
#include "hybridlm/prompts.hpp"

namespace hybridlm::pipeline {

std::string planner_name(PlannerRole r) {
    switch (r) {
        case PlannerRole::none: return "none";
        case PlannerRole::arm: return "arm";
        case PlannerRole::ddlm: return "ddlm";
    }
    return "?";
}

std::string executor_name(ExecutorRole r) { return r == ExecutorRole::arm ? "arm" : "ddlm"; }
std::string channel_name(Channel c) { return c == Channel::text ? "text" : "latent"; }

PlannerRole planner_from_name(const std::string& s) {
    if (s == "none") return PlannerRole::none;
    if (s == "arm") return PlannerRole::arm;
    if (s == "ddlm") return PlannerRole::ddlm;
    throw ConfigError("unknown planner role '" + s + "'");
}

ExecutorRole executor_from_name(const std::string& s) {
    if (s == "arm") return ExecutorRole::arm;
    if (s == "ddlm") return ExecutorRole::ddlm;
    throw ConfigError("unknown executor role '" + s + "'");
}

Channel channel_from_name(const std::string& s) {
    if (s == "text") return Channel::text;
    if (s == "latent") return Channel::latent;
    throw ConfigError("unknown channel '" + s + "'");
}

void PairingConfig::validate() const {
    if (channel == Channel::latent && (planner != PlannerRole::ddlm || executor != ExecutorRole::arm)) {
        throw ConfigError("latent channel requires the ddlm->arm pairing");
    }
    if (plan_len < 1) throw ConfigError("pairing: plan_len must be >= 1");
    if (max_answer_tokens < 1) throw ConfigError("pairing: max_answer_tokens must be >= 1");
    if (plan_text_limit < 0) throw ConfigError("pairing: plan_text_limit must be >= 0");
    SamplerConfig s = sampler;
    s.plan_len = plan_len;
    s.validate();
}

std::string PairingConfig::id() const {
    std::string s = planner_name(planner) + "-" + executor_name(executor) + "-" + channel_name(channel);
    if (planner != PlannerRole::none) s += "-p" + std::to_string(plan_len);
    if (plan_text_limit > 0) s += "-trunc" + std::to_string(plan_text_limit);
    return s;
}

nlohmann::json PairingConfig::to_json() const {
    return nlohmann::json{{"planner", planner_name(planner)},
                          {"executor", executor_name(executor)},
                          {"channel", channel_name(channel)},
                          {"plan_len", plan_len},
                          {"sampler_steps", sampler.steps},
                          {"sampler_seed", sampler.seed},
                          {"max_answer_tokens", max_answer_tokens},
                          {"plan_text_limit", plan_text_limit}};
}

PairingConfig PairingConfig::from_json(const nlohmann::json& j) {
    PairingConfig p;
    p.planner = planner_from_name(j.at("planner").get<std::string>());
    p.executor = executor_from_name(j.at("executor").get<std::string>());
    p.channel = channel_from_name(j.at("channel").get<std::string>());
    p.plan_len = j.value("plan_len", 64);
    p.sampler.plan_len = p.plan_len;
    p.sampler.steps = j.value("sampler_steps", 8);
    p.sampler.seed = j.value("sampler_seed", static_cast<uint64_t>(0));
    p.max_answer_tokens = j.value("max_answer_tokens", 12);
    p.plan_text_limit = j.value("plan_text_limit", 0);
    return p;
}

nlohmann::json TranscriptRecord::to_json() const {
    return nlohmann::json{{"schema_version", schema_version},
                          {"sample_id", sample_id},
                          {"question", question},
                          {"gold", gold},
                          {"has_plan", has_plan},
                          {"plan_is_latent", plan_is_latent},
                          {"plan", plan},
                          {"answer", answer},
                          {"extracted", extracted},
                          {"correct", correct},
                          {"unparseable", unparseable},
                          {"truncated", truncated},
                          {"errored", errored},
                          {"error", error},
                          {"planner_tokens", planner_tokens},
                          {"executor_tokens", executor_tokens},
                          {"pairing", pairing.to_json()},
                          {"seed", seed}};
}

TranscriptRecord TranscriptRecord::from_json(const nlohmann::json& j) {
    TranscriptRecord r;
    r.schema_version = j.at("schema_version").get<int>();
    r.sample_id = j.at("sample_id").get<int64_t>();
    r.question = j.at("question").get<std::string>();
    r.gold = j.at("gold").get<std::string>();
    r.has_plan = j.at("has_plan").get<bool>();
    r.plan_is_latent = j.at("plan_is_latent").get<bool>();
    r.plan = j.at("plan").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    r.extracted = j.at("extracted").get<std::string>();
    r.correct = j.at("correct").get<bool>();
    r.unparseable = j.at("unparseable").get<bool>();
    r.truncated = j.value("truncated", false);
    r.errored = j.at("errored").get<bool>();
    r.error = j.value("error", "");
    r.planner_tokens = j.at("planner_tokens").get<int>();
    r.executor_tokens = j.at("executor_tokens").get<int>();
    r.pairing = PairingConfig::from_json(j.at("pairing"));
    r.seed = j.at("seed").get<uint64_t>();
    return r;
}

namespace {

const LanguageModel& model_for(const ModelSet& models, bool want_arm, const char* role) {
    const LanguageModel* m = want_arm ? models.arm : models.ddlm;
    if (!m) throw ConfigError(std::string("pipeline: missing checkpoint for ") + role);
    return *m;
}

struct PlanPhase {
    bool has_plan = false;
    std::string text;              // possibly truncated surface plan
    ad::TensorData hidden;         // latent channel only
    int planner_tokens = 0;
};

PlanPhase plan_phase(const PairingConfig& pairing, const std::string& question, const ModelSet& models) {
    PlanPhase out;
    if (pairing.planner == PlannerRole::none) return out;
    out.has_plan = true;

    // The rendered template is the text-channel contract; models consume the
    // compact structural encoding of the same fields.
    const std::string rendered = prompts::render_planner_prompt(question);
    if (rendered.find(question) == std::string::npos) {
        throw ValidationError("planner prompt does not carry the question");
    }

    if (pairing.planner == PlannerRole::ddlm) {
        const LanguageModel& ddlm = model_for(models, false, "ddlm planner");
        SamplerConfig cfg = pairing.sampler;
        cfg.plan_len = pairing.plan_len;
        DenoiseResult res = denoise(ddlm, prompts::planner_input(ddlm.vocab(), question), cfg);
        if (pairing.channel == Channel::latent) {
            out.hidden = std::move(res.plan_hidden);
            out.planner_tokens = pairing.plan_len;  // fixed-length convention
            out.text = "latent[" + std::to_string(pairing.plan_len) + "x" +
                       std::to_string(ddlm.config().d_model) + "]";
        } else {
            out.text = ddlm.vocab().decode_generated(res.plan_tokens);
        }
    } else {
        const LanguageModel& arm = model_for(models, true, "arm planner");
        std::vector<int> toks = greedy_decode(arm, SequenceInput::tokens(prompts::planner_input(arm.vocab(), question)),
                                              pairing.plan_len);
        out.text = arm.vocab().decode_generated(toks);
    }

    if (pairing.channel == Channel::text) {
        if (pairing.plan_text_limit > 0 && static_cast<int>(out.text.size()) > pairing.plan_text_limit) {
            out.text.resize(pairing.plan_text_limit);
        }
        out.planner_tokens = static_cast<int>(out.text.size());  // char-level tokens
    }
    return out;
}

}  // namespace

TranscriptRecord run_sample(const PairingConfig& pairing, const taskbench::Sample& sample, int64_t sample_id,
                            const ModelSet& models, const projector::Projector* proj, uint64_t run_seed,
                            taskbench::TaskKind kind) {
    pairing.validate();
    if (pairing.channel == Channel::latent && proj == nullptr) {
        throw ConfigError("pipeline: latent channel requires a projector checkpoint");
    }

    TranscriptRecord rec;
    rec.sample_id = sample_id;
    rec.question = sample.question;
    rec.gold = sample.gold;
    rec.pairing = pairing;
    rec.seed = mix_seed(run_seed, static_cast<uint64_t>(sample_id));

    PlanPhase plan = plan_phase(pairing, sample.question, models);
    rec.has_plan = plan.has_plan;
    rec.plan_is_latent = plan.has_plan && pairing.channel == Channel::latent;
    rec.plan = plan.text;
    rec.planner_tokens = plan.planner_tokens;

    // executor phase
    std::vector<int> answer_tokens;
    bool truncated = false;
    if (pairing.channel == Channel::latent) {
        const LanguageModel& arm = model_for(models, true, "arm executor");
        ad::TensorData projected = projector::project(*proj, plan.hidden);
        ad::TensorData prefix = projector::assemble_executor_input(projected, arm.vocab().encode(sample.question), arm);
        answer_tokens = greedy_decode(arm, SequenceInput::embeddings(ad::Tensor::leaf(std::move(prefix), false)),
                                      pairing.max_answer_tokens, &truncated);
        rec.answer = arm.vocab().decode_generated(answer_tokens);
    } else {
        const std::string& plan_text = plan.text;  // empty when planner none
        const std::string rendered = prompts::render_executor_prompt(plan_text, sample.question);
        if (rendered.find(sample.question) == std::string::npos) {
            throw ValidationError("executor prompt does not carry the question");
        }
        if (pairing.executor == ExecutorRole::arm) {
            const LanguageModel& arm = model_for(models, true, "arm executor");
            answer_tokens = greedy_decode(
                arm, SequenceInput::tokens(prompts::executor_input(arm.vocab(), plan_text, sample.question)),
                pairing.max_answer_tokens, &truncated);
            rec.answer = arm.vocab().decode_generated(answer_tokens);
        } else {
            const LanguageModel& ddlm = model_for(models, false, "ddlm executor");
            SamplerConfig cfg = pairing.sampler;
            cfg.plan_len = pairing.max_answer_tokens;
            cfg.steps = std::min(cfg.steps, cfg.plan_len);
            DenoiseResult res =
                denoise(ddlm, prompts::executor_input(ddlm.vocab(), plan_text, sample.question), cfg);
            rec.answer = ddlm.vocab().decode_generated(res.plan_tokens);
            answer_tokens = ddlm.vocab().encode(rec.answer);
        }
    }
    rec.truncated = truncated;
    rec.executor_tokens = static_cast<int>(answer_tokens.size());

    prompts::Extracted ext = prompts::extract_answer(rec.answer, kind);
    rec.extracted = ext.answer;
    rec.unparseable = ext.unparseable;
    rec.correct = !ext.unparseable && ext.answer == sample.gold;

    // accounting invariants
    if (pairing.channel == Channel::latent && rec.planner_tokens != pairing.plan_len) {
        throw ValidationError("latent accounting: planner_tokens must equal plan_len");
    }
    if (pairing.planner == PlannerRole::none && rec.planner_tokens != 0) {
        throw ValidationError("accounting: planner_tokens must be 0 without a planner");
    }
    return rec;
}

RunResult run_benchmark(const PairingConfig& pairing, const std::vector<taskbench::Sample>& dataset,
                        taskbench::TaskKind kind, const ModelSet& models, const projector::Projector* proj,
                        int parallelism, uint64_t run_seed, std::vector<TranscriptRecord>* transcripts_out) {
    pairing.validate();
    if (dataset.empty()) throw ConfigError("run_benchmark: empty dataset");
    if (parallelism < 1) parallelism = 1;

    std::vector<TranscriptRecord> records(dataset.size());
    auto worker = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            try {
                records[i] = run_sample(pairing, dataset[i], static_cast<int64_t>(i), models, proj, run_seed, kind);
            } catch (const std::exception& e) {
                TranscriptRecord rec;
                rec.sample_id = static_cast<int64_t>(i);
                rec.question = dataset[i].question;
                rec.gold = dataset[i].gold;
                rec.pairing = pairing;
                rec.seed = mix_seed(run_seed, static_cast<uint64_t>(i));
                rec.errored = true;
                rec.error = e.what();
                rec.correct = false;
                records[i] = std::move(rec);
            }
        }
    };

    if (parallelism == 1 || dataset.size() < 2) {
        worker(0, dataset.size());
    } else {
        const size_t n_threads = std::min<size_t>(static_cast<size_t>(parallelism), dataset.size());
        std::vector<std::thread> threads;
        const size_t chunk = (dataset.size() + n_threads - 1) / n_threads;
        for (size_t t = 0; t < n_threads; ++t) {
            const size_t begin = t * chunk;
            const size_t end = std::min(dataset.size(), begin + chunk);
            if (begin < end) threads.emplace_back(worker, begin, end);
        }
        for (auto& th : threads) th.join();
    }

    RunResult res;
    res.pairing_id = pairing.id();
    res.samples = static_cast<int>(records.size());
    res.seed = run_seed;
    double acc = 0.0, pt = 0.0, et = 0.0;
    for (const auto& r : records) {
        acc += r.correct ? 1.0 : 0.0;
        pt += r.planner_tokens;
        et += r.executor_tokens;
        res.errors += r.errored ? 1 : 0;
        res.unparseable += r.unparseable ? 1 : 0;
    }
    res.accuracy = acc / records.size();
    res.mean_planner_tokens = pt / records.size();
    res.mean_executor_tokens = et / records.size();
    if (transcripts_out) *transcripts_out = std::move(records);
    return res;
}

nlohmann::json RunResult::to_json() const {
    return nlohmann::json{{"schema_version", schema_version},
                          {"pairing_id", pairing_id},
                          {"accuracy", accuracy},
                          {"mean_planner_tokens", mean_planner_tokens},
                          {"mean_executor_tokens", mean_executor_tokens},
                          {"samples", samples},
                          {"errors", errors},
                          {"unparseable", unparseable},
                          {"seed", seed},
                          {"transcript_file", transcript_file}};
}

RunResult RunResult::from_json(const nlohmann::json& j) {
    RunResult r;
    r.schema_version = j.at("schema_version").get<int>();
    r.pairing_id = j.at("pairing_id").get<std::string>();
    r.accuracy = j.at("accuracy").get<double>();
    r.mean_planner_tokens = j.at("mean_planner_tokens").get<double>();
    r.mean_executor_tokens = j.at("mean_executor_tokens").get<double>();
    r.samples = j.at("samples").get<int>();
    r.errors = j.at("errors").get<int>();
    r.unparseable = j.at("unparseable").get<int>();
    r.seed = j.value("seed", static_cast<uint64_t>(0));
    r.transcript_file = j.value("transcript_file", "");
    return r;
}

void write_transcripts(const std::filesystem::path& path, const std::vector<TranscriptRecord>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& r : records) os << r.to_json().dump() << "\n";
    if (!os) throw IoError("failed writing transcripts '" + path.string() + "'");
}

std::vector<TranscriptRecord> read_transcripts(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    std::vector<TranscriptRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw IoError("malformed transcript line " + std::to_string(lineno) + " in '" + path.string() + "'");
        }
        out.push_back(TranscriptRecord::from_json(j));
    }
    return out;
}

}  // namespace hybridlm::pipeline
