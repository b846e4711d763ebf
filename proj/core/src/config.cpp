#include "hybridlm/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "hybridlm/errors.hpp"

namespace hybridlm::config {

namespace {

void require_object(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
        }
    }
}

taskbench::TaskSpec parse_task(const nlohmann::json& j, const std::string& where) {
    require_object(j, where);
    reject_unknown(j, {"kind", "level", "size", "seed"}, where);
    taskbench::TaskSpec t;
    t.kind = taskbench::kind_from_name(j.at("kind").get<std::string>());
    t.level = j.at("level").get<int>();
    t.size = j.at("size").get<int>();
    t.seed = j.value("seed", static_cast<uint64_t>(0));
    t.validate();
    return t;
}

ModelConfig parse_model(const nlohmann::json& j, const std::string& where) {
    require_object(j, where);
    reject_unknown(j, {"d_model", "n_layers", "n_heads", "d_ff", "max_len", "mode", "init_seed", "init_std"}, where);
    ModelConfig c;
    c.d_model = j.value("d_model", c.d_model);
    c.n_layers = j.value("n_layers", c.n_layers);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.d_ff = j.value("d_ff", c.d_ff);
    c.max_len = j.value("max_len", c.max_len);
    c.mode = mode_from_name(j.at("mode").get<std::string>());
    c.init_seed = j.value("init_seed", static_cast<uint64_t>(1));
    c.init_std = j.value("init_std", c.init_std);
    c.validate();
    return c;
}

TrainSection parse_train(const nlohmann::json& j, const std::string& where) {
    require_object(j, where);
    reject_unknown(j, {"epochs", "lr", "batch_size", "seed", "tasks", "roles", "eval_steps", "records"}, where);
    TrainSection t;
    t.epochs = j.value("epochs", t.epochs);
    t.lr = j.value("lr", t.lr);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.seed = j.value("seed", static_cast<uint64_t>(1));
    t.tasks = j.value("tasks", std::vector<int>{});
    t.eval_steps = j.value("eval_steps", t.eval_steps);
    t.records = j.value("records", t.records);
    if (j.contains("roles")) {
        t.role_direct = t.role_executor = t.role_planner = false;
        for (const auto& r : j.at("roles")) {
            const std::string name = r.get<std::string>();
            if (name == "direct") t.role_direct = true;
            else if (name == "executor") t.role_executor = true;
            else if (name == "planner") t.role_planner = true;
            else throw ConfigError("config: unknown training role '" + name + "' in " + where);
        }
    }
    if (t.epochs < 0) throw ConfigError("config: epochs must be >= 0 in " + where);
    if (t.lr < 0.0f) throw ConfigError("config: lr must be >= 0 in " + where);
    return t;
}

SamplerConfig parse_sampler(const nlohmann::json& j) {
    require_object(j, "sampler");
    reject_unknown(j, {"plan_len", "steps", "remask_strategy", "seed"}, "sampler");
    SamplerConfig s;
    s.plan_len = j.value("plan_len", s.plan_len);
    s.steps = j.value("steps", s.steps);
    s.remask_strategy = j.value("remask_strategy", s.remask_strategy);
    s.seed = j.value("seed", static_cast<uint64_t>(0));
    s.validate();
    return s;
}

pipeline::PairingConfig parse_pairing(const nlohmann::json& j, const SamplerConfig& sampler, const RunSection& run,
                                      const std::string& where) {
    require_object(j, where);
    reject_unknown(j, {"planner", "executor", "channel", "plan_len", "sampler_steps", "max_answer_tokens",
                       "plan_text_limit"},
                   where);
    pipeline::PairingConfig p;
    p.planner = pipeline::planner_from_name(j.at("planner").get<std::string>());
    p.executor = pipeline::executor_from_name(j.at("executor").get<std::string>());
    p.channel = pipeline::channel_from_name(j.at("channel").get<std::string>());
    p.plan_len = j.value("plan_len", sampler.plan_len);
    p.sampler = sampler;
    p.sampler.plan_len = p.plan_len;
    p.sampler.steps = j.value("sampler_steps", sampler.steps);
    p.max_answer_tokens = j.value("max_answer_tokens", run.max_answer_tokens);
    p.plan_text_limit = j.value("plan_text_limit", 0);
    p.validate();
    return p;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& root, const std::filesystem::path& base_dir) {
    require_object(root, "config root");
    reject_unknown(root,
                   {"schema_version", "out_dir", "seed", "parallelism", "tasks", "models", "training", "sampler",
                    "projector", "pairings", "run"},
                   "config root");
    if (root.value("schema_version", -1) != kConfigSchemaVersion) {
        throw ConfigError("config: schema_version must be " + std::to_string(kConfigSchemaVersion));
    }

    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    cfg.out_dir = root.value("out_dir", cfg.out_dir);
    cfg.seed = root.value("seed", static_cast<uint64_t>(1));
    cfg.parallelism = root.value("parallelism", 1);

    if (!root.contains("tasks") || !root.at("tasks").is_array() || root.at("tasks").empty()) {
        throw ConfigError("config: 'tasks' must be a nonempty array");
    }
    for (size_t i = 0; i < root.at("tasks").size(); ++i) {
        cfg.tasks.push_back(parse_task(root.at("tasks")[i], "tasks[" + std::to_string(i) + "]"));
    }

    require_object(root.at("models"), "models");
    reject_unknown(root.at("models"), {"arm", "ddlm"}, "models");
    cfg.arm = parse_model(root.at("models").at("arm"), "models.arm");
    cfg.ddlm = parse_model(root.at("models").at("ddlm"), "models.ddlm");
    if (cfg.arm.mode != ModelMode::autoregressive) throw ConfigError("config: models.arm must be autoregressive");
    if (cfg.ddlm.mode != ModelMode::diffusion) throw ConfigError("config: models.ddlm must be diffusion");

    require_object(root.at("training"), "training");
    reject_unknown(root.at("training"), {"arm", "ddlm", "projector"}, "training");
    cfg.arm_train = parse_train(root.at("training").at("arm"), "training.arm");
    cfg.ddlm_train = parse_train(root.at("training").at("ddlm"), "training.ddlm");
    cfg.projector_train = parse_train(root.at("training").at("projector"), "training.projector");

    cfg.sampler = parse_sampler(root.at("sampler"));

    require_object(root.at("projector"), "projector");
    reject_unknown(root.at("projector"), {"d_hidden", "plan_len", "init_seed"}, "projector");
    cfg.projector_cfg.d_ddlm = cfg.ddlm.d_model;
    cfg.projector_cfg.d_arm = cfg.arm.d_model;
    cfg.projector_cfg.d_hidden = root.at("projector").value("d_hidden", 0);
    cfg.projector_cfg.plan_len = root.at("projector").value("plan_len", cfg.sampler.plan_len);
    cfg.projector_cfg.init_seed = root.at("projector").value("init_seed", static_cast<uint64_t>(1));

    if (root.contains("run")) {
        require_object(root.at("run"), "run");
        reject_unknown(root.at("run"), {"eval_tasks", "samples_per_task", "max_answer_tokens"}, "run");
        cfg.run.eval_tasks = root.at("run").value("eval_tasks", std::vector<int>{});
        cfg.run.samples_per_task = root.at("run").value("samples_per_task", 200);
        cfg.run.max_answer_tokens = root.at("run").value("max_answer_tokens", 12);
    }

    if (root.contains("pairings")) {
        for (size_t i = 0; i < root.at("pairings").size(); ++i) {
            cfg.pairings.push_back(
                parse_pairing(root.at("pairings")[i], cfg.sampler, cfg.run, "pairings[" + std::to_string(i) + "]"));
        }
    }

    auto check_task_indices = [&](const std::vector<int>& idx, const std::string& where) {
        for (int i : idx) {
            if (i < 0 || i >= static_cast<int>(cfg.tasks.size())) {
                throw ConfigError("config: task index " + std::to_string(i) + " out of range in " + where);
            }
        }
    };
    check_task_indices(cfg.arm_train.tasks, "training.arm.tasks");
    check_task_indices(cfg.ddlm_train.tasks, "training.ddlm.tasks");
    check_task_indices(cfg.projector_train.tasks, "training.projector.tasks");
    check_task_indices(cfg.run.eval_tasks, "run.eval_tasks");

    // environment overrides: output directory and parallelism only
    if (const char* env_out = std::getenv("HYBRIDLM_OUT_DIR")) cfg.out_dir = env_out;
    if (const char* env_par = std::getenv("HYBRIDLM_PARALLELISM")) {
        try {
            cfg.parallelism = std::stoi(env_par);
        } catch (...) {
            throw ConfigError("HYBRIDLM_PARALLELISM must be an integer");
        }
    }
    if (cfg.parallelism < 1) throw ConfigError("config: parallelism must be >= 1");
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw IoError("cannot open config '" + file.string() + "'");
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: malformed JSON in '" + file.string() + "'");
    const std::filesystem::path base =
        file.has_parent_path() ? std::filesystem::absolute(file).parent_path() : std::filesystem::current_path();
    return from_json(j, base);
}

}  // namespace hybridlm::config
