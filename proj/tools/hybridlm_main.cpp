// hybridlm: planner-executor experiments with a diffusion planner and an
// autoregressive executor over text and latent channels.
//
// Subcommands: gen-data, train, run, plan, diagnose, metrics, report.
// Exit codes: 0 success, 2 configuration/usage, 3 I/O, 4 validation, 1 other.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "hybridlm/checkpoint.hpp"
#include "hybridlm/config.hpp"
#include "hybridlm/diagnostics.hpp"
#include "hybridlm/errors.hpp"
#include "hybridlm/manifest.hpp"
#include "hybridlm/metrics.hpp"
#include "hybridlm/pipeline.hpp"
#include "hybridlm/projector.hpp"
#include "hybridlm/prompts.hpp"
#include "hybridlm/report.hpp"
#include "hybridlm/sampler.hpp"
#include "hybridlm/taskbench.hpp"
#include "hybridlm/train.hpp"

namespace fs = std::filesystem;
using namespace hybridlm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

std::string dataset_filename(int index, const taskbench::TaskSpec& spec) {
    return "task" + std::to_string(index) + "-" + taskbench::kind_name(spec.kind) + "-l" +
           std::to_string(spec.level) + ".jsonl";
}

fs::path data_dir(const config::ExperimentConfig& cfg) { return cfg.out_path() / "data"; }
fs::path models_dir(const config::ExperimentConfig& cfg) { return cfg.out_path() / "models"; }
fs::path runs_dir(const config::ExperimentConfig& cfg) { return cfg.out_path() / "runs"; }

std::vector<taskbench::Sample> load_task(const config::ExperimentConfig& cfg, int index) {
    const fs::path path = data_dir(cfg) / dataset_filename(index, cfg.tasks[index]);
    if (!fs::exists(path)) {
        throw IoError("dataset '" + path.string() + "' not found; run gen-data first");
    }
    return taskbench::read_dataset(path);
}

// Eval slice: held-out rows by sample-index hash, capped per config. The cap
// follows the "200 samples or the full benchmark" convention.
struct EvalSlice {
    std::vector<taskbench::Sample> samples;
    std::vector<size_t> rows;  // original dataset row per sample
};

EvalSlice eval_slice(const config::ExperimentConfig& cfg, int task_index) {
    EvalSlice slice;
    const auto all = load_task(cfg, task_index);
    for (size_t row = 0; row < all.size(); ++row) {
        if (!taskbench::is_holdout_index(row)) continue;
        slice.samples.push_back(all[row]);
        slice.rows.push_back(row);
        if (static_cast<int>(slice.samples.size()) >= cfg.run.samples_per_task) break;
    }
    if (slice.samples.empty()) throw ValidationError("task " + std::to_string(task_index) + " has no held-out rows");
    return slice;
}

void write_text_artifact(const fs::path& path, const std::string& bytes) { manifest::write_artifact(path, bytes); }

void write_json_artifact(const fs::path& path, const nlohmann::json& j) {
    manifest::write_artifact(path, j.dump(2) + "\n");
}

int cmd_gen_data(const config::ExperimentConfig& cfg) {
    for (size_t i = 0; i < cfg.tasks.size(); ++i) {
        const auto samples = taskbench::generate(cfg.tasks[i]);
        std::ostringstream os;
        for (const auto& s : samples) {
            os << nlohmann::json{{"question", s.question}, {"gold", s.gold}, {"level", s.level}}.dump() << "\n";
        }
        const fs::path path = data_dir(cfg) / dataset_filename(static_cast<int>(i), cfg.tasks[i]);
        write_text_artifact(path, os.str());
        std::cout << "wrote " << path.string() << " (" << samples.size() << " samples)\n";
    }
    return kExitOk;
}

train::CorpusOptions corpus_options(const config::ExperimentConfig& cfg, const config::TrainSection& section) {
    train::CorpusOptions opts;
    opts.direct = section.role_direct;
    opts.executor = section.role_executor;
    opts.planner = section.role_planner;
    opts.answer_block_len = cfg.run.max_answer_tokens;
    opts.plan_len = cfg.sampler.plan_len;
    return opts;
}

std::vector<taskbench::Sample> gather_samples(const config::ExperimentConfig& cfg, const std::vector<int>& tasks) {
    std::vector<taskbench::Sample> out;
    for (int t : tasks) {
        const auto samples = load_task(cfg, t);
        out.insert(out.end(), samples.begin(), samples.end());
    }
    if (out.empty()) throw ConfigError("training section references no samples");
    return out;
}

int cmd_train(const config::ExperimentConfig& cfg, const std::string& target) {
    const fs::path mdir = models_dir(cfg);
    if (target == "arm" || target == "ddlm") {
        const bool is_arm = target == "arm";
        const config::TrainSection& section = is_arm ? cfg.arm_train : cfg.ddlm_train;
        const ModelConfig& mc = is_arm ? cfg.arm : cfg.ddlm;
        const auto samples = gather_samples(cfg, section.tasks);
        LanguageModel model(mc, VocabSpec::char_vocab());

        train::TrainOptions opts;
        opts.batch_size = section.batch_size;
        opts.eval_sampler_steps = section.eval_steps;
        train::TrainingReport report;
        if (is_arm) {
            const auto corpus = train::build_ar_corpus(samples, model.vocab(), corpus_options(cfg, section));
            report = train::train_arm(model, corpus, section.epochs, section.lr, section.seed, opts);
        } else {
            const auto corpus = train::build_diffusion_corpus(samples, model.vocab(), corpus_options(cfg, section));
            report = train::train_ddlm(model, corpus, section.epochs, section.lr, section.seed, opts);
        }
        std::ostringstream bytes(std::ios::binary);
        write_checkpoint(bytes, model_checkpoint(model));
        write_text_artifact(mdir / (target + ".ckpt"), bytes.str());
        write_json_artifact(mdir / (target + ".train.json"), report.to_json());
        std::cout << target << " trained: heldout exact " << report.final_heldout_exact << ", "
                  << report.epoch_losses.size() << " epochs, " << report.cpu_seconds << "s\n";
        return kExitOk;
    }
    if (target == "projector") {
        LanguageModel arm = load_model(mdir / "arm.ckpt");
        LanguageModel ddlm = load_model(mdir / "ddlm.ckpt");
        arm.set_trainable(false);
        ddlm.set_trainable(false);

        const config::TrainSection& section = cfg.projector_train;
        const auto samples = gather_samples(cfg, section.tasks);

        projector::ProjectorConfig pc = cfg.projector_cfg;
        pc.d_ddlm = ddlm.config().d_model;
        pc.d_arm = arm.config().d_model;
        projector::Projector proj = projector::Projector::init(pc);

        SamplerConfig sampler = cfg.sampler;
        sampler.plan_len = pc.plan_len;

        std::vector<projector::TrainRecord> records;
        const size_t limit = std::min<size_t>(samples.size(), static_cast<size_t>(section.records));
        for (size_t i = 0; i < limit; ++i) {
            projector::TrainRecord rec;
            rec.sample_index = i;
            rec.question = arm.vocab().encode(samples[i].question);
            rec.gold_answer = arm.vocab().encode(samples[i].gold);
            const auto prompt = prompts::planner_input(ddlm.vocab(), samples[i].question);
            rec.plan_hidden = denoise(ddlm, prompt, sampler).plan_hidden;
            records.push_back(std::move(rec));
            if ((i + 1) % 500 == 0) std::cerr << "latents " << (i + 1) << "/" << limit << "\n";
        }

        projector::ProjectorTrainOptions opts;
        opts.batch_size = section.batch_size;
        auto report = projector::train_projector(proj, arm, records, section.epochs, section.lr, section.seed, opts);

        std::ostringstream bytes(std::ios::binary);
        write_checkpoint(bytes, projector::projector_checkpoint(proj));
        write_text_artifact(mdir / "projector.ckpt", bytes.str());
        write_json_artifact(mdir / "projector.train.json", report.to_json());
        std::cout << "projector trained: heldout latent exact " << report.final_heldout_exact << "\n";
        return kExitOk;
    }
    throw ConfigError("unknown training target '" + target + "' (arm|ddlm|projector)");
}

struct LoadedModels {
    std::optional<LanguageModel> arm;
    std::optional<LanguageModel> ddlm;
    std::optional<projector::Projector> proj;
    pipeline::ModelSet set;
};

LoadedModels load_models(const config::ExperimentConfig& cfg, bool need_projector) {
    LoadedModels lm;
    const fs::path mdir = models_dir(cfg);
    if (fs::exists(mdir / "arm.ckpt")) {
        lm.arm.emplace(load_model(mdir / "arm.ckpt"));
        lm.arm->set_trainable(false);
        lm.set.arm = &*lm.arm;
    }
    if (fs::exists(mdir / "ddlm.ckpt")) {
        lm.ddlm.emplace(load_model(mdir / "ddlm.ckpt"));
        lm.ddlm->set_trainable(false);
        lm.set.ddlm = &*lm.ddlm;
    }
    if (need_projector) {
        const fs::path ppath = mdir / "projector.ckpt";
        if (!fs::exists(ppath)) throw IoError("projector checkpoint '" + ppath.string() + "' not found");
        lm.proj.emplace(projector::load_projector(ppath));
        lm.proj->set_trainable(false);
    }
    return lm;
}

std::string run_id(const pipeline::PairingConfig& pairing, int task_index) {
    return pairing.id() + "__t" + std::to_string(task_index);
}

int cmd_run(const config::ExperimentConfig& cfg, const std::string& selector, int parallel_override) {
    if (cfg.pairings.empty()) throw ConfigError("config has no pairings");
    if (cfg.run.eval_tasks.empty()) throw ConfigError("config run.eval_tasks is empty");

    std::vector<pipeline::PairingConfig> selected;
    if (selector == "all") {
        selected = cfg.pairings;
    } else {
        bool found = false;
        for (const auto& p : cfg.pairings) {
            if (p.id() == selector) {
                selected.push_back(p);
                found = true;
            }
        }
        if (!found) {
            try {
                const int idx = std::stoi(selector);
                if (idx >= 0 && idx < static_cast<int>(cfg.pairings.size())) {
                    selected.push_back(cfg.pairings[idx]);
                    found = true;
                }
            } catch (...) {
            }
        }
        if (!found) throw ConfigError("pairing selector '" + selector + "' matches nothing");
    }

    bool need_projector = false;
    for (const auto& p : selected) need_projector |= p.channel == pipeline::Channel::latent;
    LoadedModels lm = load_models(cfg, need_projector);

    const int parallelism = parallel_override > 0 ? parallel_override : cfg.parallelism;
    for (const auto& pairing : selected) {
        for (int task_index : cfg.run.eval_tasks) {
            const auto slice = eval_slice(cfg, task_index);
            const std::string id = run_id(pairing, task_index);
            const uint64_t run_seed = mix_seed(cfg.seed, manifest::fnv1a64(id));

            std::vector<pipeline::TranscriptRecord> transcripts;
            pipeline::RunResult result =
                pipeline::run_benchmark(pairing, slice.samples, cfg.tasks[task_index].kind, lm.set,
                                        lm.proj ? &*lm.proj : nullptr, parallelism, run_seed, &transcripts);

            const fs::path rdir = runs_dir(cfg) / id;
            std::ostringstream os;
            for (const auto& r : transcripts) os << r.to_json().dump() << "\n";
            write_text_artifact(rdir / "transcripts.jsonl", os.str());
            result.transcript_file = "runs/" + id + "/transcripts.jsonl";
            write_json_artifact(rdir / "result.json", result.to_json());
            std::cout << id << ": accuracy " << result.accuracy << ", planner_tok " << result.mean_planner_tokens
                      << ", executor_tok " << result.mean_executor_tokens << ", errors " << result.errors << "\n";
        }
    }
    return kExitOk;
}

int cmd_plan(const config::ExperimentConfig& cfg, const std::string& question, const std::string& trace_file) {
    LoadedModels lm = load_models(cfg, false);
    if (!lm.ddlm) throw IoError("ddlm checkpoint not found; train the planner first");
    SamplerConfig sampler = cfg.sampler;
    const auto prompt = prompts::planner_input(lm.ddlm->vocab(), question);
    DenoiseResult res = denoise(*lm.ddlm, prompt, sampler);
    std::cout << "plan: " << lm.ddlm->vocab().decode_generated(res.plan_tokens) << "\n";
    if (!trace_file.empty()) {
        std::ostringstream os;
        write_trace(os, res.trace);
        write_text_artifact(fs::path(trace_file), os.str());
        std::cout << "trace written to " << trace_file << "\n";
    }
    return kExitOk;
}

int cmd_diagnose(const config::ExperimentConfig& cfg, const std::string& base, const std::string& swapped,
                 const std::string& executor_probe) {
    std::vector<analysis::DiagnosticReport> reports;
    const fs::path rdir = runs_dir(cfg);

    auto run_transcripts = [&](const std::string& id) {
        const fs::path path = rdir / id / "transcripts.jsonl";
        if (!fs::exists(path)) throw IoError("run '" + id + "' not found under " + rdir.string());
        return pipeline::read_transcripts(path);
    };

    if (!base.empty()) {
        reports.push_back(analysis::diagnose(base, run_transcripts(base), run_transcripts(swapped),
                                             run_transcripts(executor_probe)));
    } else {
        // standard trio per eval task: ddlm->arm, arm->arm (planner swap), ddlm->ddlm
        for (int task_index : cfg.run.eval_tasks) {
            auto find_id = [&](const std::string& prefix) -> std::string {
                for (const auto& p : cfg.pairings) {
                    const std::string id = run_id(p, task_index);
                    if (id.rfind(prefix, 0) == 0) return id;
                }
                throw ConfigError("no pairing matching '" + prefix + "' for task " + std::to_string(task_index));
            };
            const std::string label = "task" + std::to_string(task_index);
            reports.push_back(analysis::diagnose(label, run_transcripts(find_id("ddlm-arm-text")),
                                                 run_transcripts(find_id("arm-arm-text")),
                                                 run_transcripts(find_id("ddlm-ddlm-text"))));
        }
    }

    const fs::path ddir = cfg.out_path() / "diagnostics";
    std::ostringstream lines;
    for (const auto& r : reports) lines << r.to_json().dump() << "\n";
    write_text_artifact(ddir / "diagnostics.jsonl", lines.str());
    const std::string table = report::diagnostics_table(reports);
    write_text_artifact(ddir / "diagnostics.txt", table);
    std::cout << table;
    return kExitOk;
}

int cmd_metrics(const config::ExperimentConfig& cfg, const std::string& transcripts_path, int n) {
    fs::path path(transcripts_path);
    if (!fs::exists(path)) {
        const fs::path as_run = runs_dir(cfg) / transcripts_path / "transcripts.jsonl";
        if (fs::exists(as_run)) path = as_run;
    }
    if (!fs::exists(path)) throw IoError("transcripts '" + transcripts_path + "' not found");

    const auto transcripts = pipeline::read_transcripts(path);
    std::vector<std::string> plans;
    for (const auto& t : transcripts) {
        if (t.has_plan && !t.plan_is_latent && !t.plan.empty()) plans.push_back(t.plan);
    }
    if (plans.empty()) throw ValidationError("no surface-text plans in '" + path.string() + "'");

    metrics::RepetitionReport rep = metrics::repetition_report(plans, n);
    nlohmann::json j = rep.to_json();
    j["source"] = path.string();
    const fs::path mdir = cfg.out_path() / "metrics";
    const std::string name = path.parent_path().filename().string();
    write_json_artifact(mdir / (name.empty() ? "metrics.json" : name + ".json"), j);
    std::cout << "texts " << rep.texts << "  D-3 " << (rep.d3 ? report::format_pct(*rep.d3) : "absent") << "  R-4 "
              << (rep.r4 ? report::format_pct(*rep.r4) : "absent") << "  LR-" << rep.n << " "
              << report::format_pct(rep.lr_n) << "\n";
    return kExitOk;
}

int cmd_report(const config::ExperimentConfig& cfg, const std::string& runs_csv) {
    const fs::path rdir = runs_dir(cfg);
    std::vector<std::string> ids;
    if (runs_csv.empty() || runs_csv == "all") {
        if (fs::exists(rdir)) {
            for (const auto& entry : fs::directory_iterator(rdir)) {
                if (entry.is_directory() && fs::exists(entry.path() / "result.json")) {
                    ids.push_back(entry.path().filename().string());
                }
            }
        }
        std::sort(ids.begin(), ids.end());
    } else {
        std::stringstream ss(runs_csv);
        std::string id;
        while (std::getline(ss, id, ',')) {
            if (!id.empty()) ids.push_back(id);
        }
    }
    if (ids.empty()) throw ConfigError("no runs to report");

    std::vector<pipeline::RunResult> results;
    std::vector<analysis::FrontierPoint> points;
    for (const auto& id : ids) {
        const fs::path path = rdir / id / "result.json";
        if (!fs::exists(path)) throw IoError("run result '" + path.string() + "' not found");
        nlohmann::json j = nlohmann::json::parse(manifest::read_file(path), nullptr, false);
        if (j.is_discarded()) throw IoError("malformed run result '" + path.string() + "'");
        auto res = pipeline::RunResult::from_json(j);
        results.push_back(res);
        points.push_back({id, res.mean_planner_tokens + res.mean_executor_tokens, res.accuracy});
    }
    const auto pareto = analysis::frontier(points);

    const fs::path odir = cfg.out_path() / "report";
    write_text_artifact(odir / "frontier.csv", report::frontier_csv(pareto));
    write_text_artifact(odir / "frontier.svg", report::frontier_svg(points, pareto));
    std::ostringstream tables;
    tables << "Accuracy per setup\n" << report::results_table(results) << "\n";
    tables << "Token accounting\n" << report::token_table(results) << "\n";
    write_text_artifact(odir / "tables.txt", tables.str());
    std::cout << tables.str();
    std::cout << "frontier points: " << pareto.size() << " of " << points.size() << " runs\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "hybridlm: planner-executor experiments coupling a masked-diffusion planner\n"
        "with an autoregressive executor over text and latent channels.\n"
        "Exit codes: 0 success, 2 configuration/usage, 3 I/O, 4 validation, 1 other."};
    app.require_subcommand(1);

    std::string config_path;
    std::string target;
    std::string selector = "all";
    std::string question;
    std::string trace_file;
    std::string transcripts_path;
    std::string runs_csv;
    std::string base_run, swapped_run, executor_run;
    int parallel_override = 0;
    int lr_n = 2;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file (JSON)")->required();
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic task datasets");
    add_config(gen);

    CLI::App* train_cmd = app.add_subcommand("train", "train a model or the projector");
    add_config(train_cmd);
    train_cmd->add_option("--target", target, "arm | ddlm | projector")->required();

    CLI::App* run_cmd = app.add_subcommand("run", "run pairings over the held-out eval sets");
    add_config(run_cmd);
    run_cmd->add_option("--pairing", selector, "pairing id, index, or 'all' (default)");
    run_cmd->add_option("--parallel", parallel_override, "worker threads (overrides config)");

    CLI::App* plan_cmd = app.add_subcommand("plan", "denoise a plan for one question");
    add_config(plan_cmd);
    plan_cmd->add_option("--question", question, "question text")->required();
    plan_cmd->add_option("--trace", trace_file, "write the per-step denoise trace here");

    CLI::App* diag_cmd = app.add_subcommand("diagnose", "planner/executor failure attribution");
    add_config(diag_cmd);
    diag_cmd->add_option("--base", base_run, "ddlm->arm run id (defaults to the standard trio per task)");
    diag_cmd->add_option("--swapped", swapped_run, "planner-swapped (arm->arm) run id");
    diag_cmd->add_option("--executor-probe", executor_run, "ddlm->ddlm run id");

    CLI::App* metrics_cmd = app.add_subcommand("metrics", "repetition metrics over transcript plans");
    add_config(metrics_cmd);
    metrics_cmd->add_option("--transcripts", transcripts_path, "transcripts file or run id")->required();
    metrics_cmd->add_option("--n", lr_n, "LR-n threshold (default 2)");

    CLI::App* report_cmd = app.add_subcommand("report", "frontier CSV/SVG and result tables");
    add_config(report_cmd);
    report_cmd->add_option("--runs", runs_csv, "comma-separated run ids (default: all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        const config::ExperimentConfig cfg = config::ExperimentConfig::load(config_path);
        if (gen->parsed()) return cmd_gen_data(cfg);
        if (train_cmd->parsed()) return cmd_train(cfg, target);
        if (run_cmd->parsed()) return cmd_run(cfg, selector, parallel_override);
        if (plan_cmd->parsed()) return cmd_plan(cfg, question, trace_file);
        if (diag_cmd->parsed()) {
            if (base_run.empty() != swapped_run.empty() || base_run.empty() != executor_run.empty()) {
                throw ConfigError("--base, --swapped and --executor-probe must be given together");
            }
            return cmd_diagnose(cfg, base_run, swapped_run, executor_run);
        }
        if (metrics_cmd->parsed()) return cmd_metrics(cfg, transcripts_path, lr_n);
        if (report_cmd->parsed()) return cmd_report(cfg, runs_csv);
        throw ConfigError("no subcommand");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const AlignmentError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DimensionError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const LengthError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
