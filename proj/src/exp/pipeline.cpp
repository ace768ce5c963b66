#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

#include "forge/core/hash.hpp"
#include "forge/exp/exp.hpp"

namespace forge::exp {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string env_fingerprint() {
    json doc{{"compiler",
#if defined(__clang__)
              std::string("clang ") + __clang_version__
#elif defined(__GNUC__)
              std::string("gcc ") + std::to_string(__GNUC__) + "." +
                  std::to_string(__GNUC_MINOR__)
#else
              "unknown"
#endif
             },
             {"backend", kernels::default_backend() == kernels::Backend::openmp
                             ? "openmp" : "serial"}};
    return doc.dump();
}

std::string train_manifest_json(const PipelineConfig& cfg, const std::string& key_sha,
                                double trigger_fraction) {
    json doc{{"schema_version", kSchemaVersion},
             {"tool", kToolVersion},
             {"train",
              {{"epochs", cfg.train.epochs},
               {"batch_size", cfg.train.batch_size},
               {"learning_rate", cfg.train.learning_rate},
               {"optimizer", cfg.train.optimizer_id},
               {"trigger_fraction", trigger_fraction},
               {"seed", cfg.train.seed}}},
             {"mask",
              {{"drop_probability", cfg.train.mask.drop_probability},
               {"resample", cfg.train.mask.resample == train::MaskResample::per_batch
                                ? "per_batch" : "per_epoch"},
               {"layer_scope", cfg.train.mask.layer_scope}}},
             {"key_sha256", key_sha},
             {"environment", json::parse(env_fingerprint())}};
    return doc.dump();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

struct StageGuard {
    RunManifest& manifest;
    fs::path manifest_path;
    std::string stage;
    bool done = false;
    StageGuard(RunManifest& m, fs::path p, std::string s)
        : manifest(m), manifest_path(std::move(p)), stage(std::move(s)) {}
    void finish() {
        manifest.record_stage(stage, "ok");
        manifest.save(manifest_path);
        done = true;
    }
    ~StageGuard() {
        if (!done) {
            manifest.record_stage(stage, "failed");
            try {
                manifest.save(manifest_path);
            } catch (...) {}
        }
    }
};

}  // namespace

PipelineOutcome run_pipeline(const PipelineConfig& cfg, const fs::path& out_root) {
    const fs::path run_dir = out_root / cfg.run_id;
    fs::create_directories(run_dir);
    const fs::path manifest_path = run_dir / "manifest.json";

    RunManifest manifest(cfg.run_id, "pipeline", pipeline_config_to_json(cfg));
    manifest.record_seed("master", cfg.seed);
    manifest.record_seed("trigger", cfg.trigger.seed);
    manifest.record_seed("train", cfg.train.seed);

    ResultsBundle bundle;
    bundle.run_id = cfg.run_id;

    // ---- stage: dataset ----
    zoo::DatasetSplits data;
    {
        StageGuard guard(manifest, manifest_path, "dataset");
        data = zoo::load_dataset(cfg.dataset);
        manifest.record_input("dataset:" + cfg.dataset,
                              "train=" + std::to_string(data.train.size()) +
                                  ",test=" + std::to_string(data.test.size()));
        guard.finish();
    }

    // ---- stage: triggers ----
    trigger::WatermarkKey key;
    {
        StageGuard guard(manifest, manifest_path, "triggers");
        key = trigger::build_watermark_key(data, cfg.trigger);
        trigger::save_key(key, run_dir / "key.wmkey");
        manifest.record_file(run_dir, "key.wmkey", "watermark key");
        manifest.record_input("key", trigger::key_digest(key));
        guard.finish();
    }

    // ---- stage: embed ----
    const zoo::ArchId arch = zoo::arch_from_string(cfg.arch);
    nn::Model watermarked;
    zoo::ArchSpec spec;
    {
        StageGuard guard(manifest, manifest_path, "embed");
        std::ofstream metrics(run_dir / "metrics.jsonl");
        auto log_epoch = [&metrics](const train::EpochStats& s) {
            metrics << json{{"epoch", s.epoch},
                            {"train_loss", s.train_loss},
                            {"benign_accuracy", s.benign_accuracy},
                            {"trigger_accuracy", s.trigger_accuracy}}
                           .dump()
                    << "\n";
            metrics.flush();
        };
        auto result = train::embed_watermark(arch, data, key, cfg.train, log_epoch);
        if (result.log.diverged)
            throw std::runtime_error("embedding diverged: " + result.log.divergence_note);
        watermarked = std::move(result.model);
        spec = result.spec;
        nn::save_model(watermarked, spec, run_dir / "model.fgm",
                       train_manifest_json(cfg, trigger::key_digest(key),
                                           cfg.train.mix.trigger_fraction));
        metrics.close();
        manifest.record_file(run_dir, "metrics.jsonl", "per-epoch metrics");
        manifest.record_file(run_dir, "model.fgm", "watermarked model");
        bundle.metrics_log_file = "metrics.jsonl";
        guard.finish();
    }

    // ---- stage: clean baseline (fidelity reference) ----
    if (cfg.train_clean_baseline) {
        StageGuard guard(manifest, manifest_path, "clean_baseline");
        train::TrainConfig clean_cfg = cfg.train;
        clean_cfg.mix.trigger_fraction = 0.0;
        clean_cfg.mask.drop_probability = 0.0;  // plain training, Table-1 style
        auto clean = train::embed_watermark(arch, data, key, clean_cfg, {});
        if (clean.log.diverged)
            throw std::runtime_error("clean baseline diverged");
        nn::save_model(clean.model, clean.spec, run_dir / "clean_model.fgm", "");
        manifest.record_file(run_dir, "clean_model.fgm", "clean baseline model");
        bundle.fidelity_clean = clean.log.epochs.back().benign_accuracy;
        bundle.has_clean_baseline = true;
        guard.finish();
    }

    // ---- stage: verify ----
    {
        StageGuard guard(manifest, manifest_path, "verify");
        verify::InProcessOracle oracle(watermarked);
        auto report = verify::authenticate(oracle, key, cfg.verify_threshold,
                                           spec.num_classes);
        write_text(run_dir / "verify_report.json", verify::report_to_json(report));
        manifest.record_file(run_dir, "verify_report.json", "verification report");
        bundle.effectiveness = report.asr;
        bundle.verify_report_file = "verify_report.json";
        guard.finish();
    }
    bundle.fidelity_watermarked = zoo::evaluate(watermarked, data.test);
    if (bundle.has_clean_baseline)
        bundle.fidelity_delta = bundle.fidelity_watermarked - bundle.fidelity_clean;

    // ---- stage: attacks ----
    fs::create_directories(run_dir / "attacks");
    auto persist_attack = [&](const std::string& id, const attack::AttackReport& r) {
        const std::string rel = "attacks/" + id + ".json";
        attack::save_attack_report(r, run_dir / rel);
        manifest.record_file(run_dir, rel, "attack report");
        bundle.robustness_files[id] = rel;
        bundle.robustness[id] = r;
    };
    if (cfg.prune.enabled) {
        StageGuard guard(manifest, manifest_path, "attack:prune");
        persist_attack("prune",
                       attack::pruning_sweep(watermarked, spec, data, key, cfg.prune.ratios));
        guard.finish();
    }
    if (cfg.finetune.enabled) {
        StageGuard guard(manifest, manifest_path, "attack:finetune");
        persist_attack("finetune", attack::finetune_attack(watermarked, spec, data, key,
                                                           cfg.finetune.options));
        guard.finish();
    }
    if (cfg.transfer.enabled) {
        StageGuard guard(manifest, manifest_path, "attack:transfer");
        auto target = zoo::load_dataset(cfg.transfer.target_dataset);
        persist_attack("transfer", attack::transfer_attack(watermarked, spec, data,
                                                           target, key,
                                                           cfg.transfer.options));
        guard.finish();
    }
    if (cfg.overwrite.enabled) {
        StageGuard guard(manifest, manifest_path, "attack:overwrite");
        auto new_key = trigger::build_watermark_key(data, cfg.overwrite.new_trigger);
        persist_attack("overwrite", attack::overwrite_attack(watermarked, spec, data, key,
                                                             new_key, cfg.overwrite.options));
        guard.finish();
    }
    if (cfg.detect.enabled) {
        StageGuard guard(manifest, manifest_path, "attack:detect");
        auto cm = attack::detectability_eval(data, cfg.detect.protocol);
        write_text(run_dir / "attacks/detect.json", attack::confusion_to_json(cm));
        manifest.record_file(run_dir, "attacks/detect.json", "detectability study");
        bundle.robustness_files["detect"] = "attacks/detect.json";
        guard.finish();
    }

    // ---- stage: results ----
    {
        StageGuard guard(manifest, manifest_path, "results");
        write_text(run_dir / "results.json", results_to_json(bundle));
        manifest.record_file(run_dir, "results.json", "results bundle");
        guard.finish();
    }
    return {std::move(bundle), run_dir};
}

}  // namespace forge::exp
