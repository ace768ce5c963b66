#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "forge/attack/attack.hpp"
#include "forge/exp/exp.hpp"
#include "forge/nn/serialize.hpp"
#include "forge/train/train.hpp"
#include "forge/trigger/trigger.hpp"
#include "forge/verify/verify.hpp"
#include "forge/zoo/zoo.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace forge;

namespace {

int cmd_triggers(const std::string& dataset, const std::string& mode, int src_a,
                 int src_b, int target, double r, int64_t count, uint64_t seed,
                 const std::string& out) {
    auto data = zoo::load_dataset(dataset);
    trigger::TriggerSpec spec;
    spec.mode = trigger::mode_from_string(mode);
    spec.source_class_a = src_a;
    spec.source_class_b = src_b;
    spec.target_class = target;
    spec.transparency = r;
    spec.count = count;
    spec.seed = seed;
    auto key = trigger::build_watermark_key(data, spec);
    trigger::save_key(key, out);
    std::cout << "wrote " << out << " (" << key.triggers.size()
              << " triggers, sha256 " << trigger::key_digest(key) << ")\n";
    return 0;
}

int cmd_embed(const std::string& arch, const std::string& dataset,
              const std::string& key_path, double p, double e, int64_t epochs,
              int64_t batch, double lr, const std::string& optimizer, uint64_t seed,
              const std::string& out_dir) {
    auto data = zoo::load_dataset(dataset);
    auto key = trigger::load_key(key_path);
    train::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.learning_rate = lr;
    cfg.optimizer_id = optimizer;
    cfg.mask.drop_probability = p;
    cfg.mix.trigger_fraction = e;
    cfg.seed = seed;

    fs::create_directories(out_dir);
    std::ofstream metrics(fs::path(out_dir) / "metrics.jsonl");
    auto result = train::embed_watermark(
        zoo::arch_from_string(arch), data, key, cfg,
        [&metrics](const train::EpochStats& s) {
            json line{{"epoch", s.epoch},
                      {"train_loss", s.train_loss},
                      {"benign_accuracy", s.benign_accuracy},
                      {"trigger_accuracy", s.trigger_accuracy}};
            metrics << line.dump() << "\n";
            metrics.flush();
            std::cout << "epoch " << s.epoch << ": loss " << s.train_loss
                      << ", benign " << s.benign_accuracy << ", trigger "
                      << s.trigger_accuracy << "\n";
        });
    if (result.log.diverged) {
        std::cerr << "training diverged: " << result.log.divergence_note << "\n";
        return 1;
    }
    json manifest{{"schema_version", exp::kSchemaVersion},
                  {"tool", exp::kToolVersion},
                  {"train",
                   {{"epochs", epochs}, {"batch_size", batch}, {"learning_rate", lr},
                    {"optimizer", optimizer}, {"trigger_fraction", e}, {"seed", seed}}},
                  {"mask", {{"drop_probability", p}}},
                  {"key_sha256", trigger::key_digest(key)}};
    nn::save_model(result.model, result.spec, fs::path(out_dir) / "model.fgm",
                   manifest.dump());
    std::cout << "wrote " << (fs::path(out_dir) / "model.fgm").string() << "\n";
    return 0;
}

verify::VerificationReport verify_against(const std::string& model_ref,
                                          const trigger::WatermarkKey& key,
                                          double threshold,
                                          const std::string& audit_path) {
    const bool remote = model_ref.rfind("http://", 0) == 0 ||
                        model_ref.rfind("https://", 0) == 0;
    int64_t n_classes = 0;
    if (remote) {
        std::ofstream audit;
        verify::RemoteOptions opts;
        if (!audit_path.empty()) {
            audit.open(audit_path, std::ios::app);
            opts.audit_log = [&audit](const std::string& line) {
                audit << line << "\n";
            };
        }
        auto oracle = verify::remote_oracle(model_ref, opts);
        // Remote surfaces do not expose the class count; default to the
        // dataset the key was built for.
        n_classes = zoo::dataset_info(key.dataset_id).num_classes;
        return verify::authenticate(*oracle, key, threshold, n_classes);
    }
    auto saved = nn::load_model(model_ref);
    verify::InProcessOracle oracle(saved.model);
    return verify::authenticate(oracle, key, threshold, saved.spec.num_classes);
}

int cmd_verify(const std::string& key_path, const std::string& model_ref,
               double threshold, const std::string& out,
               const std::string& audit_path) {
    auto key = trigger::load_key(key_path);
    auto report = verify_against(model_ref, key, threshold, audit_path);
    const std::string text = verify::report_to_json(report);
    if (!out.empty()) {
        std::ofstream f(out);
        f << text;
    }
    std::cout << text;
    if (!report.valid) {
        std::cerr << "verification session invalid: " << report.error << "\n";
        return 2;
    }
    std::cout << (report.decision ? "OWNERSHIP CLAIMED" : "ownership not established")
              << " (asr " << report.asr << ", threshold " << threshold << ")\n";
    return report.decision ? 0 : 1;
}

int cmd_attack(const std::string& type, const std::string& model_path,
               const std::string& key_path, const std::string& out_dir,
               const std::vector<double>& ratios, int64_t n_samples,
               int64_t iterations, const std::string& target_dataset,
               const std::string& new_key_path, int64_t n_per_class, uint64_t seed) {
    fs::create_directories(out_dir);
    auto saved = nn::load_model(model_path);
    auto data = zoo::load_dataset(saved.spec.dataset_id);
    const auto id = attack::attack_from_string(type);

    if (id == attack::AttackId::detectability) {
        attack::DetectorProtocol protocol;
        protocol.n_per_class = n_per_class;
        protocol.seed = seed;
        auto cm = attack::detectability_eval(data, protocol);
        std::ofstream f(fs::path(out_dir) / "detect.json");
        f << attack::confusion_to_json(cm);
        std::cout << attack::confusion_to_json(cm);
        return 0;
    }

    auto key = trigger::load_key(key_path);
    attack::AttackReport report;
    switch (id) {
        case attack::AttackId::prune:
            report = attack::pruning_sweep(saved.model, saved.spec, data, key, ratios);
            break;
        case attack::AttackId::finetune: {
            attack::FinetuneOptions opts;
            opts.n_samples = n_samples;
            opts.iterations = iterations;
            opts.seed = seed;
            report = attack::finetune_attack(saved.model, saved.spec, data, key, opts);
            break;
        }
        case attack::AttackId::transfer: {
            attack::TransferOptions opts;
            opts.iterations = iterations;
            opts.class_subset_size = saved.spec.num_classes;
            opts.seed = seed;
            auto target = zoo::load_dataset(target_dataset);
            report = attack::transfer_attack(saved.model, saved.spec, data, target, key,
                                             opts);
            break;
        }
        case attack::AttackId::overwrite: {
            attack::OverwriteOptions opts;
            opts.seed = seed;
            auto new_key = trigger::load_key(new_key_path);
            report = attack::overwrite_attack(saved.model, saved.spec, data, key,
                                              new_key, opts);
            break;
        }
        default:
            throw std::logic_error("unreachable");
    }
    const fs::path out = fs::path(out_dir) / (type + ".json");
    attack::save_attack_report(report, out);
    std::cout << "wrote " << out.string() << "\n";
    for (const auto& p : report.trajectory)
        std::cout << "  strength " << p.strength << ": benign " << p.benign_accuracy
                  << ", asr " << p.asr << "\n";
    return 0;
}

int cmd_serve(const std::string& model_path, const std::string& host, int port) {
    auto saved = nn::load_model(model_path);
    verify::ModelServer server(saved.model, host, port);
    std::cout << "serving " << model_path << " on " << host << ":" << server.port()
              << " (POST /predict, PGM/PPM body)\n";
    std::cout << "press enter to stop\n";
    std::cin.get();
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"function-coupled watermarking toolkit"};
    app.require_subcommand(1);

    // ---- triggers ----
    auto* triggers = app.add_subcommand("triggers", "generate a watermark key");
    std::string dataset = "mnist", mode = "invisible", out = "key.wmkey";
    int src_a = 0, src_b = 3, target = 1;
    double r = 0.5;
    int64_t count = 90;
    uint64_t seed = 42;
    triggers->add_option("--dataset", dataset, "dataset id")->required();
    triggers->add_option("--mode", mode, "direct|invisible");
    triggers->add_option("--src-a", src_a, "first source class");
    triggers->add_option("--src-b", src_b, "second source class");
    triggers->add_option("--target", target, "target class");
    triggers->add_option("--r", r, "transparency (invisible mode)");
    triggers->add_option("--count", count, "trigger count");
    triggers->add_option("--seed", seed, "generation seed");
    triggers->add_option("--out", out, "output key archive")->required();

    // ---- embed ----
    auto* embed = app.add_subcommand("embed", "train a watermarked model");
    std::string arch = "lenet5", key_path, out_dir = "runs/embed";
    std::string optimizer = "adam";
    double p = 0.3, e = 0.01, lr = 1e-3;
    int64_t epochs = 6, batch = 64;
    embed->add_option("--arch", arch, "lenet5|resnet18|vgg16");
    embed->add_option("--dataset", dataset, "dataset id")->required();
    embed->add_option("--key", key_path, "watermark key archive")->required();
    embed->add_option("--p", p, "mask drop probability");
    embed->add_option("--e", e, "trigger fraction of the training set");
    embed->add_option("--epochs", epochs, "training epochs");
    embed->add_option("--batch", batch, "batch size");
    embed->add_option("--lr", lr, "learning rate");
    embed->add_option("--optimizer", optimizer, "adam|sgd|sgd_momentum");
    embed->add_option("--seed", seed, "training seed");
    embed->add_option("--out", out_dir, "output directory")->required();

    // ---- verify ----
    auto* verify_cmd = app.add_subcommand("verify", "black-box ownership check");
    std::string model_ref, report_out, audit_path;
    double threshold = 0.9;
    verify_cmd->add_option("--key", key_path, "watermark key archive")->required();
    verify_cmd->add_option("--model", model_ref, "model file or http(s) endpoint")
        ->required();
    verify_cmd->add_option("--threshold", threshold, "decision threshold");
    verify_cmd->add_option("--out", report_out, "write the report JSON here");
    verify_cmd->add_option("--audit", audit_path, "append remote query audit log here");

    // ---- attack ----
    auto* attack_cmd = app.add_subcommand("attack", "run a removal attack");
    std::string attack_type, target_dataset = "cifar100", new_key_path;
    std::vector<double> ratios = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int64_t n_samples = 1500, iterations = 10, n_per_class = 1000;
    attack_cmd
        ->add_option("--type", attack_type,
                     "finetune|transfer|prune|overwrite|detect")
        ->required();
    attack_cmd->add_option("--model", model_ref, "model file")->required();
    attack_cmd->add_option("--key", key_path, "watermark key archive");
    attack_cmd->add_option("--out", out_dir, "output directory")->required();
    attack_cmd->add_option("--ratios", ratios, "pruning ratios");
    attack_cmd->add_option("--n-samples", n_samples, "fine-tune sample count");
    attack_cmd->add_option("--iterations", iterations, "attack iterations");
    attack_cmd->add_option("--target-dataset", target_dataset, "transfer target");
    attack_cmd->add_option("--new-key", new_key_path, "overwrite: adversary key");
    attack_cmd->add_option("--n-per-class", n_per_class, "detect: images per class");
    attack_cmd->add_option("--seed", seed, "attack seed");

    // ---- pipeline ----
    auto* pipeline = app.add_subcommand("pipeline", "run triggers+embed+verify+attacks");
    std::string config_path, pipeline_out = "runs";
    pipeline->add_option("--config", config_path, "pipeline config JSON")->required();
    pipeline->add_option("--out", pipeline_out, "output root");

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "render report.md + plots");
    std::string run_dir;
    report_cmd->add_option("--run", run_dir, "run directory (pipeline output)")
        ->required();

    // ---- serve ----
    auto* serve = app.add_subcommand("serve", "serve a model over HTTP");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--model", model_ref, "model file")->required();
    serve->add_option("--host", host, "bind host");
    serve->add_option("--port", port, "bind port (0 = any)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*triggers)
            return cmd_triggers(dataset, mode, src_a, src_b, target, r, count, seed, out);
        if (*embed)
            return cmd_embed(arch, dataset, key_path, p, e, epochs, batch, lr,
                             optimizer, seed, out_dir);
        if (*verify_cmd)
            return cmd_verify(key_path, model_ref, threshold, report_out, audit_path);
        if (*attack_cmd)
            return cmd_attack(attack_type, model_ref, key_path, out_dir, ratios,
                              n_samples, iterations, target_dataset, new_key_path,
                              n_per_class, seed);
        if (*pipeline) {
            auto cfg = exp::load_pipeline_config(config_path);
            auto outcome = exp::run_pipeline(cfg, pipeline_out);
            std::cout << "pipeline complete: " << outcome.run_dir.string() << "\n"
                      << exp::results_to_json(outcome.bundle);
            return 0;
        }
        if (*report_cmd) {
            auto files = exp::render_report(run_dir);
            for (const auto& f : files) std::cout << "wrote " << f << "\n";
            return 0;
        }
        if (*serve) return cmd_serve(model_ref, host, port);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
