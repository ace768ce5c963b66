#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <stdexcept>

#include "forge/exp/exp.hpp"

namespace forge::exp {

using json = nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object())
        throw std::invalid_argument("config: " + where + " must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw std::invalid_argument("config: unknown field '" + key + "' in " + where);
}

trigger::TriggerSpec parse_trigger(const json& t, const std::string& where) {
    require_keys(t, where,
                 {"mode", "source_class_a", "source_class_b", "target_class",
                  "transparency", "count", "seed"});
    trigger::TriggerSpec spec;
    spec.mode = trigger::mode_from_string(t.at("mode").get<std::string>());
    spec.source_class_a = t.at("source_class_a").get<int>();
    spec.source_class_b = t.at("source_class_b").get<int>();
    spec.target_class = t.at("target_class").get<int>();
    if (t.contains("transparency")) spec.transparency = t["transparency"].get<double>();
    if (t.contains("count")) spec.count = t["count"].get<int64_t>();
    if (t.contains("seed")) spec.seed = t["seed"].get<uint64_t>();
    return spec;
}

json trigger_to_json(const trigger::TriggerSpec& spec) {
    return json{{"mode", trigger::mode_to_string(spec.mode)},
                {"source_class_a", spec.source_class_a},
                {"source_class_b", spec.source_class_b},
                {"target_class", spec.target_class},
                {"transparency", spec.transparency},
                {"count", spec.count},
                {"seed", spec.seed}};
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    require_keys(doc, "top level",
                 {"schema_version", "run_id", "dataset", "arch", "seed",
                  "train_clean_baseline", "trigger", "train", "verify", "attacks"});

    const std::string ver = doc.at("schema_version").get<std::string>();
    if (ver.substr(0, ver.find('.')) != std::string(kSchemaVersion).substr(0, 1))
        throw std::invalid_argument("config: unsupported schema major version " + ver);

    PipelineConfig cfg;
    cfg.run_id = doc.at("run_id").get<std::string>();
    cfg.dataset = doc.at("dataset").get<std::string>();
    cfg.arch = doc.at("arch").get<std::string>();
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.train_clean_baseline = doc.value("train_clean_baseline", true);
    if (cfg.run_id.empty()) throw std::invalid_argument("config: run_id must be set");

    cfg.trigger = parse_trigger(doc.at("trigger"), "trigger");
    if (cfg.trigger.seed == 0) cfg.trigger.seed = derive_seed(cfg.seed, "stage/trigger");

    const json& tr = doc.at("train");
    require_keys(tr, "train",
                 {"epochs", "batch_size", "learning_rate", "final_learning_rate",
                  "optimizer", "trigger_fraction", "mask"});
    cfg.train.epochs = tr.value("epochs", cfg.train.epochs);
    cfg.train.batch_size = tr.value("batch_size", cfg.train.batch_size);
    cfg.train.learning_rate = tr.value("learning_rate", cfg.train.learning_rate);
    if (tr.contains("final_learning_rate"))
        cfg.train.final_learning_rate = tr["final_learning_rate"].get<double>();
    cfg.train.optimizer_id = tr.value("optimizer", cfg.train.optimizer_id);
    cfg.train.mix.trigger_fraction =
        tr.value("trigger_fraction", cfg.train.mix.trigger_fraction);
    if (tr.contains("mask")) {
        const json& mk = tr["mask"];
        require_keys(mk, "train.mask",
                     {"drop_probability", "resample", "layer_scope", "seed"});
        cfg.train.mask.drop_probability =
            mk.value("drop_probability", cfg.train.mask.drop_probability);
        const std::string rs = mk.value("resample", std::string("per_batch"));
        if (rs == "per_batch") cfg.train.mask.resample = train::MaskResample::per_batch;
        else if (rs == "per_epoch") cfg.train.mask.resample = train::MaskResample::per_epoch;
        else throw std::invalid_argument("config: resample must be per_batch|per_epoch");
        if (mk.contains("layer_scope"))
            cfg.train.mask.layer_scope = mk["layer_scope"].get<std::vector<std::string>>();
        cfg.train.mask.seed = mk.value("seed", cfg.train.mask.seed);
    }
    cfg.train.seed = derive_seed(cfg.seed, "stage/train");

    if (doc.contains("verify")) {
        require_keys(doc["verify"], "verify", {"threshold"});
        cfg.verify_threshold = doc["verify"].value("threshold", cfg.verify_threshold);
    }

    if (doc.contains("attacks")) {
        const json& at = doc["attacks"];
        require_keys(at, "attacks",
                     {"prune", "finetune", "transfer", "overwrite", "detect"});
        if (at.contains("prune")) {
            require_keys(at["prune"], "attacks.prune", {"enabled", "ratios"});
            cfg.prune.enabled = at["prune"].value("enabled", true);
            if (at["prune"].contains("ratios"))
                cfg.prune.ratios = at["prune"]["ratios"].get<std::vector<double>>();
        }
        if (at.contains("finetune")) {
            const json& ft = at["finetune"];
            require_keys(ft, "attacks.finetune",
                         {"enabled", "n_samples", "iterations", "epochs_per_iteration",
                          "batch_size", "lr_start", "lr_end"});
            cfg.finetune.enabled = ft.value("enabled", true);
            auto& o = cfg.finetune.options;
            o.n_samples = ft.value("n_samples", o.n_samples);
            o.iterations = ft.value("iterations", o.iterations);
            o.epochs_per_iteration = ft.value("epochs_per_iteration", o.epochs_per_iteration);
            o.batch_size = ft.value("batch_size", o.batch_size);
            o.lr_start = ft.value("lr_start", o.lr_start);
            o.lr_end = ft.value("lr_end", o.lr_end);
            o.seed = derive_seed(cfg.seed, "stage/attack_finetune");
        }
        if (at.contains("transfer")) {
            const json& tf = at["transfer"];
            require_keys(tf, "attacks.transfer",
                         {"enabled", "target_dataset", "class_subset_size", "iterations",
                          "epochs_per_iteration", "batch_size", "lr_start", "lr_end"});
            cfg.transfer.enabled = tf.value("enabled", false);
            cfg.transfer.target_dataset =
                tf.value("target_dataset", cfg.transfer.target_dataset);
            auto& o = cfg.transfer.options;
            o.class_subset_size = tf.value("class_subset_size", o.class_subset_size);
            o.iterations = tf.value("iterations", o.iterations);
            o.epochs_per_iteration = tf.value("epochs_per_iteration", o.epochs_per_iteration);
            o.batch_size = tf.value("batch_size", o.batch_size);
            o.lr_start = tf.value("lr_start", o.lr_start);
            o.lr_end = tf.value("lr_end", o.lr_end);
            o.seed = derive_seed(cfg.seed, "stage/attack_transfer");
        }
        if (at.contains("overwrite")) {
            const json& ow = at["overwrite"];
            require_keys(ow, "attacks.overwrite",
                         {"enabled", "trigger", "trigger_fraction", "epochs",
                          "batch_size", "lr_start", "lr_end"});
            cfg.overwrite.enabled = ow.value("enabled", false);
            if (ow.contains("trigger"))
                cfg.overwrite.new_trigger = parse_trigger(ow["trigger"],
                                                          "attacks.overwrite.trigger");
            if (cfg.overwrite.enabled && cfg.overwrite.new_trigger.seed == 0)
                cfg.overwrite.new_trigger.seed = derive_seed(cfg.seed, "stage/overwrite_key");
            auto& o = cfg.overwrite.options;
            o.trigger_fraction = ow.value("trigger_fraction", o.trigger_fraction);
            o.epochs = ow.value("epochs", o.epochs);
            o.batch_size = ow.value("batch_size", o.batch_size);
            o.lr_start = ow.value("lr_start", o.lr_start);
            o.lr_end = ow.value("lr_end", o.lr_end);
            o.seed = derive_seed(cfg.seed, "stage/attack_overwrite");
        }
        if (at.contains("detect")) {
            const json& dt = at["detect"];
            require_keys(dt, "attacks.detect",
                         {"enabled", "n_per_class", "backbone", "epochs", "batch_size",
                          "learning_rate", "holdout_fraction", "transparency_low",
                          "transparency_high"});
            cfg.detect.enabled = dt.value("enabled", false);
            auto& p = cfg.detect.protocol;
            p.n_per_class = dt.value("n_per_class", p.n_per_class);
            if (dt.contains("backbone"))
                p.backbone = zoo::arch_from_string(dt["backbone"].get<std::string>());
            p.epochs = dt.value("epochs", p.epochs);
            p.batch_size = dt.value("batch_size", p.batch_size);
            p.learning_rate = dt.value("learning_rate", p.learning_rate);
            p.holdout_fraction = dt.value("holdout_fraction", p.holdout_fraction);
            p.transparency_low = dt.value("transparency_low", p.transparency_low);
            p.transparency_high = dt.value("transparency_high", p.transparency_high);
            p.seed = derive_seed(cfg.seed, "stage/attack_detect");
        }
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return parse_pipeline_config(text);
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
    json mask{{"drop_probability", cfg.train.mask.drop_probability},
              {"resample", cfg.train.mask.resample == train::MaskResample::per_batch
                               ? "per_batch" : "per_epoch"},
              {"layer_scope", cfg.train.mask.layer_scope},
              {"seed", cfg.train.mask.seed}};
    json train{{"epochs", cfg.train.epochs},
               {"batch_size", cfg.train.batch_size},
               {"learning_rate", cfg.train.learning_rate},
               {"optimizer", cfg.train.optimizer_id},
               {"trigger_fraction", cfg.train.mix.trigger_fraction},
               {"mask", mask}};
    if (cfg.train.final_learning_rate)
        train["final_learning_rate"] = *cfg.train.final_learning_rate;
    json attacks{
        {"prune", {{"enabled", cfg.prune.enabled}, {"ratios", cfg.prune.ratios}}},
        {"finetune",
         {{"enabled", cfg.finetune.enabled},
          {"n_samples", cfg.finetune.options.n_samples},
          {"iterations", cfg.finetune.options.iterations},
          {"epochs_per_iteration", cfg.finetune.options.epochs_per_iteration},
          {"batch_size", cfg.finetune.options.batch_size},
          {"lr_start", cfg.finetune.options.lr_start},
          {"lr_end", cfg.finetune.options.lr_end}}},
        {"transfer",
         {{"enabled", cfg.transfer.enabled},
          {"target_dataset", cfg.transfer.target_dataset},
          {"class_subset_size", cfg.transfer.options.class_subset_size},
          {"iterations", cfg.transfer.options.iterations},
          {"epochs_per_iteration", cfg.transfer.options.epochs_per_iteration},
          {"batch_size", cfg.transfer.options.batch_size},
          {"lr_start", cfg.transfer.options.lr_start},
          {"lr_end", cfg.transfer.options.lr_end}}},
        {"overwrite",
         {{"enabled", cfg.overwrite.enabled},
          {"trigger", trigger_to_json(cfg.overwrite.new_trigger)},
          {"trigger_fraction", cfg.overwrite.options.trigger_fraction},
          {"epochs", cfg.overwrite.options.epochs},
          {"batch_size", cfg.overwrite.options.batch_size},
          {"lr_start", cfg.overwrite.options.lr_start},
          {"lr_end", cfg.overwrite.options.lr_end}}},
        {"detect",
         {{"enabled", cfg.detect.enabled},
          {"n_per_class", cfg.detect.protocol.n_per_class},
          {"backbone", zoo::arch_to_string(cfg.detect.protocol.backbone)},
          {"epochs", cfg.detect.protocol.epochs},
          {"batch_size", cfg.detect.protocol.batch_size},
          {"learning_rate", cfg.detect.protocol.learning_rate},
          {"holdout_fraction", cfg.detect.protocol.holdout_fraction},
          {"transparency_low", cfg.detect.protocol.transparency_low},
          {"transparency_high", cfg.detect.protocol.transparency_high}}}};
    json doc{{"schema_version", kSchemaVersion},
             {"run_id", cfg.run_id},
             {"dataset", cfg.dataset},
             {"arch", cfg.arch},
             {"seed", cfg.seed},
             {"train_clean_baseline", cfg.train_clean_baseline},
             {"trigger", trigger_to_json(cfg.trigger)},
             {"train", train},
             {"verify", {{"threshold", cfg.verify_threshold}}},
             {"attacks", attacks}};
    return doc.dump(2) + "\n";
}

}  // namespace forge::exp
