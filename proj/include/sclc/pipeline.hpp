#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sclc/augment.hpp"
#include "sclc/cam.hpp"
#include "sclc/cost.hpp"
#include "sclc/data.hpp"
#include "sclc/image_io.hpp"
#include "sclc/losses.hpp"
#include "sclc/metrics.hpp"
#include "sclc/model.hpp"
#include "sclc/optimizer.hpp"
#include "sclc/rng.hpp"

namespace sclc {

struct DatasetSource {
    enum class Kind { Synthetic, Directory };
    Kind kind = Kind::Synthetic;
    std::string path;  // directory kind
    SynthSpec synth = SynthSpec::first_classes(4, {200, 200, 200, 200});
};

struct RunConfig {
    DatasetSource dataset;
    std::size_t resolution = 32;
    std::vector<std::size_t> encoder_channels = {16, 32, 64};
    std::size_t projection_hidden = 64;
    std::size_t projection_dim = 32;
    LossSpec loss = LossSpec::for_kind(LossKind::MaxMargin);
    AdamWOptions optimizer;  // lr 1e-3, wd 1e-4
    std::size_t epochs_pretrain = 50;
    std::size_t epochs_finetune = 100;
    std::size_t batch_size = 32;
    bool cost_sensitive = false;
    CostMode cost_mode = CostMode::Balanced;
    std::vector<double> cost_weights;  // explicit mode only
    std::uint64_t seed = 0;
    std::string out = "run";

    /// The protocol reported by the source experiments, selectable as a preset.
    void apply_paper_preset() {
        resolution = 224;
        optimizer.lr = 2e-5;
        epochs_pretrain = 50;
        epochs_finetune = 220;
        batch_size = 64;
    }

    void validate() const {
        if (epochs_pretrain < 1 || epochs_finetune < 1)
            throw std::invalid_argument("config: epochs must be >= 1");
        if (batch_size < 2) throw std::invalid_argument("config: batch size must be >= 2");
        if (resolution < 8) throw std::invalid_argument("config: resolution must be >= 8");
        loss.validate();
        if (dataset.kind == DatasetSource::Kind::Directory && dataset.path.empty())
            throw std::invalid_argument("config: directory dataset source needs a path");
        if (cost_mode == CostMode::Explicit && cost_sensitive && cost_weights.empty())
            throw std::invalid_argument("config: explicit cost mode needs cost-weights");
    }
};

// -------- strict JSON config parsing (unknown keys are errors) --------

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const char* where,
                                const std::vector<std::string>& known) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const std::string& k : known)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument(std::string("config: unknown key '") + item.key() +
                                        "' in " + where);
    }
}

inline DatasetSource parse_dataset_source(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: dataset-source must be an object");
    reject_unknown_keys(j, "dataset-source",
                        {"kind", "path", "classes", "per-class", "counts", "shapes",
                         "noise-sigma"});
    DatasetSource src;
    const std::string kind = j.value("kind", std::string("synthetic"));
    if (kind == "directory") {
        src.kind = DatasetSource::Kind::Directory;
        if (!j.contains("path"))
            throw std::invalid_argument("config: directory dataset-source needs 'path'");
        src.path = j.at("path").get<std::string>();
        for (const char* k : {"classes", "per-class", "counts", "shapes", "noise-sigma"})
            if (j.contains(k))
                throw std::invalid_argument(std::string("config: '") + k +
                                            "' only applies to synthetic dataset-source");
        return src;
    }
    if (kind != "synthetic")
        throw std::invalid_argument("config: dataset-source kind must be synthetic or directory");
    if (j.contains("path"))
        throw std::invalid_argument("config: 'path' only applies to directory dataset-source");

    std::size_t classes = j.value("classes", std::size_t{4});
    std::vector<ShapeKind> shapes;
    if (j.contains("shapes")) {
        for (const auto& s : j.at("shapes")) shapes.push_back(parse_shape_kind(s.get<std::string>()));
        if (j.contains("classes") && classes != shapes.size())
            throw std::invalid_argument("config: 'classes' disagrees with 'shapes' length");
        classes = shapes.size();
    } else {
        for (std::size_t i = 0; i < classes; ++i) shapes.push_back(static_cast<ShapeKind>(i));
    }
    std::vector<std::size_t> counts;
    if (j.contains("counts")) {
        counts = j.at("counts").get<std::vector<std::size_t>>();
        if (counts.size() != classes)
            throw std::invalid_argument("config: 'counts' length must equal the class count");
        if (j.contains("per-class"))
            throw std::invalid_argument("config: give either 'counts' or 'per-class', not both");
    } else {
        counts.assign(classes, j.value("per-class", std::size_t{200}));
    }
    src.synth.shapes = std::move(shapes);
    src.synth.counts = std::move(counts);
    src.synth.noise_sigma = j.value("noise-sigma", src.synth.noise_sigma);
    return src;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
    detail::reject_unknown_keys(
        j, "config",
        {"preset", "dataset-source", "resolution", "model-spec", "loss-spec", "optimizer",
         "epochs-pretrain", "epochs-finetune", "batch-size", "cost-sensitive", "cost-mode",
         "cost-weights", "seed", "out"});

    RunConfig cfg;
    if (j.contains("preset")) {
        const std::string preset = j.at("preset").get<std::string>();
        if (preset == "paper")
            cfg.apply_paper_preset();
        else if (preset != "desk")
            throw std::invalid_argument("config: preset must be desk or paper");
    }
    if (j.contains("dataset-source"))
        cfg.dataset = detail::parse_dataset_source(j.at("dataset-source"));
    if (j.contains("resolution")) cfg.resolution = j.at("resolution").get<std::size_t>();
    if (j.contains("model-spec")) {
        const nlohmann::json& m = j.at("model-spec");
        detail::reject_unknown_keys(m, "model-spec",
                                    {"encoder-channels", "projection-hidden", "projection-dim"});
        if (m.contains("encoder-channels"))
            cfg.encoder_channels = m.at("encoder-channels").get<std::vector<std::size_t>>();
        if (m.contains("projection-hidden"))
            cfg.projection_hidden = m.at("projection-hidden").get<std::size_t>();
        if (m.contains("projection-dim"))
            cfg.projection_dim = m.at("projection-dim").get<std::size_t>();
    }
    if (j.contains("loss-spec")) {
        const nlohmann::json& l = j.at("loss-spec");
        detail::reject_unknown_keys(l, "loss-spec", {"kind", "margin", "temperature"});
        if (l.contains("kind")) cfg.loss = LossSpec::for_kind(parse_loss_kind(l.at("kind").get<std::string>()));
        if (l.contains("margin")) cfg.loss.margin = l.at("margin").get<double>();
        if (l.contains("temperature")) cfg.loss.temperature = l.at("temperature").get<double>();
    }
    if (j.contains("optimizer")) {
        const nlohmann::json& o = j.at("optimizer");
        detail::reject_unknown_keys(o, "optimizer", {"lr", "weight-decay", "beta1", "beta2", "eps"});
        cfg.optimizer.lr = o.value("lr", cfg.optimizer.lr);
        cfg.optimizer.weight_decay = o.value("weight-decay", cfg.optimizer.weight_decay);
        cfg.optimizer.beta1 = o.value("beta1", cfg.optimizer.beta1);
        cfg.optimizer.beta2 = o.value("beta2", cfg.optimizer.beta2);
        cfg.optimizer.eps = o.value("eps", cfg.optimizer.eps);
    }
    if (j.contains("epochs-pretrain"))
        cfg.epochs_pretrain = j.at("epochs-pretrain").get<std::size_t>();
    if (j.contains("epochs-finetune"))
        cfg.epochs_finetune = j.at("epochs-finetune").get<std::size_t>();
    if (j.contains("batch-size")) cfg.batch_size = j.at("batch-size").get<std::size_t>();
    if (j.contains("cost-sensitive")) cfg.cost_sensitive = j.at("cost-sensitive").get<bool>();
    if (j.contains("cost-mode")) cfg.cost_mode = parse_cost_mode(j.at("cost-mode").get<std::string>());
    if (j.contains("cost-weights"))
        cfg.cost_weights = j.at("cost-weights").get<std::vector<double>>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    cfg.validate();
    return cfg;
}

inline RunConfig parse_run_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_run_config(j);
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config '" + path + "': cannot open");
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_run_config_text(text);
}

// -------- dataset preparation --------

struct PreparedData {
    LabeledDataset train, test;
    std::vector<std::string> warnings;
};

/// Resolve the configured dataset source at the configured resolution and
/// produce the fixed 80/20 stratified split.
inline PreparedData prepare_data(const RunConfig& cfg) {
    PreparedData out;
    LabeledDataset full;
    if (cfg.dataset.kind == DatasetSource::Kind::Synthetic) {
        SynthSpec spec = cfg.dataset.synth;
        spec.height = cfg.resolution;
        spec.width = cfg.resolution;
        full = generate(spec, cfg.seed);
    } else {
        full = load_directory(cfg.dataset.path, &out.warnings);
        for (Tensor& img : full.images)
            if (img.dim(1) != cfg.resolution || img.dim(2) != cfg.resolution)
                img = resize_bilinear(img, cfg.resolution, cfg.resolution);
    }
    auto split = split_stratified(full, 0.8, cfg.seed, &out.warnings);
    out.train = std::move(split.first);
    out.test = std::move(split.second);
    return out;
}

inline ModelSpec model_spec_for(const RunConfig& cfg, std::size_t classes) {
    ModelSpec spec;
    spec.input_channels = 3;
    spec.input_height = cfg.resolution;
    spec.input_width = cfg.resolution;
    spec.encoder_channels = cfg.encoder_channels;
    spec.projection_hidden = cfg.projection_hidden;
    spec.projection_dim = cfg.projection_dim;
    spec.classes = classes;
    return spec;
}

namespace detail {

inline std::string loss_csv(const std::vector<double>& train, const std::vector<double>& test) {
    std::string out = "epoch,train-loss,test-loss\n";
    char buf[96];
    for (std::size_t e = 0; e < train.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g\n", e + 1, train[e], test[e]);
        out += buf;
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::size_t argmax(const double* row, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

/// Mean contrastive loss over one seeded pass; degenerate batches are skipped
/// with a warning. Returns the sample-weighted mean (0 if nothing counted).
inline double contrastive_epoch_loss(const Model& m, const LabeledDataset& ds,
                                     const LossSpec& loss, std::size_t batch_size,
                                     std::uint64_t seed, std::vector<std::string>* warnings) {
    BatchIterator it(ds, batch_size, seed);
    Batch batch;
    double total = 0.0;
    std::size_t counted = 0;
    while (it.next(batch)) {
        if (batch.labels.size() < 2) continue;
        const Tensor emb = forward_only(m.encoder, batch.images);
        const RowNormalized z = normalize_rows(forward_only(m.projection, emb));
        try {
            const LossResult r = contrastive_loss(loss, z.output, batch.labels);
            total += r.value * static_cast<double>(batch.labels.size());
            counted += batch.labels.size();
        } catch (const std::invalid_argument& e) {
            if (warnings) warnings->push_back(std::string("test batch skipped: ") + e.what());
        }
    }
    return counted ? total / static_cast<double>(counted) : 0.0;
}

}  // namespace detail

// -------- pretraining --------

struct PretrainResult {
    std::string checkpoint_path;
    std::vector<double> train_losses, test_losses;
    std::vector<std::string> warnings;
};

/// Contrastive pretraining of encoder + projection head. Writes the
/// pretrained checkpoint and a per-epoch train/test loss CSV.
inline PretrainResult pretrain(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.loss.kind == LossKind::CrossEntropy)
        throw std::invalid_argument("pretrain: loss-spec must name a contrastive loss");
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out);

    PretrainResult result;
    PreparedData data = prepare_data(cfg);
    result.warnings = data.warnings;

    Model model = init(model_spec_for(cfg, data.train.classes()), cfg.seed);
    ModelOptimizer opt;
    opt.options = cfg.optimizer;

    AugmentPolicy policy;
    policy.target_height = cfg.resolution;
    policy.target_width = cfg.resolution;

    for (std::size_t epoch = 1; epoch <= cfg.epochs_pretrain; ++epoch) {
        Rng aug_rng(derive_seed(cfg.seed, 11, epoch));
        BatchIterator it(data.train, cfg.batch_size, derive_seed(cfg.seed, 10, epoch));
        Batch batch;
        double train_total = 0.0;
        std::size_t train_counted = 0;
        while (it.next(batch)) {
            if (batch.labels.size() < 2) {
                result.warnings.push_back("pretrain: singleton batch skipped in epoch " +
                                          std::to_string(epoch));
                continue;
            }
            Tensor images = batch.images;
            for (std::size_t i = 0; i < batch.labels.size(); ++i) {
                Tensor img({3, cfg.resolution, cfg.resolution});
                const std::size_t stride = img.size();
                std::copy(batch.images.data() + i * stride,
                          batch.images.data() + (i + 1) * stride, img.data());
                const Tensor aug = augment(img, policy, aug_rng);
                std::copy(aug.data(), aug.data() + stride, images.data() + i * stride);
            }

            ForwardResult enc = forward(model.encoder, images);
            ForwardResult proj = forward(model.projection, enc.output);
            RowNormalized z = normalize_rows(proj.output);
            if (!z.zero_rows.empty())
                result.warnings.push_back("pretrain: zero projection row in epoch " +
                                          std::to_string(epoch));
            LossResult loss;
            try {
                loss = contrastive_loss(cfg.loss, z.output, batch.labels);
            } catch (const std::invalid_argument& e) {
                result.warnings.push_back(std::string("pretrain: batch skipped: ") + e.what());
                continue;
            }
            for (const std::string& w : loss.warnings)
                result.warnings.push_back("pretrain epoch " + std::to_string(epoch) + ": " + w);
            train_total += loss.value * static_cast<double>(batch.labels.size());
            train_counted += batch.labels.size();

            const Tensor pre_grad = normalize_rows_backward(z, loss.grad);
            Gradients proj_grads = backward(proj.tape, pre_grad);
            Gradients enc_grads = backward(enc.tape, proj_grads.input_grad);
            opt.step_contrastive(model, enc_grads, proj_grads);
        }
        result.train_losses.push_back(
            train_counted ? train_total / static_cast<double>(train_counted) : 0.0);
        result.test_losses.push_back(detail::contrastive_epoch_loss(
            model, data.test, cfg.loss, cfg.batch_size, derive_seed(cfg.seed, 12, epoch),
            &result.warnings));
    }

    result.checkpoint_path = (fs::path(cfg.out) / "pretrained.ckpt").string();
    save_checkpoint(model, result.checkpoint_path);
    detail::write_text_file((fs::path(cfg.out) / "pretrain-loss.csv").string(),
                            detail::loss_csv(result.train_losses, result.test_losses));
    return result;
}

// -------- fine-tuning --------

struct FinetuneResult {
    std::string checkpoint_path;
    ClassificationReport test_report;
    Tensor confusion;  // [K,K] on the test split
    std::vector<double> train_losses, test_losses;
    std::vector<double> class_weights;  // as applied (empty = unweighted)
    std::vector<std::string> warnings;
};

namespace detail {

/// Frozen-encoder features for a dataset, computed once in dataset order.
inline Tensor embedding_cache(const Model& m, const LabeledDataset& ds, std::size_t batch_size) {
    const std::size_t n = ds.size(), d = m.spec.embedding_dim();
    Tensor all({n, d});
    const Tensor& first = ds.images.front();
    const std::size_t stride = first.size();
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t b = std::min(batch_size, n - start);
        Tensor batch({b, first.dim(0), first.dim(1), first.dim(2)});
        for (std::size_t i = 0; i < b; ++i)
            std::copy(ds.images[start + i].data(), ds.images[start + i].data() + stride,
                      batch.data() + i * stride);
        const Tensor emb = embed(m, batch);
        std::copy(emb.data(), emb.data() + emb.size(), all.data() + start * d);
    }
    return all;
}

inline double cross_entropy_on(const Model& m, const Tensor& embeddings,
                               const std::vector<std::size_t>& labels,
                               const std::vector<double>& weights) {
    const Tensor probs = classify(m, embeddings);
    return weighted_cross_entropy(probs, labels, weights).value;
}

}  // namespace detail

/// Frozen-encoder classifier training with optional cost-sensitive weights.
/// The encoder never changes, so per-image embeddings are computed once.
inline FinetuneResult finetune(const RunConfig& cfg, const std::string& checkpoint_path) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out);

    Model model = load_checkpoint(checkpoint_path);
    if (model.stage != Stage::Pretrained)
        throw std::runtime_error("finetune: checkpoint '" + checkpoint_path + "' is " +
                                 stage_name(model.stage) + ", expected pretrained");

    FinetuneResult result;
    PreparedData data = prepare_data(cfg);
    result.warnings = data.warnings;
    if (data.train.classes() != model.spec.classes)
        throw std::runtime_error("finetune: dataset has " + std::to_string(data.train.classes()) +
                                 " classes but checkpoint expects " +
                                 std::to_string(model.spec.classes));

    freeze_encoder(model);
    const Tensor train_emb = detail::embedding_cache(model, data.train, cfg.batch_size);
    const Tensor test_emb = detail::embedding_cache(model, data.test, cfg.batch_size);
    const std::size_t d = model.spec.embedding_dim();

    if (cfg.cost_sensitive) {
        if (cfg.cost_mode == CostMode::Explicit) {
            if (cfg.cost_weights.size() != data.train.classes())
                throw std::invalid_argument("finetune: cost-weights length mismatch");
            result.class_weights = cfg.cost_weights;
        } else {
            result.class_weights =
                compute_class_weights(data.train.class_counts(), cfg.cost_mode).values;
        }
    }

    ModelOptimizer opt;
    opt.options = cfg.optimizer;
    const std::size_t n_train = data.train.size();

    for (std::size_t epoch = 1; epoch <= cfg.epochs_finetune; ++epoch) {
        std::vector<std::size_t> order(n_train);
        for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
        Rng rng(derive_seed(cfg.seed, 20, epoch));
        shuffle(order, rng);

        double train_total = 0.0;
        std::size_t counted = 0;
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::size_t b = std::min(cfg.batch_size, n_train - start);
            Tensor emb({b, d});
            std::vector<std::size_t> labels(b);
            for (std::size_t i = 0; i < b; ++i) {
                const std::size_t src = order[start + i];
                std::copy(train_emb.data() + src * d, train_emb.data() + (src + 1) * d,
                          emb.data() + i * d);
                labels[i] = data.train.labels[src];
            }
            ForwardResult cls = forward(model.classifier, emb);
            LossResult loss = weighted_cross_entropy(cls.output, labels, result.class_weights);
            for (const std::string& w : loss.warnings)
                result.warnings.push_back("finetune epoch " + std::to_string(epoch) + ": " + w);
            train_total += loss.value * static_cast<double>(b);
            counted += b;
            // the loss gradient is w.r.t. logits, so the reverse pass starts
            // below the softmax layer
            Gradients grads = backward_from(cls.tape, loss.grad, 0);
            opt.step_classifier(model, grads);
        }
        result.train_losses.push_back(counted ? train_total / static_cast<double>(counted) : 0.0);
        result.test_losses.push_back(detail::cross_entropy_on(
            model, test_emb, data.test.labels, result.class_weights));
    }

    model.stage = Stage::Finetuned;
    result.checkpoint_path = (fs::path(cfg.out) / "finetuned.ckpt").string();
    save_checkpoint(model, result.checkpoint_path);
    detail::write_text_file((fs::path(cfg.out) / "finetune-loss.csv").string(),
                            detail::loss_csv(result.train_losses, result.test_losses));

    const Tensor probs = classify(model, test_emb);
    std::vector<std::size_t> predicted(data.test.size());
    for (std::size_t i = 0; i < data.test.size(); ++i)
        predicted[i] = detail::argmax(probs.data() + i * model.spec.classes, model.spec.classes);
    result.confusion = confusion_matrix(data.test.labels, predicted, model.spec.classes);
    result.test_report = report(result.confusion, data.test.class_names);
    detail::write_text_file((fs::path(cfg.out) / "report.txt").string(),
                            render_report_text(result.test_report));
    detail::write_text_file((fs::path(cfg.out) / "report.csv").string(),
                            render_report_csv(result.test_report));
    detail::write_text_file((fs::path(cfg.out) / "confusion.csv").string(),
                            render_confusion_csv(result.confusion, data.test.class_names));
    return result;
}

// -------- evaluation --------

struct EvaluateResult {
    ClassificationReport report;
    Tensor confusion;
    std::vector<std::size_t> predictions;
};

/// Classify a labeled dataset with a fine-tuned checkpoint and write the
/// report and confusion matrix files.
inline EvaluateResult evaluate(const std::string& checkpoint_path, const LabeledDataset& ds,
                               const std::string& out_dir, std::size_t batch_size = 32) {
    Model model = load_checkpoint(checkpoint_path);
    if (model.stage != Stage::Finetuned)
        throw std::runtime_error("evaluate: checkpoint '" + checkpoint_path + "' is " +
                                 stage_name(model.stage) + ", expected finetuned");
    ds.validate();
    if (ds.classes() != model.spec.classes)
        throw std::runtime_error("evaluate: dataset has " + std::to_string(ds.classes()) +
                                 " classes but checkpoint expects " +
                                 std::to_string(model.spec.classes));
    if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");

    LabeledDataset sized = ds;
    for (Tensor& img : sized.images)
        if (img.dim(1) != model.spec.input_height || img.dim(2) != model.spec.input_width)
            img = resize_bilinear(img, model.spec.input_height, model.spec.input_width);

    EvaluateResult result;
    const Tensor emb = detail::embedding_cache(model, sized, batch_size);
    const Tensor probs = classify(model, emb);
    result.predictions.resize(sized.size());
    for (std::size_t i = 0; i < sized.size(); ++i)
        result.predictions[i] =
            detail::argmax(probs.data() + i * model.spec.classes, model.spec.classes);
    result.confusion = confusion_matrix(sized.labels, result.predictions, model.spec.classes);
    result.report = report(result.confusion, sized.class_names);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    detail::write_text_file((fs::path(out_dir) / "report.txt").string(),
                            render_report_text(result.report));
    detail::write_text_file((fs::path(out_dir) / "report.csv").string(),
                            render_report_csv(result.report));
    detail::write_text_file((fs::path(out_dir) / "confusion.csv").string(),
                            render_confusion_csv(result.confusion, sized.class_names));
    return result;
}

// -------- explanation --------

struct ExplainResult {
    Heatmap heatmap;
    std::size_t predicted_class = 0;
    double predicted_probability = 0.0;
    std::string heatmap_path, overlay_path, record_path;
};

/// Explain one image with a fine-tuned checkpoint: heatmap PGM, overlay PPM,
/// and a JSON prediction record.
inline ExplainResult explain(const std::string& checkpoint_path, const std::string& image_path,
                             const CamRequest& request, const std::string& out_dir) {
    Model model = load_checkpoint(checkpoint_path);
    if (model.stage != Stage::Finetuned)
        throw std::runtime_error("explain: checkpoint '" + checkpoint_path + "' is " +
                                 stage_name(model.stage) + ", expected finetuned");

    Tensor image = read_ppm(image_path);
    if (image.dim(1) != model.spec.input_height || image.dim(2) != model.spec.input_width)
        image = resize_bilinear(image, model.spec.input_height, model.spec.input_width);

    ExplainResult result;
    result.heatmap = compute_cam(model, image, request);

    Tensor batch({std::size_t{1}, 3, model.spec.input_height, model.spec.input_width});
    std::copy(image.data(), image.data() + image.size(), batch.data());
    const Tensor probs = classify(model, embed(model, batch));
    result.predicted_class = detail::argmax(probs.data(), model.spec.classes);
    result.predicted_probability = probs[result.predicted_class];

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string tag = cam_method_name(request.method);
    result.heatmap_path = (fs::path(out_dir) / ("heatmap-" + tag + ".pgm")).string();
    result.overlay_path = (fs::path(out_dir) / ("overlay-" + tag + ".ppm")).string();
    result.record_path = (fs::path(out_dir) / ("explain-" + tag + ".json")).string();
    write_pgm(result.heatmap.values, result.heatmap_path);
    write_ppm(overlay(image, result.heatmap.values), result.overlay_path);

    nlohmann::json record;
    record["method"] = tag;
    record["layer"] = result.heatmap.layer;
    record["target-class"] = result.heatmap.target_class;
    record["predicted-class"] = result.predicted_class;
    record["predicted-probability"] = result.predicted_probability;
    record["empty-explanation"] = result.heatmap.empty_explanation;
    detail::write_text_file(result.record_path, record.dump(2) + "\n");
    return result;
}

// -------- experiments --------

struct LossComparisonRow {
    LossKind kind;
    double initial_train_loss = 0.0, final_train_loss = 0.0;
};

struct LossComparisonResult {
    std::vector<LossComparisonRow> rows;
    std::vector<std::string> warnings;
};

/// Pretrain once per contrastive objective with a shared seed and dataset;
/// each run leaves its loss CSV and checkpoint under out/<loss-name>/.
inline LossComparisonResult experiment_losses(const RunConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out);

    LossComparisonResult result;
    std::string summary = "loss,initial-train-loss,final-train-loss\n";
    for (LossKind kind : {LossKind::MaxMargin, LossKind::TripletMargin, LossKind::NPairs,
                          LossKind::NTXent}) {
        RunConfig sub = cfg;
        sub.loss = LossSpec::for_kind(kind);
        sub.out = (fs::path(cfg.out) / loss_kind_name(kind)).string();
        PretrainResult run = pretrain(sub);
        for (const std::string& w : run.warnings)
            result.warnings.push_back(std::string(loss_kind_name(kind)) + ": " + w);
        LossComparisonRow row;
        row.kind = kind;
        row.initial_train_loss = run.train_losses.front();
        row.final_train_loss = run.train_losses.back();
        result.rows.push_back(row);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g\n", loss_kind_name(kind),
                      row.initial_train_loss, row.final_train_loss);
        summary += buf;
    }
    detail::write_text_file((fs::path(cfg.out) / "summary.csv").string(), summary);
    return result;
}

struct CostComparisonResult {
    ClassificationReport unweighted, weighted;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string cost_comparison_csv(const ClassificationReport& u,
                                       const ClassificationReport& w) {
    std::string out =
        "class,precision-unweighted,recall-unweighted,f1-unweighted,"
        "precision-weighted,recall-weighted,f1-weighted,support\n";
    for (std::size_t c = 0; c < u.class_names.size(); ++c)
        out += u.class_names[c] + "," + fixed6(u.precision[c]) + "," + fixed6(u.recall[c]) +
               "," + fixed6(u.f1[c]) + "," + fixed6(w.precision[c]) + "," +
               fixed6(w.recall[c]) + "," + fixed6(w.f1[c]) + "," +
               std::to_string(u.support[c]) + "\n";
    out += "macro avg," + fixed6(u.macro_precision) + "," + fixed6(u.macro_recall) + "," +
           fixed6(u.macro_f1) + "," + fixed6(w.macro_precision) + "," +
           fixed6(w.macro_recall) + "," + fixed6(w.macro_f1) + "," + std::to_string(u.total) +
           "\n";
    out += "weighted avg," + fixed6(u.weighted_precision) + "," + fixed6(u.weighted_recall) +
           "," + fixed6(u.weighted_f1) + "," + fixed6(w.weighted_precision) + "," +
           fixed6(w.weighted_recall) + "," + fixed6(w.weighted_f1) + "," +
           std::to_string(u.total) + "\n";
    out += "accuracy," + fixed6(u.accuracy) + ",,," + fixed6(w.accuracy) + ",,," +
           std::to_string(u.total) + "\n";
    return out;
}

inline std::string cost_comparison_text(const ClassificationReport& u,
                                        const ClassificationReport& w) {
    std::size_t name_w = 12;
    for (const std::string& n : u.class_names) name_w = std::max(name_w, n.size());
    const std::size_t col = 8;
    std::string out;
    out += pad_left("", name_w) + pad_left("| without weights", 3 * col + 2) +
           pad_left("| with weights", 3 * col + 2) + "\n";
    out += pad_left("", name_w) + " |" + pad_left("prec", col) + pad_left("rec", col) +
           pad_left("f1", col) + " |" + pad_left("prec", col) + pad_left("rec", col) +
           pad_left("f1", col) + "\n";
    for (std::size_t c = 0; c < u.class_names.size(); ++c)
        out += pad_left(u.class_names[c], name_w) + " |" + pad_left(fixed2(u.precision[c]), col) +
               pad_left(fixed2(u.recall[c]), col) + pad_left(fixed2(u.f1[c]), col) + " |" +
               pad_left(fixed2(w.precision[c]), col) + pad_left(fixed2(w.recall[c]), col) +
               pad_left(fixed2(w.f1[c]), col) + "\n";
    out += pad_left("macro avg", name_w) + " |" + pad_left(fixed2(u.macro_precision), col) +
           pad_left(fixed2(u.macro_recall), col) + pad_left(fixed2(u.macro_f1), col) + " |" +
           pad_left(fixed2(w.macro_precision), col) + pad_left(fixed2(w.macro_recall), col) +
           pad_left(fixed2(w.macro_f1), col) + "\n";
    out += pad_left("weighted avg", name_w) + " |" +
           pad_left(fixed2(u.weighted_precision), col) +
           pad_left(fixed2(u.weighted_recall), col) + pad_left(fixed2(u.weighted_f1), col) +
           " |" + pad_left(fixed2(w.weighted_precision), col) +
           pad_left(fixed2(w.weighted_recall), col) + pad_left(fixed2(w.weighted_f1), col) +
           "\n";
    out += pad_left("accuracy", name_w) + " |" + pad_left(fixed2(u.accuracy), 3 * col) + " |" +
           pad_left(fixed2(w.accuracy), 3 * col) + "\n";
    return out;
}

}  // namespace detail

/// One pretraining run, then paired fine-tuning with and without balanced
/// class weights; emits a side-by-side report.
inline CostComparisonResult experiment_cost(const RunConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out);

    RunConfig pre = cfg;
    pre.out = (fs::path(cfg.out) / "pretrain").string();
    PretrainResult pretrained = pretrain(pre);

    RunConfig plain = cfg;
    plain.cost_sensitive = false;
    plain.out = (fs::path(cfg.out) / "unweighted").string();
    RunConfig weighted = cfg;
    weighted.cost_sensitive = true;
    weighted.cost_mode = cfg.cost_mode == CostMode::Explicit ? CostMode::Explicit
                                                             : CostMode::Balanced;
    weighted.out = (fs::path(cfg.out) / "weighted").string();

    CostComparisonResult result;
    result.warnings = pretrained.warnings;
    FinetuneResult u = finetune(plain, pretrained.checkpoint_path);
    FinetuneResult w = finetune(weighted, pretrained.checkpoint_path);
    for (const std::string& s : u.warnings) result.warnings.push_back("unweighted: " + s);
    for (const std::string& s : w.warnings) result.warnings.push_back("weighted: " + s);
    result.unweighted = u.test_report;
    result.weighted = w.test_report;

    detail::write_text_file((fs::path(cfg.out) / "cost-comparison.csv").string(),
                            detail::cost_comparison_csv(result.unweighted, result.weighted));
    detail::write_text_file((fs::path(cfg.out) / "cost-comparison.txt").string(),
                            detail::cost_comparison_text(result.unweighted, result.weighted));
    return result;
}

}  // namespace sclc
