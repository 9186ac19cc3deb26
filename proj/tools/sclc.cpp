// Command-line front end: dataset synthesis, contrastive pretraining,
// cost-sensitive fine-tuning, evaluation, saliency explanation, and the two
// comparison experiments.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sclc/sclc.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "random seed (overrides config)");
    cmd->add_option("--out", args.out, "output directory (overrides config)");
}

sclc::RunConfig resolve_config(const CommonArgs& args) {
    sclc::RunConfig cfg;
    if (!args.config_path.empty()) cfg = sclc::load_run_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.out) cfg.out = *args.out;
    cfg.validate();
    return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"supervised-contrastive image classification workbench"};
    app.require_subcommand(1);

    CommonArgs synth_args, pre_args, fine_args, eval_args, explain_args, exl_args, exc_args;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic shape dataset");
    add_common(synth, synth_args);

    CLI::App* pre = app.add_subcommand("pretrain", "contrastive pretraining run");
    add_common(pre, pre_args);

    CLI::App* fine = app.add_subcommand("finetune", "frozen-encoder classifier training");
    add_common(fine, fine_args);
    std::string fine_ckpt;
    fine->add_option("--checkpoint", fine_ckpt, "pretrained checkpoint")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* eval = app.add_subcommand("evaluate", "classification report for a checkpoint");
    add_common(eval, eval_args);
    std::string eval_ckpt, eval_data;
    eval->add_option("--checkpoint", eval_ckpt, "finetuned checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--data", eval_data,
                     "folder-per-class PPM directory (default: config test split)")
        ->check(CLI::ExistingDirectory);

    CLI::App* expl = app.add_subcommand("explain", "saliency heatmap for one image");
    add_common(expl, explain_args);
    std::string expl_ckpt, expl_image, expl_method = "gradcam";
    std::int64_t expl_layer = -1, expl_class = -1;
    std::size_t expl_budget = 16;
    expl->add_option("--checkpoint", expl_ckpt, "finetuned checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    expl->add_option("--image", expl_image, "input PPM image")
        ->required()
        ->check(CLI::ExistingFile);
    expl->add_option("--method", expl_method,
                     "gradcam | gradcam++ | scorecam-fast | layercam");
    expl->add_option("--layer", expl_layer, "encoder conv layer id (default: last)");
    expl->add_option("--class", expl_class, "target class index (default: prediction)");
    expl->add_option("--budget", expl_budget, "scorecam channel budget");

    CLI::App* exl = app.add_subcommand("experiment-losses",
                                       "pretrain with all four contrastive losses");
    add_common(exl, exl_args);

    CLI::App* exc = app.add_subcommand("experiment-cost",
                                       "paired fine-tuning with and without class weights");
    add_common(exc, exc_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            sclc::RunConfig cfg = resolve_config(synth_args);
            sclc::PreparedData data = sclc::prepare_data(cfg);
            print_warnings(data.warnings);
            sclc::export_dataset(data.train, data.test, cfg.out);
            std::cout << "wrote " << data.train.size() << " train and " << data.test.size()
                      << " test images to " << cfg.out << "\n";
        } else if (pre->parsed()) {
            sclc::RunConfig cfg = resolve_config(pre_args);
            sclc::PretrainResult r = sclc::pretrain(cfg);
            print_warnings(r.warnings);
            std::printf("pretrained for %zu epochs: train loss %.6g -> %.6g\n",
                        r.train_losses.size(), r.train_losses.front(), r.train_losses.back());
            std::cout << "checkpoint: " << r.checkpoint_path << "\n";
        } else if (fine->parsed()) {
            sclc::RunConfig cfg = resolve_config(fine_args);
            sclc::FinetuneResult r = sclc::finetune(cfg, fine_ckpt);
            print_warnings(r.warnings);
            std::printf("finetuned for %zu epochs: test accuracy %.4f\n",
                        r.train_losses.size(), r.test_report.accuracy);
            std::cout << sclc::render_report_text(r.test_report);
            std::cout << "checkpoint: " << r.checkpoint_path << "\n";
        } else if (eval->parsed()) {
            sclc::RunConfig cfg = resolve_config(eval_args);
            sclc::LabeledDataset ds;
            if (!eval_data.empty()) {
                std::vector<std::string> warnings;
                ds = sclc::load_directory(eval_data, &warnings);
                print_warnings(warnings);
            } else {
                sclc::PreparedData data = sclc::prepare_data(cfg);
                print_warnings(data.warnings);
                ds = std::move(data.test);
            }
            sclc::EvaluateResult r = sclc::evaluate(eval_ckpt, ds, cfg.out, cfg.batch_size);
            std::cout << sclc::render_report_text(r.report);
        } else if (expl->parsed()) {
            sclc::RunConfig cfg = resolve_config(explain_args);
            sclc::CamRequest req;
            req.method = sclc::parse_cam_method(expl_method);
            if (expl_layer >= 0) req.layer = static_cast<std::size_t>(expl_layer);
            if (expl_class >= 0) req.target_class = static_cast<std::size_t>(expl_class);
            req.scorecam_budget = expl_budget;
            sclc::ExplainResult r = sclc::explain(expl_ckpt, expl_image, req, cfg.out);
            std::printf("predicted class %zu (p=%.4f), explained class %zu at layer %zu%s\n",
                        r.predicted_class, r.predicted_probability,
                        r.heatmap.target_class, r.heatmap.layer,
                        r.heatmap.empty_explanation ? " [empty explanation]" : "");
            std::cout << "heatmap: " << r.heatmap_path << "\noverlay: " << r.overlay_path
                      << "\nrecord:  " << r.record_path << "\n";
        } else if (exl->parsed()) {
            sclc::RunConfig cfg = resolve_config(exl_args);
            sclc::LossComparisonResult r = sclc::experiment_losses(cfg);
            print_warnings(r.warnings);
            for (const sclc::LossComparisonRow& row : r.rows)
                std::printf("%-15s train loss %.6g -> %.6g\n", sclc::loss_kind_name(row.kind),
                            row.initial_train_loss, row.final_train_loss);
        } else if (exc->parsed()) {
            sclc::RunConfig cfg = resolve_config(exc_args);
            sclc::CostComparisonResult r = sclc::experiment_cost(cfg);
            print_warnings(r.warnings);
            std::printf("accuracy %.4f -> %.4f, macro f1 %.4f -> %.4f with class weights\n",
                        r.unweighted.accuracy, r.weighted.accuracy, r.unweighted.macro_f1,
                        r.weighted.macro_f1);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
