#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "run_config.hpp"

using namespace pansharp::cli;

namespace {

void add_config(CLI::App* cmd, ConfigOptions& c) {
    cmd->add_option("--config", c.config, "Run configuration file (key = value lines)");
    cmd->add_option("--set", c.overrides, "Override a config key, e.g. --set fusion.lr=1e-3");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage pansharpening: 3D residual fusion, then per-band texture transfer."};
    app.require_subcommand(1);

    SynthOptions synth;
    auto* c_synth = app.add_subcommand("synth", "Write a procedural MS/PAN scene");
    c_synth->add_option("--width", synth.width)->capture_default_str();
    c_synth->add_option("--height", synth.height)->capture_default_str();
    c_synth->add_option("--bands", synth.bands)->capture_default_str();
    c_synth->add_option("--seed", synth.seed)->capture_default_str();
    c_synth->add_option("--out-dir", synth.out_dir)->required();

    DegradeOptions degrade;
    auto* c_degrade = app.add_subcommand("degrade", "Build a reduced-resolution triple from co-registered MS and PAN");
    c_degrade->add_option("--ms", degrade.ms)->required();
    c_degrade->add_option("--pan", degrade.pan)->required();
    c_degrade->add_option("--scale", degrade.scale);
    c_degrade->add_option("--out-dir", degrade.out_dir)->required();
    add_config(c_degrade, degrade.config);

    PatchOptions patch;
    auto* c_patch = app.add_subcommand("patch", "Cut patch pairs and write a split manifest");
    c_patch->add_option("--ms-lr", patch.ms_lr)->required();
    c_patch->add_option("--pan", patch.pan)->required();
    c_patch->add_option("--gt", patch.gt)->required();
    c_patch->add_option("--out", patch.out, "Manifest path")->required();
    c_patch->add_option("--counts", patch.counts, "train,val,test");
    c_patch->add_option("--seed", patch.seed);
    c_patch->add_option("--size", patch.size, "LR patch edge");
    c_patch->add_option("--stride", patch.stride);
    c_patch->add_option("--random", patch.random, "Number of random offsets instead of a grid");
    add_config(c_patch, patch.config);

    SplitOptions split;
    auto* c_split = app.add_subcommand("split", "Re-tag the patches of a manifest");
    c_split->add_option("--manifest", split.manifest)->required();
    c_split->add_option("--counts", split.counts, "train,val,test")->required();
    c_split->add_option("--seed", split.seed)->capture_default_str();
    c_split->add_option("--out", split.out, "Defaults to rewriting the manifest");

    TrainOptions fusion;
    auto* c_fusion = app.add_subcommand("train-fusion", "Train Step 1");
    c_fusion->add_option("--manifest", fusion.manifest)->required();
    c_fusion->add_option("--out-weights", fusion.out_weights)->required();
    c_fusion->add_option("--log", fusion.log, "epoch,train_l1,val_l1 lines");
    c_fusion->add_flag("--quiet", fusion.quiet);
    add_config(c_fusion, fusion.config);

    TrainOptions texture;
    auto* c_texture = app.add_subcommand("train-texture", "Train Step 2 on top of frozen Step-1 weights");
    c_texture->add_option("--manifest", texture.manifest)->required();
    c_texture->add_option("--fusion-weights", texture.fusion_weights);
    c_texture->add_option("--out-weights", texture.out_weights)->required();
    c_texture->add_option("--log", texture.log, "epoch,train_l1,val_l1 lines");
    c_texture->add_flag("--quiet", texture.quiet);
    add_config(c_texture, texture.config);

    RunOptions run;
    auto* c_run = app.add_subcommand("run", "Pansharpen an LR MS volume with its PAN image");
    c_run->add_option("--ms-lr", run.ms_lr)->required();
    c_run->add_option("--pan", run.pan)->required();
    c_run->add_option("--fusion-weights", run.fusion_weights)->required();
    c_run->add_option("--texture-weights", run.texture_weights);
    c_run->add_option("--out", run.out)->required();
    c_run->add_option("--preview", run.preview, "PPM/PGM preview path");
    c_run->add_option("--preview-bands", run.preview_bands)->capture_default_str();

    EvalOptions eval;
    auto* c_eval = app.add_subcommand("eval", "Quality metrics of a prediction against ground truth");
    c_eval->add_option("--pred", eval.pred)->required();
    c_eval->add_option("--gt", eval.gt)->required();
    c_eval->add_option("--scale", eval.scale)->capture_default_str();
    c_eval->add_option("--time", eval.time_s, "Prediction time to record, seconds");
    c_eval->add_option("--out", eval.out, "Also write the report here");

    SelfcheckOptions check;
    auto* c_check = app.add_subcommand("selfcheck", "Gradient checks, metric oracles, attention invariants");
    c_check->add_option("--seeds", check.seeds)->capture_default_str();
    c_check->add_flag("--inject-gradient-fault", check.inject_gradient_fault,
                      "Debug: corrupt convolution gradients so the checks must fail");

    ExportOptions exp;
    auto* c_export = app.add_subcommand("export", "Write a band as PGM or three bands as PPM");
    c_export->add_option("--in", exp.in)->required();
    c_export->add_option("--out", exp.out)->required();
    c_export->add_option("--band", exp.band)->capture_default_str();
    c_export->add_option("--bits", exp.bits)->capture_default_str();
    c_export->add_option("--rgb", exp.rgb, "r,g,b band indices");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    auto& out = std::cout;
    return guarded(
        [&] {
            if (*c_synth) return cmd_synth(synth, out);
            if (*c_degrade) return cmd_degrade(degrade, out);
            if (*c_patch) return cmd_patch(patch, out);
            if (*c_split) return cmd_split(split, out);
            if (*c_fusion) return cmd_train_fusion(fusion, out);
            if (*c_texture) return cmd_train_texture(texture, out);
            if (*c_run) return cmd_run(run, out);
            if (*c_eval) return cmd_eval(eval, out);
            if (*c_check) return cmd_selfcheck(check, out);
            return cmd_export(exp, out);
        },
        std::cerr);
}
