#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "jsr/cli/commands.h"
#include "jsr/common/errors.h"
#include "jsr/image/image_io.h"
#include "jsr/metrics/quality.h"
#include "jsr/sparse/l1_solver.h"

namespace jsr::cli {
namespace {

void AddJointOptions(CLI::App& cmd, RunConfig& c) {
  cmd.add_option("--factor", c.factor, "Scale factor (2, 3 or 4)")->capture_default_str();
  cmd.add_option("--dict", c.dictionary_path, "Dictionary file from train-dict");
  cmd.add_flag("--shd", c.shd, "SHD preset: 25x25 patches, overlap 5, 5 iterations");
  cmd.add_option("--seed", c.seed, "Seed for epitome initialisation and sampling")->capture_default_str();
  cmd.add_option("--threads", c.threads, "Worker threads (0: JSR_THREADS, else all cores)")->capture_default_str();
  cmd.add_option("--fixed-omega", c.fixed_omega, "Global weight for joint-fixed")->capture_default_str();
  cmd.add_option("--lambda", c.joint.lambda, "L1 weight (8-bit intensity units)")->capture_default_str();
  cmd.add_option("--p", c.joint.p, "Adaptive weight sharpness")->capture_default_str();
  cmd.add_option("--iterations", c.joint.max_iterations, "Maximum outer iterations")->capture_default_str();
  cmd.add_option("--tolerance", c.joint.relative_tolerance, "Stop below this relative objective decrease")
      ->capture_default_str();
  cmd.add_option("--candidates", c.joint.candidates, "Internal candidates per patch (K)")->capture_default_str();
  cmd.add_option("--patch-size", c.joint.patch_size, "LR patch size n")->capture_default_str();
  cmd.add_option("--overlap", c.joint.overlap, "LR patch overlap")->capture_default_str();
  cmd.add_option("--nn-radius", c.joint.nn_radius, "Local search window radius")->capture_default_str();
  cmd.add_option("--epitome-iterations", c.joint.epitome.em_iterations, "EM iterations")->capture_default_str();
}

int Fail(const std::string& what, int code) {
  std::cerr << "jsr: error: " << what << "\n";
  return code;
}

}  // namespace

int Run(int argc, char** argv) {
  CLI::App app{"Joint external/internal example single-image super-resolution"};
  app.set_config("--config", "", "Read options from a TOML/INI key-value file (command line wins)");
  app.require_subcommand(1);

  RunConfig up;
  std::string mode_name = "joint";
  CLI::App* upscale = app.add_subcommand("upscale", "Upscale one image (luma SR, bicubic chroma)");
  upscale->add_option("input", up.input, "Input image (PNG, PGM, PPM)")->required();
  upscale->add_option("output", up.output, "Output image (.png, .pgm, .ppm)")->required();
  upscale->add_option("--mode", mode_name, "bicubic, csc, epi, nn-lse, joint, joint-fixed")->capture_default_str();
  upscale->add_option("--epitome", up.epitome_path, "Pre-trained epitome from train-epitome");
  upscale->add_option("--weight-map", up.weight_map_path, "Write the 1/(1+omega) map as PNG (+ CSV of omega)");
  upscale->add_option("--trace", up.trace_path, "Write the objective trace as CSV");
  AddJointOptions(*upscale, up);

  TrainDictOptions td;
  CLI::App* train_dict = app.add_subcommand("train-dict", "Train a coupled dictionary pair on HR images");
  train_dict->add_option("corpus", td.corpus, "Directory of HR training images")->required();
  train_dict->add_option("output", td.output, "Dictionary output file")->required();
  train_dict->add_option("--factor", td.factor, "Scale factor")->capture_default_str();
  train_dict->add_option("--atoms", td.training.atoms, "Dictionary size k")->capture_default_str();
  train_dict->add_option("--lambda", td.training.lambda, "L1 weight (8-bit intensity units)")->capture_default_str();
  train_dict->add_option("--epochs", td.training.epochs, "Training epochs")->capture_default_str();
  train_dict->add_option("--patch-size", td.patch_size, "LR patch size n")->capture_default_str();
  train_dict->add_option("--stride", td.stride, "LR sampling stride")->capture_default_str();
  train_dict->add_option("--max-pairs", td.max_pairs, "Random subset size when more pairs are sampled")
      ->capture_default_str();
  train_dict->add_option("--seed", td.training.seed, "Seed")->capture_default_str();
  train_dict->add_option("--threads", td.training.threads, "Worker threads (0: JSR_THREADS, else all cores)")
      ->capture_default_str();

  TrainEpitomeOptions te;
  CLI::App* train_epitome = app.add_subcommand("train-epitome", "Learn the epitome of an LR input's smoothed image");
  train_epitome->add_option("input", te.input, "LR input image")->required();
  train_epitome->add_option("output", te.output, "Epitome output file")->required();
  train_epitome->add_option("--factor", te.factor, "Scale factor the epitome will serve")->capture_default_str();
  train_epitome->add_option("--patch-size", te.patch_size, "LR patch size n (epitome patches are n*factor)")
      ->capture_default_str();
  train_epitome->add_flag("--shd", [&](std::int64_t) { te.patch_size = 25; }, "Use the SHD patch size (25)");
  train_epitome->add_option("--iterations", te.epitome.em_iterations, "EM iterations")->capture_default_str();
  train_epitome->add_option("--rows", te.epitome.rows, "Epitome rows (0: half the source)")->capture_default_str();
  train_epitome->add_option("--cols", te.epitome.cols, "Epitome columns (0: half the source)")->capture_default_str();
  train_epitome->add_option("--candidates", te.epitome.candidates, "Stored candidates per mapping")
      ->capture_default_str();
  train_epitome->add_option("--seed", te.epitome.seed, "Seed")->capture_default_str();
  train_epitome->add_option("--threads", te.epitome.threads, "Worker threads (0: JSR_THREADS, else all cores)")
      ->capture_default_str();

  std::string manifest, modes_list = "bicubic,csc,epi,joint", table_path;
  EvaluateOptions ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Run methods over a manifest and tabulate PSNR/SSIM");
  evaluate->add_option("manifest", manifest, "CSV with columns ground_truth,input,factor")->required();
  evaluate->add_option("--modes", modes_list, "Comma-separated methods")->capture_default_str();
  evaluate->add_option("--output", table_path, "Write the table as CSV");
  evaluate->add_option("--shave", ev.shave, "Border pixels excluded from metrics (-1: the factor)")
      ->capture_default_str();
  AddJointOptions(*evaluate, ev.base);

  std::string metric_a, metric_b;
  int metric_shave = 0;
  CLI::App* metrics_cmd = app.add_subcommand("metrics", "PSNR and SSIM between two images (luma)");
  metrics_cmd->add_option("reference", metric_a, "Reference image")->required();
  metrics_cmd->add_option("test", metric_b, "Test image")->required();
  metrics_cmd->add_option("--shave", metric_shave, "Border pixels excluded per side")->capture_default_str();

  std::string bt_path, bt_anchor, bt_out;
  CLI::App* bt = app.add_subcommand("bt-rank", "Fit Bradley-Terry scores to a winning matrix CSV");
  bt->add_option("matrix", bt_path, "CSV: header of labels, then m rows of counts")->required();
  bt->add_option("--anchor", bt_anchor, "Label whose score is fixed to 1 (default: first label)");
  bt->add_option("--output", bt_out, "Write scores as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (upscale->parsed()) {
      up.mode = ParseMode(mode_name);
      CmdUpscale(up, std::cout);
    } else if (train_dict->parsed()) {
      CmdTrainDict(td, std::cout);
    } else if (train_epitome->parsed()) {
      CmdTrainEpitome(te, std::cout);
    } else if (evaluate->parsed()) {
      std::stringstream list(modes_list);
      std::string item;
      while (std::getline(list, item, ',')) {
        if (!item.empty()) ev.modes.push_back(ParseMode(item));
      }
      if (ev.modes.empty()) throw ConfigError("--modes is empty");
      for (Mode m : ev.modes) {
        if (ModeNeedsDictionary(m) && ev.base.dictionary_path.empty()) {
          throw ConfigError("mode " + ModeName(m) + " requires --dict");
        }
      }
      ev.base.mode = ev.modes.front();
      ev.base.Validate();
      std::optional<sparse::DictionaryPair> dict;
      if (!ev.base.dictionary_path.empty()) dict = sparse::LoadDictionary(ev.base.dictionary_path);
      const auto entries = ReadManifest(manifest, ev.base.factor);
      const auto rows = Evaluate(entries, ev, dict ? &*dict : nullptr);
      PrintEvaluationTable(rows, std::cout);
      if (!table_path.empty()) {
        std::ofstream out(table_path);
        WriteEvaluationCsv(rows, out);
        if (!out) throw FormatError("cannot write " + table_path);
      }
      for (const EvaluationRow& r : rows) {
        if (r.status != "ok") return Fail("some rows failed (see status column)", 1);
      }
    } else if (metrics_cmd->parsed()) {
      const image::LumaImage a = image::ReadLuma(metric_a);
      const image::LumaImage b = image::ReadLuma(metric_b);
      const metrics::MetricReport r = metrics::Evaluate(a, b, metric_shave);
      std::cout << "psnr " << metrics::FormatPsnr(r.psnr) << "\nssim " << r.ssim << "\nshave " << r.border_shave
                << "\n";
    } else if (bt->parsed()) {
      const ranking::WinningMatrix w = ranking::ReadWinningMatrixCsv(bt_path);
      const int anchor = bt_anchor.empty() ? 0 : FindLabel(w, bt_anchor);
      const ranking::ScoreVector s = ranking::FitBradleyTerry(w, anchor);
      PrintScoreBars(w, s, std::cout);
      if (!bt_out.empty()) {
        std::ofstream out(bt_out);
        WriteScoresCsv(w, s, out);
        if (!out) throw FormatError("cannot write " + bt_out);
      }
    }
  } catch (const ConfigError& e) {
    return Fail(e.what(), 2);
  } catch (const std::exception& e) {
    return Fail(e.what(), 1);
  }
  return 0;
}

}  // namespace jsr::cli
