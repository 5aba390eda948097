#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jsr/epitome/epitome.h"
#include "jsr/image/luma_image.h"
#include "jsr/joint/joint_sr.h"
#include "jsr/ranking/bradley_terry.h"
#include "jsr/sparse/dictionary.h"

namespace jsr::cli {

enum class Mode { kBicubic, kCsc, kEpi, kNnLse, kJoint, kJointFixed };

Mode ParseMode(const std::string& name);
std::string ModeName(Mode mode);
bool ModeNeedsDictionary(Mode mode);

// Fixed global weights of the joint-fixed sweep.
inline const std::vector<double> kFixedOmegaSweep = {0.1, 1.0, 3.0, 5.0, 10.0};

struct RunConfig {
  Mode mode = Mode::kJoint;
  int factor = 3;
  std::string input;
  std::string output;
  std::string dictionary_path;
  std::string epitome_path;      // optional pre-trained epitome
  std::string weight_map_path;   // PNG; the CSV goes next to it
  std::string trace_path;
  double fixed_omega = 1.0;
  bool shd = false;
  std::uint64_t seed = 1;
  int threads = 0;
  joint::JointConfig joint;

  // Joint settings with the SHD preset, seed and thread count applied.
  joint::JointConfig EffectiveJoint() const;
  // Throws ConfigError.
  void Validate() const;
};

struct UpscaleResult {
  image::LumaImage luma;                    // clamped to [0, 1]
  std::optional<joint::JointResult> joint;  // joint and joint-fixed modes
};

// Runs the selected pipeline on a luminance plane. `dict` is required for
// csc/joint/joint-fixed; `epitome` is optional.
UpscaleResult UpscaleLuma(const image::LumaImage& lr, const RunConfig& config,
                          const sparse::DictionaryPair* dict, const epitome::Epitome* epitome);

void WriteWeightMap(const joint::WeightMap& map, int height, int width, const std::string& png_path);
void WriteTrace(const std::vector<double>& objective, const std::string& path);
// "<stem>.csv" beside a PNG path.
std::string WeightMapCsvPath(const std::string& png_path);

// upscale: decode, run on luma, bicubic chroma, write.
void CmdUpscale(const RunConfig& config, std::ostream& log);

struct TrainDictOptions {
  std::string corpus;
  std::string output;
  int factor = 3;
  int patch_size = 5;
  int stride = 1;
  double min_std = 0.01;
  std::size_t max_pairs = 20000;
  sparse::DictionaryTrainingConfig training;
};
void CmdTrainDict(const TrainDictOptions& options, std::ostream& log);

struct TrainEpitomeOptions {
  std::string input;
  std::string output;
  int factor = 3;
  int patch_size = 5;  // LR patch size n; the epitome uses n * factor
  epitome::EpitomeConfig epitome;
};
void CmdTrainEpitome(const TrainEpitomeOptions& options, std::ostream& log);

struct ManifestEntry {
  std::string ground_truth;
  std::string input;  // empty: D(ground truth)
  int factor = 0;
};

// CSV with header ground_truth,input,factor; input and factor may be empty.
std::vector<ManifestEntry> ParseManifest(const std::string& text, int default_factor,
                                         const std::string& base_dir = "");
std::vector<ManifestEntry> ReadManifest(const std::string& path, int default_factor);

struct EvaluationRow {
  std::string image;
  std::string method;
  int factor = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::string status = "ok";
};

struct EvaluateOptions {
  std::vector<Mode> modes;
  RunConfig base;   // factor, dictionary, joint settings
  int shave = -1;   // -1: the row's factor
};

// One row per (image, mode) in manifest order; joint-fixed adds a row per
// swept weight. Failures are recorded in the row status.
std::vector<EvaluationRow> Evaluate(const std::vector<ManifestEntry>& entries,
                                    const EvaluateOptions& options,
                                    const sparse::DictionaryPair* dict);
void WriteEvaluationCsv(const std::vector<EvaluationRow>& rows, std::ostream& out);
void PrintEvaluationTable(const std::vector<EvaluationRow>& rows, std::ostream& out);

// Scores CSV (label,score) and a ranked text bar chart.
void WriteScoresCsv(const ranking::WinningMatrix& w, const ranking::ScoreVector& s, std::ostream& out);
void PrintScoreBars(const ranking::WinningMatrix& w, const ranking::ScoreVector& s, std::ostream& out);
int FindLabel(const ranking::WinningMatrix& w, const std::string& label);

// Entry point of the jsr executable; returns the process exit status.
int Run(int argc, char** argv);

}  // namespace jsr::cli
