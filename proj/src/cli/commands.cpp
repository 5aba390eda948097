#include "jsr/cli/commands.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "jsr/common/errors.h"
#include "jsr/epitome/internal_sr.h"
#include "jsr/image/color.h"
#include "jsr/image/image_io.h"
#include "jsr/image/resample.h"
#include "jsr/metrics/quality.h"
#include "jsr/sparse/coupled_coding.h"

namespace jsr::cli {
namespace fs = std::filesystem;

namespace {

struct ModeInfo {
  Mode mode;
  const char* name;
};
constexpr ModeInfo kModes[] = {{Mode::kBicubic, "bicubic"}, {Mode::kCsc, "csc"},
                               {Mode::kEpi, "epi"},         {Mode::kNnLse, "nn-lse"},
                               {Mode::kJoint, "joint"},     {Mode::kJointFixed, "joint-fixed"}};

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(Trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string FormatNumber(double v, int precision) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

image::LumaImage Finish(image::LumaImage img) {
  img.ClampToUnit();
  return img;
}

// Lazily built per-image state shared by the internal-example modes.
class ImageSession {
 public:
  ImageSession(const image::LumaImage& lr, const RunConfig& config,
               const sparse::DictionaryPair* dict, const epitome::Epitome* epitome)
      : lr_(lr), config_(config), dict_(dict), epitome_(epitome) {}

  image::LumaImage Run(Mode mode, double fixed_omega, std::optional<joint::JointResult>* joint_out) {
    const joint::JointConfig jc = config_.EffectiveJoint();
    const int f = config_.factor;
    switch (mode) {
      case Mode::kBicubic:
        return Finish(image::Upsample(lr_, f));
      case Mode::kCsc: {
        RequireDictionary();
        const joint::JointModel model(*dict_, jc);
        const image::PatchGrid grid(lr_.height(), lr_.width(), jc.patch_size, jc.overlap);
        return Finish(sparse::CoupledSparseUpscale(lr_, *dict_, grid, model.config().sparse, jc.threads).hr);
      }
      case Mode::kEpi: {
        const epitome::InternalContext& ctx = Context();
        std::vector<image::Patch> patches;
        patches.reserve(ctx.patches.size());
        for (const epitome::InternalPatch& p : ctx.patches) patches.push_back(p.transfers.front());
        const image::PatchGrid grid(lr_.height(), lr_.width(), jc.patch_size, jc.overlap);
        return Finish(image::AssemblePatches(patches, grid.Scaled(f)));
      }
      case Mode::kNnLse:
        return Finish(epitome::LocalSelfExampleUpscale(lr_, f, joint::MakeInternalConfig(jc)));
      case Mode::kJoint:
      case Mode::kJointFixed: {
        RequireDictionary();
        std::optional<double> omega;
        if (mode == Mode::kJointFixed) omega = fixed_omega;
        joint::JointResult r = joint::RunJoint(lr_, *dict_, f, jc, Context(), omega);
        image::LumaImage out = r.hr;
        if (joint_out != nullptr) *joint_out = std::move(r);
        return out;
      }
    }
    throw std::logic_error("unhandled mode");
  }

 private:
  void RequireDictionary() const {
    if (dict_ == nullptr) throw ConfigError("this mode needs a dictionary (--dict)");
  }
  const epitome::InternalContext& Context() {
    if (!context_) {
      context_ = epitome::BuildInternalContext(lr_, config_.factor,
                                               joint::MakeInternalConfig(config_.EffectiveJoint()),
                                               epitome_);
    }
    return *context_;
  }

  const image::LumaImage& lr_;
  const RunConfig& config_;
  const sparse::DictionaryPair* dict_;
  const epitome::Epitome* epitome_;
  std::optional<epitome::InternalContext> context_;
};

}  // namespace

Mode ParseMode(const std::string& name) {
  for (const ModeInfo& m : kModes) {
    if (name == m.name) return m.mode;
  }
  throw ConfigError("unknown mode '" + name + "' (expected bicubic, csc, epi, nn-lse, joint, joint-fixed)");
}

std::string ModeName(Mode mode) {
  for (const ModeInfo& m : kModes) {
    if (m.mode == mode) return m.name;
  }
  return "?";
}

bool ModeNeedsDictionary(Mode mode) {
  return mode == Mode::kCsc || mode == Mode::kJoint || mode == Mode::kJointFixed;
}

joint::JointConfig RunConfig::EffectiveJoint() const {
  joint::JointConfig c = joint;
  if (shd) {
    const joint::JointConfig preset = joint::JointConfig::ShdPreset();
    c.patch_size = preset.patch_size;
    c.overlap = preset.overlap;
    c.max_iterations = preset.max_iterations;
  }
  c.epitome.seed = seed;
  c.threads = threads;
  return c;
}

void RunConfig::Validate() const {
  if (factor < 2 || factor > 4) throw ConfigError("--factor must be 2, 3 or 4");
  if (ModeNeedsDictionary(mode) && dictionary_path.empty()) {
    throw ConfigError("mode " + ModeName(mode) + " requires --dict");
  }
  if (mode == Mode::kJointFixed && !(fixed_omega > 0.0 && std::isfinite(fixed_omega))) {
    throw ConfigError("--fixed-omega must be positive");
  }
  if ((!weight_map_path.empty() || !trace_path.empty()) && mode != Mode::kJoint &&
      mode != Mode::kJointFixed) {
    throw ConfigError("--weight-map and --trace apply to the joint modes only");
  }
  if (threads < 0) throw ConfigError("--threads must be >= 0");
  try {
    EffectiveJoint().Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

UpscaleResult UpscaleLuma(const image::LumaImage& lr, const RunConfig& config,
                          const sparse::DictionaryPair* dict, const epitome::Epitome* epitome) {
  ImageSession session(lr, config, dict, epitome);
  UpscaleResult out;
  out.luma = session.Run(config.mode, config.fixed_omega, &out.joint);
  return out;
}

std::string WeightMapCsvPath(const std::string& png_path) {
  fs::path p(png_path);
  p.replace_extension(".csv");
  return p.string();
}

void WriteWeightMap(const joint::WeightMap& map, int height, int width, const std::string& png_path) {
  image::WriteLuma(png_path, map.Render(height, width));
  std::ofstream csv(WeightMapCsvPath(png_path));
  if (!csv) throw FormatError("cannot write " + WeightMapCsvPath(png_path));
  csv << "row,col,omega,s\n";
  for (std::size_t i = 0; i < map.omega.size(); ++i) {
    csv << map.origins[i].row << ',' << map.origins[i].col << ','
        << FormatNumber(map.omega[i], 12) << ',' << FormatNumber(1.0 / (1.0 + map.omega[i]), 12) << '\n';
  }
  if (!csv) throw FormatError("cannot write " + WeightMapCsvPath(png_path));
}

void WriteTrace(const std::vector<double>& objective, const std::string& path) {
  std::ofstream csv(path);
  if (!csv) throw FormatError("cannot write " + path);
  csv << "iteration,objective\n";
  for (std::size_t i = 0; i < objective.size(); ++i) csv << i << ',' << FormatNumber(objective[i], 10) << '\n';
  if (!csv) throw FormatError("cannot write " + path);
}

void CmdUpscale(const RunConfig& config, std::ostream& log) {
  config.Validate();
  if (config.input.empty() || config.output.empty()) throw ConfigError("input and output paths are required");
  std::optional<sparse::DictionaryPair> dict;
  if (!config.dictionary_path.empty()) dict = sparse::LoadDictionary(config.dictionary_path);
  std::optional<epitome::Epitome> epi;
  if (!config.epitome_path.empty()) epi = epitome::LoadEpitome(config.epitome_path);

  const image::DecodedImage decoded = image::ReadImage(config.input);
  const image::ColorImage ycc = image::RgbToYcbcr(decoded.rgb);
  UpscaleResult result = UpscaleLuma(ycc.luma, config, dict ? &*dict : nullptr, epi ? &*epi : nullptr);

  if (decoded.grayscale) {
    image::WriteLuma(config.output, result.luma);
  } else {
    image::ColorImage hr;
    hr.luma = result.luma;
    hr.cb = image::Upsample(ycc.cb, config.factor);
    hr.cr = image::Upsample(ycc.cr, config.factor);
    image::WriteImage(config.output, image::YcbcrToRgb(hr));
  }
  log << "wrote " << config.output << " (" << result.luma.width() << "x" << result.luma.height()
      << ", mode " << ModeName(config.mode) << ")\n";
  if (result.joint) {
    log << "joint iterations " << result.joint->iterations << ", objective "
        << FormatNumber(result.joint->objective.front(), 6) << " -> "
        << FormatNumber(result.joint->objective.back(), 6) << "\n";
    if (!config.weight_map_path.empty()) {
      WriteWeightMap(result.joint->weights, result.luma.height(), result.luma.width(), config.weight_map_path);
      log << "wrote " << config.weight_map_path << " and " << WeightMapCsvPath(config.weight_map_path) << "\n";
    }
    if (!config.trace_path.empty()) {
      WriteTrace(result.joint->objective, config.trace_path);
      log << "wrote " << config.trace_path << "\n";
    }
  }
}

void CmdTrainDict(const TrainDictOptions& options, std::ostream& log) {
  image::ValidateFactor(options.factor);
  if (!fs::is_directory(options.corpus)) throw ConfigError("corpus is not a directory: " + options.corpus);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(options.corpus)) {
    const std::string ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".PNG")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .png/.pgm/.ppm images in " + options.corpus);

  std::vector<sparse::TrainingPair> pairs;
  for (const fs::path& file : files) {
    const image::LumaImage hr = image::ReadLuma(file.string());
    if (hr.height() < options.patch_size * options.factor || hr.width() < options.patch_size * options.factor) {
      log << "skipping " << file.string() << " (too small)\n";
      continue;
    }
    auto sampled = sparse::SampleTrainingPairs(hr, options.factor, options.patch_size, options.stride,
                                               options.min_std);
    pairs.insert(pairs.end(), std::make_move_iterator(sampled.begin()), std::make_move_iterator(sampled.end()));
  }
  if (pairs.empty()) {
    throw std::invalid_argument("corpus yields no textured training patches (all patches flat)");
  }
  if (pairs.size() > options.max_pairs) {
    std::mt19937_64 rng(options.training.seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    pairs.resize(options.max_pairs);
  }
  log << "training " << options.training.atoms << " atoms on " << pairs.size() << " patch pairs from "
      << files.size() << " images\n";
  const sparse::DictionaryTrainingResult r =
      sparse::TrainCoupledDictionary(pairs, options.patch_size, options.factor, options.training);
  for (std::size_t i = 0; i < r.objective.size(); ++i) {
    log << "  objective[" << i << "] = " << FormatNumber(r.objective[i], 6) << "\n";
  }
  sparse::SaveDictionary(r.dictionary, options.output);
  log << "wrote " << options.output << "\n";
}

void CmdTrainEpitome(const TrainEpitomeOptions& options, std::ostream& log) {
  image::ValidateFactor(options.factor);
  const image::LumaImage y = image::ReadLuma(options.input);
  epitome::EpitomeConfig ec = options.epitome;
  ec.patch_size = options.patch_size * options.factor;
  const epitome::EpitomeTrainingResult r = epitome::TrainEpitome(image::SmoothInput(y, options.factor), ec);
  for (std::size_t i = 0; i < r.log_likelihood.size(); ++i) {
    log << "  log-likelihood[" << i << "] = " << FormatNumber(r.log_likelihood[i], 6) << "\n";
  }
  epitome::SaveEpitome(r.epitome, options.output);
  log << "wrote " << options.output << " (" << r.epitome.rows() << "x" << r.epitome.cols() << ", patch "
      << r.epitome.patch_size << ")\n";
}

std::vector<ManifestEntry> ParseManifest(const std::string& text, int default_factor,
                                         const std::string& base_dir) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<ManifestEntry> entries;
  int line_no = 0;
  auto resolve = [&](const std::string& p) {
    if (p.empty() || base_dir.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).string();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty() || Trim(line).front() == '#') continue;
    const std::vector<std::string> fields = SplitCsv(line);
    if (header.empty()) {
      header = fields;
      if (header.empty() || header.front() != "ground_truth") {
        throw FormatError("manifest header must start with ground_truth (columns ground_truth,input,factor)");
      }
      continue;
    }
    ManifestEntry e;
    e.factor = default_factor;
    for (std::size_t i = 0; i < fields.size() && i < header.size(); ++i) {
      if (header[i] == "ground_truth") {
        e.ground_truth = resolve(fields[i]);
      } else if (header[i] == "input") {
        e.input = resolve(fields[i]);
      } else if (header[i] == "factor" && !fields[i].empty()) {
        try {
          e.factor = std::stoi(fields[i]);
        } catch (const std::exception&) {
          throw FormatError("manifest line " + std::to_string(line_no) + ": bad factor '" + fields[i] + "'");
        }
      }
    }
    if (e.ground_truth.empty()) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": ground_truth is required");
    }
    entries.push_back(e);
  }
  if (entries.empty()) throw FormatError("manifest lists no images");
  return entries;
}

std::vector<ManifestEntry> ReadManifest(const std::string& path, int default_factor) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read manifest " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseManifest(buf.str(), default_factor, fs::path(path).parent_path().string());
}

std::vector<EvaluationRow> Evaluate(const std::vector<ManifestEntry>& entries,
                                    const EvaluateOptions& options,
                                    const sparse::DictionaryPair* dict) {
  if (options.modes.empty()) throw ConfigError("no modes to evaluate");
  std::vector<EvaluationRow> rows;
  for (const ManifestEntry& entry : entries) {
    const std::string name = fs::path(entry.ground_truth).filename().string();
    auto row_for = [&](const std::string& method) {
      EvaluationRow r;
      r.image = name;
      r.method = method;
      r.factor = entry.factor;
      return r;
    };
    auto fail_all = [&](const std::string& why) {
      for (Mode m : options.modes) {
        EvaluationRow r = row_for(ModeName(m));
        r.status = "error: " + why;
        rows.push_back(r);
        if (m == Mode::kJointFixed) {
          for (double w : kFixedOmegaSweep) {
            EvaluationRow s = row_for("joint-fixed@" + FormatNumber(w, 1));
            s.status = r.status;
            rows.push_back(s);
          }
        }
      }
    };

    RunConfig config = options.base;
    config.factor = entry.factor;
    image::LumaImage gt, lr;
    try {
      image::ValidateFactor(entry.factor);
      gt = image::ReadLuma(entry.ground_truth);
      gt = gt.Crop(0, 0, gt.height() / entry.factor * entry.factor, gt.width() / entry.factor * entry.factor);
      if (entry.input.empty()) {
        lr = image::Downsample(gt, entry.factor);
      } else {
        lr = image::ReadLuma(entry.input);
        if (lr.height() * entry.factor != gt.height() || lr.width() * entry.factor != gt.width()) {
          throw std::invalid_argument("input size times factor does not match the ground truth");
        }
      }
    } catch (const std::exception& e) {
      fail_all(e.what());
      continue;
    }

    const int shave = options.shave >= 0 ? options.shave : entry.factor;
    ImageSession session(lr, config, dict, nullptr);
    auto measure = [&](EvaluationRow r, Mode mode, double omega) {
      try {
        if (ModeNeedsDictionary(mode) && dict != nullptr && dict->factor != entry.factor) {
          throw ConfigError("dictionary was trained for factor " + std::to_string(dict->factor));
        }
        const image::LumaImage sr = session.Run(mode, omega, nullptr);
        r.psnr = metrics::Psnr(gt, sr, shave);
        r.ssim = metrics::Ssim(gt, sr, shave);
      } catch (const std::exception& e) {
        r.status = std::string("error: ") + e.what();
      }
      rows.push_back(r);
    };
    for (Mode m : options.modes) {
      measure(row_for(ModeName(m)), m, config.fixed_omega);
      if (m == Mode::kJointFixed) {
        for (double w : kFixedOmegaSweep) measure(row_for("joint-fixed@" + FormatNumber(w, 1)), m, w);
      }
    }
  }
  return rows;
}

void WriteEvaluationCsv(const std::vector<EvaluationRow>& rows, std::ostream& out) {
  out << "image,method,factor,psnr,ssim,status\n";
  for (const EvaluationRow& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    const bool ok = r.status == "ok";
    out << r.image << ',' << r.method << ',' << r.factor << ',' << (ok ? FormatNumber(r.psnr, 4) : "")
        << ',' << (ok ? FormatNumber(r.ssim, 6) : "") << ',' << status << '\n';
  }
}

void PrintEvaluationTable(const std::vector<EvaluationRow>& rows, std::ostream& out) {
  std::size_t wi = 5, wm = 6;
  for (const EvaluationRow& r : rows) {
    wi = std::max(wi, r.image.size());
    wm = std::max(wm, r.method.size());
  }
  out << std::left << std::setw(static_cast<int>(wi) + 2) << "image" << std::setw(static_cast<int>(wm) + 2)
      << "method" << std::right << std::setw(6) << "factor" << std::setw(10) << "psnr" << std::setw(9) << "ssim"
      << "  status\n";
  for (const EvaluationRow& r : rows) {
    const bool ok = r.status == "ok";
    out << std::left << std::setw(static_cast<int>(wi) + 2) << r.image << std::setw(static_cast<int>(wm) + 2)
        << r.method << std::right << std::setw(6) << r.factor << std::setw(10)
        << (ok ? FormatNumber(r.psnr, 2) : "-") << std::setw(9) << (ok ? FormatNumber(r.ssim, 4) : "-") << "  "
        << r.status << "\n";
  }
}

int FindLabel(const ranking::WinningMatrix& w, const std::string& label) {
  for (std::size_t i = 0; i < w.labels.size(); ++i) {
    if (w.labels[i] == label) return static_cast<int>(i);
  }
  std::string available;
  for (const std::string& l : w.labels) available += (available.empty() ? "" : ", ") + l;
  throw ConfigError("anchor label '" + label + "' not found; available: " + available);
}

void WriteScoresCsv(const ranking::WinningMatrix& w, const ranking::ScoreVector& s, std::ostream& out) {
  out << "label,score\n";
  for (std::size_t i = 0; i < w.labels.size(); ++i) out << w.labels[i] << ',' << FormatNumber(s.scores[i], 9) << '\n';
}

void PrintScoreBars(const ranking::WinningMatrix& w, const ranking::ScoreVector& s, std::ostream& out) {
  std::vector<std::size_t> order(w.labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  const double lo = *std::min_element(s.scores.begin(), s.scores.end());
  const double hi = *std::max_element(s.scores.begin(), s.scores.end());
  std::size_t width = 5;
  for (const std::string& l : w.labels) width = std::max(width, l.size());
  for (std::size_t i : order) {
    const int bar = hi > lo ? static_cast<int>(std::lround(1 + 39 * (s.scores[i] - lo) / (hi - lo))) : 40;
    out << std::left << std::setw(static_cast<int>(width) + 2) << w.labels[i] << std::right << std::setw(10)
        << FormatNumber(s.scores[i], 4) << "  " << std::string(static_cast<std::size_t>(bar), '#')
        << (static_cast<int>(i) == s.anchor ? "  (anchor)" : "") << "\n";
  }
}

}  // namespace jsr::cli
