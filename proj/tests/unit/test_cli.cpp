#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

#include "doctest.h"
#include "jsr/cli/commands.h"
#include "jsr/common/errors.h"
#include "jsr/common/parallel.h"
#include "jsr/image/image_io.h"
#include "jsr/image/resample.h"
#include "oracles.h"
#include "synthetic.h"

using namespace jsr;
using namespace jsr::cli;
namespace fs = std::filesystem;

namespace {

fs::path Scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "jsr_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string P(const std::string& name) { return (Scratch() / name).string(); }

// Runs the CLI with stdout and stderr captured into `output`.
int Cli(std::vector<std::string> args, std::string* output = nullptr) {
  args.insert(args.begin(), "jsr");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream sink;
  auto* out = std::cout.rdbuf(sink.rdbuf());
  auto* err = std::cerr.rdbuf(sink.rdbuf());
  const int code = Run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(out);
  std::cerr.rdbuf(err);
  if (output != nullptr) *output = sink.str();
  return code;
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Corpus of two HR training images and a trained n = 3, x2 dictionary.
const std::string& DictionaryFile() {
  static const std::string path = [] {
    fs::create_directories(Scratch() / "corpus");
    image::WriteLuma(P("corpus/a.png"), testing::TextureStructureImage(21, 48));
    image::WriteLuma(P("corpus/b.png"), testing::TextureStructureImage(22, 48));
    const int code = Cli({"train-dict", P("corpus"), P("dict.bin"), "--factor", "2", "--patch-size", "3",
                          "--atoms", "36", "--epochs", "2", "--seed", "5"});
    REQUIRE(code == 0);
    return P("dict.bin");
  }();
  return path;
}

}  // namespace

TEST_CASE("modes") {
  for (const char* name : {"bicubic", "csc", "epi", "nn-lse", "joint", "joint-fixed"}) {
    CHECK(ModeName(ParseMode(name)) == name);
  }
  CHECK_THROWS_AS(ParseMode("lanczos"), ConfigError);
  CHECK(ModeNeedsDictionary(Mode::kJoint));
  CHECK_FALSE(ModeNeedsDictionary(Mode::kEpi));
}

TEST_CASE("run config validation and the SHD preset") {
  RunConfig c;
  c.mode = Mode::kJoint;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c.dictionary_path = "d.bin";
  CHECK_NOTHROW(c.Validate());
  c.factor = 5;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c.factor = 3;
  c.shd = true;
  const joint::JointConfig j = c.EffectiveJoint();
  CHECK(j.patch_size == 25);
  CHECK(j.overlap == 5);
  CHECK(j.max_iterations == 5);
  c.mode = Mode::kBicubic;
  c.trace_path = "t.csv";
  CHECK_THROWS_AS(c.Validate(), ConfigError);
}

TEST_CASE("upscale bicubic is per-channel interpolation") {
  image::RgbImage rgb{testing::SmoothRandomImage(1, 16), testing::SmoothRandomImage(2, 16),
                      testing::SmoothRandomImage(3, 16)};
  for (auto* ch : {&rgb.r, &rgb.g, &rgb.b})
    for (double& v : ch->pixels()) v = 0.2 + 0.6 * v;  // keep overshoot inside [0, 1]
  image::WriteImage(P("small.png"), rgb);
  REQUIRE(Cli({"upscale", P("small.png"), P("big.png"), "--mode", "bicubic", "--factor", "3"}) == 0);
  const image::RgbImage in = image::ReadImage(P("small.png")).rgb;
  const image::RgbImage out = image::ReadImage(P("big.png")).rgb;
  const image::LumaImage* want[] = {&in.r, &in.g, &in.b};
  const image::LumaImage* got[] = {&out.r, &out.g, &out.b};
  for (int c = 0; c < 3; ++c) {
    const image::LumaImage u = image::Upsample(*want[c], 3);
    REQUIRE(u.SameShape(*got[c]));
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(u.pixels()[i] - got[c]->pixels()[i]) <= 1.0 / 255 + 1e-9);
  }
}

TEST_CASE("upscale errors") {
  image::WriteLuma(P("grey.png"), testing::SmoothRandomImage(4, 16));
  CHECK(Cli({"upscale", P("grey.png"), P("o.png"), "--mode", "joint"}) == 2);
  CHECK(Cli({"upscale", P("missing.png"), P("o.png"), "--mode", "bicubic"}) == 1);
  {
    std::ofstream bad(P("corrupt.png"), std::ios::binary);
    bad << "\x89PNG\r\n\x1a\n....";
  }
  CHECK(Cli({"upscale", P("corrupt.png"), P("o.png"), "--mode", "bicubic"}) == 1);
  CHECK(Cli({"upscale", P("grey.png"), P("o.png"), "--mode", "nope"}) == 2);
  CHECK(Cli({"upscale", P("grey.png"), P("o.png"), "--mode", "joint", "--dict", P("missing.bin")}) == 1);
}

TEST_CASE("train-dict is reproducible and rejects degenerate corpora") {
  const std::string& dict = DictionaryFile();
  REQUIRE(Cli({"train-dict", P("corpus"), P("dict2.bin"), "--factor", "2", "--patch-size", "3", "--atoms", "36",
               "--epochs", "2", "--seed", "5"}) == 0);
  CHECK(Slurp(dict) == Slurp(P("dict2.bin")));

  fs::create_directories(Scratch() / "flat");
  image::WriteLuma(P("flat/c.png"), image::LumaImage(40, 40, 0.5));
  CHECK(Cli({"train-dict", P("flat"), P("flat.bin"), "--factor", "2", "--patch-size", "3", "--atoms", "36"}) != 0);
  fs::create_directories(Scratch() / "empty");
  CHECK(Cli({"train-dict", P("empty"), P("e.bin")}) != 0);
}

TEST_CASE("joint upscale writes weight map and trace, identical across thread counts") {
  const std::string& dict = DictionaryFile();
  image::WriteLuma(P("lr.png"), image::Downsample(testing::TextureStructureImage(23, 40), 2));
  const std::vector<std::string> common = {"--mode", "joint", "--factor", "2", "--patch-size", "3", "--dict", dict,
                                           "--epitome-iterations", "3"};
  auto with = [&](std::vector<std::string> head, const std::string& threads) {
    head.insert(head.end(), common.begin(), common.end());
    head.push_back("--threads");
    head.push_back(threads);
    return head;
  };
  REQUIRE(Cli(with({"upscale", P("lr.png"), P("hr1.png"), "--weight-map", P("w.png"), "--trace", P("t.csv")}, "1")) ==
          0);
  REQUIRE(Cli(with({"upscale", P("lr.png"), P("hr3.png")}, "3")) == 0);
  CHECK(Slurp(P("hr1.png")) == Slurp(P("hr3.png")));
  CHECK(image::ReadLuma(P("w.png")).height() == 40);
  const std::string trace = Slurp(P("t.csv"));
  CHECK(trace.rfind("iteration,objective\n", 0) == 0);
  const std::string omega = Slurp(WeightMapCsvPath(P("w.png")));
  CHECK(omega.rfind("row,col,omega,s\n", 0) == 0);
}

TEST_CASE("train-epitome and reuse") {
  image::WriteLuma(P("lr_e.png"), testing::SmoothRandomImage(9, 20));
  REQUIRE(Cli({"train-epitome", P("lr_e.png"), P("e.bin"), "--factor", "2", "--patch-size", "3", "--iterations",
               "3"}) == 0);
  CHECK(Cli({"upscale", P("lr_e.png"), P("epi.png"), "--mode", "epi", "--factor", "2", "--patch-size", "3",
             "--epitome", P("e.bin")}) == 0);
  // An epitome trained for another factor is refused.
  CHECK(Cli({"upscale", P("lr_e.png"), P("epi.png"), "--mode", "epi", "--factor", "3", "--patch-size", "3",
             "--epitome", P("e.bin")}) != 0);
}

TEST_CASE("evaluate row structure") {
  const sparse::DictionaryPair dict = sparse::LoadDictionary(DictionaryFile());
  image::WriteLuma(P("gt1.png"), testing::TextureStructureImage(31, 32));
  image::WriteLuma(P("gt2.png"), testing::TextureStructureImage(32, 32));
  const auto entries = ParseManifest("ground_truth,input,factor\ngt1.png,,2\ngt2.png,,\n", 2, Scratch().string());
  REQUIRE(entries.size() == 2);
  EvaluateOptions options;
  options.modes = {Mode::kBicubic, Mode::kJointFixed};
  options.base.factor = 2;
  options.base.dictionary_path = DictionaryFile();
  options.base.joint.patch_size = 3;
  options.base.joint.epitome.em_iterations = 3;
  const auto rows = Evaluate(entries, options, &dict);
  CHECK(rows.size() == 2 * 2 + 2 * 5);
  for (const auto& r : rows) CHECK(r.status == "ok");
  CHECK(rows[2].method == "joint-fixed@0.1");

  std::ostringstream csv;
  WriteEvaluationCsv(rows, csv);
  CHECK(csv.str().rfind("image,method,factor,psnr,ssim,status\n", 0) == 0);

  options.modes.clear();
  CHECK_THROWS_AS(Evaluate(entries, options, &dict), ConfigError);
  std::ofstream(P("manifest.csv")) << "ground_truth,input,factor\ngt1.png,,2\n";
  CHECK(Cli({"evaluate", P("manifest.csv"), "--modes", ","}) == 2);
  CHECK(Cli({"evaluate", P("manifest.csv"), "--modes", "bicubic", "--factor", "2", "--output", P("table.csv")}) == 0);
}

TEST_CASE("evaluate records per-row failures and continues") {
  std::ofstream(P("bad_manifest.csv")) << "ground_truth,input,factor\nnot_there.png,,2\ngt1.png,,2\n";
  image::WriteLuma(P("gt1.png"), testing::TextureStructureImage(31, 32));
  const auto entries = ReadManifest(P("bad_manifest.csv"), 2);
  EvaluateOptions options;
  options.modes = {Mode::kBicubic};
  options.base.factor = 2;
  const auto rows = Evaluate(entries, options, nullptr);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status != "ok");
  CHECK(rows[1].status == "ok");
  CHECK(Cli({"evaluate", P("bad_manifest.csv"), "--modes", "bicubic", "--factor", "2"}) == 1);
}

TEST_CASE("bt-rank end to end") {
  std::ofstream(P("two.csv")) << "a,b\n0,90\n10,0\n";
  REQUIRE(Cli({"bt-rank", P("two.csv"), "--anchor", "b", "--output", P("scores.csv")}) == 0);
  std::istringstream in(Slurp(P("scores.csv")));
  std::string line;
  std::getline(in, line);
  CHECK(line == "label,score");
  std::map<std::string, double> scores;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    scores[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
  }
  CHECK(scores["b"] == 1.0);
  CHECK(std::abs(scores["a"] - scores["b"] - std::log(9.0)) <= 1e-6);

  ranking::WinningMatrix w = ranking::ParseWinningMatrixCsv("x,y\n0,1\n1,0\n");
  try {
    FindLabel(w, "z");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("x, y") != std::string::npos);
  }
  CHECK(Cli({"bt-rank", P("two.csv"), "--anchor", "zz"}) == 2);

  std::ostringstream seven;
  const char* labels[] = {"gt", "jsr", "csc", "epi", "bci", "nn", "sc"};
  for (int i = 0; i < 7; ++i) seven << (i ? "," : "") << labels[i];
  seven << "\n";
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) seven << (j ? "," : "") << (i == j ? 0 : 5 + (i * 3 + j * 7) % 11);
    seven << "\n";
  }
  std::ofstream(P("seven.csv")) << seven.str();
  REQUIRE(Cli({"bt-rank", P("seven.csv"), "--output", P("seven_scores.csv")}) == 0);
  std::istringstream s7(Slurp(P("seven_scores.csv")));
  int count = -1;
  while (std::getline(s7, line)) {
    if (line.rfind("gt,", 0) == 0) CHECK(std::stod(line.substr(3)) == 1.0);
    ++count;
  }
  CHECK(count == 7);
}

TEST_CASE("metrics subcommand") {
  image::WriteLuma(P("m1.png"), testing::SmoothRandomImage(5, 24));
  CHECK(Cli({"metrics", P("m1.png"), P("m1.png"), "--shave", "2"}) == 0);
  image::WriteLuma(P("m2.png"), testing::SmoothRandomImage(5, 20));
  CHECK(Cli({"metrics", P("m1.png"), P("m2.png")}) == 1);
}

TEST_CASE("help documents every flag") {
  std::string text;
  CHECK(Cli({"--help"}, &text) == 0);
  CHECK(text.find("--config") != std::string::npos);
  for (const char* sub : {"upscale", "train-dict", "train-epitome", "evaluate", "metrics", "bt-rank"}) {
    CHECK(Cli({sub, "--help"}) == 0);
  }
  CHECK(Cli({"upscale", "--help"}, &text) == 0);
  for (const char* flag : {"--mode", "--factor", "--dict", "--epitome", "--weight-map", "--trace", "--fixed-omega",
                           "--shd", "--seed", "--threads"}) {
    CHECK_MESSAGE(text.find(flag) != std::string::npos, flag);
  }
  CHECK(text.find("[joint]") != std::string::npos);  // defaults are shown
  CHECK(Cli({"evaluate", "--help"}, &text) == 0);
  CHECK(text.find("--shave") != std::string::npos);
  CHECK(Cli({"metrics", "--help"}, &text) == 0);
  CHECK(text.find("--shave") != std::string::npos);
  CHECK(Cli({}) != 0);
}

TEST_CASE("config file sets options, command line overrides") {
  image::WriteLuma(P("cfg_in.png"), testing::SmoothRandomImage(6, 12));
  std::ofstream(P("run.toml")) << "[upscale]\nmode = \"bicubic\"\nfactor = 4\n";
  REQUIRE(Cli({"--config", P("run.toml"), "upscale", P("cfg_in.png"), P("cfg4.png")}) == 0);
  CHECK(image::ReadLuma(P("cfg4.png")).height() == 48);
  REQUIRE(Cli({"--config", P("run.toml"), "upscale", P("cfg_in.png"), P("cfg2.png"), "--factor", "2"}) == 0);
  CHECK(image::ReadLuma(P("cfg2.png")).height() == 24);
}

TEST_CASE("JSR_THREADS is the fallback for --threads") {
  ::setenv("JSR_THREADS", "3", 1);
  CHECK(ResolveThreadCount(0) == 3);
  CHECK(ResolveThreadCount(2) == 2);
  ::setenv("JSR_THREADS", "junk", 1);
  CHECK(ResolveThreadCount(0) >= 1);
  ::unsetenv("JSR_THREADS");
}
