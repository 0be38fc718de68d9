#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "glia/image.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("glianet_cli_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string("'") + GLIA_CLI_PATH + "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  // name=value lines of stdout.
  static std::map<std::string, std::string> values(const std::string& out) {
    std::map<std::string, std::string> m;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
  }

  void write_sources(std::size_t count, std::size_t size) const {
    fs::create_directories(dir_ / "src");
    for (std::size_t i = 0; i < count; ++i) {
      glia::save_image(glia::make_source_image(size, size, i + 1),
                       dir_ / "src" / (std::string(1, static_cast<char>('a' + i)) + ".ppm"));
    }
  }

  void write_overfit_config() const {
    std::ofstream(dir_ / "run.cfg") << "# overfit settings\n"
                                       "train.epochs = 150\n"
                                       "train.max_steps = 300\n"
                                       "train.batch_size = 8\n"
                                       "train.learning_rate = 5e-4\n"
                                       "train.weight_decay = 0\n"
                                       "train.eval_every = 5\n"
                                       "glia.insertion_points = 0,1,2,3\n";
  }

  fs::path dir_;
};

TEST_F(CliTest, SynthCountsEntries) {
  write_sources(2, 48);
  const auto r = run("synth --sources " + path("src") + " --out " + path("ds") +
                     " --kinds blur,noise --levels 3 --seed 4");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(values(r.out)["entries"], "14");
  EXPECT_NE(r.err.find("14 entries"), std::string::npos);
  const auto manifest = slurp(dir_ / "ds" / "manifest.csv");
  EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 15);  // header + rows
}

TEST_F(CliTest, SynthRerunIsByteIdentical) {
  write_sources(2, 48);
  const std::string common = " --kinds blur,noise --levels 3 --seed 4";
  ASSERT_EQ(run("synth --sources " + path("src") + " --out " + path("a") + common).code, 0);
  ASSERT_EQ(run("synth --sources " + path("src") + " --out " + path("b") + common).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "manifest.csv"), slurp(dir_ / "b" / "manifest.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "a__noise_2.ppm"), slurp(dir_ / "b" / "a__noise_2.ppm"));
}

TEST_F(CliTest, SynthMissingSourceDir) {
  const auto r = run("synth --sources " + path("nowhere") + " --out " + path("ds"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find(path("nowhere")), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, SynthBadArguments) {
  write_sources(1, 32);
  EXPECT_EQ(run("synth --sources " + path("src") + " --out " + path("ds") + " --kinds fog").code,
            2);
  EXPECT_EQ(run("synth --sources " + path("src") + " --out " + path("ds") + " --levels 0").code,
            2);
  EXPECT_EQ(run("synth --out " + path("ds")).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, InvalidGuidanceListsModes) {
  write_sources(2, 48);
  ASSERT_EQ(run("synth --sources " + path("src") + " --out " + path("ds") +
                " --kinds blur --levels 1").code,
            0);
  const auto r = run("train --manifest " + path("ds/manifest.csv") + " --out " + path("out") +
                     " --guidance sideways");
  EXPECT_EQ(r.code, 2);
  for (const char* mode : {"semantic_guides_detail", "detail_guides_semantic", "semantic_only",
                           "detail_only"}) {
    EXPECT_NE(r.err.find(mode), std::string::npos) << mode;
  }
  EXPECT_EQ(run("train --manifest " + path("ds/manifest.csv") + " --out " + path("out") +
                " --ablation both").code,
            2);
}

TEST_F(CliTest, TrainMissingManifestIsIo) {
  const auto r = run("train --manifest " + path("none.csv") + " --out " + path("out"));
  EXPECT_EQ(r.code, 3);
}

TEST_F(CliTest, UnknownConfigKeyIsBadArgument) {
  std::ofstream(dir_ / "bad.cfg") << "train.learning_rte = 1\n";
  write_sources(2, 48);
  ASSERT_EQ(run("synth --sources " + path("src") + " --out " + path("ds") +
                " --kinds blur --levels 1").code,
            0);
  const auto r = run("train --manifest " + path("ds/manifest.csv") + " --config " +
                     path("bad.cfg") + " --out " + path("out"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("learning_rte"), std::string::npos);
}

// 2 sources x blur levels 1..7 plus pristine: the 16-image fixture.
TEST_F(CliTest, TrainEvalScoreOnOverfitFixture) {
  write_sources(2, 96);
  ASSERT_EQ(run("synth --sources " + path("src") + " --out " + path("ds") +
                " --kinds blur --levels 7 --seed 5").code,
            0);
  write_overfit_config();
  const auto manifest = path("ds/manifest.csv");

  const auto t = run("train --manifest " + manifest + " --config " + path("run.cfg") +
                     " --out " + path("out") + " --repeats 1");
  ASSERT_EQ(t.code, 0) << t.err;
  auto v = values(t.out);
  ASSERT_TRUE(v.count("srcc_median") && v.count("plcc_median")) << t.out;
  const double s = std::stod(v["srcc_median"]), p = std::stod(v["plcc_median"]);
  EXPECT_GE(s, -1.0);
  EXPECT_LE(s, 1.0);
  EXPECT_GE(p, -1.0);
  EXPECT_LE(p, 1.0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "run_0.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "report.json"));
  const auto log = slurp(dir_ / "out" / "run_0.jsonl");
  EXPECT_NE(log.find("\"ablation\":\"full\""), std::string::npos) << log.substr(0, 300);

  // Whole-fixture model: train on every image, then evaluate on the same set.
  const auto all = run("train --manifest " + manifest + " --config " + path("run.cfg") +
                       " --out " + path("all") + " --full");
  ASSERT_EQ(all.code, 0) << all.err;
  EXPECT_TRUE(values(all.out).count("train_srcc")) << all.out;
  const auto weights = path("all/model_0.glia");
  const auto e = run("eval --manifest " + manifest + " --weights " + weights);
  ASSERT_EQ(e.code, 0) << e.err;
  v = values(e.out);
  EXPECT_EQ(v["n"], "16");
  EXPECT_GE(std::stod(v["srcc"]), 0.95);

  const auto img = path("ds/a__blur_3.ppm");
  const auto s1 = run("score --image " + img + " --weights " + weights);
  const auto s2 = run("score --image " + img + " --weights " + weights);
  ASSERT_EQ(s1.code, 0) << s1.err;
  EXPECT_EQ(s1.out, s2.out);
  EXPECT_EQ(s1.out.rfind("score=", 0), 0u);

  const auto attn = run("inspect --image " + img + " --attn " + path("attn.ppm") +
                        " --weights " + weights + " --block 2");
  ASSERT_EQ(attn.code, 0) << attn.err;
  const auto heat = glia::load_image(path("attn.ppm"));
  EXPECT_EQ(heat.height, 96u);
  EXPECT_EQ(heat.width, 96u);
  EXPECT_EQ(run("inspect --image " + img + " --attn " + path("x.ppm") + " --weights " + weights +
                " --block 4").code,
            2);
  EXPECT_FALSE(fs::exists(dir_ / "x.ppm"));
}

TEST_F(CliTest, AblationRecordedInLog) {
  write_sources(3, 64);
  ASSERT_EQ(run("synth --sources " + path("src") + " --out " + path("ds") +
                " --kinds blur --levels 1").code,
            0);
  std::ofstream(dir_ / "quick.cfg") << "vit.n_layers = 2\nglia.insertion_points = 0,1\n"
                                       "train.epochs = 1\ntrain.batch_size = 2\n";
  for (const std::string mode : {"lgf_only", "full"}) {
    const auto r = run("train --manifest " + path("ds/manifest.csv") + " --config " +
                       path("quick.cfg") + " --out " + path(mode) + " --repeats 1 --ablation " +
                       mode);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(dir_ / mode / "run_0.jsonl").find("\"ablation\":\"" + mode + "\""),
              std::string::npos);
  }
}

TEST_F(CliTest, CorruptWeightsExitFiveWithoutOutput) {
  glia::save_image(glia::make_source_image(64, 64, 1), dir_ / "img.ppm");
  std::ofstream(dir_ / "bad.glia", std::ios::binary) << "GLIAW\x01garbage";
  const auto r = run("score --image " + path("img.ppm") + " --weights " + path("bad.glia"));
  EXPECT_EQ(r.code, 5);
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, FragmentsDivisibleIdentity) {
  const auto img = glia::make_source_image(448, 448, 3);
  glia::save_image(img, dir_ / "big.ppm");
  const auto r = run("inspect --image " + path("big.ppm") + " --fragments " + path("frag.ppm") +
                     " --grid 2 --fragment 224");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "frag.ppm"), slurp(dir_ / "big.ppm"));
}

TEST_F(CliTest, AttnWithoutWeightsIsUsageError) {
  glia::save_image(glia::make_source_image(64, 64, 1), dir_ / "img.ppm");
  const auto r = run("inspect --image " + path("img.ppm") + " --attn " + path("a.ppm") +
                     " --block 0");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(dir_ / "a.ppm"));
}

TEST_F(CliTest, SourcesWritesImages) {
  const auto r = run("sources --out " + path("s") + " --count 3 --size 40");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(values(r.out)["sources"], "3");
  EXPECT_EQ(glia::load_image(dir_ / "s" / "source2.ppm").width, 40u);
}

}  // namespace
