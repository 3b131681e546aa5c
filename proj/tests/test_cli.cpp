#include <sstream>

#include <gtest/gtest.h>

#include "bldg/cli.hpp"
#include "support.hpp"

using namespace bldg;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "bldg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Small ladder so the CLI tests stay quick.
const char* kSmallConfig = R"({"hidden_layers": [32, 16, 8], "max_epochs": 15, "patience": 5, "seed": 3})";

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    csv = dir.file("synth.csv");
    config = dir.file("config.json");
    write_file(config, kSmallConfig);
    CliRun s = run({"synth", "--n", "1500", "--imbalance", "0.05", "--seed", "3", "--out", csv});
    ASSERT_EQ(s.code, 0) << s.err;
  }
  test::TempDir dir;
  std::string csv, config;
};

}  // namespace

TEST_F(CliPipeline, TrainPredictEvaluate) {
  const std::string model = dir.file("m.json"), metrics = dir.file("metrics.json"), hist = dir.file("h.csv");
  CliRun t = run({"train", "--features", csv, "--config", config, "--model", model, "--metrics", metrics,
               "--history", hist});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("test weighted F1"), std::string::npos);
  auto mj = nlohmann::json::parse(read_file(metrics));
  EXPECT_EQ(mj["seed"], 3);

  const std::string preds = dir.file("pred.csv");
  CliRun p = run({"predict", "--model", model, "--features", csv, "--out", preds});
  ASSERT_EQ(p.code, 0) << p.err;
  CsvDocument pd = parse_csv(read_file(preds));
  ASSERT_EQ(pd.rows.size(), 1500u);
  ASSERT_TRUE(pd.column("pred_prob") && pd.column("pred_class") && pd.column("RoofColor"));

  // the test-split rows of the predictions reproduce the stored confusion matrix
  const AttributeTable table = read_feature_csv(read_file(csv));
  const SplitIndices split = stratified_split(table_labels(table), {}, 3);
  long long conf[2][2] = {{0, 0}, {0, 0}};
  for (auto i : split.test) {
    const int truth = *table.rows[i].res;
    const int pred = pd.rows[i][*pd.column("pred_class")] == "residential" ? 1 : 0;
    conf[truth][pred] += 1;
  }
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) EXPECT_EQ(conf[a][b], mj["confusion_matrix"][a][b].get<long long>());
  }

  const std::string ev = dir.file("eval.json");
  CliRun e = run({"evaluate", "--predictions", preds, "--out", ev});
  ASSERT_EQ(e.code, 0) << e.err;
  auto ej = nlohmann::json::parse(read_file(ev));
  EXPECT_EQ(ej["classes"]["residential"]["support"].get<long long>() +
                ej["classes"]["non_residential"]["support"].get<long long>(),
            1500);
}

TEST_F(CliPipeline, TrainIsByteDeterministic) {
  auto train_into = [&](const std::string& tag) {
    CliRun t = run({"train", "--features", csv, "--config", config, "--max-epochs", "4", "--model",
                 dir.file(tag + "m.json"), "--metrics", dir.file(tag + "x.json"), "--history", dir.file(tag + "h.csv")});
    EXPECT_EQ(t.code, 0) << t.err;
  };
  train_into("a");
  train_into("b");
  for (const char* f : {"m.json", "x.json", "h.csv"}) {
    EXPECT_EQ(read_file(dir.file(std::string("a") + f)), read_file(dir.file(std::string("b") + f))) << f;
  }
  // 4 epochs from the command line override the config's 15
  EXPECT_LE(parse_csv(read_file(dir.file("ah.csv"))).rows.size(), 4u);
}

TEST_F(CliPipeline, TrainRejectsBadConfig) {
  write_file(config, R"({"learning_rate": -0.1})");
  CliRun t = run({"train", "--features", csv, "--config", config, "--model", dir.file("m"), "--metrics",
               dir.file("x"), "--history", dir.file("h")});
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.err.find("learning_rate"), std::string::npos);
  write_file(config, R"({"learnin_rate": 0.1})");
  EXPECT_EQ(run({"train", "--features", csv, "--config", config, "--model", dir.file("m"), "--metrics",
                 dir.file("x"), "--history", dir.file("h")})
                .code,
            1);
  EXPECT_EQ(run({"train", "--features", csv, "--learning-rate", "-1", "--model", dir.file("m"), "--metrics",
                 dir.file("x"), "--history", dir.file("h")})
                .code,
            1);
}

TEST_F(CliPipeline, PredictNamesMissingColumn) {
  const std::string model = dir.file("m.json");
  ASSERT_EQ(run({"train", "--features", csv, "--config", config, "--max-epochs", "1", "--model", model,
                 "--metrics", dir.file("x.json"), "--history", dir.file("h.csv")})
                .code,
            0);
  write_file(dir.file("partial.csv"), "UID,ht,nodes,RoofColor\na,3,4,Red\n");
  CliRun p = run({"predict", "--model", model, "--features", dir.file("partial.csv"), "--out", dir.file("o.csv")});
  EXPECT_EQ(p.code, 1);
  EXPECT_NE(p.err.find("area_sqft"), std::string::npos);
}

TEST_F(CliPipeline, AnalyzeDropsCorrelatedColumns) {
  const std::string out = dir.file("eda.json");
  CliRun a = run({"analyze", "--features", csv, "--out", out});
  ASSERT_EQ(a.code, 0) << a.err;
  auto j = nlohmann::json::parse(read_file(out));
  auto dropped = j["dropped"].get<std::vector<std::string>>();
  for (const char* d : {"zonal_mean", "floor", "area_sqm"}) {
    EXPECT_NE(std::find(dropped.begin(), dropped.end(), d), dropped.end()) << d;
  }
  EXPECT_EQ(run({"analyze", "--features", csv, "--out", out, "--keep", "ht,height_m"}).code, 1);
}

TEST(Cli, AnalyzeTwoRows) {
  test::TempDir dir;
  AttributeTable t;
  for (int i = 0; i < 2; ++i) {
    AttributeRow r;
    r.uid = "u" + std::to_string(i);
    r.zonal_mean = 20 + i;
    r.ht = 2.5 + i;
    r.floor = r.zonal_mean / 3;
    r.area_sqm = 50 + 7 * i;
    r.area_sqft = r.area_sqm * kSqftPerSqm;
    r.nodes = 4 + 2 * (1 - i);
    r.zonal_max = r.zonal_mean + 1;
    t.rows.push_back(r);
  }
  write_file(dir.file("two.csv"), write_feature_csv(t));
  CliRun a = run({"analyze", "--features", dir.file("two.csv"), "--out", dir.file("eda.json")});
  EXPECT_EQ(a.code, 0) << a.err;
}

TEST(Cli, ExtractSceneAndErrors) {
  test::TempDir dir;
  SceneConfig sc;
  sc.ncols = sc.nrows = 40;
  sc.buildings = {{"A", 5, 4, 6.0, "Red", 1}, {"B", 3, 3, 12.5, "Grey", 0}};
  SceneResult s = rasterize_synthetic_scene(sc);
  FootprintRecord far = s.footprints[0];
  far.uid = "FAR";
  far.attributes["UID"] = std::string("FAR");
  for (auto& p : far.geometry.parts[0][0]) p = {p.x + 1000, p.y};
  s.footprints.push_back(far);
  write_file(dir.file("dem.asc"), write_ascii_grid(s.grid));
  write_file(dir.file("fp.geojson"), write_footprints(s.footprints));

  CliRun e = run({"extract", "--dem", dir.file("dem.asc"), "--footprints", dir.file("fp.geojson"), "--out",
               dir.file("f.csv")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.err.find("FAR"), std::string::npos);
  AttributeTable t = read_feature_csv(read_file(dir.file("f.csv")));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_NEAR(t.rows[1].ht, 12.5, 1e-9);
  EXPECT_EQ(t.rows[1].area_sqm, 9.0);

  CliRun missing = run({"extract", "--dem", dir.file("nope.asc"), "--footprints", dir.file("fp.geojson"), "--out",
                     dir.file("g.csv")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find(dir.file("nope.asc")), std::string::npos);
}

TEST(Cli, PredictGeoJsonPreservesGeometry) {
  test::TempDir dir;
  SynthConfig c;
  c.n = 400;
  c.minority_fraction = 0.05;
  SynthResult r = generate(c);
  write_file(dir.file("s.csv"), write_feature_csv(r.table));
  write_file(dir.file("cfg.json"), R"({"hidden_layers": [8], "max_epochs": 2})");
  ASSERT_EQ(run({"train", "--features", dir.file("s.csv"), "--config", dir.file("cfg.json"), "--model",
                 dir.file("m.json"), "--metrics", dir.file("x.json"), "--history", dir.file("h.csv")})
                .code,
            0);
  SceneResult s = rasterize_synthetic_scene(scene_from_table(r.table));
  write_file(dir.file("dem.asc"), write_ascii_grid(s.grid));
  write_file(dir.file("fp.geojson"), write_footprints(s.footprints));
  CliRun p = run({"predict", "--model", dir.file("m.json"), "--footprints", dir.file("fp.geojson"), "--dem",
               dir.file("dem.asc"), "--out", dir.file("out.geojson")});
  ASSERT_EQ(p.code, 0) << p.err;
  auto back = parse_footprints(read_file(dir.file("out.geojson")));
  ASSERT_EQ(back.size(), s.footprints.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].geometry.parts[0][0], s.footprints[i].geometry.parts[0][0]);
    EXPECT_TRUE(back[i].attributes.count("pred_prob"));
    EXPECT_TRUE(back[i].attributes.count("pred_class"));
  }
}

TEST(Cli, EvaluateContracts) {
  test::TempDir dir;
  std::string preds = "UID,res,pred_class\n";
  std::string labels = "UID,res\n";
  std::string all_res = "UID,pred_class\n";
  for (int i = 0; i < 15999; ++i) {
    const int y = i < 417 ? 0 : 1;
    const std::string uid = "B" + std::to_string(i);
    append_csv_row(preds, {uid, std::to_string(y), y ? "residential" : "non_residential"});
    append_csv_row(labels, {uid, std::to_string(y)});
    append_csv_row(all_res, {uid, "residential"});
  }
  write_file(dir.file("p.csv"), preds);
  write_file(dir.file("l.csv"), labels);
  write_file(dir.file("a.csv"), all_res);

  ASSERT_EQ(run({"evaluate", "--predictions", dir.file("p.csv"), "--out", dir.file("e.json")}).code, 0);
  auto j = nlohmann::json::parse(read_file(dir.file("e.json")));
  EXPECT_EQ(j["classes"]["residential"]["f1"], 1.0);
  EXPECT_EQ(j["classes"]["non_residential"]["f1"], 1.0);

  ASSERT_EQ(run({"evaluate", "--predictions", dir.file("a.csv"), "--labels", dir.file("l.csv"), "--out",
                 dir.file("d.json")})
                .code,
            0);
  auto d = nlohmann::json::parse(read_file(dir.file("d.json")));
  EXPECT_NEAR(d["accuracy"].get<double>(), 0.9739, 5e-4);
  EXPECT_EQ(d["classes"]["non_residential"]["f1"], 0.0);

  write_file(dir.file("other.csv"), "UID,res\nZ1,1\nZ2,0\n");
  EXPECT_EQ(run({"evaluate", "--predictions", dir.file("a.csv"), "--labels", dir.file("other.csv"), "--out",
                 dir.file("z.json")})
                .code,
            1);
}

TEST(Cli, SynthContracts) {
  test::TempDir dir;
  CliRun a = run({"synth", "--n", "15999", "--imbalance", "0.0261", "--seed", "9", "--out", dir.file("a.csv")});
  ASSERT_EQ(a.code, 0) << a.err;
  CliRun b = run({"synth", "--n", "15999", "--imbalance", "0.0261", "--seed", "9", "--out", dir.file("b.csv")});
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(read_file(dir.file("a.csv")), read_file(dir.file("b.csv")));
  AttributeTable t = read_feature_csv(read_file(dir.file("a.csv")));
  long long minority = 0;
  for (const auto& r : t.rows) minority += *r.res == 0;
  EXPECT_EQ(minority, 417);
  EXPECT_EQ(run({"synth", "--imbalance", "0.6", "--out", dir.file("c.csv")}).code, 1);
  EXPECT_EQ(run({"synth", "--noise", "0.7", "--out", dir.file("c.csv")}).code, 1);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"train"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}
