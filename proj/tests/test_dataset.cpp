#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "support.hpp"

using namespace ibhm;
using namespace ibhm::dataset;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ibhm_test_" + name);
  fs::remove_all(p);
  return p;
}

DatasetConfig tiny() {
  DatasetConfig c;
  c.bridges = {test::bridge("B4")};
  c.reductions = {0.5};
  c.locations = {0.5};
  c.trials = 1;
  return c;
}

}  // namespace

TEST(Plan, PresetCount) {
  const auto p = plan(DatasetConfig{});
  EXPECT_EQ(p.size(), 2000u);
  std::set<std::string> stems;
  for (const auto& r : p) stems.insert(r.key.rel_stem());
  EXPECT_EQ(stems.size(), 2000u);
}

TEST(Plan, SmallCounts) {
  DatasetConfig one;
  one.bridges = {test::bridge("B1")};
  one.reductions = {0.5};
  one.trials = 1;
  EXPECT_EQ(plan(one).size(), 8u);
  DatasetConfig b1;
  b1.bridges = {test::bridge("B1")};
  b1.trials = 1;
  EXPECT_EQ(plan(b1).size(), 40u);
}

TEST(Plan, UndamagedCases) {
  for (const auto& r : plan(DatasetConfig{})) {
    if (!r.key.loc) {
      EXPECT_EQ(r.scenario.damage.R_s, 0.0);
      EXPECT_FALSE(r.scenario.damage.x_s.has_value());
    } else {
      EXPECT_EQ(r.scenario.damage.R_s, r.key.group_R);
      EXPECT_NEAR(*r.scenario.damage.x_s, *r.key.loc * r.scenario.bridge.L, 1e-12);
    }
    EXPECT_DOUBLE_EQ(r.scenario.noise_std, std::sqrt(0.1));
  }
}

TEST(Plan, SeedsDistinctAndOrderIndependent) {
  const auto p = plan(DatasetConfig{});
  std::set<std::uint64_t> seeds;
  for (const auto& r : p) seeds.insert(r.scenario.seed);
  EXPECT_EQ(seeds.size(), p.size());
  // Same cell, different enumeration: bridges and levels reversed.
  DatasetConfig rev;
  std::reverse(rev.bridges.begin(), rev.bridges.end());
  std::reverse(rev.reductions.begin(), rev.reductions.end());
  std::map<std::string, std::uint64_t> by_stem;
  for (const auto& r : p) by_stem[r.key.rel_stem()] = r.scenario.seed;
  for (const auto& r : plan(rev)) EXPECT_EQ(by_stem.at(r.key.rel_stem()), r.scenario.seed);
}

TEST(Plan, ConfigErrors) {
  DatasetConfig c;
  c.trials = 0;
  EXPECT_THROW(plan(c), ConfigError);
  c = DatasetConfig{};
  c.reductions = {1.2};
  EXPECT_THROW(plan(c), ConfigError);
  c = DatasetConfig{};
  c.locations = {0.0};
  EXPECT_THROW(plan(c), ConfigError);
  c = DatasetConfig{};
  c.bridges.clear();
  EXPECT_THROW(plan(c), ConfigError);
}

TEST(RecordKey, Layout) {
  RecordKey k{"B2", 0.3, 0.125, 4};
  EXPECT_EQ(k.rel_stem(), "B2/0.30/0.125/4");
  RecordKey u{"B2", 0.3, std::nullopt, 0};
  EXPECT_EQ(u.rel_stem(), "B2/0.30/undamaged/0");
}

TEST(RecordCsv, RoundTripBitExact) {
  const fs::path root = scratch("record_rt");
  auto sc = test::scenario("B4", 0.5, 0.5, std::sqrt(0.1), 99);
  const auto rec = fem::simulate_vbi(sc);
  const RecordKey key{"B4", 0.5, 0.5, 0};
  write_record(root, key, rec);
  const auto back = read_record(root / (key.rel_stem() + ".csv"));
  EXPECT_EQ(back.t, rec.t);
  EXPECT_EQ(back.a, rec.a);
  EXPECT_EQ(to_json(back.scenario), to_json(rec.scenario));
  EXPECT_EQ(record_csv(back), record_csv(rec));
  fs::remove_all(root);
}

TEST(RecordCsv, MalformedInput) {
  const fs::path root = scratch("record_bad");
  const auto rec = test::noise_free("B4");
  const RecordKey key{"B4", 0.5, std::nullopt, 0};
  write_record(root, key, rec);
  const fs::path csv = root / (key.rel_stem() + ".csv");
  write_text(csv, "t,a\n0,1\n0.001,x\n");
  EXPECT_THROW(read_record(csv), DataError);
  write_text(csv, "time,acc\n");
  EXPECT_THROW(read_record(csv), DataError);
  write_text(fs::path(root / (key.rel_stem() + ".json")), "{\"bridge\": 1");
  EXPECT_THROW(read_record(csv), DataError);
  fs::remove_all(root);
}

TEST(Generate, WritesIndexAndRefusesOverwrite) {
  const fs::path root = scratch("generate");
  const auto planned = generate_dataset(tiny(), root, 2);
  ASSERT_EQ(planned.size(), 2u);
  const auto idx = read_index(root);
  ASSERT_EQ(idx.size(), 2u);
  for (const auto& r : idx) EXPECT_TRUE(fs::exists(r.csv));
  EXPECT_THROW(generate_dataset(tiny(), root, 1), ConfigError);
  EXPECT_NO_THROW(generate_dataset(tiny(), root, 1, true));
  fs::remove_all(root);
  EXPECT_THROW(read_index(root), DataError);
}

TEST(Generate, ByteIdenticalWithNoise) {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  generate_dataset(tiny(), a, 2);
  generate_dataset(tiny(), b, 1);
  for (const auto& r : read_index(a)) {
    const fs::path rel = fs::relative(r.csv, a);
    EXPECT_EQ(read_text(r.csv), read_text(b / rel)) << rel;
  }
  EXPECT_EQ(read_text(a / "index.json"), read_text(b / "index.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Generate, NoiseChangesWithTrial) {
  DatasetConfig c = tiny();
  c.trials = 2;
  c.include_undamaged = false;
  const auto p = plan(c);
  ASSERT_EQ(p.size(), 2u);
  const auto r0 = fem::simulate_vbi(p[0].scenario), r1 = fem::simulate_vbi(p[1].scenario);
  EXPECT_NE(r0.a, r1.a);
}

TEST(ParallelFor, CoversEveryIndexAndPropagatesErrors) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 1000);
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 37) throw DataError("boom");
                            }),
               DataError);
}

TEST(OutputDir, Guards) {
  const fs::path root = scratch("outdir");
  EXPECT_NO_THROW(prepare_output_dir(root, false));
  EXPECT_NO_THROW(prepare_output_dir(root, false));  // empty is fine
  write_text(root / "x.txt", "x");
  EXPECT_THROW(prepare_output_dir(root, false), ConfigError);
  EXPECT_NO_THROW(prepare_output_dir(root, true));
  EXPECT_THROW(prepare_output_dir(root / "x.txt", true), ConfigError);
  fs::remove_all(root);
}
