#include <gtest/gtest.h>

#include "dqs/pipeline.hpp"
#include "dqs/search.hpp"
#include "dqs/setup_text.hpp"

using namespace dqs;

namespace {

std::vector<LabeledSetup> pool_with_ids(int n) {
  std::vector<LabeledSetup> pool;
  const auto base = ghz4_setup();
  for (int i = 0; i < n; ++i) {
    LabeledSetup r;
    r.id = i;
    r.setup = base;
    r.setup.sequence.push_back(Device::r(i % 4));
    pool.push_back(r);
  }
  return pool;
}

OpticalSetup without(const OpticalSetup& s, std::size_t idx) {
  auto out = s;
  out.sequence.erase(out.sequence.begin() + static_cast<std::ptrdiff_t>(idx));
  return out;
}

}  // namespace

TEST(TopK, SingleIsArgmax) {
  const auto pool = pool_with_ids(6);
  const auto r = top_k(pool, {0.1, 0.9, 0.3, 0.95, 0.2, 0.5}, 1);
  ASSERT_EQ(r.items.size(), 1u);
  EXPECT_EQ(r.items[0].id, 3);
  EXPECT_EQ(r.duplicates, 2u);
}

TEST(TopK, TiesBreakByAscendingId) {
  const auto pool = pool_with_ids(6);
  const auto r = top_k(pool, std::vector<double>(6, 1.0), 3);
  ASSERT_EQ(r.items.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.items[static_cast<std::size_t>(i)].id, i);
  EXPECT_THROW(top_k(pool, std::vector<double>(6, 1.0), 7), std::invalid_argument);
  EXPECT_THROW(top_k(pool, std::vector<double>(5, 1.0), 2), std::invalid_argument);
}

TEST(Validate, AttachesOracleLabelsAndRegret) {
  std::vector<LabeledSetup> pool(3);
  pool[0].id = 0;
  pool[0].setup = golden_cases()[0].setup;
  pool[0].qfi = 64;
  pool[1].id = 1;
  pool[1].setup = ghz4_setup();
  pool[1].qfi = 16;
  OpticalSetup bunched;
  bunched.n_photons = 4;
  bunched.sources = {Device::source(DeviceKind::DC11, 0, 1), Device::source(DeviceKind::DC11, 2, 3)};
  bunched.sequence = {Device::bs(0, 1)};
  pool[2].id = 2;
  pool[2].setup = bunched;

  const auto h8 = Hamiltonian::sum_z(8);
  auto r = validate(top_k(pool, {0.0, 0.0, 1.0}, 1), Hamiltonian::sum_z(4), {}, &pool);
  ASSERT_TRUE(r.items[0].oracle.has_value());
  EXPECT_EQ(*r.items[0].oracle, 0.0);
  EXPECT_FALSE(r.items[0].valid);
  EXPECT_EQ(*r.regret, 64.0);

  std::vector<LabeledSetup> eight{pool[0]};
  const auto v = validate(top_k(eight, {1.0}, 1), h8, {}, &eight);
  EXPECT_NEAR(*v.items[0].oracle, 64.0, 1e-9);
  EXPECT_TRUE(v.items[0].valid);
  EXPECT_GE(*v.regret, 0.0);
  const auto again = validate(v, h8, {}, &eight);
  EXPECT_EQ(*again.items[0].oracle, *v.items[0].oracle);
  EXPECT_EQ(*again.regret, *v.regret);
  EXPECT_NE(v.to_csv().find("rank,id,predicted,oracle,setup\n1,0,"), std::string::npos);
}

TEST(Prune, MirrorBeforeSplitterIsRedundant) {
  const auto h = Hamiltonian::sum_z(4);
  const auto s = ghz4_setup();
  ASSERT_EQ(format_device(s.sequence[0]), "R(b)");
  ASSERT_EQ(format_device(s.sequence[1]), "PBS(b,c)");
  EXPECT_NEAR(label_setup(without(s, 0), h).qfi, 16.0, 1e-9);
  EXPECT_NEAR(label_setup(without(s, 1), h).qfi, 8.0, 1e-9);

  Rng rng(3);
  const auto pruned = prune_setup(s, h, 0, rng);
  EXPECT_NEAR(label_setup(pruned, h).qfi, 16.0, 1e-9);
  EXPECT_LT(pruned.sequence.size(), s.sequence.size());
  bool has_pbs = false;
  for (const auto& d : pruned.sequence) has_pbs |= d.kind == DeviceKind::PBS;
  EXPECT_TRUE(has_pbs);
  EXPECT_THROW(prune_setup(s, h, -1, rng), std::invalid_argument);
}

TEST(Prune, EssentialDeviceIsKept) {
  const auto h = Hamiltonian::sum_z(4);
  const auto s = parse_sequence("PBS(b,c)", 4);
  Rng rng(1);
  const auto pruned = prune_setup(s, h, 10, rng);
  EXPECT_EQ(format_setup(pruned), format_setup(s));
}

TEST(Prune, RandomSetupsKeepTheirQfi) {
  ToolboxConfig tb;
  tb.max_length = 8;
  const auto h = Hamiltonian::sum_z(4);
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const auto s = sample_setup(tb, rng);
    const auto p = prune_setup(s, h, 0, rng);
    EXPECT_NEAR(label_setup(p, h).qfi, label_setup(s, h).qfi, 1e-9);
    EXPECT_LE(p.sequence.size(), s.sequence.size());
  }
}

TEST(Pipeline, SourceOnlyPoolPicksTheBellPairs) {
  std::vector<OpticalSetup> pool;
  for (auto k1 : {DeviceKind::DC00, DeviceKind::DC11, DeviceKind::DCBell})
    for (auto k2 : {DeviceKind::DC00, DeviceKind::DCBell}) {
      OpticalSetup s;
      s.n_photons = 4;
      s.sources = {Device::source(k1, 0, 1), Device::source(k2, 2, 3)};
      pool.push_back(s);
    }
  PipelineConfig cfg;
  cfg.train_count = 40;
  cfg.top_k = pool.size();
  cfg.model.latent = 8;
  cfg.model.layers = 1;
  cfg.model.heads = 2;
  cfg.train.epochs = 1;
  cfg.train.batch_size = 16;
  cfg.shots = 0;
  cfg.seed = 5;
  const auto a = run_pipeline(cfg, &pool);
  EXPECT_NEAR(a.best_oracle_qfi, 8.0, 1e-9);
  EXPECT_EQ(a.best_setup, "DCBell(a,b) -> DCBell(c,d)");
  EXPECT_GE(a.min_sensitivity, 1.0 / 8 - 1e-9);
  EXPECT_NEAR(a.sql, 0.25, 1e-15);
  EXPECT_NEAR(a.hl, 1.0 / 16, 1e-15);
  EXPECT_EQ(*a.ranked.regret, 0.0);
  const auto b = run_pipeline(cfg, &pool);
  EXPECT_EQ(a.to_json(), b.to_json());

  std::vector<OpticalSetup> empty;
  EXPECT_THROW(run_pipeline(cfg, &empty), PipelineError);
}
