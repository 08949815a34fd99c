#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "microweather/errors.hpp"
#include "microweather/partition.hpp"
#include "microweather/types.hpp"

using namespace mw;

TEST(Wind, SpeedDirExamples) {
  auto z = wind_from_speed_dir(0, 0);
  EXPECT_EQ(z.u_ms, 0.0);
  EXPECT_EQ(z.v_ms, 0.0);
  auto s = wind_from_speed_dir(2, 180);
  EXPECT_NEAR(s.u_ms, 0.0, 1e-12);
  EXPECT_NEAR(s.v_ms, 2.0, 1e-12);
  auto ne = wind_from_speed_dir(3, 45);
  EXPECT_NEAR(ne.u_ms, -3.0 * std::numbers::sqrt2 / 2.0, 1e-12);
  EXPECT_NEAR(ne.v_ms, -3.0 * std::numbers::sqrt2 / 2.0, 1e-12);
  EXPECT_THROW(wind_from_speed_dir(-1, 0), InvalidObservation);
  EXPECT_THROW(wind_from_speed_dir(1, std::nan("")), InvalidObservation);
}

TEST(Wind, InverseExamples) {
  auto c = wind_to_speed_dir(0, 0);
  EXPECT_EQ(c.speed_ms, 0.0);
  EXPECT_EQ(c.dir_deg, 0.0);
  auto s = wind_to_speed_dir(0, 2);
  EXPECT_NEAR(s.speed_ms, 2.0, 1e-12);
  EXPECT_NEAR(s.dir_deg, 180.0, 1e-12);
  const double h = -3.0 * std::numbers::sqrt2 / 2.0;
  auto ne = wind_to_speed_dir(h, h);
  EXPECT_NEAR(ne.speed_ms, 3.0, 1e-9);
  EXPECT_NEAR(ne.dir_deg, 45.0, 1e-9);
}

TEST(Wind, RoundTripGrid) {
  for (int d = 0; d < 360; ++d) {
    for (double sp : {0.5, 1.0, 3.0, 10.0, 40.0}) {
      auto uv = wind_from_speed_dir(sp, d);
      auto back = wind_to_speed_dir(uv.u_ms, uv.v_ms);
      EXPECT_NEAR(back.speed_ms, sp, 1e-9);
      EXPECT_NEAR(circular_difference_deg(back.dir_deg, d), 0.0, 1e-9) << d << " " << sp;
      EXPECT_GE(back.dir_deg, 0.0);
      EXPECT_LT(back.dir_deg, 360.0);
    }
  }
}

TEST(Wind, CircularDifference) {
  EXPECT_DOUBLE_EQ(circular_difference_deg(350, 10), 20.0);
  EXPECT_DOUBLE_EQ(circular_difference_deg(10, 350), 20.0);
  EXPECT_DOUBLE_EQ(circular_difference_deg(0, 180), 180.0);
  EXPECT_DOUBLE_EQ(circular_difference_deg(90, 90), 0.0);
}

TEST(Quality, CountsThreeReadingsPerHour) {
  Series s;
  s.values.resize(4);
  s.flags.assign(4, ChannelFlags::all(SlotState::Observed));
  EXPECT_DOUBLE_EQ(compute_quality_fraction(s), 1.0);
  s.flags[1].state[0] = SlotState::Missing;
  EXPECT_DOUBLE_EQ(compute_quality_fraction(s), 11.0 / 12.0);
  s.flags[2].state[3] = SlotState::Filled;  // half a wind reading does not count
  EXPECT_DOUBLE_EQ(compute_quality_fraction(s), 10.0 / 12.0);
}

TEST(ConnectivityParse, RoundTrip) {
  EXPECT_EQ(Connectivity::parse("full").mode, ConnectivityMode::Full);
  EXPECT_EQ(Connectivity::parse("delaunay").mode, ConnectivityMode::Delaunay);
  auto k = Connectivity::parse("knn:7");
  EXPECT_EQ(k.mode, ConnectivityMode::KNearest);
  EXPECT_EQ(k.k, 7u);
  EXPECT_EQ(Connectivity::parse(k.to_string()), k);
  EXPECT_THROW(Connectivity::parse("knn:0"), InvalidConfig);
  EXPECT_THROW(Connectivity::parse("knn:x"), InvalidConfig);
  EXPECT_THROW(Connectivity::parse("star"), InvalidConfig);
}

TEST(ModelConfigValidate, HeadsMustDivide) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n_heads = 5;
  EXPECT_THROW(c.validate(), InvalidConfig);
}

TEST(Normalization, RoundTrip) {
  ChannelStats s;
  s.mean = {12.3, -4.0, 0.5, 1e3};
  s.std = {3.3, 0.7, 2.0, 1e-3};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 50);
  for (int i = 0; i < 1000; ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      const double x = n(rng);
      EXPECT_NEAR(s.denormalize(c, s.normalize(c, x)), x, 1e-12 * std::max(1.0, std::abs(x)) * 1e3);
    }
  }
}

TEST(Errors, ExitCodes) {
  EXPECT_EQ(exit_code_for(InvalidConfig("x").error_class()), 1);
  EXPECT_EQ(exit_code_for(CoverageError("x").error_class()), 2);
  EXPECT_EQ(exit_code_for(MissingCheckpoint("x").error_class()), 2);
  EXPECT_EQ(exit_code_for(NumericalError("x").error_class()), 3);
}

namespace {

Station with_quality(const std::string& id, double q) {
  Station s;
  s.id = id;
  s.quality_fraction = q;
  return s;
}

}  // namespace

TEST(Partition, Thresholds) {
  std::vector<Station> st{with_quality("a", 0.85), with_quality("b", 0.75), with_quality("c", 0.65),
                          with_quality("d", 0.55)};
  PartitionThresholds th;
  auto p = partition_stations(st, th);
  EXPECT_EQ(p.role_of("a"), Role::Backbone);
  EXPECT_EQ(p.role_of("b"), Role::Train);
  ASSERT_TRUE(p.role_of("c").has_value());
  EXPECT_TRUE(*p.role_of("c") == Role::Val || *p.role_of("c") == Role::Test);
  EXPECT_FALSE(p.role_of("d").has_value());
  // boundaries are half-open from above
  std::vector<Station> edge{with_quality("x", 0.80), with_quality("y", 0.70), with_quality("z", 0.60)};
  auto pe = partition_stations(edge, th);
  EXPECT_EQ(pe.role_of("x"), Role::Backbone);
  EXPECT_EQ(pe.role_of("y"), Role::Train);
  EXPECT_TRUE(pe.role_of("z").has_value());
}

TEST(Partition, AllPerfectGoesToBackbone) {
  std::vector<Station> st;
  for (int i = 0; i < 20; ++i) st.push_back(with_quality("s" + std::to_string(i), 1.0));
  auto p = partition_stations(st, {});
  EXPECT_EQ(p.backbone.size(), 20u);
  EXPECT_TRUE(p.train.empty() && p.val.empty() && p.test.empty());
}

TEST(Partition, EmptyBackboneFails) {
  std::vector<Station> st{with_quality("a", 0.75)};
  EXPECT_THROW(partition_stations(st, {}), PartitionError);
}

TEST(Partition, SeededSplitIsDeterministicAndDisjoint) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  std::vector<Station> st;
  std::set<std::string> ids;
  for (int i = 0; i < 300; ++i) {
    st.push_back(with_quality("s" + std::to_string(i), u(rng)));
    ids.insert(st.back().id);
  }
  PartitionThresholds th;
  th.seed = 11;
  auto a = partition_stations(st, th);
  auto b = partition_stations(st, th);
  EXPECT_EQ(a, b);
  EXPECT_NO_THROW(a.validate(ids));
  EXPECT_FALSE(a.val.empty());
  EXPECT_FALSE(a.test.empty());
  th.seed = 12;
  EXPECT_NE(partition_stations(st, th).val, a.val);
}

TEST(Partition, OverlapRejected) {
  Partition p;
  p.backbone = {"a"};
  p.train = {"a"};
  EXPECT_THROW(p.validate({"a"}), PartitionError);
  Partition q;
  q.backbone = {"zz"};
  EXPECT_THROW(q.validate({"a"}), PartitionError);
}
