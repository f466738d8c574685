#include <gtest/gtest.h>

#include <filesystem>

#include "uwbtr/errors.hpp"
#include "uwbtr/sequence_tracker.hpp"

namespace uwbtr {
namespace {

Vec3 at(double x) { return {x, 0.0, 2.0}; }

AnchorMap map_with_ids(const std::vector<int>& ids) {
  AnchorMap map;
  for (std::size_t i = 0; i < ids.size(); ++i) map.append(at(static_cast<double>(i + 1)), ids[i]);
  return map;
}

AnchorInitializer counting(int& calls, double x) {
  return [&calls, x](int) {
    ++calls;
    return at(x);
  };
}

TEST(AnchorMap, AppendNumbersEncountersFromOne) {
  AnchorMap map;
  EXPECT_EQ(map.append(at(1), 4), 1);
  EXPECT_EQ(map.append(at(2), 5), 2);
  EXPECT_EQ(map.append(at(3), 4), 3);
  EXPECT_EQ(map.most_recent(4).ell, 3);
  EXPECT_THROW(map.most_recent(9), Error);
}

TEST(AnchorMap, JsonRoundTrip) {
  const AnchorMap map = map_with_ids({1, 2, 1, 3});
  const AnchorMap back = AnchorMap::from_json(map.to_json());
  ASSERT_EQ(back.size(), 4u);
  for (int ell = 1; ell <= 4; ++ell) {
    EXPECT_EQ(back.at_ell(ell).id, map.at_ell(ell).id);
    EXPECT_EQ(back.at_ell(ell).position, map.at_ell(ell).position);
  }
  const std::string path = (std::filesystem::temp_directory_path() / "uwbtr_map.json").string();
  map.save(path);
  EXPECT_EQ(AnchorMap::load(path).size(), 4u);
  std::filesystem::remove(path);
  EXPECT_THROW(AnchorMap::from_json(R"([{"position":[0,0,1],"id":1,"ell":2}])"), ConfigError);
}

TEST(TeachTracker, ActiveAnchorReturnsMostRecentEntry) {
  AnchorMap map;
  map.append(at(1), 1);
  map.append(at(2), 3);
  map.append(at(3), 2);
  map.append(at(4), 4);
  map.append(at(5), 5);
  map.append(at(6), 6);
  map.append(at(7), 3);
  ActiveSet active{3};
  int calls = 0;
  const TeachLookup r = teach_sequence_tracker(3, {3}, active, map, counting(calls, 99));
  EXPECT_EQ(r.position, at(7));
  EXPECT_FALSE(r.initialized);
  EXPECT_EQ(map.size(), 7u);
  EXPECT_EQ(calls, 0);
}

TEST(TeachTracker, NewAnchorAppendsNextEncounter) {
  AnchorMap map = map_with_ids({1, 2, 3, 4});
  ActiveSet active{4};
  int calls = 0;
  const TeachLookup r = teach_sequence_tracker(5, {4, 5}, active, map, counting(calls, 42));
  EXPECT_TRUE(r.initialized);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(map.size(), 5u);
  EXPECT_EQ(map.at_ell(5).id, 5);
  EXPECT_EQ(map.at_ell(5).position, at(42));
  EXPECT_EQ(active, (ActiveSet{4, 5}));
}

TEST(TeachTracker, LeavingRangeForcesReinitialization) {
  AnchorMap map;
  ActiveSet active;
  int calls = 0;
  teach_sequence_tracker(1, {1}, active, map, counting(calls, 1));
  teach_sequence_tracker(1, {1, 2}, active, map, counting(calls, 1));
  teach_sequence_tracker(2, {2}, active, map, counting(calls, 2));
  EXPECT_EQ(active, (ActiveSet{2}));
  const TeachLookup again = teach_sequence_tracker(1, {1, 2}, active, map, counting(calls, 5));
  EXPECT_TRUE(again.initialized);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(map.size(), 3u);
  EXPECT_EQ(map.at_ell(3).id, 1);
  EXPECT_EQ(map.most_recent(1).position, at(5));
}

TEST(TeachTracker, ContinuousContactInitializesOnce) {
  AnchorMap map;
  ActiveSet active;
  int calls = 0;
  for (int k = 0; k < 200; ++k) teach_sequence_tracker(7, {7}, active, map, counting(calls, 1));
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(map.size(), 1u);
}

TEST(TeachTracker, InitializerFailureLeavesStateUntouched) {
  AnchorMap map = map_with_ids({1});
  ActiveSet active{1};
  const AnchorInitializer failing = [](int) -> Vec3 { throw NonConvergence("no"); };
  EXPECT_THROW(teach_sequence_tracker(2, {2}, active, map, failing), NonConvergence);
  EXPECT_EQ(map.size(), 1u);
  EXPECT_EQ(active, (ActiveSet{1}));
}

TEST(TeachTracker, EllIncreasesByOnePerInitialization) {
  const std::vector<std::vector<int>> script = {{1}, {1, 2}, {2}, {2, 3}, {3}, {3, 1}, {1}, {1, 2}};
  AnchorMap map;
  ActiveSet active;
  int calls = 0;
  for (const auto& in_range : script) {
    for (int id : in_range) teach_sequence_tracker(id, in_range, active, map, counting(calls, 0));
  }
  EXPECT_EQ(map.size(), 5u);
  for (int ell = 1; ell <= 5; ++ell) EXPECT_EQ(map.at_ell(ell).ell, ell);
  EXPECT_EQ(static_cast<int>(map.size()), calls);
}

TEST(RepeatLookup, NewDetectionAdvancesCursor) {
  const AnchorMap map = map_with_ids({1, 2, 3, 4, 5});
  RepeatTrackerState s;
  s.bind(map, 3);
  const Vec3 p = repeat_sequence_lookup(4, {3, 4}, s, map);
  EXPECT_EQ(p, map.at_ell(4).position);
  EXPECT_EQ(s.cursor, 4);
  EXPECT_EQ(s.active, (ActiveSet{3, 4}));
}

TEST(RepeatLookup, ActiveAnchorKeepsItsMatch) {
  const AnchorMap map = map_with_ids({1, 2, 1});
  RepeatTrackerState s;
  s.bind(map, 1);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(repeat_sequence_lookup(1, {1}, s, map), map.at_ell(1).position);
  EXPECT_EQ(s.cursor, 1);
}

TEST(RepeatLookup, OutOfOrderDetectionThrowsWithoutChange) {
  const AnchorMap map = map_with_ids({1, 2, 3});
  RepeatTrackerState s;
  s.bind(map, 1);
  const RepeatTrackerState before = s;
  EXPECT_THROW(repeat_sequence_lookup(3, {1, 3}, s, map), IdMismatch);
  EXPECT_EQ(s.cursor, before.cursor);
  EXPECT_EQ(s.active, before.active);
}

TEST(RepeatLookup, SkipToleranceFindsLaterEntry) {
  const AnchorMap map = map_with_ids({1, 2, 3, 4});
  RepeatTrackerState s;
  s.bind(map, 1);
  EXPECT_EQ(repeat_sequence_lookup(3, {3}, s, map, 1), map.at_ell(3).position);
  EXPECT_EQ(s.cursor, 3);
  EXPECT_EQ(s.active, (ActiveSet{3}));
  EXPECT_TRUE(s.bound_ell.count(1) == 0);
}

TEST(RepeatLookup, RevisitBindsTheLaterEncounter) {
  const AnchorMap map = map_with_ids({1, 2, 1});
  RepeatTrackerState s;
  s.bind(map, 1);
  repeat_sequence_lookup(2, {2}, s, map);
  EXPECT_EQ(repeat_sequence_lookup(1, {1}, s, map), map.at_ell(3).position);
  EXPECT_EQ(s.cursor, 3);
  EXPECT_THROW(repeat_sequence_lookup(2, {2}, s, map), IdMismatch);
}

}  // namespace
}  // namespace uwbtr
