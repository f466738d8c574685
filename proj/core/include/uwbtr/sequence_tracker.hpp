#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uwbtr/se_math.hpp"

namespace uwbtr {

struct MapEntry {
  Vec3 position = Vec3::Zero();
  int id = 0;
  int ell = 0;  ///< 1-based encounter index
};

/// Ordered anchor map; the same anchor id may appear several times, once per
/// encounter interval.
class AnchorMap {
 public:
  const std::vector<MapEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// Entry with encounter index ell (1-based).
  const MapEntry& at_ell(int ell) const { return entries_.at(static_cast<std::size_t>(ell - 1)); }

  /// Appends (position, id, n+1) and returns the new ell.
  int append(const Vec3& position, int id);
  /// Highest-ell entry for `id`; throws if absent.
  const MapEntry& most_recent(int id) const;

  std::string to_json() const;
  static AnchorMap from_json(const std::string& text);
  void save(const std::string& path) const;
  static AnchorMap load(const std::string& path);

 private:
  std::vector<MapEntry> entries_;
};

using ActiveSet = std::set<int>;

/// Initializes a newly detected anchor; may throw, in which case the tracker
/// state is left untouched.
using AnchorInitializer = std::function<Vec3(int anchor_id)>;

struct TeachLookup {
  Vec3 position = Vec3::Zero();
  bool initialized = false;  ///< true if this call added a map entry
};

/// Teach-pass sequence tracker: returns the most recent position of an active
/// anchor, or initializes and appends a new map entry; then drops active
/// anchors that are no longer in range.
TeachLookup teach_sequence_tracker(int anchor_id, const std::vector<int>& in_range_ids,
                                   ActiveSet& active, AnchorMap& map,
                                   const AnchorInitializer& initializer);

struct RepeatTrackerState {
  ActiveSet active;
  std::map<int, int> bound_ell;  ///< active anchor id -> matched map entry
  int cursor = 0;                ///< ell of the most recently bound entry (0: none)

  /// Binds map entry `ell` as the active match for its anchor.
  void bind(const AnchorMap& map, int ell);
};

/// Repeat-pass lookup: active anchors keep their bound entry; a new detection
/// advances the cursor to the next entry, which must carry the same id. With
/// max_skip > 0, up to that many entries may be skipped to find the id.
/// Throws IdMismatch (state unchanged) when no match is found.
Vec3 repeat_sequence_lookup(int anchor_id, const std::vector<int>& in_range_ids,
                            RepeatTrackerState& state, const AnchorMap& map, int max_skip = 0);

}  // namespace uwbtr
