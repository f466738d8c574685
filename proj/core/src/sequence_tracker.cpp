#include "uwbtr/sequence_tracker.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uwbtr/errors.hpp"

namespace uwbtr {

int AnchorMap::append(const Vec3& position, int id) {
  const int ell = static_cast<int>(entries_.size()) + 1;
  entries_.push_back({position, id, ell});
  return ell;
}

const MapEntry& AnchorMap::most_recent(int id) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->id == id) return *it;
  }
  throw Error("anchor " + std::to_string(id) + " has no map entry");
}

std::string AnchorMap::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries_) {
    arr.push_back({{"position", {e.position.x(), e.position.y(), e.position.z()}},
                   {"id", e.id},
                   {"ell", e.ell}});
  }
  return arr.dump(2);
}

AnchorMap AnchorMap::from_json(const std::string& text) {
  const auto arr = nlohmann::json::parse(text);
  if (!arr.is_array()) throw ConfigError("anchor map must be a JSON array");
  AnchorMap map;
  for (const auto& item : arr) {
    const auto& p = item.at("position");
    MapEntry e{Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()),
               item.at("id").get<int>(), item.at("ell").get<int>()};
    if (e.ell != static_cast<int>(map.entries_.size()) + 1) {
      throw ConfigError("anchor map ell values must be consecutive from 1");
    }
    map.entries_.push_back(e);
  }
  return map;
}

void AnchorMap::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << to_json() << '\n';
}

AnchorMap AnchorMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

namespace {

bool contains(const std::vector<int>& ids, int id) {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

}  // namespace

TeachLookup teach_sequence_tracker(int anchor_id, const std::vector<int>& in_range_ids,
                                   ActiveSet& active, AnchorMap& map,
                                   const AnchorInitializer& initializer) {
  TeachLookup out;
  if (active.count(anchor_id)) {
    out.position = map.most_recent(anchor_id).position;
  } else {
    out.position = initializer(anchor_id);
    map.append(out.position, anchor_id);
    active.insert(anchor_id);
    out.initialized = true;
  }
  std::erase_if(active, [&](int id) { return !contains(in_range_ids, id); });
  return out;
}

void RepeatTrackerState::bind(const AnchorMap& map, int ell) {
  const MapEntry& e = map.at_ell(ell);
  active.insert(e.id);
  bound_ell[e.id] = ell;
  cursor = ell;
}

Vec3 repeat_sequence_lookup(int anchor_id, const std::vector<int>& in_range_ids,
                            RepeatTrackerState& state, const AnchorMap& map, int max_skip) {
  if (map.empty()) throw Error("repeat lookup needs a non-empty anchor map");
  Vec3 position;
  if (state.active.count(anchor_id)) {
    position = map.at_ell(state.bound_ell.at(anchor_id)).position;
  } else {
    int match = 0;
    const int last = static_cast<int>(map.size());
    for (int ell = state.cursor + 1; ell <= std::min(last, state.cursor + 1 + max_skip); ++ell) {
      if (map.at_ell(ell).id == anchor_id) {
        match = ell;
        break;
      }
    }
    if (match == 0) {
      throw IdMismatch("anchor " + std::to_string(anchor_id) +
                       " does not match the next map entry after ell=" +
                       std::to_string(state.cursor));
    }
    state.bind(map, match);
    position = map.at_ell(match).position;
  }
  std::erase_if(state.active, [&](int id) { return !contains(in_range_ids, id); });
  std::erase_if(state.bound_ell, [&](const auto& kv) { return !state.active.count(kv.first); });
  return position;
}

}  // namespace uwbtr
