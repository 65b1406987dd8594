#include "ilnet/scene/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ilnet/errors.hpp"

namespace ilnet::scene {
namespace {

using nlohmann::json;

const char* category_name(AgentCategory c) {
  switch (c) {
    case AgentCategory::kVehicle: return "vehicle";
    case AgentCategory::kPedestrian: return "pedestrian";
    case AgentCategory::kCyclist: return "cyclist";
  }
  return "vehicle";
}

const char* polyline_name(PolylineKind k) {
  switch (k) {
    case PolylineKind::kCenterline: return "centerline";
    case PolylineKind::kLeftBoundary: return "left_boundary";
    case PolylineKind::kRightBoundary: return "right_boundary";
  }
  return "centerline";
}

const char* link_name(LaneLinkType t) {
  switch (t) {
    case LaneLinkType::kPredecessor: return "predecessor";
    case LaneLinkType::kSuccessor: return "successor";
    case LaneLinkType::kNeighbor: return "neighbor";
  }
  return "successor";
}

double finite_or_throw(double v, const std::string& field) {
  if (!std::isfinite(v)) throw DataError("cannot serialize non-finite value in '" + field + "'");
  return v;
}

// Field access with a dotted path for error messages.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  const json& at(const std::string& key) const {
    if (!node_.is_object()) throw ParseError("'" + path_ + "' must be an object");
    auto it = node_.find(key);
    if (it == node_.end()) throw ParseError("missing field '" + join(key) + "'");
    return *it;
  }
  bool has(const std::string& key) const { return node_.is_object() && node_.contains(key); }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ParseError("field '" + join(key) + "' must be a number");
    return v.get<double>();
  }
  long long integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ParseError("field '" + join(key) + "' must be an integer");
    return v.get<long long>();
  }
  bool boolean(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_boolean()) throw ParseError("field '" + join(key) + "' must be a boolean");
    return v.get<bool>();
  }
  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ParseError("field '" + join(key) + "' must be a string");
    return v.get<std::string>();
  }
  const json& array(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw ParseError("field '" + join(key) + "' must be an array");
    return v;
  }
  Reader child(const std::string& key, std::size_t index) const {
    return Reader(at(key)[index], join(key) + "[" + std::to_string(index) + "]");
  }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& node_;
  std::string path_;
};

json points_to_json(const std::vector<geo::Point>& pts, const std::string& field) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({finite_or_throw(p.x, field), finite_or_throw(p.y, field)});
  return arr;
}

template <typename Enum>
Enum enum_from(const std::string& value, const std::string& field, std::initializer_list<std::pair<const char*, Enum>> table) {
  for (const auto& [name, e] : table) {
    if (value == name) return e;
  }
  throw ParseError("field '" + field + "' has unknown value '" + value + "'");
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON at line " + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string scenario_to_text(const Scenario& s) {
  json j;
  j["format"] = kScenarioFormat;
  j["version"] = kScenarioVersion;
  j["id"] = s.id;
  j["kind"] = kind_name(s.kind);
  j["sample_rate_hz"] = finite_or_throw(s.sample_rate_hz, "sample_rate_hz");
  j["history"] = s.history;
  j["future"] = s.future;
  j["focal_ids"] = s.focal_ids;
  json agents = json::array();
  for (const auto& a : s.agents) {
    json ja;
    ja["id"] = a.id;
    ja["category"] = category_name(a.category);
    ja["length"] = finite_or_throw(a.length, "length");
    ja["width"] = finite_or_throw(a.width, "width");
    json states = json::array();
    for (const auto& st : a.states) {
      states.push_back({{"x", finite_or_throw(st.position.x, "x")},
                        {"y", finite_or_throw(st.position.y, "y")},
                        {"heading", finite_or_throw(st.heading, "heading")},
                        {"speed", finite_or_throw(st.speed, "speed")},
                        {"velocity_dir", finite_or_throw(st.velocity_dir, "velocity_dir")},
                        {"observed", st.observed}});
    }
    ja["states"] = std::move(states);
    agents.push_back(std::move(ja));
  }
  j["agents"] = std::move(agents);
  json segs = json::array();
  for (const auto& seg : s.map.segments) {
    json js;
    js["id"] = seg.id;
    json pls = json::array();
    for (const auto& pl : seg.polylines) {
      pls.push_back({{"kind", polyline_name(pl.kind)}, {"points", points_to_json(pl.points, "points")}});
    }
    js["polylines"] = std::move(pls);
    json links = json::array();
    for (const auto& l : seg.links) {
      links.push_back({{"target", l.target_id}, {"type", link_name(l.type)}, {"hops", l.hops}});
    }
    js["links"] = std::move(links);
    segs.push_back(std::move(js));
  }
  j["map"] = {{"segments", std::move(segs)}};
  return j.dump(0) + "\n";
}

Scenario scenario_from_text(const std::string& text) {
  const json j = parse_json(text);
  Reader root(j, "");
  if (!j.is_object()) throw ParseError("scenario file must contain a JSON object");
  if (root.string("format") != kScenarioFormat) throw ParseError("field 'format' must be '" + std::string(kScenarioFormat) + "'");
  const long long version = root.integer("version");
  if (version != kScenarioVersion) {
    throw VersionError("scenario version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kScenarioVersion) + ")");
  }
  Scenario s;
  s.id = root.string("id");
  try {
    s.kind = kind_from_name(root.string("kind"));
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("field 'kind': ") + e.what());
  }
  s.sample_rate_hz = root.number("sample_rate_hz");
  s.history = static_cast<int>(root.integer("history"));
  s.future = static_cast<int>(root.integer("future"));
  const json& focal = root.array("focal_ids");
  for (std::size_t i = 0; i < focal.size(); ++i) {
    if (!focal[i].is_number_integer()) throw ParseError("field 'focal_ids[" + std::to_string(i) + "]' must be an integer");
    s.focal_ids.push_back(focal[i].get<int>());
  }
  const json& agents = root.array("agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    Reader ra = root.child("agents", i);
    AgentTrack a;
    a.id = static_cast<int>(ra.integer("id"));
    a.category = enum_from<AgentCategory>(ra.string("category"), ra.join("category"),
                                          {{"vehicle", AgentCategory::kVehicle},
                                           {"pedestrian", AgentCategory::kPedestrian},
                                           {"cyclist", AgentCategory::kCyclist}});
    a.length = ra.number("length");
    a.width = ra.number("width");
    const json& states = ra.array("states");
    for (std::size_t t = 0; t < states.size(); ++t) {
      Reader rs = ra.child("states", t);
      AgentState st;
      st.position = {rs.number("x"), rs.number("y")};
      st.heading = rs.number("heading");
      st.speed = rs.number("speed");
      st.velocity_dir = rs.number("velocity_dir");
      st.observed = rs.boolean("observed");
      a.states.push_back(st);
    }
    s.agents.push_back(std::move(a));
  }
  Reader rm(root.at("map"), "map");
  const json& segs = rm.array("segments");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    Reader rseg = rm.child("segments", i);
    LaneSegment seg;
    seg.id = static_cast<int>(rseg.integer("id"));
    const json& pls = rseg.array("polylines");
    for (std::size_t p = 0; p < pls.size(); ++p) {
      Reader rp = rseg.child("polylines", p);
      Polyline pl;
      pl.kind = enum_from<PolylineKind>(rp.string("kind"), rp.join("kind"),
                                        {{"centerline", PolylineKind::kCenterline},
                                         {"left_boundary", PolylineKind::kLeftBoundary},
                                         {"right_boundary", PolylineKind::kRightBoundary}});
      const json& pts = rp.array("points");
      for (std::size_t q = 0; q < pts.size(); ++q) {
        const json& pt = pts[q];
        if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
          throw ParseError("field '" + rp.join("points") + "[" + std::to_string(q) + "]' must be [x, y]");
        }
        pl.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
      }
      seg.polylines.push_back(std::move(pl));
    }
    const json& links = rseg.array("links");
    for (std::size_t l = 0; l < links.size(); ++l) {
      Reader rl = rseg.child("links", l);
      LaneLink link;
      link.target_id = static_cast<int>(rl.integer("target"));
      link.type = enum_from<LaneLinkType>(rl.string("type"), rl.join("type"),
                                          {{"predecessor", LaneLinkType::kPredecessor},
                                           {"successor", LaneLinkType::kSuccessor},
                                           {"neighbor", LaneLinkType::kNeighbor}});
      link.hops = static_cast<int>(rl.integer("hops"));
      seg.links.push_back(link);
    }
    s.map.segments.push_back(std::move(seg));
  }
  s.validate();
  return s;
}

void save_scenario(const std::filesystem::path& path, const Scenario& s) { write_file(path, scenario_to_text(s)); }

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return scenario_from_text(text);
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_manifest(const std::filesystem::path& path, const SplitManifest& m) {
  std::set<std::string> train(m.train.begin(), m.train.end());
  for (const auto& v : m.val) {
    if (train.count(v)) throw DataError("manifest: '" + v + "' is in both train and val");
  }
  json j;
  j["format"] = "ilnet-manifest";
  j["version"] = kScenarioVersion;
  j["seed"] = m.seed;
  j["kind_mix"] = m.kind_mix;
  j["train"] = m.train;
  j["val"] = m.val;
  write_file(path, j.dump(1) + "\n");
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const json j = parse_json(text);
  Reader root(j, "");
  if (root.string("format") != "ilnet-manifest") throw ParseError(path.string() + ": not a split manifest");
  const long long version = root.integer("version");
  if (version != kScenarioVersion) throw VersionError(path.string() + ": manifest version " + std::to_string(version) + " is not supported");
  SplitManifest m;
  const json& seed = root.at("seed");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) throw ParseError("field 'seed' must be an integer");
  m.seed = seed.get<std::uint64_t>();
  const json& mix = root.at("kind_mix");
  if (!mix.is_object()) throw ParseError("field 'kind_mix' must be an object");
  for (auto it = mix.begin(); it != mix.end(); ++it) {
    if (!it.value().is_number()) throw ParseError("field 'kind_mix." + it.key() + "' must be a number");
    m.kind_mix[it.key()] = it.value().get<double>();
  }
  for (const char* split : {"train", "val"}) {
    const json& arr = root.array(split);
    auto& dst = std::string(split) == "train" ? m.train : m.val;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) throw ParseError("field '" + std::string(split) + "[" + std::to_string(i) + "]' must be a string");
      dst.push_back(arr[i].get<std::string>());
    }
  }
  std::set<std::string> train(m.train.begin(), m.train.end());
  for (const auto& v : m.val) {
    if (train.count(v)) throw DataError(path.string() + ": '" + v + "' is in both train and val");
  }
  return m;
}

std::vector<Scenario> load_split(const std::filesystem::path& manifest_path, const std::string& split) {
  const SplitManifest m = load_manifest(manifest_path);
  const std::vector<std::string>* files = nullptr;
  if (split == "train") {
    files = &m.train;
  } else if (split == "val") {
    files = &m.val;
  } else {
    throw ArgumentError("unknown split '" + split + "'");
  }
  std::vector<Scenario> out;
  out.reserve(files->size());
  const auto base = manifest_path.parent_path();
  for (const auto& f : *files) out.push_back(load_scenario(base / f));
  return out;
}

}  // namespace ilnet::scene
