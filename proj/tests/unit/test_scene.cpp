#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ilnet/errors.hpp"
#include "ilnet/numerics/rng.hpp"
#include "ilnet/scene/challenging.hpp"
#include "ilnet/scene/generator.hpp"
#include "ilnet/scene/scenario_io.hpp"

using namespace ilnet;
using namespace ilnet::scene;

namespace {

Scenario single_agent(int history = 3, int future = 5) {
  Scenario s;
  s.id = "single";
  s.history = history;
  s.future = future;
  AgentTrack a;
  a.id = 7;
  for (int t = 0; t < history + future; ++t) {
    AgentState st;
    st.position = {0.2 * t, 0.1};
    st.speed = 2.0;
    st.heading = 0.0;
    st.velocity_dir = 0.0;
    a.states.push_back(st);
  }
  s.agents.push_back(a);
  s.focal_ids = {7};
  return s;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty-map single-agent scenario round trips") {
  const auto dir = temp_dir("ilnet_scene_rt");
  Scenario s = single_agent();
  s.agents[0].states[1].position.x = 0.1 + 0.2;  // not exactly representable in short decimal
  s.agents[0].states[2].heading = std::nextafter(1.0, 2.0);
  save_scenario(dir / "s.json", s);
  CHECK(load_scenario(dir / "s.json") == s);
  std::filesystem::remove_all(dir);
}

TEST_CASE("generated scenarios round trip bit-exactly") {
  for (int kind = 0; kind < 4; ++kind) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Scenario s = generate_scenario(static_cast<ScenarioKind>(kind), seed);
      const std::string text = scenario_to_text(s);
      const Scenario back = scenario_from_text(text);
      CHECK(back == s);
      CHECK(scenario_to_text(back) == text);
    }
  }
}

TEST_CASE("parse errors name the missing field") {
  std::string text = scenario_to_text(single_agent());
  const auto pos = text.find("\"heading\"");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 9, "\"headingX\"");
  try {
    scenario_from_text(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("agents[0].states[0].heading") != std::string::npos);
  }
  try {
    scenario_from_text("{\n\"format\": \"ilnet-scenario\",\n\"version\": 1,,\n}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::string other = scenario_to_text(single_agent());
  const auto vpos = other.find("\"version\": 1");
  REQUIRE(vpos != std::string::npos);
  other.replace(vpos, 12, "\"version\": 2");
  CHECK_THROWS_AS(scenario_from_text(other), VersionError);
}

TEST_CASE("generator is deterministic") {
  CHECK(scenario_to_text(generate_scenario(ScenarioKind::kFollow, 7)) ==
        scenario_to_text(generate_scenario(ScenarioKind::kFollow, 7)));
  CHECK(generate_scenario(ScenarioKind::kFollow, 7) != generate_scenario(ScenarioKind::kFollow, 8));
}

TEST_CASE("generator kind properties hold on scanned output") {
  constexpr double kPi = std::numbers::pi;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    for (int kind = 0; kind < 4; ++kind) {
      const Scenario s = generate_scenario(static_cast<ScenarioKind>(kind), seed);
      CAPTURE(s.id);
      REQUIRE_NOTHROW(s.validate());
      CHECK(s.agents.size() >= 2);
      CHECK(s.agents.size() <= 8);
      for (const auto& a : s.agents) {
        for (std::size_t t = 1; t < a.states.size(); ++t) {
          const double d = geo::distance(a.states[t - 1].position, a.states[t].position);
          CHECK(d <= 1.5 * a.states[t].speed * s.dt() + 1e-12);
          CHECK(a.states[t].speed >= 0.0);
        }
      }
      if (s.kind == ScenarioKind::kIntersection) {
        bool crossing = false;
        for (const auto& a : s.agents)
          for (const auto& b : s.agents)
            if (std::abs(geo::normalize_angle(a.states[0].heading - b.states[0].heading)) >= kPi / 3.0) crossing = true;
        CHECK(crossing);
      }
      if (s.kind == ScenarioKind::kIntersection || s.kind == ScenarioKind::kMerge) {
        int best = 0;
        for (std::size_t i = 0; i < s.agents.size(); ++i)
          for (std::size_t j = i + 1; j < s.agents.size(); ++j) {
            int count = 0;
            for (int t = 0; t < s.total_steps(); ++t)
              if (geo::distance(s.agents[i].states[t].position, s.agents[j].states[t].position) <= 5.0) ++count;
            best = std::max(best, count);
          }
        CHECK(2 * best >= s.total_steps());
      }
      if (s.kind == ScenarioKind::kCurve) {
        const auto& f = s.agents[*s.agent_index(s.focal_ids[0])];
        const auto a = f.states[0].position, b = f.states[s.history - 1].position, c = f.states.back().position;
        const double ang = std::abs(geo::normalize_angle(std::atan2(c.y - b.y, c.x - b.x) - std::atan2(b.y - a.y, b.x - a.x)));
        CHECK(ang * 180.0 / kPi >= 10.0);
      }
    }
  }
}

TEST_CASE("lane graph validation") {
  Scenario s = generate_scenario(ScenarioKind::kMerge, 1);
  s.map.segments[0].links.push_back({9999, LaneLinkType::kSuccessor, 1});
  CHECK_THROWS_AS(s.validate(), DataError);
  Scenario t = generate_scenario(ScenarioKind::kMerge, 1);
  t.map.segments[0].polylines.erase(t.map.segments[0].polylines.begin());
  CHECK_THROWS_AS(t.validate(), DataError);
}

TEST_CASE("constant velocity rollout") {
  Scenario s = single_agent(3, 5);
  for (auto& st : s.agents[0].states) {
    st.speed = 0.0;
    st.position = {4.0, -1.0};
  }
  for (const auto& p : constant_velocity_rollout(s.agents[0], 3, 5, 0.1)) CHECK(p == geo::Point{4.0, -1.0});

  const Scenario m = single_agent(3, 5);
  const auto r = constant_velocity_rollout(m.agents[0], 3, 5, 0.1);
  for (int f = 0; f < 5; ++f) CHECK(std::abs(r[f].x - (0.4 + 0.2 * (f + 1))) < 1e-12);

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    Scenario q = single_agent(4, 6);
    for (auto& st : q.agents[0].states) {
      st.position = {rng.uniform(-10, 10), rng.uniform(-10, 10)};
      st.speed = rng.uniform(0, 15);
      st.velocity_dir = rng.uniform(-3, 3);
    }
    const auto& last = q.agents[0].states[3];
    const auto out = constant_velocity_rollout(q.agents[0], 4, 6, 0.1);
    CHECK(std::abs(out.back().x - (last.position.x + 6 * 0.1 * last.speed * std::cos(last.velocity_dir))) < 1e-12);
    CHECK(std::abs(out.back().y - (last.position.y + 6 * 0.1 * last.speed * std::sin(last.velocity_dir))) < 1e-12);
  }

  Scenario few = single_agent(3, 5);
  few.agents[0].states[0].observed = false;
  few.agents[0].states[1].observed = false;
  CHECK_THROWS_AS(constant_velocity_rollout(few.agents[0], 3, 5, 0.1), DataError);
}

TEST_CASE("challenging filter") {
  Scenario straight = single_agent(10, 15);
  straight.kind = ScenarioKind::kFollow;
  CHECK(constant_velocity_fde(straight) < 1e-9);
  CHECK(select_challenging({straight}).empty());

  const ChallengeCriteria defaults;
  CHECK(defaults.min_cv_fde == 5.0);
  CHECK(defaults.min_interaction_steps == 25);
  CHECK(defaults.min_turn_deg == 10.0);

  // Relaxed thresholds so that the generated set contains positives.
  const ChallengeCriteria relaxed{1.0, 5, 5.0};
  std::vector<Scenario> pool;
  for (int i = 0; i < 200; ++i) pool.push_back(generate_scenario(static_cast<ScenarioKind>(i % 4), 1000 + i));
  for (const ChallengeCriteria& c : {defaults, relaxed}) {
    std::vector<std::size_t> ref;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const Scenario& s = pool[i];
      const AgentTrack& f = s.agents[*s.agent_index(s.focal_ids[0])];
      const auto& last = f.states[s.history - 1];
      const double tau = s.future * s.dt();
      const double ex = last.position.x + tau * last.speed * std::cos(last.velocity_dir);
      const double ey = last.position.y + tau * last.speed * std::sin(last.velocity_dir);
      const double fde = std::hypot(ex - f.states.back().position.x, ey - f.states.back().position.y);
      int inter = 0;
      for (const auto& o : s.agents) {
        if (o.id == f.id) continue;
        int count = 0;
        for (std::size_t t = 0; t < f.states.size(); ++t)
          if (std::hypot(o.states[t].position.x - f.states[t].position.x, o.states[t].position.y - f.states[t].position.y) <= 5.0) ++count;
        inter = std::max(inter, count);
      }
      const auto a = f.states[0].position, b = last.position, e = f.states.back().position;
      const double dot = (b.x - a.x) * (e.x - b.x) + (b.y - a.y) * (e.y - b.y);
      const double norm = std::hypot(b.x - a.x, b.y - a.y) * std::hypot(e.x - b.x, e.y - b.y);
      const double alpha = norm > 0 ? std::acos(std::clamp(dot / norm, -1.0, 1.0)) * 180.0 / std::numbers::pi : 0.0;
      if (s.kind == ScenarioKind::kIntersection && fde > c.min_cv_fde && inter >= c.min_interaction_steps && alpha >= c.min_turn_deg) {
        ref.push_back(i);
      }
    }
    CHECK(select_challenging(pool, c) == ref);
  }
  CHECK(!select_challenging(pool, relaxed).empty());
}

TEST_CASE("dataset generation and manifest") {
  const auto dir = temp_dir("ilnet_dataset");
  DatasetSpec spec;
  spec.num_train = 6;
  spec.num_val = 2;
  spec.seed = 1;
  const auto m = generate_dataset(dir / "a", spec);
  generate_dataset(dir / "b", spec);
  CHECK(m.train.size() == 6);
  CHECK(m.val.size() == 2);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file() || e.path().filename() == kManifestFileName) continue;
    ++files;
    const auto rel = std::filesystem::relative(e.path(), dir / "a");
    CHECK(read_all(e.path()) == read_all(dir / "b" / rel));
  }
  CHECK(files == m.train.size() + m.val.size());
  CHECK(load_manifest(dir / "a" / kManifestFileName) == m);
  CHECK(load_split(dir / "a" / kManifestFileName, "val").size() == 2);
  CHECK(spec.kind_mix.size() == 4);

  SplitManifest bad;
  bad.train = {"x.json"};
  bad.val = {"x.json"};
  CHECK_THROWS_AS(save_manifest(dir / "bad.json", bad), DataError);
  std::filesystem::remove_all(dir);
}
