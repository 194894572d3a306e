#include "standin/traffic.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <limits>
#include <fstream>
#include <set>
#include <sstream>

namespace standin::traffic {

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

char to_char(Heading h) {
  switch (h) {
    case Heading::N: return 'N';
    case Heading::E: return 'E';
    case Heading::S: return 'S';
    case Heading::W: return 'W';
  }
  return '?';
}

Heading heading_from_char(char c) {
  switch (c) {
    case 'N': return Heading::N;
    case 'E': return Heading::E;
    case 'S': return Heading::S;
    case 'W': return Heading::W;
  }
  throw Error(ErrorKind::MalformedSpec, std::string("unknown heading: ") + c);
}

Heading opposite(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 2) % 4); }
Heading clockwise(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }
bool perpendicular(Heading a, Heading b) { return (static_cast<int>(a) + static_cast<int>(b)) % 2 == 1; }

GridPos step(GridPos p, Heading h) {
  switch (h) {
    case Heading::N: return {p.x, p.y - 1};
    case Heading::E: return {p.x + 1, p.y};
    case Heading::S: return {p.x, p.y + 1};
    case Heading::W: return {p.x - 1, p.y};
  }
  return p;
}

int chebyshev(GridPos a, GridPos b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

// ---------------------------------------------------------------------------
// RoadNetwork
// ---------------------------------------------------------------------------

RoadNetwork::RoadNetwork(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1)
    throw Error(ErrorKind::MalformedSpec, "network dimensions must be positive");
  cells_.assign(static_cast<std::size_t>(width) * height, CellType::Blocked);
  allowed_.assign(cells_.size(), 0);
}

void RoadNetwork::set_cell(GridPos p, CellType type, unsigned allowed_mask) {
  if (!in_bounds(p)) throw Error(ErrorKind::MalformedSpec, "cell out of bounds");
  if (type != CellType::Blocked && allowed_mask == 0)
    throw Error(ErrorKind::MalformedSpec, "road cells need at least one allowed heading");
  cells_[index(p)] = type;
  allowed_[index(p)] = type == CellType::Blocked ? 0 : allowed_mask;
}

void RoadNetwork::set_signal(GridPos p, Signal signal) {
  if (!in_bounds(p) || cell(p) != CellType::Intersection)
    throw Error(ErrorKind::MalformedSpec, "signals attach to intersection cells");
  int period = 0;
  for (const auto& phase : signal.phases) {
    if (phase.duration < 1)
      throw Error(ErrorKind::MalformedSpec, "signal phase durations must be >= 1");
    period += phase.duration;
  }
  if (period < 1) throw Error(ErrorKind::MalformedSpec, "signal needs at least one phase");
  signal.period = period;
  signals_[index(p)] = std::move(signal);
}

const Signal* RoadNetwork::signal_at(GridPos p) const {
  auto it = signals_.find(index(p));
  return it == signals_.end() ? nullptr : &it->second;
}

bool RoadNetwork::signal_red(GridPos p, Heading h, std::uint64_t tick) const {
  const Signal* signal = signal_at(p);
  if (!signal) return false;
  int phase_tick = static_cast<int>(tick % static_cast<std::uint64_t>(signal->period));
  for (const auto& phase : signal->phases) {
    if (phase_tick < phase.duration)
      return (phase.allowed_mask & (1u << static_cast<int>(h))) == 0;
    phase_tick -= phase.duration;
  }
  return false;
}

bool RoadNetwork::edge(GridPos c, Heading h) const {
  if (!drivable(c)) return false;
  const GridPos d = step(c, h);
  if (!drivable(d)) return false;
  if (!heading_allowed(d, h)) return false;
  return cell(c) == CellType::Intersection || heading_allowed(c, h);
}

std::vector<int> RoadNetwork::distance_field(GridPos dest) const {
  std::vector<int> dist(cells_.size(), -1);
  if (!drivable(dest)) return dist;
  // BFS from the destination over reversed legal steps.
  std::deque<GridPos> queue;
  dist[index(dest)] = 0;
  queue.push_back(dest);
  while (!queue.empty()) {
    const GridPos d = queue.front();
    queue.pop_front();
    for (int hi = 0; hi < 4; ++hi) {
      const auto h = static_cast<Heading>(hi);
      const GridPos c = step(d, opposite(h));  // candidate predecessor via heading h
      if (!in_bounds(c)) continue;
      if (!edge(c, h)) continue;
      if (step(c, h) != d) continue;
      if (dist[index(c)] >= 0) continue;
      dist[index(c)] = dist[index(d)] + 1;
      queue.push_back(c);
    }
  }
  return dist;
}

bool RoadNetwork::reachable(GridPos from, GridPos to) const {
  if (!drivable(from) || !drivable(to)) return false;
  const auto dist = distance_field(to);
  return dist[static_cast<std::size_t>(from.y) * width_ + from.x] >= 0;
}

// ---------------------------------------------------------------------------
// Network parsing
// ---------------------------------------------------------------------------

namespace {

constexpr unsigned kAllHeadings = 0b1111;

unsigned mask_of(Heading h) { return 1u << static_cast<int>(h); }

unsigned mask_from_spec(const std::string& spec) {
  unsigned mask = 0;
  for (char c : spec) mask |= mask_of(heading_from_char(c));
  return mask;
}

}  // namespace

RoadNetwork build_network(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int v_max = 1, a_max = 1, rho = 4;
  std::uint64_t horizon = 50;
  struct SignalLine {
    GridPos pos;
    std::vector<SignalPhase> phases;
  };
  std::vector<SignalLine> signal_lines;
  std::vector<std::array<int, 4>> checks;
  std::vector<std::string> grid;
  bool in_map = false;
  int schema_version = -1;

  while (std::getline(is, line)) {
    if (in_map) {
      if (!line.empty()) grid.push_back(line);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "schema_version") {
      ls >> schema_version;
    } else if (key == "v_max") {
      ls >> v_max;
    } else if (key == "a_max") {
      ls >> a_max;
    } else if (key == "rho") {
      ls >> rho;
    } else if (key == "horizon") {
      ls >> horizon;
    } else if (key == "signal") {
      // signal <x> <y> <dur>:<headings> [<dur>:<headings> ...]
      SignalLine sl;
      ls >> sl.pos.x >> sl.pos.y;
      std::string phase_spec;
      while (ls >> phase_spec) {
        const auto colon = phase_spec.find(':');
        if (colon == std::string::npos)
          throw Error(ErrorKind::MalformedSpec, "signal phase must be duration:headings");
        SignalPhase phase;
        phase.duration = std::stoi(phase_spec.substr(0, colon));
        phase.allowed_mask = mask_from_spec(phase_spec.substr(colon + 1));
        sl.phases.push_back(phase);
      }
      if (sl.phases.empty())
        throw Error(ErrorKind::MalformedSpec, "signal line without phases");
      signal_lines.push_back(std::move(sl));
    } else if (key == "check") {
      std::array<int, 4> pair{};
      ls >> pair[0] >> pair[1] >> pair[2] >> pair[3];
      checks.push_back(pair);
    } else if (key == "map") {
      in_map = true;
    } else {
      throw Error(ErrorKind::MalformedSpec, "unknown network header key: " + key);
    }
    if (!in_map && ls.fail())
      throw Error(ErrorKind::MalformedSpec, "malformed network header line: " + line);
  }

  if (grid.empty()) throw Error(ErrorKind::MalformedSpec, "network has no map section");
  const int height = static_cast<int>(grid.size());
  const int width = static_cast<int>(grid[0].size());
  for (const auto& row : grid) {
    if (static_cast<int>(row.size()) != width)
      throw Error(ErrorKind::MalformedSpec, "ragged map rows");
  }

  RoadNetwork network(width, height);
  network.v_max = v_max;
  network.a_max = a_max;
  network.rho = rho;
  network.horizon = horizon;
  if (v_max < 1 || a_max < 1 || rho < 1)
    throw Error(ErrorKind::MalformedSpec, "v_max, a_max and rho must be >= 1");

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const GridPos p{x, y};
      switch (grid[y][x]) {
        case '#': network.set_cell(p, CellType::Blocked, 0); break;
        case '.': network.set_cell(p, CellType::Road, kAllHeadings); break;
        case '+': network.set_cell(p, CellType::Intersection, kAllHeadings); break;
        case '>': network.set_cell(p, CellType::Road, mask_of(Heading::E)); break;
        case '<': network.set_cell(p, CellType::Road, mask_of(Heading::W)); break;
        case '^': network.set_cell(p, CellType::Road, mask_of(Heading::N)); break;
        case 'v': network.set_cell(p, CellType::Road, mask_of(Heading::S)); break;
        default:
          throw Error(ErrorKind::MalformedSpec,
                      std::string("unknown map character: ") + grid[y][x]);
      }
    }
  }
  for (auto& sl : signal_lines) {
    Signal signal;
    signal.phases = std::move(sl.phases);
    network.set_signal(sl.pos, std::move(signal));
  }
  for (const auto& pair : checks) {
    const GridPos from{pair[0], pair[1]};
    const GridPos to{pair[2], pair[3]};
    if (!network.drivable(from) || !network.drivable(to))
      throw Error(ErrorKind::MalformedSpec, "check pair names a blocked cell");
    if (!network.reachable(from, to))
      throw Error(ErrorKind::UnreachablePair,
                  "declared pair (" + std::to_string(from.x) + "," + std::to_string(from.y) +
                      ") -> (" + std::to_string(to.x) + "," + std::to_string(to.y) +
                      ") is unreachable");
  }
  return network;
}

RoadNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open network file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return build_network(buffer.str());
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

Value scenario_to_json(const DrivingScenario& scenario) {
  Value vehicles = Value::array();
  for (const auto& v : scenario.vehicles) {
    vehicles.push_back(Value{{"ox", v.origin.x},
                             {"oy", v.origin.y},
                             {"speed", v.initial_speed},
                             {"dx", v.destination.x},
                             {"dy", v.destination.y}});
  }
  return Value{{"horizon", scenario.horizon}, {"vehicles", vehicles}};
}

DrivingScenario scenario_from_json(const Value& v) {
  DrivingScenario scenario;
  scenario.horizon = v.at("horizon").get<std::uint64_t>();
  for (const auto& veh : v.at("vehicles")) {
    VehicleSpec spec;
    spec.origin = {veh.at("ox").get<int>(), veh.at("oy").get<int>()};
    spec.initial_speed = veh.at("speed").get<int>();
    spec.destination = {veh.at("dx").get<int>(), veh.at("dy").get<int>()};
    scenario.vehicles.push_back(spec);
  }
  return scenario;
}

DrivingScenario parse_scenario(const std::string& text) {
  DrivingScenario scenario;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "horizon") {
      ls >> scenario.horizon;
    } else if (key == "vehicle") {
      VehicleSpec spec;
      ls >> spec.origin.x >> spec.origin.y >> spec.initial_speed >> spec.destination.x >>
          spec.destination.y;
      scenario.vehicles.push_back(spec);
    } else if (key == "schema_version") {
      int version = 0;
      ls >> version;
    } else {
      throw Error(ErrorKind::MalformedSpec, "unknown scenario key: " + key);
    }
    if (ls.fail()) throw Error(ErrorKind::MalformedSpec, "malformed scenario line: " + line);
  }
  return scenario;
}

DrivingScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

// ---------------------------------------------------------------------------
// Trace encoding
// ---------------------------------------------------------------------------

namespace {

Value states_to_observation(const std::vector<VehicleState>& states) {
  Value vehicles = Value::array();
  for (const auto& s : states) {
    vehicles.push_back(Value::array(
        {s.pos.x, s.pos.y, s.speed, std::string(1, to_char(s.heading)), s.arrived}));
  }
  return Value{{"vehicles", vehicles}};
}

std::vector<VehicleState> observation_to_states(const Value& obs) {
  std::vector<VehicleState> states;
  for (const auto& v : obs.at("vehicles")) {
    VehicleState s;
    s.pos = {v.at(0).get<int>(), v.at(1).get<int>()};
    s.speed = v.at(2).get<int>();
    const auto h = v.at(3).get<std::string>();
    if (h.size() != 1) throw Error(ErrorKind::NotATrafficRun, "bad heading field");
    s.heading = heading_from_char(h[0]);
    s.arrived = v.at(4).get<bool>();
    states.push_back(s);
  }
  return states;
}

}  // namespace

TrafficTrace decode_traffic_run(const Run& run) {
  TrafficTrace trace;
  try {
    for (const auto& step : run.steps) {
      trace.ticks.push_back(step.tick);
      trace.states.push_back(observation_to_states(step.observation));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::NotATrafficRun,
                std::string("run does not carry traffic observations: ") + e.what());
  }
  for (const auto& row : trace.states) {
    if (row.size() != trace.states.front().size())
      throw Error(ErrorKind::NotATrafficRun, "vehicle count varies across ticks");
  }
  trace.vehicle_count = trace.states.empty() ? 0 : trace.states.front().size();
  return trace;
}

std::optional<std::uint64_t> TrafficTrace::arrival_tick(std::size_t vehicle) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i][vehicle].arrived) return ticks[i];
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Observation / action marshalling
// ---------------------------------------------------------------------------

Value observation_to_json(const TrafficObservation& obs) {
  Value path = Value::array();
  for (const auto& c : obs.path) {
    path.push_back(Value{{"x", c.pos.x},
                         {"y", c.pos.y},
                         {"occupied", c.occupied},
                         {"occupant_heading", std::string(1, to_char(c.occupant_heading))},
                         {"occupant_arrived", c.occupant_arrived},
                         {"intersection", c.intersection},
                         {"signal_red", c.signal_red}});
  }
  Value visible = Value::array();
  for (const auto& v : obs.visible) {
    visible.push_back(Value{{"x", v.pos.x},
                            {"y", v.pos.y},
                            {"speed", v.speed},
                            {"heading", std::string(1, to_char(v.heading))},
                            {"arrived", v.arrived}});
  }
  return Value{{"self",
                Value{{"x", obs.self_pos.x},
                      {"y", obs.self_pos.y},
                      {"speed", obs.self_speed},
                      {"heading", std::string(1, to_char(obs.self_heading))}}},
               {"route",
                Value{{"next_heading", std::string(1, to_char(obs.route_heading))},
                      {"dist_to_dest", obs.dist_to_destination}}},
               {"path", path},
               {"visible", visible},
               {"limits", Value{{"v_max", obs.v_max}, {"a_max", obs.a_max}, {"rho", obs.rho}}}};
}

TrafficObservation observation_from_json(const Value& v) {
  TrafficObservation obs;
  const auto& self = v.at("self");
  obs.self_pos = {self.at("x").get<int>(), self.at("y").get<int>()};
  obs.self_speed = self.at("speed").get<int>();
  obs.self_heading = heading_from_char(self.at("heading").get<std::string>().at(0));
  const auto& route = v.at("route");
  obs.route_heading = heading_from_char(route.at("next_heading").get<std::string>().at(0));
  obs.dist_to_destination = route.at("dist_to_dest").get<int>();
  for (const auto& c : v.at("path")) {
    PathCellView cell;
    cell.pos = {c.at("x").get<int>(), c.at("y").get<int>()};
    cell.occupied = c.at("occupied").get<bool>();
    cell.occupant_heading = heading_from_char(c.at("occupant_heading").get<std::string>().at(0));
    cell.occupant_arrived = c.at("occupant_arrived").get<bool>();
    cell.intersection = c.at("intersection").get<bool>();
    cell.signal_red = c.at("signal_red").get<bool>();
    obs.path.push_back(cell);
  }
  for (const auto& e : v.at("visible")) {
    VehicleEcho echo;
    echo.pos = {e.at("x").get<int>(), e.at("y").get<int>()};
    echo.speed = e.at("speed").get<int>();
    echo.heading = heading_from_char(e.at("heading").get<std::string>().at(0));
    echo.arrived = e.at("arrived").get<bool>();
    obs.visible.push_back(echo);
  }
  const auto& limits = v.at("limits");
  obs.v_max = limits.at("v_max").get<int>();
  obs.a_max = limits.at("a_max").get<int>();
  obs.rho = limits.at("rho").get<int>();
  return obs;
}

Value action_to_json(const TrafficAction& action) {
  Value v{{"accel", action.accel}};
  if (action.turn) {
    v["turn"] = std::string(1, to_char(*action.turn));
  } else {
    v["turn"] = nullptr;
  }
  return v;
}

TrafficAction action_from_json(const Value& v) {
  TrafficAction action;
  action.accel = v.at("accel").get<int>();
  if (action.accel < -1 || action.accel > 1)
    throw Error(ErrorKind::MalformedSpec, "action accel must be -1, 0 or 1");
  if (v.contains("turn") && !v.at("turn").is_null()) {
    action.turn = heading_from_char(v.at("turn").get<std::string>().at(0));
  }
  return action;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

int braking_distance(int v, int a_max) {
  int d = 0;
  for (int s = v - a_max; s > 0; s -= a_max) d += s;
  return d;
}

namespace {

class PolicySystem final : public SystemUnderTest {
 public:
  explicit PolicySystem(std::shared_ptr<const DriverPolicy> policy)
      : policy_(std::move(policy)),
        stimulus_alphabet_(kObservationAlphabet),
        response_alphabet_(kActionAlphabet) {}

  const std::string& name() const override { return policy_->name(); }
  const std::string& stimulus_alphabet() const override { return stimulus_alphabet_; }
  const std::string& response_alphabet() const override { return response_alphabet_; }
  void reset(std::uint64_t) override {}
  Value react(const Value& stimulus) override {
    return action_to_json(policy_->decide(observation_from_json(stimulus)));
  }
  std::unique_ptr<SystemUnderTest> clone() const override {
    return std::make_unique<PolicySystem>(policy_);
  }

 private:
  std::shared_ptr<const DriverPolicy> policy_;
  std::string stimulus_alphabet_;
  std::string response_alphabet_;
};

/// Number of free path cells before the first obstruction, or the full
/// lookahead when nothing obstructs. Obstruction predicate supplied by the
/// policy.
template <typename Obstructed>
int free_gap(const TrafficObservation& obs, Obstructed obstructed) {
  for (std::size_t i = 0; i < obs.path.size(); ++i) {
    if (obstructed(obs.path[i], obs)) return static_cast<int>(i);
  }
  // Nothing obstructs within the lookahead; beyond it nothing is known, so
  // the gap is capped at the observation radius.
  return std::max(static_cast<int>(obs.path.size()), obs.rho);
}

bool right_approach_vehicle(const TrafficObservation& obs, const PathCellView& cell) {
  // Entry heading into this intersection along the observed path.
  Heading entry = obs.route_heading;
  for (std::size_t i = 0; i < obs.path.size(); ++i) {
    if (obs.path[i].pos == cell.pos) {
      const GridPos prev = i == 0 ? obs.self_pos : obs.path[i - 1].pos;
      if (cell.pos.x > prev.x) entry = Heading::E;
      else if (cell.pos.x < prev.x) entry = Heading::W;
      else if (cell.pos.y > prev.y) entry = Heading::S;
      else entry = Heading::N;
      break;
    }
  }
  const Heading right = clockwise(entry);
  for (const auto& v : obs.visible) {
    if (v.arrived) continue;
    if (v.heading != opposite(right)) continue;
    // On the right-hand approach: some positive number of steps from the
    // intersection along the right direction.
    GridPos probe = cell.pos;
    for (int k = 1; k <= obs.rho; ++k) {
      probe = step(probe, right);
      if (v.pos == probe) return true;
    }
  }
  return false;
}

class CautiousPolicy final : public DriverPolicy {
 public:
  const std::string& name() const override { return name_; }

  TrafficAction decide(const TrafficObservation& obs) const override {
    const int gap = free_gap(obs, [](const PathCellView& cell, const TrafficObservation& o) {
      if (cell.occupied) return true;
      if (cell.intersection && cell.signal_red) return true;
      if (cell.intersection && !cell.signal_red && right_approach_vehicle(o, cell)) return true;
      return false;
    });
    // Largest reachable speed whose doubled stopping distance fits the gap;
    // the doubling covers an oncoming vehicle braking symmetrically.
    int chosen = std::max(0, obs.self_speed - obs.a_max);
    for (int accel = -1; accel <= 1; ++accel) {
      const int v = std::clamp(obs.self_speed + accel * obs.a_max, 0, obs.v_max);
      if (2 * (v + braking_distance(v, obs.a_max)) <= gap && v > chosen) chosen = v;
    }
    TrafficAction action;
    if (chosen > obs.self_speed) action.accel = 1;
    else if (chosen < obs.self_speed) action.accel = -1;
    else action.accel = 0;
    action.turn = obs.route_heading;
    return action;
  }

 private:
  std::string name_ = "cautious";
};

class GreedyPolicy final : public DriverPolicy {
 public:
  const std::string& name() const override { return name_; }

  TrafficAction decide(const TrafficObservation& obs) const override {
    const bool crossing_visible = std::any_of(
        obs.visible.begin(), obs.visible.end(), [&](const VehicleEcho& v) {
          return !v.arrived && perpendicular(v.heading, obs.self_heading);
        });
    const int gap = free_gap(obs, [&](const PathCellView& cell, const TrafficObservation&) {
      if (cell.occupied) return true;
      // Red signals matter only when crossing traffic is actually visible.
      if (cell.intersection && cell.signal_red && crossing_visible) return true;
      return false;
    });
    const int v_des = std::clamp(obs.self_speed + obs.a_max, 0, obs.v_max);
    TrafficAction action;
    action.accel = (gap <= v_des + braking_distance(v_des, obs.a_max)) ? -1 : 1;
    action.turn = obs.route_heading;
    return action;
  }

 private:
  std::string name_ = "greedy";
};

}  // namespace

std::unique_ptr<SystemUnderTest> make_policy_system(std::shared_ptr<const DriverPolicy> policy) {
  return std::make_unique<PolicySystem>(std::move(policy));
}

BuiltinPolicies builtin_policies() {
  return {std::make_shared<CautiousPolicy>(), std::make_shared<GreedyPolicy>()};
}

// ---------------------------------------------------------------------------
// Traffic context
// ---------------------------------------------------------------------------

namespace {

struct SimVehicle {
  GridPos pos;
  int speed = 0;
  Heading heading = Heading::N;
  bool arrived = false;
  GridPos destination;
  std::vector<int> dist;  // distance field to destination
};

class TrafficContext final : public Context {
 public:
  TrafficContext(std::shared_ptr<const RoadNetwork> network, std::size_t n, int v_max, int a_max,
                 int rho, std::optional<std::vector<Value>> enumeration)
      : network_(std::move(network)),
        arity_(n),
        v_max_(v_max),
        a_max_(a_max),
        rho_(rho),
        name_("traffic(n=" + std::to_string(n) + ")"),
        stimulus_alphabet_(kObservationAlphabet),
        response_alphabet_(kActionAlphabet) {
    if (v_max_ < 1 || a_max_ < 1 || rho_ < 1)
      throw Error(ErrorKind::Precondition, "v_max, a_max and rho must be >= 1");
    auto validator = [this](const Value& payload) { return validate_payload(payload); };
    if (enumeration) {
      input_ = DomainDescriptor::finite("scenarios(n=" + std::to_string(n) + ")",
                                        std::move(*enumeration));
    } else {
      auto sampler = [this](Rng& rng) { return sample_payload(rng); };
      input_ = DomainDescriptor::structured("scenarios(n=" + std::to_string(n) + ")", validator,
                                            sampler);
    }
    output_ = DomainDescriptor::structured("trajectories", [](const Value&) { return true; },
                                           nullptr);
  }

  const std::string& name() const override { return name_; }
  std::size_t arity() const override { return arity_; }
  const DomainDescriptor& input_domain() const override { return input_; }
  const DomainDescriptor& output_domain() const override { return output_; }
  bool memoryless() const override { return false; }
  const std::string& stimulus_alphabet() const override { return stimulus_alphabet_; }
  const std::string& response_alphabet() const override { return response_alphabet_; }

  Run apply(std::span<SystemUnderTest* const> systems, const TestCase& testcase,
            std::uint64_t seed) const override {
    DrivingScenario scenario = scenario_from_json(testcase.payload);
    check_scenario(scenario);
    return simulate(systems, scenario, seed);
  }

 private:
  bool validate_payload(const Value& payload) const {
    try {
      check_scenario(scenario_from_json(payload));
      return true;
    } catch (const std::exception&) {
      return false;
    }
  }

  void check_scenario(const DrivingScenario& scenario) const {
    if (scenario.vehicles.size() != arity_)
      throw Error(ErrorKind::ArityMismatch,
                  "scenario has " + std::to_string(scenario.vehicles.size()) +
                      " vehicles, context arity is " + std::to_string(arity_));
    std::set<std::pair<int, int>> origins;
    for (const auto& v : scenario.vehicles) {
      if (!network_->drivable(v.origin) || !network_->drivable(v.destination))
        throw Error(ErrorKind::MalformedSpec, "origin or destination is not a road cell");
      if (v.initial_speed < 0 || v.initial_speed > v_max_)
        throw Error(ErrorKind::MalformedSpec, "initial speed outside [0, v_max]");
      if (!origins.insert({v.origin.x, v.origin.y}).second)
        throw Error(ErrorKind::MalformedSpec, "vehicle origins must be pairwise distinct");
      if (!network_->reachable(v.origin, v.destination))
        throw Error(ErrorKind::UnreachablePair, "destination unreachable from origin");
    }
  }

  Value sample_payload(Rng& rng) const {
    std::vector<GridPos> road;
    for (int y = 0; y < network_->height(); ++y) {
      for (int x = 0; x < network_->width(); ++x) {
        if (network_->drivable({x, y})) road.push_back({x, y});
      }
    }
    DrivingScenario scenario;
    scenario.horizon = network_->horizon;
    for (int attempt = 0; attempt < 10'000; ++attempt) {
      scenario.vehicles.clear();
      std::set<std::pair<int, int>> used;
      bool ok = true;
      for (std::size_t i = 0; i < arity_; ++i) {
        VehicleSpec spec;
        spec.origin = road[rng.index(road.size())];
        if (!used.insert({spec.origin.x, spec.origin.y}).second) {
          ok = false;
          break;
        }
        spec.destination = road[rng.index(road.size())];
        spec.initial_speed = static_cast<int>(rng.below(v_max_ + 1));
        if (!network_->reachable(spec.origin, spec.destination)) {
          ok = false;
          break;
        }
        scenario.vehicles.push_back(spec);
      }
      if (ok) return scenario_to_json(scenario);
    }
    throw Error(ErrorKind::Precondition, "could not sample a valid scenario");
  }

  Heading route_heading(const SimVehicle& v, GridPos at, std::optional<Heading> prev) const {
    // Probe the previous heading first so ties keep direction; then N,E,S,W.
    std::vector<Heading> order;
    if (prev) order.push_back(*prev);
    for (int hi = 0; hi < 4; ++hi) {
      const auto h = static_cast<Heading>(hi);
      if (!prev || h != *prev) order.push_back(h);
    }
    std::optional<Heading> best;
    int best_dist = std::numeric_limits<int>::max();
    for (Heading h : order) {
      if (!network_->edge(at, h)) continue;
      const GridPos next = step(at, h);
      const int d = v.dist[static_cast<std::size_t>(next.y) * network_->width() + next.x];
      if (d < 0) continue;
      if (d < best_dist) {
        best = h;
        best_dist = d;
      }
    }
    return best.value_or(prev.value_or(Heading::N));
  }

  TrafficObservation observe(const std::vector<SimVehicle>& vehicles, std::size_t self,
                             std::uint64_t tick) const {
    const SimVehicle& me = vehicles[self];
    TrafficObservation obs;
    obs.self_pos = me.pos;
    obs.self_speed = me.speed;
    obs.self_heading = me.heading;
    obs.route_heading = route_heading(me, me.pos, me.heading);
    obs.dist_to_destination =
        me.dist[static_cast<std::size_t>(me.pos.y) * network_->width() + me.pos.x];
    obs.v_max = v_max_;
    obs.a_max = a_max_;
    obs.rho = rho_;

    // Route preview: up to rho cells ahead following route headings.
    GridPos cur = me.pos;
    Heading h = me.heading;
    for (int k = 0; k < rho_; ++k) {
      if (cur == me.destination) break;
      const Heading use = route_heading(me, cur, h);
      if (!network_->edge(cur, use)) break;
      const GridPos next = step(cur, use);
      PathCellView cell;
      cell.pos = next;
      cell.intersection = network_->cell(next) == CellType::Intersection;
      cell.signal_red = network_->signal_red(next, use, tick);
      for (std::size_t j = 0; j < vehicles.size(); ++j) {
        if (j == self) continue;
        if (vehicles[j].pos == next) {
          cell.occupied = true;
          cell.occupant_heading = vehicles[j].heading;
          cell.occupant_arrived = vehicles[j].arrived;
        }
      }
      obs.path.push_back(cell);
      cur = next;
      h = use;
    }
    for (std::size_t j = 0; j < vehicles.size(); ++j) {
      if (j == self) continue;
      if (chebyshev(vehicles[j].pos, me.pos) <= rho_) {
        obs.visible.push_back(
            {vehicles[j].pos, vehicles[j].speed, vehicles[j].heading, vehicles[j].arrived});
      }
    }
    return obs;
  }

  Run simulate(std::span<SystemUnderTest* const> systems, const DrivingScenario& scenario,
               std::uint64_t seed) const {
    std::vector<SimVehicle> vehicles;
    vehicles.reserve(scenario.vehicles.size());
    for (const auto& spec : scenario.vehicles) {
      SimVehicle v;
      v.pos = spec.origin;
      v.speed = spec.initial_speed;
      v.destination = spec.destination;
      v.dist = network_->distance_field(spec.destination);
      v.arrived = spec.origin == spec.destination;
      if (v.arrived) v.speed = 0;
      v.heading = route_heading(v, v.pos, std::nullopt);
      vehicles.push_back(std::move(v));
    }

    Run run;
    run.seed = seed;
    auto snapshot = [&](std::uint64_t tick) {
      std::vector<VehicleState> states;
      states.reserve(vehicles.size());
      for (const auto& v : vehicles) states.push_back({v.pos, v.speed, v.heading, v.arrived});
      run.steps.push_back({tick, states_to_observation(states)});
    };
    snapshot(0);

    const auto all_arrived = [&] {
      return std::all_of(vehicles.begin(), vehicles.end(),
                         [](const SimVehicle& v) { return v.arrived; });
    };

    for (std::uint64_t tick = 1; tick <= scenario.horizon && !all_arrived(); ++tick) {
      // Phase 1: observe and decide on the start-of-tick state.
      std::vector<TrafficAction> actions(vehicles.size());
      for (std::size_t i = 0; i < vehicles.size(); ++i) {
        if (vehicles[i].arrived) continue;
        const Value stimulus = observation_to_json(observe(vehicles, i, tick - 1));
        actions[i] = action_from_json(systems[i]->react(stimulus));
      }

      // Phase 2: desired paths under terrain constraints.
      std::vector<std::vector<GridPos>> paths(vehicles.size());
      std::vector<Heading> end_heading(vehicles.size());
      for (std::size_t i = 0; i < vehicles.size(); ++i) {
        end_heading[i] = vehicles[i].heading;
        if (vehicles[i].arrived) continue;
        const int desired =
            std::clamp(vehicles[i].speed + actions[i].accel * a_max_, 0, v_max_);
        GridPos cur = vehicles[i].pos;
        Heading h = vehicles[i].heading;
        for (int s = 0; s < desired; ++s) {
          Heading use;
          if (network_->cell(cur) == CellType::Intersection && actions[i].turn &&
              network_->edge(cur, *actions[i].turn)) {
            use = *actions[i].turn;
          } else {
            use = route_heading(vehicles[i], cur, h);
          }
          if (!network_->edge(cur, use)) break;  // dead end: forced stop
          cur = step(cur, use);
          h = use;
          paths[i].push_back(cur);
          if (cur == vehicles[i].destination) break;  // stop at the destination
        }
        end_heading[i] = h;
      }

      // Phase 3: simultaneous movement with fixed-priority conflict
      // resolution on final cells. Arrived vehicles hold their cells.
      std::set<std::pair<int, int>> claimed;
      for (const auto& v : vehicles) {
        if (v.arrived) claimed.insert({v.pos.x, v.pos.y});
      }
      for (std::size_t i = 0; i < vehicles.size(); ++i) {
        if (vehicles[i].arrived) continue;
        auto& path = paths[i];
        while (!path.empty() && claimed.count({path.back().x, path.back().y})) {
          path.pop_back();  // blocked mover brakes in place
        }
        const GridPos final_pos = path.empty() ? vehicles[i].pos : path.back();
        claimed.insert({final_pos.x, final_pos.y});
        vehicles[i].speed = static_cast<int>(path.size());
        vehicles[i].pos = final_pos;
        if (!path.empty()) vehicles[i].heading = end_heading[i];
        if (vehicles[i].pos == vehicles[i].destination) {
          vehicles[i].arrived = true;
          vehicles[i].speed = 0;
        }
      }
      snapshot(tick);
    }
    run.terminated = true;
    return run;
  }

  std::shared_ptr<const RoadNetwork> network_;
  std::size_t arity_;
  int v_max_;
  int a_max_;
  int rho_;
  std::string name_;
  std::string stimulus_alphabet_;
  std::string response_alphabet_;
  DomainDescriptor input_;
  DomainDescriptor output_;
};

}  // namespace

std::unique_ptr<Context> make_traffic_context(std::shared_ptr<const RoadNetwork> network,
                                              std::size_t n, int v_max, int a_max, int rho) {
  return std::make_unique<TrafficContext>(std::move(network), n, v_max, a_max, rho, std::nullopt);
}

std::unique_ptr<Context> make_traffic_context_enumerated(
    std::shared_ptr<const RoadNetwork> network, std::size_t n, int v_max, int a_max, int rho,
    std::vector<Value> scenario_payloads) {
  return std::make_unique<TrafficContext>(std::move(network), n, v_max, a_max, rho,
                                          std::move(scenario_payloads));
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

Verdict collision_free(const Run& run) {
  const TrafficTrace trace = decode_traffic_run(run);
  for (std::size_t t = 0; t < trace.states.size(); ++t) {
    const auto& row = trace.states[t];
    for (std::size_t i = 0; i < row.size(); ++i) {
      for (std::size_t j = i + 1; j < row.size(); ++j) {
        if (row[i].pos == row[j].pos) {
          std::ostringstream os;
          os << "vehicles " << i << " and " << j << " share cell (" << row[i].pos.x << ","
             << row[i].pos.y << ") at tick " << trace.ticks[t];
          return fail_verdict(os.str());
        }
        if (t > 0) {
          const auto& prev = trace.states[t - 1];
          if (row[i].pos == prev[j].pos && row[j].pos == prev[i].pos &&
              row[i].pos != prev[i].pos) {
            std::ostringstream os;
            os << "vehicles " << i << " and " << j << " passed through each other between ticks "
               << trace.ticks[t - 1] << " and " << trace.ticks[t];
            return fail_verdict(os.str());
          }
        }
      }
    }
  }
  return pass_verdict();
}

Verdict no_congestion(const Run& run, std::uint64_t deadline) {
  const TrafficTrace trace = decode_traffic_run(run);
  std::vector<std::size_t> late;
  for (std::size_t i = 0; i < trace.vehicle_count; ++i) {
    const auto arrival = trace.arrival_tick(i);
    if (!arrival || *arrival > deadline) late.push_back(i);
  }
  if (late.empty()) return pass_verdict();
  std::ostringstream os;
  os << "vehicles late past deadline " << deadline << ":";
  for (std::size_t i : late) os << ' ' << i;
  return fail_verdict(os.str());
}

std::unique_ptr<Property> collision_free_property() {
  return std::make_unique<LambdaProperty>(
      "collision-free", [](const TestCase&, const Run& run) { return collision_free(run); });
}

std::unique_ptr<Property> no_congestion_property(std::uint64_t deadline) {
  return std::make_unique<LambdaProperty>(
      "no-congestion(" + std::to_string(deadline) + ")",
      [deadline](const TestCase&, const Run& run) { return no_congestion(run, deadline); });
}

// ---------------------------------------------------------------------------
// Scenario classifier
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> band_labels(std::size_t band_count, bool density) {
  static const std::vector<std::string> density_names = {"low", "med", "high"};
  static const std::vector<std::string> length_names = {"short", "mid", "long"};
  const auto& names = density ? density_names : length_names;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < band_count; ++i) {
    if (band_count == 2 && density) {
      labels.push_back(i == 0 ? "low" : "high");
    } else if (band_count == 2 && !density) {
      labels.push_back(i == 0 ? "short" : "long");
    } else if (band_count <= names.size()) {
      labels.push_back(names[i]);
    } else {
      labels.push_back((density ? "d" : "l") + std::to_string(i));
    }
  }
  return labels;
}

}  // namespace

EquivalenceClassifier scenario_classifier(std::shared_ptr<const RoadNetwork> network,
                                          const ScenarioBands& bands) {
  const auto density_labels = band_labels(bands.density_cuts.size() + 1, true);
  const auto length_labels = band_labels(bands.length_cuts.size() + 1, false);

  EquivalenceClassifier classifier;
  classifier.name = "scenario-bands";
  std::set<std::string> universe;
  for (const auto& d : density_labels) {
    for (const auto& l : length_labels) universe.insert(d + "," + l);
  }
  classifier.universe = std::move(universe);

  classifier.classify = [network, bands, density_labels, length_labels](const TestCase& tc) {
    const DrivingScenario scenario = scenario_from_json(tc.payload);
    const int n = static_cast<int>(scenario.vehicles.size());
    std::size_t d_band = bands.density_cuts.size();
    for (std::size_t i = 0; i < bands.density_cuts.size(); ++i) {
      if (n <= bands.density_cuts[i]) {
        d_band = i;
        break;
      }
    }
    double mean_length = 0.0;
    if (!scenario.vehicles.empty()) {
      double total = 0.0;
      for (const auto& v : scenario.vehicles) {
        const auto field = network->distance_field(v.destination);
        const int d =
            field[static_cast<std::size_t>(v.origin.y) * network->width() + v.origin.x];
        total += d < 0 ? 0.0 : static_cast<double>(d);
      }
      mean_length = total / static_cast<double>(scenario.vehicles.size());
    }
    std::size_t l_band = bands.length_cuts.size();
    for (std::size_t i = 0; i < bands.length_cuts.size(); ++i) {
      if (mean_length <= bands.length_cuts[i]) {
        l_band = i;
        break;
      }
    }
    return density_labels[d_band] + "," + length_labels[l_band];
  };
  return classifier;
}

// ---------------------------------------------------------------------------
// Crossing fixture
// ---------------------------------------------------------------------------

const char* const kCrossingNetworkText =
    "schema_version 1\n"
    "v_max 2\n"
    "a_max 1\n"
    "rho 6\n"
    "horizon 40\n"
    "check 0 7 14 7\n"
    "check 7 0 7 14\n"
    "map\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n"
    ".......+.......\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n"
    "#######.#######\n";

CrossingFixture crossing_fixture() {
  CrossingFixture fixture;
  fixture.network = std::make_shared<RoadNetwork>(build_network(kCrossingNetworkText));
  fixture.v_max = fixture.network->v_max;
  fixture.a_max = fixture.network->a_max;
  fixture.rho = fixture.network->rho;
  fixture.horizon = fixture.network->horizon;
  return fixture;
}

namespace {

struct Arm {
  char label;
  GridPos origin_base;  // offset 0 position
  GridPos offset_dir;   // direction of increasing offset (toward the center)
  GridPos destination;
};

const std::array<Arm, 4>& crossing_arms() {
  static const std::array<Arm, 4> arms = {{
      {'W', {0, 7}, {1, 0}, {14, 7}},
      {'E', {14, 7}, {-1, 0}, {0, 7}},
      {'N', {7, 0}, {0, 1}, {7, 14}},
      {'S', {7, 14}, {0, -1}, {7, 0}},
  }};
  return arms;
}

}  // namespace

std::vector<std::pair<std::string, Value>> enumerate_crossing_scenarios(
    const CrossingFixture& fixture, std::size_t n) {
  if (n > 4) throw Error(ErrorKind::Precondition, "the fixture has four approach arms");
  constexpr int kOffsets = 3;
  const int speeds = fixture.v_max + 1;
  const auto& arms = crossing_arms();

  std::vector<std::vector<std::size_t>> arm_sets;
  std::vector<std::size_t> current;
  std::function<void(std::size_t)> choose = [&](std::size_t start) {
    if (current.size() == n) {
      arm_sets.push_back(current);
      return;
    }
    for (std::size_t a = start; a < arms.size(); ++a) {
      current.push_back(a);
      choose(a + 1);
      current.pop_back();
    }
  };
  choose(0);

  std::vector<std::pair<std::string, Value>> out;
  // Odometer over (offset, speed) per chosen arm.
  for (const auto& set : arm_sets) {
    std::vector<int> state(set.size() * 2, 0);  // [offset0, speed0, offset1, speed1, ...]
    for (;;) {
      DrivingScenario scenario;
      scenario.horizon = fixture.horizon;
      std::string id;
      for (std::size_t i = 0; i < set.size(); ++i) {
        const Arm& arm = arms[set[i]];
        const int offset = state[2 * i];
        const int speed = state[2 * i + 1];
        VehicleSpec spec;
        spec.origin = {arm.origin_base.x + offset * arm.offset_dir.x,
                       arm.origin_base.y + offset * arm.offset_dir.y};
        spec.initial_speed = speed;
        spec.destination = arm.destination;
        scenario.vehicles.push_back(spec);
        if (i) id += '+';
        id += arm.label;
        id += std::to_string(offset);
        id += 's';
        id += std::to_string(speed);
      }
      out.emplace_back(id.empty() ? "empty" : id, scenario_to_json(scenario));
      // Advance the odometer.
      std::size_t pos = 0;
      for (; pos < state.size(); ++pos) {
        const int limit = (pos % 2 == 0) ? kOffsets : speeds;
        if (++state[pos] < limit) break;
        state[pos] = 0;
      }
      if (pos == state.size()) break;
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::unique_ptr<Context> make_crossing_context(const CrossingFixture& fixture, std::size_t n) {
  std::vector<Value> payloads;
  for (auto& [id, payload] : enumerate_crossing_scenarios(fixture, n)) {
    payloads.push_back(payload);
  }
  return make_traffic_context_enumerated(fixture.network, n, fixture.v_max, fixture.a_max,
                                         fixture.rho, std::move(payloads));
}

}  // namespace standin::traffic
