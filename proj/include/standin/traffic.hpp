#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "standin/core.hpp"
#include "standin/partition.hpp"

namespace standin::traffic {

// ---------------------------------------------------------------------------
// Grid geometry
// ---------------------------------------------------------------------------

enum class Heading : int { N = 0, E = 1, S = 2, W = 3 };

char to_char(Heading h);
Heading heading_from_char(char c);
Heading opposite(Heading h);
Heading clockwise(Heading h);
bool perpendicular(Heading a, Heading b);

struct GridPos {
  int x = 0;
  int y = 0;

  bool operator==(const GridPos&) const = default;
  auto operator<=>(const GridPos&) const = default;
};

GridPos step(GridPos p, Heading h);
int chebyshev(GridPos a, GridPos b);

enum class CellType { Blocked, Road, Intersection };

struct SignalPhase {
  int duration = 1;          // ticks
  unsigned allowed_mask = 0;  // permitted entry headings (bit per Heading)
};

struct Signal {
  std::vector<SignalPhase> phases;
  int period = 1;
};

/// Grid road network with per-cell allowed headings, optional signals and
/// default dynamics parameters from the network file header.
class RoadNetwork {
 public:
  RoadNetwork(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(GridPos p) const {
    return p.x >= 0 && p.x < width_ && p.y >= 0 && p.y < height_;
  }
  CellType cell(GridPos p) const { return cells_[index(p)]; }
  unsigned allowed(GridPos p) const { return allowed_[index(p)]; }
  bool heading_allowed(GridPos p, Heading h) const {
    return (allowed(p) & (1u << static_cast<int>(h))) != 0;
  }
  bool drivable(GridPos p) const { return in_bounds(p) && cell(p) != CellType::Blocked; }

  void set_cell(GridPos p, CellType type, unsigned allowed_mask);
  void set_signal(GridPos p, Signal signal);
  const Signal* signal_at(GridPos p) const;
  /// True when entering cell p with heading h is forbidden by an active
  /// signal phase at the given tick. Cells without a signal are never red.
  bool signal_red(GridPos p, Heading h, std::uint64_t tick) const;

  /// One step of travel: leaving c with heading h is legal when the entered
  /// cell is drivable, admits h, and c either admits h itself or is an
  /// intersection (turns happen at intersections; all-heading road cells
  /// allow free turns implicitly).
  bool edge(GridPos c, Heading h) const;

  /// Cell distances to dest over the legal-step graph; unreachable cells get
  /// a negative value.
  std::vector<int> distance_field(GridPos dest) const;
  bool reachable(GridPos from, GridPos to) const;

  // Header defaults for contexts built from this network.
  int v_max = 1;
  int a_max = 1;
  int rho = 4;
  std::uint64_t horizon = 50;

 private:
  std::size_t index(GridPos p) const { return static_cast<std::size_t>(p.y) * width_ + p.x; }

  int width_;
  int height_;
  std::vector<CellType> cells_;
  std::vector<unsigned> allowed_;
  std::map<std::size_t, Signal> signals_;
};

/// Parses the plain-text network format: header lines `key value`, optional
/// `signal x y period spec` and `check x1 y1 x2 y2` lines, then `map`
/// followed by the grid ('#' blocked, '+' intersection, '.' road with all
/// headings, '<>^v' one-way road cells). Declared check pairs must be
/// reachable or the build fails.
RoadNetwork build_network(const std::string& text);
RoadNetwork load_network(const std::string& path);

// ---------------------------------------------------------------------------
// Scenarios and trajectories
// ---------------------------------------------------------------------------

struct VehicleSpec {
  GridPos origin;
  int initial_speed = 0;
  GridPos destination;
};

struct DrivingScenario {
  std::vector<VehicleSpec> vehicles;
  std::uint64_t horizon = 50;
};

Value scenario_to_json(const DrivingScenario& scenario);
DrivingScenario scenario_from_json(const Value& v);
/// Plain-text scenario format: header `horizon H`, then one `vehicle ox oy
/// speed dx dy` line per vehicle.
DrivingScenario parse_scenario(const std::string& text);
DrivingScenario load_scenario(const std::string& path);

struct VehicleState {
  GridPos pos;
  int speed = 0;
  Heading heading = Heading::N;
  bool arrived = false;
};

/// Decoded traffic run: one state row per recorded tick.
struct TrafficTrace {
  std::vector<std::uint64_t> ticks;
  std::vector<std::vector<VehicleState>> states;  // [tick][vehicle]
  std::size_t vehicle_count = 0;

  std::optional<std::uint64_t> arrival_tick(std::size_t vehicle) const;
};

/// Throws NotATrafficRun when the run does not carry traffic observations.
TrafficTrace decode_traffic_run(const Run& run);

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

struct PathCellView {
  GridPos pos;
  bool occupied = false;
  Heading occupant_heading = Heading::N;
  bool occupant_arrived = false;
  bool intersection = false;
  bool signal_red = false;  // for this vehicle's entry heading, current tick
};

struct VehicleEcho {
  GridPos pos;
  int speed = 0;
  Heading heading = Heading::N;
  bool arrived = false;
};

/// Everything a policy may base its decision on: own state, the route hint,
/// and cells/vehicles within the observation radius.
struct TrafficObservation {
  GridPos self_pos;
  int self_speed = 0;
  Heading self_heading = Heading::N;
  Heading route_heading = Heading::N;
  int dist_to_destination = 0;
  std::vector<PathCellView> path;    // along the route, up to rho cells
  std::vector<VehicleEcho> visible;  // within Chebyshev radius rho
  int v_max = 1;
  int a_max = 1;
  int rho = 1;
};

struct TrafficAction {
  int accel = 0;  // -1 brake, 0 hold, +1 accelerate (scaled by a_max)
  std::optional<Heading> turn;
};

Value observation_to_json(const TrafficObservation& obs);
TrafficObservation observation_from_json(const Value& v);
Value action_to_json(const TrafficAction& action);
TrafficAction action_from_json(const Value& v);

class DriverPolicy {
 public:
  virtual ~DriverPolicy() = default;
  virtual const std::string& name() const = 0;
  virtual TrafficAction decide(const TrafficObservation& obs) const = 0;
};

/// Wraps a policy as a SystemUnderTest speaking the traffic observation and
/// action alphabets.
std::unique_ptr<SystemUnderTest> make_policy_system(std::shared_ptr<const DriverPolicy> policy);

inline constexpr const char* kObservationAlphabet = "traffic-observation/v1";
inline constexpr const char* kActionAlphabet = "traffic-action/v1";

struct BuiltinPolicies {
  std::shared_ptr<const DriverPolicy> cautious;
  std::shared_ptr<const DriverPolicy> greedy;
};

/// greedy: shortest-path heading, accelerates to v_max unless a vehicle sits
/// within its braking distance, ignores signals when no crossing vehicle is
/// visible. cautious: obeys signals, yields to the right at unsignaled
/// intersections, and caps its speed so that twice its stopping distance fits
/// in the observed free gap.
BuiltinPolicies builtin_policies();

/// Distance covered while braking from speed v at a_max per tick, excluding
/// the current tick's movement.
int braking_distance(int v, int a_max);

// ---------------------------------------------------------------------------
// Context and properties
// ---------------------------------------------------------------------------

/// Synchronous tick simulation: all policies observe the start-of-tick state
/// and decide, then all vehicles move simultaneously. Same-cell conflicts on
/// final positions resolve by fixed priority (lower vehicle index first); a
/// blocked mover brakes in place. Swaps of adjacent vehicles are physically
/// possible and left to the collision property to judge.
std::unique_ptr<Context> make_traffic_context(std::shared_ptr<const RoadNetwork> network,
                                              std::size_t n, int v_max, int a_max, int rho);

/// Like make_traffic_context but with a finite-enumerable input domain; used
/// by the bundled fixture so exhaustive generation applies.
std::unique_ptr<Context> make_traffic_context_enumerated(
    std::shared_ptr<const RoadNetwork> network, std::size_t n, int v_max, int a_max, int rho,
    std::vector<Value> scenario_payloads);

/// Fail iff two vehicles occupy one cell at the same tick or swap adjacent
/// cells within one tick (pass-through); evidence names the first colliding
/// pair and tick.
Verdict collision_free(const Run& run);

/// Pass iff every vehicle arrives no later than the deadline tick.
Verdict no_congestion(const Run& run, std::uint64_t deadline);

std::unique_ptr<Property> collision_free_property();
std::unique_ptr<Property> no_congestion_property(std::uint64_t deadline);

// ---------------------------------------------------------------------------
// Scenario classifier
// ---------------------------------------------------------------------------

struct ScenarioBands {
  std::vector<int> density_cuts;      // vehicle-count upper bounds per band
  std::vector<double> length_cuts;    // mean shortest-route-length bounds
};

/// Classifies scenario payloads by (vehicle-density band, mean shortest
/// route-length band). Universe is the full band cross-product with equal
/// weights.
EquivalenceClassifier scenario_classifier(std::shared_ptr<const RoadNetwork> network,
                                          const ScenarioBands& bands);

// ---------------------------------------------------------------------------
// Bundled 4-way crossing fixture
// ---------------------------------------------------------------------------

/// Two single-lane bidirectional streets crossing mid-grid; v_max 2, a_max 1,
/// observation radius 6, horizon 40. The fixture's scenario space places one
/// vehicle per chosen approach arm (all arm subsets), with every combination
/// of three start offsets and initial speeds 0..2, destination straight
/// across.
struct CrossingFixture {
  std::shared_ptr<const RoadNetwork> network;
  int v_max = 2;
  int a_max = 1;
  int rho = 6;
  std::uint64_t horizon = 40;
};

extern const char* const kCrossingNetworkText;

CrossingFixture crossing_fixture();

/// All fixture scenarios with exactly n vehicles, with stable readable ids.
std::vector<std::pair<std::string, Value>> enumerate_crossing_scenarios(
    const CrossingFixture& fixture, std::size_t n);

std::unique_ptr<Context> make_crossing_context(const CrossingFixture& fixture, std::size_t n);

}  // namespace standin::traffic
