#ifndef SCHEMARL_ENVS_HPP_
#define SCHEMARL_ENVS_HPP_

// Deterministic desk-scale bimanual task simulators. Contact physics is
// replaced by geometric success predicates; every family ends with a sparse
// binary reward.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "schemarl/pamdp.hpp"

namespace schemarl {

// Geometric tolerances of the success predicates. The lift threshold is
// fixed by the task definition; everything else is a calibration knob.
struct EnvConfig {
  static constexpr double kDeg = std::numbers::pi / 180.0;

  double lift_threshold = 0.25;
  double table_z = 0.0;
  double home_z = 0.3;

  // bar
  double bar_width = 0.05;
  double bar_grasp_yaw_tol = 20.0 * kDeg;
  double bar_min_lever = 0.05;
  double bar_lever_balance = 0.1;  // fraction of bar length
  double bar_lift_balance = 0.05;

  // ball
  double ball_grasp_scale = 2.0;  // grasp tolerance = scale * sqrt(friction) * radius
  double support_band = 0.03;
  double support_yaw_tol = 30.0 * kDeg;
  double approach_factor = 2.0;  // approach within factor * radius of the center

  // bottle and corkscrew base
  double side_grasp_margin = 0.02;
  double side_grasp_angle_tol = std::numbers::pi / 3.0;
  double corkscrew_base_radius = 0.03;

  // corkscrew handle
  double engage_tol = 0.03;
  double handle_yaw_tol = 30.0 * kDeg;
  double handle_approach = 0.1;
  double rotate_axis_tol = 0.03;
  double rotate_radius_tol = 0.035;
};

struct EndEffector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
  bool holding = false;
  bool operator==(const EndEffector&) const = default;
};

struct GraspRecord {
  bool valid = false;
  Skill skill = Skill::kNoOp;
  double px = 0.0;
  double py = 0.0;
  // Signed offset along the bar axis from the bar center.
  double lever = 0.0;
  bool operator==(const GraspRecord&) const = default;
};

// Object geometry by family:
//   bar:       geometry = {length, mass, width}, yaw = bar axis
//   ball:      geometry = {radius, friction, 0}
//   bottle:    geometry = {base radius, cap radius, 0}
//   corkscrew: geometry = {handle length, base radius, 0}, yaw = handle
//              direction; (x, y) is the base axis.
struct ObjectState {
  double x = 0.5;
  double y = 0.5;
  double z = 0.0;
  double yaw = 0.0;
  std::array<double, 3> geometry{};
  // Cap (bottle) or handle (corkscrew) angle relative to the base.
  double joint_angle = 0.0;
  bool displaced = false;
  bool operator==(const ObjectState&) const = default;
};

struct WorldState {
  TaskFamily family = TaskFamily::kLateralLifting;
  ObjectState object;
  std::array<EndEffector, 2> ee{};
  int timestep = 0;
  bool base_held = false;
  bool support_formed = false;
  std::array<GraspRecord, 2> grasp{};
  // Step of each arm's latest approach go-to-pose, -1 if none.
  std::array<int, 2> approach_step{-1, -1};
  // Ball support contact or corkscrew handle-tip engagement.
  std::array<bool, 2> engaged{};
  // Lift distance executed by each arm in the latest step, -1 if none.
  std::array<double, 2> last_lift{-1.0, -1.0};
  // A skill ran without its precondition; the episode cannot succeed.
  bool faulted = false;
  bool success = false;

  bool operator==(const WorldState&) const = default;
};

struct StepResult {
  WorldState state;
  double reward = 0.0;
  bool done = false;
};

enum class Encoding { kLowDim, kRaster };

std::string_view encoding_name(Encoding encoding);
Encoding parse_encoding(std::string_view name);

inline constexpr int kLowDimSize = 19;
inline constexpr int kRasterSide = 16;
inline constexpr int kRasterChannels = 4;
inline constexpr int kRasterSize = kRasterChannels * kRasterSide * kRasterSide;

int observation_size(Encoding encoding);

struct Observation {
  Encoding encoding = Encoding::kLowDim;
  std::vector<double> data;
};

// Home poses: left arm faces +x, right arm faces -x.
EndEffector home_pose(Arm arm, const EnvConfig& cfg = {});

WorldState reset(const TaskSpec& spec, std::uint64_t seed, const EnvConfig& cfg = {});

// Applies both arms' skills for one timestep. Throws ContractViolation on a
// finished episode, a skill outside the vocabulary or a wrong argument count.
StepResult step(const TaskSpec& spec, const WorldState& state, const JointAction& action,
                const EnvConfig& cfg = {});

bool success_bar(const WorldState& state, const EnvConfig& cfg = {});
bool success_ball(const WorldState& state, const EnvConfig& cfg = {});
bool success_bottle(const WorldState& state, const EnvConfig& cfg = {});
bool success_corkscrew(const WorldState& state, const EnvConfig& cfg = {});
bool task_success(const WorldState& state, const EnvConfig& cfg = {});

Observation observe(const WorldState& state, Encoding encoding, const EnvConfig& cfg = {});

// Arguments a privileged controller would pick for the given joint skill at
// the current state, in physical units.
JointAction solve_arguments(const TaskSpec& spec, const WorldState& state, int joint_index,
                            const EnvConfig& cfg = {});

// Anchor-relative helpers shared with the solver and tests.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
};
Point2 corkscrew_base(const ObjectState& object);
Point2 corkscrew_tip(const ObjectState& object);

// One line per step: timestep, skill names, arguments, flags, reward.
std::string format_trace_line(int timestep, const JointAction& action, const WorldState& after,
                              double reward);

}  // namespace schemarl

#endif  // SCHEMARL_ENVS_HPP_
