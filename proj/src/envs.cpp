#include "schemarl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "schemarl/random.hpp"

namespace schemarl {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAngleEps = 1e-9;

int idx(Arm arm) { return static_cast<int>(arm); }
Arm other(Arm arm) { return arm == Arm::kLeft ? Arm::kRight : Arm::kLeft; }

// Wraps to (-pi, pi].
double wrap(double a) {
  a = std::fmod(a + kPi, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a - kPi;
}

double wrap_positive(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0 ? a + kTwoPi : a;
}

// Smallest angle between two undirected axes.
double axis_gap(double a, double b) {
  double d = std::fabs(wrap(a - b));
  return d > kPi / 2 ? kPi - d : d;
}

double dist(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

double sample(Rng& rng, const Range& r) { return rng.uniform(r.lo, r.hi); }

bool arg_count_ok(Skill skill, const std::vector<double>& args) {
  return args.size() == skill_spec(skill).params.size();
}

// Facing direction of an arm at home.
double facing(Arm arm) { return arm == Arm::kLeft ? 0.0 : kPi; }

// Skills that keep an existing hold of the given kind.
bool keeps_hold(Skill hold, Skill next) {
  if (next == Skill::kNoOp) return true;
  if (hold == Skill::kTopGrasp) return next == Skill::kLift || next == Skill::kTwist;
  return false;
}

// Engagement (ball support contact, corkscrew tip contact) survives only
// no-op and the skill that acts through it.
bool keeps_engagement(TaskFamily family, Skill next) {
  if (next == Skill::kNoOp) return true;
  if (family == TaskFamily::kPicking) return next == Skill::kLift;
  if (family == TaskFamily::kRotating) return next == Skill::kRotate;
  return false;
}

Point2 bottle_center(const ObjectState& o) { return {o.x, o.y}; }

struct StepContext {
  const TaskSpec& spec;
  const EnvConfig& cfg;
  const WorldState& before;
  WorldState& s;
  const JointAction& action;
  int t;

  Skill skill(Arm a) const { return action.joint_skill.of(a); }
  const std::vector<double>& args(Arm a) const { return action.args(a); }
  Point2 target(Arm a) const {
    const auto& v = args(a);
    return {s.object.x + v[0], s.object.y + v[1]};
  }
};

// Grasp site of a bar for one arm: the quarter point on the arm's side, with
// its x-axis across the bar. Top-grasp offsets and z-orientation are
// expressed in this frame.
struct Frame {
  Point2 origin;
  double heading = 0.0;
  Point2 apply(double dx, double dy) const {
    const double c = std::cos(heading), s = std::sin(heading);
    return {origin.x + c * dx - s * dy, origin.y + s * dx + c * dy};
  }
};

Frame bar_site(const ObjectState& o, Arm a) {
  const double ux = std::cos(o.yaw), uy = std::sin(o.yaw);
  const bool positive_right = ux > 0 || (ux == 0 && uy > 0);
  const double sign = (a == Arm::kRight) == positive_right ? 1.0 : -1.0;
  const double q = o.geometry[0] / 4;
  return {{o.x + sign * q * ux, o.y + sign * q * uy}, o.yaw + kPi / 2};
}

// Lift and twist need a hold, rotate needs an engaged handle, grasps need an
// empty gripper. Violations fault the episode.
bool precondition_met(const WorldState& before, Arm a, Skill skill) {
  const int i = idx(a);
  const GraspRecord& g = before.grasp[i];
  switch (skill) {
    case Skill::kLift:
      return g.valid || before.engaged[i];
    case Skill::kTwist:
      return g.valid && g.skill == Skill::kTopGrasp;
    case Skill::kRotate:
      return before.engaged[i];
    case Skill::kTopGrasp:
    case Skill::kSideGrasp:
      return !g.valid;
    case Skill::kGoToPose:
    case Skill::kNoOp:
      return true;
  }
  return true;
}

void release(WorldState& s, Arm a) {
  const int i = idx(a);
  if (s.grasp[i].valid && s.grasp[i].skill == Skill::kSideGrasp) s.base_held = false;
  s.grasp[i] = GraspRecord{};
  s.ee[i].holding = false;
}

void release_phase(StepContext& c) {
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    const int i = idx(a);
    const Skill next = c.skill(a);
    if (c.s.grasp[i].valid && !keeps_hold(c.s.grasp[i].skill, next)) release(c.s, a);
    if (c.s.engaged[i] && !keeps_engagement(c.spec.family, next)) {
      c.s.engaged[i] = false;
      if (c.spec.family == TaskFamily::kPicking) c.s.support_formed = false;
    }
  }
}

void move_to(EndEffector& ee, Point2 p, double z, double yaw) {
  ee.x = p.x;
  ee.y = p.y;
  ee.z = z;
  ee.yaw = wrap_positive(yaw);
}

GraspRecord bar_top_grasp(const ObjectState& o, Point2 p, double yaw, const EnvConfig& cfg) {
  const double length = o.geometry[0];
  const double ux = std::cos(o.yaw), uy = std::sin(o.yaw);
  const double dx = p.x - o.x, dy = p.y - o.y;
  const double along = dx * ux + dy * uy;
  const double perp = -dx * uy + dy * ux;
  GraspRecord g;
  g.skill = Skill::kTopGrasp;
  g.px = p.x;
  g.py = p.y;
  g.lever = along;
  g.valid = std::fabs(perp) <= cfg.bar_width / 2 && std::fabs(along) <= length / 2 &&
            axis_gap(yaw, o.yaw + kPi / 2) <= cfg.bar_grasp_yaw_tol;
  return g;
}

double ball_grasp_tolerance(const ObjectState& o, const EnvConfig& cfg) {
  return cfg.ball_grasp_scale * std::sqrt(o.geometry[1]) * o.geometry[0];
}

// Side grasp on a cylindrical base; approach angle is relative to the arm's
// facing direction and must point roughly along home -> base.
bool side_grasp_ok(Arm a, Point2 base, double base_radius, Point2 p, double approach,
                   const EnvConfig& cfg) {
  if (dist(p.x, p.y, base.x, base.y) > base_radius + cfg.side_grasp_margin) return false;
  const EndEffector home = home_pose(a, cfg);
  const double line = std::atan2(base.y - home.y, base.x - home.x);
  const double wanted = wrap(line - facing(a));
  return std::fabs(wrap(approach - wanted)) <= cfg.side_grasp_angle_tol;
}

void grasp_phase(StepContext& c) {
  WorldState& s = c.s;
  const ObjectState& o = s.object;
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    const int i = idx(a);
    const Skill sk = c.skill(a);
    if (sk != Skill::kTopGrasp && sk != Skill::kSideGrasp) continue;
    Point2 p = c.target(a);
    double angle = c.args(a)[2];
    if (c.spec.family == TaskFamily::kLateralLifting) {
      const Frame site = bar_site(o, a);
      p = site.apply(c.args(a)[0], c.args(a)[1]);
      angle += site.heading;
    }
    GraspRecord g;
    g.skill = sk;
    g.px = p.x;
    g.py = p.y;
    switch (c.spec.family) {
      case TaskFamily::kLateralLifting:
        g = bar_top_grasp(o, p, angle, c.cfg);
        break;
      case TaskFamily::kPicking:
        // Only the left gripper's fingers span the ball from above.
        g.valid = a == Arm::kLeft &&
                  dist(p.x, p.y, o.x, o.y) <= ball_grasp_tolerance(o, c.cfg);
        break;
      case TaskFamily::kOpening:
        if (sk == Skill::kTopGrasp) {
          g.valid = dist(p.x, p.y, o.x, o.y) <= o.geometry[1];
        } else {
          g.valid = side_grasp_ok(a, bottle_center(o), o.geometry[0], p, angle, c.cfg);
        }
        break;
      case TaskFamily::kRotating:
        g.valid = side_grasp_ok(a, corkscrew_base(o), o.geometry[1], p, angle, c.cfg);
        break;
    }
    const double yaw = sk == Skill::kTopGrasp ? angle : facing(a) + angle;
    move_to(s.ee[i], p, c.cfg.table_z, yaw);
    if (g.valid) {
      s.grasp[i] = g;
      s.ee[i].holding = true;
      if (sk == Skill::kSideGrasp) s.base_held = true;
    } else {
      // Offsets are bounded around the object, so a failed grasp closes on
      // it and knocks it out of place.
      s.object.displaced = true;
    }
  }
}

// Held continuously since the start of the step by the given arm.
bool held_throughout(const StepContext& c, Arm a, Skill kind) {
  const int i = idx(a);
  return c.before.grasp[i].valid && c.before.grasp[i].skill == kind && c.s.grasp[i].valid &&
         c.s.grasp[i] == c.before.grasp[i];
}

// First point of the straight path from `from` to `to` that touches the disc,
// or `to` if the path misses it.
Point2 first_contact(Point2 from, Point2 to, Point2 center, double radius) {
  const double fx = from.x - center.x, fy = from.y - center.y;
  if (fx * fx + fy * fy <= radius * radius) return from;
  const double vx = to.x - from.x, vy = to.y - from.y;
  const double a = vx * vx + vy * vy;
  const double b = 2 * (fx * vx + fy * vy);
  const double cc = fx * fx + fy * fy - radius * radius;
  const double disc = b * b - 4 * a * cc;
  if (a <= 0 || disc < 0) return to;
  const double t = (-b - std::sqrt(disc)) / (2 * a);
  if (t < 0 || t > 1) return to;
  return {from.x + t * vx, from.y + t * vy};
}

void goto_phase(StepContext& c) {
  WorldState& s = c.s;
  ObjectState& o = s.object;
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    const int i = idx(a);
    if (c.skill(a) != Skill::kGoToPose) continue;
    const auto& v = c.args(a);

    if (c.spec.family == TaskFamily::kPicking) {
      // The arm travels straight towards the target and stops where it
      // first meets the ball. Yaw is measured from the ball-to-arm line.
      const double r = o.geometry[0];
      const Point2 from{c.before.ee[i].x, c.before.ee[i].y};
      const Point2 p = first_contact(from, c.target(a), {o.x, o.y}, r);
      const double yaw = std::atan2(from.y - o.y, from.x - o.x) + v[4];
      move_to(s.ee[i], p, c.cfg.table_z, yaw);
      const double d = dist(p.x, p.y, o.x, o.y);
      const bool held_now = s.grasp[idx(other(a))].valid;
      if (d <= r + c.cfg.support_band) {
        if (!held_now) {
          o.displaced = true;  // free ball rolls away on contact
        } else {
          const double toward = std::atan2(o.y - p.y, o.x - p.x);
          const bool aligned = std::fabs(wrap(yaw - toward)) <= c.cfg.support_yaw_tol;
          const bool approached = s.approach_step[i] >= 0 && s.approach_step[i] < c.t;
          if (aligned && approached && held_throughout(c, other(a), Skill::kTopGrasp)) {
            s.engaged[i] = true;
            s.support_formed = true;
          }
        }
      }
      if (d <= c.cfg.approach_factor * r) s.approach_step[i] = c.t;
    } else if (c.spec.family == TaskFamily::kRotating) {
      // Pose given in the handle-tip frame: x along the handle, away from
      // the base.
      const Point2 tip = corkscrew_tip(o);
      const double cy = std::cos(o.yaw), sy = std::sin(o.yaw);
      const Point2 p{tip.x + cy * v[0] - sy * v[1], tip.y + sy * v[0] + cy * v[1]};
      const double yaw = o.yaw + v[4];
      move_to(s.ee[i], p, c.cfg.table_z, yaw);
      const double d = dist(p.x, p.y, tip.x, tip.y);
      if (d > c.cfg.handle_approach) continue;
      const double toward = o.yaw + kPi;
      const bool aligned = std::fabs(wrap(yaw - toward)) <= c.cfg.handle_yaw_tol;
      const bool approached = s.approach_step[i] >= 0 && s.approach_step[i] < c.t;
      // Pressing on the handle moves the whole corkscrew unless the base is
      // held from the start of the step.
      const bool base_fixed = held_throughout(c, other(a), Skill::kSideGrasp);
      if (d <= c.cfg.engage_tol && aligned && approached && base_fixed) s.engaged[i] = true;
      s.approach_step[i] = c.t;
    } else {
      move_to(s.ee[i], c.target(a), c.cfg.table_z, v[4]);
    }
  }
}

void bar_lift(StepContext& c) {
  WorldState& s = c.s;
  bool any = false;
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    if (c.skill(a) != Skill::kLift) continue;
    s.last_lift[idx(a)] = c.args(a)[0];
    any = true;
  }
  if (!any) return;
  if (success_bar(s, c.cfg)) {
    s.object.z = std::min(s.last_lift[0], s.last_lift[1]);
    return;
  }
  // The bar tips out of the grippers.
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    if (c.skill(a) == Skill::kLift) release(s, a);
  }
}

void ball_lift(StepContext& c) {
  WorldState& s = c.s;
  bool any = false;
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    if (c.skill(a) != Skill::kLift) continue;
    s.last_lift[idx(a)] = c.args(a)[0];
    any = true;
  }
  if (!any) return;
  if (success_ball(s, c.cfg)) {
    s.object.z = std::min(s.last_lift[0], s.last_lift[1]);
    return;
  }
  // Anything short of a supported two-arm lift lets the ball slip.
  for (Arm a : {Arm::kLeft, Arm::kRight}) release(s, a);
  s.engaged = {false, false};
  s.support_formed = false;
}

void bottle_twist(StepContext& c) {
  WorldState& s = c.s;
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    if (c.skill(a) != Skill::kTwist) continue;
    const GraspRecord& g = s.grasp[idx(a)];
    if (!g.valid || g.skill != Skill::kTopGrasp) continue;
    if (held_throughout(c, other(a), Skill::kSideGrasp)) {
      // Arms are mounted mirrored: the left wrist turns the cap open, the
      // right wrist turns it closed.
      s.object.joint_angle += a == Arm::kLeft ? kPi / 2 : -kPi / 2;
    } else {
      s.object.yaw = wrap_positive(s.object.yaw + kPi / 2);
    }
  }
}

void corkscrew_rotate(StepContext& c) {
  WorldState& s = c.s;
  ObjectState& o = s.object;
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    if (c.skill(a) != Skill::kRotate) continue;
    if (!c.before.engaged[idx(a)]) continue;
    const auto& v = c.args(a);
    const Point2 base = corkscrew_base(o);
    const Point2 axis{o.x + v[0], o.y + v[1]};
    const double length = o.geometry[0];
    if (dist(axis.x, axis.y, base.x, base.y) > c.cfg.rotate_axis_tol) continue;
    if (std::fabs(v[2] - length) > c.cfg.rotate_radius_tol) continue;
    if (held_throughout(c, other(a), Skill::kSideGrasp)) {
      o.joint_angle += a == Arm::kLeft ? kPi : -kPi;
    } else {
      // The whole corkscrew spins about its base.
      o.yaw = wrap_positive(o.yaw + kPi);
    }
    s.engaged[idx(a)] = false;
  }
}

void validate(const TaskSpec& spec, const WorldState& state, const JointAction& action) {
  if (state.timestep >= spec.horizon) throw ContractViolation("step called on finished episode");
  if (state.family != spec.family) throw ContractViolation("state belongs to another family");
  const JointSkill& js = action.joint_skill;
  if (js.index < 0 || js.index >= spec.vocab_size() || !(spec.joint_vocab[js.index] == js)) {
    throw ContractViolation("joint skill not in vocabulary");
  }
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    if (!arg_count_ok(js.of(a), action.args(a))) {
      throw ContractViolation("wrong argument count for " + std::string(arm_name(a)) + " " +
                              std::string(skill_name(js.of(a))));
    }
  }
}

// --- raster ----------------------------------------------------------------

constexpr int kSuper = 4;

template <typename Inside>
void paint(std::vector<double>& data, int channel, Inside inside) {
  const double cell = 1.0 / kRasterSide;
  for (int gy = 0; gy < kRasterSide; ++gy) {
    for (int gx = 0; gx < kRasterSide; ++gx) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double px = (gx + (sx + 0.5) / kSuper) * cell;
          const double py = (gy + (sy + 0.5) / kSuper) * cell;
          if (inside(px, py)) ++hits;
        }
      }
      if (hits == 0) continue;
      double& v = data[(channel * kRasterSide + gy) * kRasterSide + gx];
      v = std::max(v, static_cast<double>(hits) / (kSuper * kSuper));
    }
  }
}

bool in_segment(double px, double py, Point2 a, Point2 b, double half_width) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return dist(px, py, a.x + t * vx, a.y + t * vy) <= half_width;
}

int grid_cell(double v) {
  return std::clamp(static_cast<int>(std::floor(v * kRasterSide)), 0, kRasterSide - 1);
}

std::vector<double> raster(const WorldState& s) {
  std::vector<double> data(kRasterSize, 0.0);
  const ObjectState& o = s.object;
  switch (s.family) {
    case TaskFamily::kLateralLifting: {
      const double half = o.geometry[0] / 2, hw = o.geometry[2] / 2;
      const Point2 a{o.x - half * std::cos(o.yaw), o.y - half * std::sin(o.yaw)};
      const Point2 b{o.x + half * std::cos(o.yaw), o.y + half * std::sin(o.yaw)};
      const double ux = std::cos(o.yaw), uy = std::sin(o.yaw);
      paint(data, 0, [&](double px, double py) {
        const double dx = px - o.x, dy = py - o.y;
        return std::fabs(dx * ux + dy * uy) <= half && std::fabs(-dx * uy + dy * ux) <= hw;
      });
      paint(data, 1, [&](double px, double py) { return in_segment(px, py, a, b, 0.01); });
      break;
    }
    case TaskFamily::kPicking: {
      const double r = o.geometry[0];
      paint(data, 0, [&](double px, double py) { return dist(px, py, o.x, o.y) <= r; });
      paint(data, 1, [&](double px, double py) { return dist(px, py, o.x, o.y) <= r / 3; });
      break;
    }
    case TaskFamily::kOpening: {
      const double rb = o.geometry[0], rc = o.geometry[1];
      paint(data, 0, [&](double px, double py) { return dist(px, py, o.x, o.y) <= rb; });
      paint(data, 1, [&](double px, double py) { return dist(px, py, o.x, o.y) <= rc; });
      break;
    }
    case TaskFamily::kRotating: {
      const Point2 base = corkscrew_base(o), tip = corkscrew_tip(o);
      const double rb = o.geometry[1];
      paint(data, 0, [&](double px, double py) {
        return dist(px, py, base.x, base.y) <= rb || in_segment(px, py, base, tip, 0.01);
      });
      paint(data, 1, [&](double px, double py) { return in_segment(px, py, base, tip, 0.015); });
      break;
    }
  }
  for (int a = 0; a < 2; ++a) {
    const int gx = grid_cell(s.ee[a].x), gy = grid_cell(s.ee[a].y);
    data[((2 + a) * kRasterSide + gy) * kRasterSide + gx] = 1.0;
  }
  return data;
}

double scaled(double v, double lo, double hi) { return (v - lo) / (hi - lo) * 2.0 - 1.0; }

std::vector<double> low_dim(const WorldState& s, const EnvConfig& cfg) {
  const VariationRanges vr;
  std::vector<double> out;
  out.reserve(kLowDimSize);
  for (const auto& e : s.ee) {
    out.push_back(2 * e.x - 1);
    out.push_back(2 * e.y - 1);
    out.push_back(e.z / cfg.home_z - 1);
    out.push_back(wrap_positive(e.yaw) / kPi - 1);
  }
  out.push_back(2.0 * s.timestep / kHorizon - 1.0);
  const ObjectState& o = s.object;
  std::array<double, 3> geo{};
  switch (s.family) {
    case TaskFamily::kLateralLifting:
      geo = {scaled(o.geometry[0], vr.bar_length.lo, vr.bar_length.hi),
             scaled(o.geometry[1], vr.bar_mass.lo, vr.bar_mass.hi), 0.0};
      break;
    case TaskFamily::kPicking:
      geo = {scaled(o.geometry[0], vr.ball_radius.lo, vr.ball_radius.hi),
             scaled(o.geometry[1], vr.ball_friction.lo, vr.ball_friction.hi), 0.0};
      break;
    case TaskFamily::kOpening:
      geo = {scaled(o.geometry[0], vr.bottle_base_radius.lo, vr.bottle_base_radius.hi),
             scaled(o.geometry[1], vr.bottle_cap_radius.lo, vr.bottle_cap_radius.hi), 0.0};
      break;
    case TaskFamily::kRotating:
      geo = {scaled(o.geometry[0], vr.handle_length.lo, vr.handle_length.hi), 0.0, 0.0};
      break;
  }
  out.insert(out.end(), geo.begin(), geo.end());
  out.push_back(2 * o.x - 1);
  out.push_back(2 * o.y - 1);
  out.push_back(wrap_positive(o.yaw) / kPi - 1);
  for (const auto& e : s.ee) {
    const double dx = o.x - e.x, dy = o.y - e.y;
    const double c = std::cos(e.yaw), sn = std::sin(e.yaw);
    out.push_back(c * dx + sn * dy);
    out.push_back(-sn * dx + c * dy);
  }
  return out;
}

}  // namespace

std::string_view encoding_name(Encoding encoding) {
  return encoding == Encoding::kLowDim ? "low-dim" : "raster";
}

Encoding parse_encoding(std::string_view name) {
  if (name == "low-dim") return Encoding::kLowDim;
  if (name == "raster") return Encoding::kRaster;
  throw std::invalid_argument("unknown observation encoding: " + std::string(name));
}

int observation_size(Encoding encoding) {
  return encoding == Encoding::kLowDim ? kLowDimSize : kRasterSize;
}

EndEffector home_pose(Arm arm, const EnvConfig& cfg) {
  EndEffector e;
  e.x = arm == Arm::kLeft ? 0.1 : 0.9;
  e.y = 0.5;
  e.z = cfg.home_z;
  e.yaw = facing(arm);
  return e;
}

Point2 corkscrew_base(const ObjectState& o) { return {o.x, o.y}; }

Point2 corkscrew_tip(const ObjectState& o) {
  const double length = o.geometry[0];
  return {o.x + length * std::cos(o.yaw), o.y + length * std::sin(o.yaw)};
}

WorldState reset(const TaskSpec& spec, std::uint64_t seed, const EnvConfig& cfg) {
  Rng rng(derive_seed(seed, {0x656e76ULL, static_cast<std::uint64_t>(spec.family)}));
  const VariationRanges& v = spec.variation;
  WorldState s;
  s.family = spec.family;
  s.ee = {home_pose(Arm::kLeft, cfg), home_pose(Arm::kRight, cfg)};
  ObjectState& o = s.object;
  o.x = sample(rng, v.center);
  o.y = sample(rng, v.center);
  switch (spec.family) {
    case TaskFamily::kLateralLifting:
      o.geometry = {sample(rng, v.bar_length), sample(rng, v.bar_mass), cfg.bar_width};
      o.yaw = sample(rng, v.bar_yaw);
      break;
    case TaskFamily::kPicking:
      o.geometry = {sample(rng, v.ball_radius), sample(rng, v.ball_friction), 0.0};
      break;
    case TaskFamily::kOpening:
      o.geometry = {sample(rng, v.bottle_base_radius), sample(rng, v.bottle_cap_radius), 0.0};
      break;
    case TaskFamily::kRotating:
      o.geometry = {sample(rng, v.handle_length), cfg.corkscrew_base_radius, 0.0};
      o.yaw = sample(rng, v.handle_yaw);
      break;
  }
  return s;
}

StepResult step(const TaskSpec& spec, const WorldState& state, const JointAction& action,
                const EnvConfig& cfg) {
  validate(spec, state, action);
  StepResult out;
  out.state = state;
  WorldState& s = out.state;
  s.last_lift = {-1.0, -1.0};
  StepContext c{spec, cfg, state, s, action, state.timestep};

  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    if (!precondition_met(state, a, action.joint_skill.of(a))) s.faulted = true;
  }
  release_phase(c);
  grasp_phase(c);
  goto_phase(c);
  switch (spec.family) {
    case TaskFamily::kLateralLifting:
      bar_lift(c);
      break;
    case TaskFamily::kPicking:
      ball_lift(c);
      break;
    case TaskFamily::kOpening:
      bottle_twist(c);
      break;
    case TaskFamily::kRotating:
      corkscrew_rotate(c);
      break;
  }

  s.timestep = state.timestep + 1;
  s.success = task_success(s, cfg);
  out.reward = s.success ? 1.0 : 0.0;
  out.done = s.success || s.timestep >= spec.horizon;
  return out;
}

bool success_bar(const WorldState& s, const EnvConfig& cfg) {
  const GraspRecord& l = s.grasp[0];
  const GraspRecord& r = s.grasp[1];
  if (!l.valid || !r.valid || l.skill != Skill::kTopGrasp || r.skill != Skill::kTopGrasp) {
    return false;
  }
  const double length = s.object.geometry[0];
  if (l.lever * r.lever >= 0) return false;
  if (std::min(std::fabs(l.lever), std::fabs(r.lever)) < cfg.bar_min_lever) return false;
  if (std::fabs(std::fabs(l.lever) - std::fabs(r.lever)) > cfg.bar_lever_balance * length) {
    return false;
  }
  const double dl = s.last_lift[0], dr = s.last_lift[1];
  return dl >= cfg.lift_threshold && dr >= cfg.lift_threshold &&
         std::fabs(dl - dr) <= cfg.bar_lift_balance;
}

bool success_ball(const WorldState& s, const EnvConfig& cfg) {
  if (s.object.displaced || !s.support_formed) return false;
  bool grasp_and_support = false;
  for (int a = 0; a < 2; ++a) {
    const GraspRecord& g = s.grasp[a];
    if (g.valid && g.skill == Skill::kTopGrasp && s.engaged[1 - a]) grasp_and_support = true;
  }
  return grasp_and_support && s.last_lift[0] >= cfg.lift_threshold &&
         s.last_lift[1] >= cfg.lift_threshold;
}

bool success_bottle(const WorldState& s, const EnvConfig&) {
  return s.object.joint_angle >= kPi / 2 - kAngleEps;
}

bool success_corkscrew(const WorldState& s, const EnvConfig&) {
  return s.object.joint_angle >= kPi - kAngleEps;
}

bool task_success(const WorldState& s, const EnvConfig& cfg) {
  if (s.faulted || s.object.displaced) return false;
  switch (s.family) {
    case TaskFamily::kLateralLifting:
      return success_bar(s, cfg);
    case TaskFamily::kPicking:
      return success_ball(s, cfg);
    case TaskFamily::kOpening:
      return success_bottle(s, cfg);
    case TaskFamily::kRotating:
      return success_corkscrew(s, cfg);
  }
  return false;
}

Observation observe(const WorldState& state, Encoding encoding, const EnvConfig& cfg) {
  Observation obs;
  obs.encoding = encoding;
  obs.data = encoding == Encoding::kLowDim ? low_dim(state, cfg) : raster(state);
  return obs;
}

JointAction solve_arguments(const TaskSpec& spec, const WorldState& s, int joint_index,
                            const EnvConfig& cfg) {
  const JointSkill& js = spec.joint_vocab.at(joint_index);
  const ObjectState& o = s.object;
  JointAction action;
  action.joint_skill = js;
  for (Arm a : {Arm::kLeft, Arm::kRight}) {
    const Skill sk = js.of(a);
    std::vector<double> v;
    switch (sk) {
      case Skill::kTopGrasp:
        v = {0.0, 0.0, kPi};
        break;
      case Skill::kSideGrasp: {
        Point2 base = spec.family == TaskFamily::kRotating ? corkscrew_base(o) : bottle_center(o);
        const EndEffector home = home_pose(a, cfg);
        const double line = std::atan2(base.y - home.y, base.x - home.x);
        v = {base.x - o.x, base.y - o.y, wrap(line - facing(a))};
        break;
      }
      case Skill::kGoToPose:
        // Picking stops on the near surface facing in; rotating ends on the
        // handle tip facing the base.
        v = {0.0, 0.0, 0.0, 0.0, kPi};
        break;
      case Skill::kLift:
        v = {0.3};
        break;
      case Skill::kRotate: {
        const Point2 base = corkscrew_base(o);
        v = {base.x - o.x, base.y - o.y, o.geometry[0]};
        break;
      }
      case Skill::kTwist:
      case Skill::kNoOp:
        break;
    }
    (a == Arm::kLeft ? action.left_args : action.right_args) = std::move(v);
  }
  return action;
}

std::string format_trace_line(int timestep, const JointAction& action, const WorldState& after,
                              double reward) {
  std::ostringstream os;
  os.precision(6);
  auto args = [&](const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.6g", i ? "," : "", v[i]);
      out += buf;
    }
    return out + "]";
  };
  os << "t=" << timestep << " left=" << skill_name(action.joint_skill.left)
     << args(action.left_args) << " right=" << skill_name(action.joint_skill.right)
     << args(action.right_args) << " base_held=" << after.base_held
     << " support_formed=" << after.support_formed << " grasp_l=" << after.grasp[0].valid
     << " grasp_r=" << after.grasp[1].valid << " displaced=" << after.object.displaced << " faulted=" << after.faulted
     << " reward=" << reward;
  return os.str();
}

}  // namespace schemarl
