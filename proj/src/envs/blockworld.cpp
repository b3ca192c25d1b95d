#include "lfgp/blockworld.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lfgp::envs {
namespace {

double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

constexpr double kClosedBelow = 0.5;  // gripper counts as closed under this

}  // namespace

Task BlockWorldConfig::main_task() const {
  if (variant == "stack") return Task::stack;
  if (variant == "unstack-stack") return Task::unstack_stack;
  if (variant == "bring") return Task::bring;
  if (variant == "insert") return Task::insert;
  throw std::runtime_error("blockworld: unknown variant '" + variant +
                           "' (expected stack | unstack-stack | bring | insert)");
}

std::vector<ConfigKeyDoc> blockworld_config_keys() {
  const BlockWorldConfig d;
  const auto num = [](double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
  };
  return {
      {"tray_width", num(d.tray_width), "gripper x range is [0, tray_width] metres"},
      {"tray_height", num(d.tray_height), "gripper z range is [0, tray_height] metres"},
      {"block_size", num(d.block_size), "square block edge length in metres"},
      {"max_step", num(d.max_step), "max position change per axis per step"},
      {"dt", num(d.dt), "seconds per step; defines velocity units"},
      {"grip_rate", num(d.grip_rate), "gripper opening change per step"},
      {"grasp_radius", num(d.grasp_radius),
       "a block this close when the gripper finishes closing becomes held"},
      {"horizon", num(d.horizon), "fixed episode length in steps"},
      {"agent_reset_min_z", num(d.agent_reset_min_z),
       "lowest gripper height at reset"},
      {"variant", d.variant, "stack | unstack-stack | bring | insert"},
      {"reach_radius", num(d.reach_radius),
       "gripper-to-block distance that counts as reached"},
      {"lift_height", num(d.lift_height),
       "block height above rest that counts as lifted"},
      {"move_speed", num(d.move_speed), "block speed that counts as moving"},
      {"bring_radius", num(d.bring_radius),
       "block-to-slot distance that counts as brought"},
      {"insert_radius", num(d.insert_radius),
       "tighter bring threshold used by the insert task"},
      {"stack_x_tol", num(d.stack_x_tol),
       "max horizontal offset for a block to rest on another"},
      {"stack_z_tol", num(d.stack_z_tol),
       "vertical slack around exact one-block height when stacked"},
      {"clear_radius", num(d.clear_radius),
       "gripper must be this far from a placed block to count as away"},
      {"slot_blue_x", num(d.slot_blue_x), "target slot x for the blue block"},
      {"slot_green_x", num(d.slot_green_x), "target slot x for the green block"},
  };
}

BlockWorldConfig BlockWorldConfig::from_kv(const KeyValueConfig& kv) {
  BlockWorldConfig c;
  c.tray_width = kv.get_double("tray_width", c.tray_width);
  c.tray_height = kv.get_double("tray_height", c.tray_height);
  c.block_size = kv.get_double("block_size", c.block_size);
  c.max_step = kv.get_double("max_step", c.max_step);
  c.dt = kv.get_double("dt", c.dt);
  c.grip_rate = kv.get_double("grip_rate", c.grip_rate);
  c.grasp_radius = kv.get_double("grasp_radius", c.grasp_radius);
  c.horizon = kv.get_int("horizon", c.horizon);
  c.agent_reset_min_z = kv.get_double("agent_reset_min_z", c.agent_reset_min_z);
  c.variant = kv.get_string("variant", c.variant);
  c.reach_radius = kv.get_double("reach_radius", c.reach_radius);
  c.lift_height = kv.get_double("lift_height", c.lift_height);
  c.move_speed = kv.get_double("move_speed", c.move_speed);
  c.bring_radius = kv.get_double("bring_radius", c.bring_radius);
  c.insert_radius = kv.get_double("insert_radius", c.insert_radius);
  c.stack_x_tol = kv.get_double("stack_x_tol", c.stack_x_tol);
  c.stack_z_tol = kv.get_double("stack_z_tol", c.stack_z_tol);
  c.clear_radius = kv.get_double("clear_radius", c.clear_radius);
  c.slot_blue_x = kv.get_double("slot_blue_x", c.slot_blue_x);
  c.slot_green_x = kv.get_double("slot_green_x", c.slot_green_x);
  kv.reject_unused();
  c.main_task();  // validate the variant eagerly
  if (c.horizon <= 0)
    throw std::runtime_error("blockworld: horizon must be positive");
  if (c.block_size <= 0 || c.tray_width <= c.block_size ||
      c.tray_height <= c.block_size)
    throw std::runtime_error("blockworld: tray must be larger than a block");
  return c;
}

BlockWorldConfig BlockWorldConfig::from_file(const std::string& path) {
  return from_kv(KeyValueConfig::from_file(path));
}

BlockWorld2D::BlockWorld2D(BlockWorldConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.main_task();  // validate the variant eagerly
}

const BlockWorldState& BlockWorld2D::reset(uint64_t seed) {
  Rng rng(seed);
  s_ = BlockWorldState{};
  s_.ax = rng.uniform(0.0, cfg_.tray_width);
  s_.az = rng.uniform(cfg_.agent_reset_min_z, cfg_.tray_height);
  s_.grip = s_.grip_prev1 = s_.grip_prev2 = 1.0;

  // Blocks land at rest on the floor, horizontally separated so they do not
  // interpenetrate.
  const double min_gap = cfg_.block_size + 0.005;
  for (int attempt = 0;; ++attempt) {
    s_.bx[0] = rng.uniform(cfg_.block_x_min(), cfg_.block_x_max());
    s_.bx[1] = rng.uniform(cfg_.block_x_min(), cfg_.block_x_max());
    if (std::abs(s_.bx[0] - s_.bx[1]) >= min_gap) break;
    if (attempt > 10000)
      throw std::runtime_error("blockworld: tray too small to place blocks");
  }
  s_.bz[0] = s_.bz[1] = cfg_.rest_z();

  if (cfg_.variant == "unstack-stack") {
    // The green block starts stacked on top of the blue one.
    s_.bx[1] = s_.bx[0];
    s_.bz[1] = s_.bz[0] + cfg_.block_size;
  }
  return s_;
}

BlockWorld2D::StepResult BlockWorld2D::step(std::array<double, 3> action) {
  for (double& a : action) a = clampd(a, -1.0, 1.0);

  // Gripper translation; a held block follows the realized displacement.
  const double old_ax = s_.ax, old_az = s_.az;
  s_.ax = clampd(s_.ax + action[0] * cfg_.max_step, 0.0, cfg_.tray_width);
  s_.az = clampd(s_.az + action[1] * cfg_.max_step, 0.0, cfg_.tray_height);
  const double dax = s_.ax - old_ax, daz = s_.az - old_az;

  const double old_bx[2] = {s_.bx[0], s_.bx[1]};
  const double old_bz[2] = {s_.bz[0], s_.bz[1]};
  if (s_.held >= 0) {
    const int h = s_.held;
    s_.bx[h] = clampd(s_.bx[h] + dax, cfg_.block_x_min(), cfg_.block_x_max());
    s_.bz[h] = clampd(s_.bz[h] + daz, cfg_.rest_z(), cfg_.block_z_max());
    s_.hold_dx = s_.bx[h] - s_.ax;
    s_.hold_dz = s_.bz[h] - s_.az;
  }

  // Gripper opening moves at a fixed rate toward the commanded direction.
  const double old_grip = s_.grip;
  const double dir = action[2] > 0 ? 1.0 : (action[2] < 0 ? -1.0 : 0.0);
  s_.grip = clampd(s_.grip + dir * cfg_.grip_rate, 0.0, 1.0);

  // A grasp is decided only at the moment the gripper finishes closing: the
  // nearest block within grasp_radius (blue wins ties) becomes held. The held
  // block is released the moment the gripper is open again.
  const bool was_closed = old_grip < kClosedBelow;
  const bool is_closed = s_.grip < kClosedBelow;
  if (!was_closed && is_closed) {
    int grab = -1;
    double best = cfg_.grasp_radius * (1.0 + 1e-12);
    for (int b = 0; b < 2; ++b) {
      const double d = std::hypot(s_.bx[b] - s_.ax, s_.bz[b] - s_.az);
      if (d < best) {  // strict: on an exact tie the blue block wins
        best = d;
        grab = b;
      }
    }
    if (grab >= 0) {
      s_.held = grab;
      s_.hold_dx = s_.bx[grab] - s_.ax;
      s_.hold_dz = s_.bz[grab] - s_.az;
    }
  } else if (was_closed && !is_closed && s_.held >= 0) {
    s_.held = -1;
    s_.hold_dx = s_.hold_dz = 0;
  }

  // Velocities from realized displacement; an unheld block has not moved.
  s_.avx = dax / cfg_.dt;
  s_.avz = daz / cfg_.dt;
  for (int b = 0; b < 2; ++b) {
    s_.bvx[b] = (s_.bx[b] - old_bx[b]) / cfg_.dt;
    s_.bvz[b] = (s_.bz[b] - old_bz[b]) / cfg_.dt;
  }

  s_.grip_prev2 = s_.grip_prev1;
  s_.grip_prev1 = old_grip;
  s_.last_grip_act = action[2];
  s_.t += 1;

  return {success(main_task(), s_, cfg_) ? 1.0 : 0.0, s_.t >= cfg_.horizon};
}

std::vector<double> BlockWorld2D::observe() const { return observe(s_, cfg_); }

std::vector<double> BlockWorld2D::observe(const BlockWorldState& s,
                                          const BlockWorldConfig& cfg) {
  std::vector<double> o;
  o.reserve(kObsDim);
  o.push_back(s.ax);
  o.push_back(s.az);
  o.push_back(s.avx);
  o.push_back(s.avz);
  o.push_back(s.grip);
  o.push_back(s.grip_prev1);
  o.push_back(s.grip_prev2);
  o.push_back(s.bx[0]);
  o.push_back(s.bz[0]);
  o.push_back(s.bx[1]);
  o.push_back(s.bz[1]);
  o.push_back(s.bvx[0]);
  o.push_back(s.bvz[0]);
  o.push_back(s.bvx[1]);
  o.push_back(s.bvz[1]);
  o.push_back(s.bx[0] - s.ax);
  o.push_back(s.bz[0] - s.az);
  o.push_back(s.bx[1] - s.ax);
  o.push_back(s.bz[1] - s.az);
  o.push_back(s.bx[0] - s.bx[1]);
  o.push_back(s.bz[0] - s.bz[1]);
  o.push_back(s.bx[0] - cfg.slot_blue_x);
  o.push_back(s.bz[0] - cfg.rest_z());
  o.push_back(s.bx[1] - cfg.slot_green_x);
  o.push_back(s.bz[1] - cfg.rest_z());
  o.push_back(s.held == 0 ? 1.0 : 0.0);
  o.push_back(s.held == 1 ? 1.0 : 0.0);
  return o;
}

}  // namespace lfgp::envs
