#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lfgp/blockworld.h"

// Scripted demonstrators. Each expert is a memoryless proportional controller
// saturated at the per-step motion limit, so a gripper one step away moves
// exactly onto its target and then holds with a near-zero action. Phases
// (approach, grasp, carry, place, retreat) are inferred from the state alone.

namespace lfgp::envs {
namespace {

constexpr double kClosedBelow = 0.5;  // mirrors the gripper-held threshold
constexpr double kAlign = 0.004;      // "at the target" alignment slack
constexpr double kPlaceTol = 0.0025;  // release when the block is this close

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

std::array<double, 3> goto_point(const BlockWorldState& s,
                                 const BlockWorldConfig& cfg, double tx,
                                 double tz, double grip) {
  return {clamp1((tx - s.ax) / cfg.max_step), clamp1((tz - s.az) / cfg.max_step),
          grip};
}

// Comfortable carrying height: above the lift threshold and above a block
// resting on another, with headroom below the tray ceiling.
double travel_z(const BlockWorldConfig& cfg) {
  return cfg.rest_z() + cfg.lift_height + 0.015;
}

// Walk to block b with the gripper open, then close on it. If the gripper is
// already closed on nothing (or on the other block), open it first so the
// next close can take hold.
std::array<double, 3> approach_and_grab(const BlockWorldState& s,
                                        const BlockWorldConfig& cfg, int b) {
  if (s.held >= 0 && s.held != b) return {0, 0, 1.0};  // let go first
  const double d = std::hypot(s.bx[b] - s.ax, s.bz[b] - s.az);
  if (d > kAlign) return goto_point(s, cfg, s.bx[b], s.bz[b], 1.0);
  if (s.grip < kClosedBelow && s.held != b) return {0, 0, 1.0};  // reopen
  return {0, 0, -1.0};
}

// Carry held block b to (tx, tz): rise to the travel height, traverse, then
// descend; release once the block sits within place_tol of the target.
std::array<double, 3> carry_and_place(const BlockWorldState& s,
                                      const BlockWorldConfig& cfg, int b,
                                      double tx, double tz, double place_tol) {
  const double ex = tx - s.bx[b], ez = tz - s.bz[b];
  if (std::hypot(ex, ez) <= place_tol) return {0, 0, 1.0};  // let go here
  double btx, btz;  // where the block itself should head next
  if (std::abs(ex) > kAlign) {
    const double cruise = travel_z(cfg);
    btz = cruise;
    btx = s.bz[b] >= cruise - 0.005 ? tx : s.bx[b];  // rise first, then traverse
  } else {
    btx = tx;
    btz = tz;  // aligned above the target: straight down (or up) onto it
  }
  // The held block follows the gripper exactly, so steer by block error.
  return {clamp1((btx - s.bx[b]) / cfg.max_step),
          clamp1((btz - s.bz[b]) / cfg.max_step), -1.0};
}

std::array<double, 3> retreat_up(const BlockWorldState& s,
                                 const BlockWorldConfig& cfg) {
  return goto_point(s, cfg, s.ax, cfg.tray_height, 1.0);
}

bool green_resting_on_blue(const BlockWorldState& s,
                           const BlockWorldConfig& cfg) {
  return std::abs(s.bx[1] - s.bx[0]) <= 0.03 &&
         std::abs(s.bz[1] - (s.bz[0] + cfg.block_size)) <= 0.01;
}

bool blue_stacked_on_green(const BlockWorldState& s,
                           const BlockWorldConfig& cfg) {
  return std::abs(s.bx[0] - s.bx[1]) <= cfg.stack_x_tol &&
         std::abs(s.bz[0] - (s.bz[1] + cfg.block_size)) <= cfg.stack_z_tol;
}

std::array<double, 3> stack_expert(Task task, const BlockWorldState& s,
                                   const BlockWorldConfig& cfg) {
  if (task == Task::unstack_stack &&
      (s.held == 1 || (green_resting_on_blue(s, cfg) && s.held != 0))) {
    // Clear the green block off the blue one: carry it to a free patch of
    // floor a fixed offset away, toward the roomier side of the tray.
    if (s.held == 1) {
      double dump_x = s.bx[0] >= 0.5 * cfg.tray_width ? s.bx[0] - 0.10
                                                      : s.bx[0] + 0.10;
      dump_x = std::clamp(dump_x, cfg.block_x_min() + 0.01,
                          cfg.block_x_max() - 0.01);
      return carry_and_place(s, cfg, 1, dump_x, cfg.rest_z(), kPlaceTol);
    }
    return approach_and_grab(s, cfg, 1);
  }
  if (s.held == 0)
    return carry_and_place(s, cfg, 0, s.bx[1], s.bz[1] + cfg.block_size,
                           kPlaceTol);
  if (blue_stacked_on_green(s, cfg)) return retreat_up(s, cfg);
  return approach_and_grab(s, cfg, 0);
}

std::array<double, 3> bring_expert(Task task, const BlockWorldState& s,
                                   const BlockWorldConfig& cfg) {
  const double radius =
      task == Task::bring ? cfg.bring_radius : cfg.insert_radius;
  if (s.held == 0)
    return carry_and_place(s, cfg, 0, cfg.slot_blue_x, cfg.rest_z(),
                           std::min(kPlaceTol, 0.4 * radius));
  const double d =
      std::hypot(s.bx[0] - cfg.slot_blue_x, s.bz[0] - cfg.rest_z());
  if (d <= 0.7 * radius && s.bz[0] <= cfg.rest_z() + 1e-4)
    return retreat_up(s, cfg);
  return approach_and_grab(s, cfg, 0);
}

}  // namespace

std::array<double, 3> scripted_expert(Task task, const BlockWorldState& s,
                                      const BlockWorldConfig& cfg) {
  switch (task) {
    case Task::open_gripper:
      return {0, 0, 1.0};
    case Task::close_gripper:
      return {0, 0, -1.0};
    case Task::reach:
      return goto_point(s, cfg, s.bx[0], s.bz[0], 1.0);
    case Task::lift: {
      if (s.held == 0) {
        const double target = cfg.rest_z() + cfg.lift_height + 0.015;
        return {0, clamp1((target - s.bz[0]) / cfg.max_step), -1.0};
      }
      return approach_and_grab(s, cfg, 0);
    }
    case Task::move: {
      if (s.held == 0) {
        // Ping-pong across the tray midline at full speed.
        const double dir = s.bx[0] < 0.5 * cfg.tray_width ? 1.0 : -1.0;
        return {dir, 0, -1.0};
      }
      return approach_and_grab(s, cfg, 0);
    }
    case Task::stack:
    case Task::unstack_stack:
      return stack_expert(task, s, cfg);
    case Task::bring:
    case Task::insert:
      return bring_expert(task, s, cfg);
  }
  throw std::runtime_error("scripted_expert: invalid task value");
}

}  // namespace lfgp::envs
