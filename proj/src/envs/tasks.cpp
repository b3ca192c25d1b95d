#include <cmath>
#include <set>
#include <stdexcept>

#include "lfgp/blockworld.h"

namespace lfgp::envs {
namespace {

constexpr double kOnFloorTol = 1e-4;  // resting-on-the-floor slack, metres

bool on_floor(double z, const BlockWorldConfig& cfg) {
  return z <= cfg.rest_z() + kOnFloorTol;
}

double gripper_block_dist(const BlockWorldState& s, int b) {
  return std::hypot(s.bx[b] - s.ax, s.bz[b] - s.az);
}

// Blue resting on top of green: horizontally overlapping within tolerance and
// vertically one block height above, to within a small slack.
bool blue_on_green(const BlockWorldState& s, const BlockWorldConfig& cfg) {
  return std::abs(s.bx[0] - s.bx[1]) <= cfg.stack_x_tol &&
         std::abs(s.bz[0] - (s.bz[1] + cfg.block_size)) <= cfg.stack_z_tol;
}

// Blue placed at its slot and resting: within radius of the slot point on the
// floor, on the floor, unheld, with the gripper clear.
bool placed_at_slot(const BlockWorldState& s, const BlockWorldConfig& cfg,
                    double radius) {
  const double d = std::hypot(s.bx[0] - cfg.slot_blue_x, s.bz[0] - cfg.rest_z());
  return d <= radius && on_floor(s.bz[0], cfg) && s.held != 0 &&
         gripper_block_dist(s, 0) > cfg.clear_radius;
}

}  // namespace

const char* task_name(Task t) {
  switch (t) {
    case Task::open_gripper: return "open-gripper";
    case Task::close_gripper: return "close-gripper";
    case Task::reach: return "reach";
    case Task::lift: return "lift";
    case Task::move: return "move";
    case Task::bring: return "bring";
    case Task::insert: return "insert";
    case Task::stack: return "stack";
    case Task::unstack_stack: return "unstack-stack";
  }
  throw std::runtime_error("task_name: invalid task value");
}

Task task_from_name(const std::string& name) {
  for (int k = 0; k < kNumTasks; ++k) {
    const Task t = static_cast<Task>(k);
    if (name == task_name(t)) return t;
  }
  throw std::runtime_error("unknown task '" + name + "'");
}

void TaskSet::validate() const {
  std::set<Task> seen{main};
  for (Task t : aux)
    if (!seen.insert(t).second)
      throw std::runtime_error(std::string("task set: duplicate task '") +
                               task_name(t) + "'");
}

TaskSet TaskSet::for_main(Task main, bool single_task) {
  TaskSet ts;
  ts.main = main;
  if (!single_task) {
    ts.aux = {Task::open_gripper, Task::close_gripper, Task::reach, Task::lift,
              Task::move};
    if (main == Task::insert) ts.aux.push_back(Task::bring);
  }
  ts.validate();
  return ts;
}

bool success(Task task, const BlockWorldState& s, const BlockWorldConfig& cfg) {
  switch (task) {
    case Task::open_gripper:
      return s.last_grip_act > 0;
    case Task::close_gripper:
      return s.last_grip_act < 0;
    case Task::reach:
      return gripper_block_dist(s, 0) < cfg.reach_radius;
    case Task::lift:
      return s.bz[0] - cfg.rest_z() > cfg.lift_height;
    case Task::move:
      return std::hypot(s.bvx[0], s.bvz[0]) > cfg.move_speed;
    case Task::bring:
      return placed_at_slot(s, cfg, cfg.bring_radius);
    case Task::insert:
      return placed_at_slot(s, cfg, cfg.insert_radius);
    case Task::stack:
    case Task::unstack_stack:
      // Blue rests on green, off the floor, not held, gripper clear.
      return blue_on_green(s, cfg) && !on_floor(s.bz[0], cfg) && s.held != 0 &&
             gripper_block_dist(s, 0) > cfg.clear_radius;
  }
  throw std::runtime_error("success: invalid task value");
}

}  // namespace lfgp::envs
