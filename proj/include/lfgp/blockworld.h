#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lfgp/kvconfig.h"
#include "lfgp/rng.h"

namespace lfgp::envs {

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

// Manipulation tasks over the shared block-world state. `stack` family tasks
// are mains; the gripper/reach/lift/move tasks serve as auxiliaries.
enum class Task {
  open_gripper,
  close_gripper,
  reach,
  lift,
  move,
  bring,
  insert,
  stack,
  unstack_stack,
};

constexpr int kNumTasks = 9;

// Kebab-case identifier used in configs and file names ("open-gripper", ...).
const char* task_name(Task t);
// Throws std::runtime_error on an unknown name.
Task task_from_name(const std::string& name);

// A main task plus an ordered list of distinct auxiliary tasks. Intention
// index 0 is always the main task; auxiliaries follow in order.
struct TaskSet {
  Task main = Task::stack;
  std::vector<Task> aux;

  int size() const { return 1 + static_cast<int>(aux.size()); }
  Task at(int k) const { return k == 0 ? main : aux[static_cast<size_t>(k - 1)]; }

  // Throws std::runtime_error if aux contains duplicates or the main task.
  void validate() const;

  // Default auxiliary set: open-gripper, close-gripper, reach, lift, move;
  // insert additionally gets bring. Pass single_task=true for a bare main.
  static TaskSet for_main(Task main, bool single_task = false);
};

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

// Planar manipulation world: a point gripper and two 4 cm blocks (0 = blue,
// the manipulated one; 1 = green, the stacking target) in a vertical
// cross-section of a tray. x is horizontal, z is height above the tray floor.
// There is no gravity or friction: an unheld block keeps its pose, and a held
// block follows the gripper exactly. Dynamics are deterministic given the
// reset seed.
struct BlockWorldConfig {
  // Geometry (metres).
  double tray_width = 0.30;    // gripper x range [0, tray_width]
  double tray_height = 0.145;  // gripper z range [0, tray_height]
  double block_size = 0.04;    // square block edge length
  // Dynamics.
  double max_step = 0.03;     // max position change per axis per step
  double dt = 0.05;           // seconds per step (defines velocity units)
  double grip_rate = 0.25;    // gripper opening change per step
  double grasp_radius = 0.02; // a block this close to the gripper when it
                              // finishes closing becomes held
  int horizon = 60;           // fixed episode length in steps
  // Reset.
  double agent_reset_min_z = 0.05;  // gripper starts at least this high
  std::string variant = "stack";    // stack | unstack-stack | bring | insert
  // Task thresholds.
  double reach_radius = 0.015;  // gripper-to-block distance for reach
  double lift_height = 0.06;    // block height above rest for lift
  double move_speed = 0.05;     // block speed (m/s) for move
  double bring_radius = 0.03;   // block-to-slot distance for bring
  double insert_radius = 0.005; // tighter bring threshold for insert
  double stack_x_tol = 0.02;    // horizontal offset for a block to rest on another
  double stack_z_tol = 0.005;   // vertical slack around exact block height
  double clear_radius = 0.03;   // gripper must be at least this far to count
                                // as away from a placed block
  double slot_blue_x = 0.075;   // target slot x for the blue block (bring/insert)
  double slot_green_x = 0.225;  // matching slot for the green block

  double rest_z() const { return 0.5 * block_size; }  // block centre at rest
  double block_x_min() const { return 0.5 * block_size; }
  double block_x_max() const { return tray_width - 0.5 * block_size; }
  double block_z_max() const { return tray_height - 0.5 * block_size; }

  Task main_task() const;  // from variant; throws on unknown variant

  // Reads the documented keys below from a parsed config; rejects unknown
  // keys. Throws std::runtime_error with the offending key on errors.
  static BlockWorldConfig from_kv(const KeyValueConfig& kv);
  static BlockWorldConfig from_file(const std::string& path);
};

// One row per accepted config key: {key, default value, what it controls}.
struct ConfigKeyDoc {
  std::string key;
  std::string dflt;
  std::string doc;
};
std::vector<ConfigKeyDoc> blockworld_config_keys();

// Full world state. Block positions are centre coordinates; a block resting
// on the tray floor has z = block_size/2.
struct BlockWorldState {
  double ax = 0, az = 0;        // gripper position
  double avx = 0, avz = 0;      // gripper velocity (m/s)
  double grip = 1.0;            // opening in [0,1]: 1 open, 0 closed
  double grip_prev1 = 1.0;      // opening one step ago
  double grip_prev2 = 1.0;      // opening two steps ago
  double bx[2] = {0, 0};        // block centres, x
  double bz[2] = {0, 0};        // block centres, z
  double bvx[2] = {0, 0};       // block velocities
  double bvz[2] = {0, 0};
  int held = -1;                // -1 none, 0 blue, 1 green
  double hold_dx = 0, hold_dz = 0;  // held block centre minus gripper position
  double last_grip_act = 0;     // gripper component of the last action
  int t = 0;                    // steps taken this episode
};

class BlockWorld2D {
 public:
  static constexpr int kObsDim = 27;
  static constexpr int kActDim = 3;

  explicit BlockWorld2D(BlockWorldConfig cfg = {});

  const BlockWorldConfig& config() const { return cfg_; }
  Task main_task() const { return cfg_.main_task(); }
  const BlockWorldState& state() const { return s_; }

  // Blocks land at rest on the floor at uniform non-overlapping x; the
  // gripper starts open at a uniform position in the upper tray. The
  // unstack-stack variant then places the green block on top of the blue one.
  // Identical seeds give identical states.
  const BlockWorldState& reset(uint64_t seed);

  struct StepResult {
    double reward;  // 1 when the variant's main-task predicate holds, else 0
    bool done;      // true exactly when the fixed horizon is reached
  };
  // Actions clip to [-1,1] per axis: {dx, dz, gripper}. gripper > 0 opens,
  // < 0 closes, 0 holds. A block within grasp_radius when the gripper
  // finishes closing becomes held and follows the gripper until it reopens.
  StepResult step(std::array<double, 3> action);

  // Observation layout (27 values):
  //   0-1  gripper position        2-3   gripper velocity
  //   4-6  opening: current, one and two steps ago
  //   7-8  blue centre             9-10  green centre
  //  11-12 blue velocity          13-14  green velocity
  //  15-16 blue minus gripper     17-18  green minus gripper
  //  19-20 blue minus green
  //  21-22 blue minus its slot    23-24  green minus its slot
  //  25    blue held (0/1)        26     green held (0/1)
  std::vector<double> observe() const;
  static std::vector<double> observe(const BlockWorldState& s,
                                     const BlockWorldConfig& cfg);

 private:
  BlockWorldConfig cfg_;
  BlockWorldState s_;
};

// ---------------------------------------------------------------------------
// Success predicates and scripted experts
// ---------------------------------------------------------------------------

// Pure predicate on the instantaneous state; any must-persist-N-steps logic
// belongs to the evaluation loop, not here. Throws on an unknown task value.
bool success(Task task, const BlockWorldState& s, const BlockWorldConfig& cfg);

// Closed-loop proportional controller for the task: a pure function of the
// current state that reaches and then sustains the task's success predicate
// from the overwhelming majority of reset states within the horizon.
std::array<double, 3> scripted_expert(Task task, const BlockWorldState& s,
                                      const BlockWorldConfig& cfg);

}  // namespace lfgp::envs
