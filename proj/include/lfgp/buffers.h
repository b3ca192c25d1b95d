#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "lfgp/rng.h"

namespace lfgp::buffers {

// One environment transition. For demonstration data, (s, a) is the pair the
// discriminator consumes; s_next/terminal additionally let value updates use
// demonstration batches.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  std::vector<double> s_next;
  bool terminal = false;
};

// ---------------------------------------------------------------------------
// Replay buffer: fixed-capacity ring with FIFO eviction.
// ---------------------------------------------------------------------------
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);

  void add(Transition t);
  size_t size() const { return items_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return items_[i]; }
  // Uniform over current contents; throws std::runtime_error when empty.
  const Transition& sample(Rng& rng) const;

 private:
  size_t capacity_;
  size_t cursor_ = 0;  // next slot to overwrite once full
  std::vector<Transition> items_;
};

// ---------------------------------------------------------------------------
// Demonstration buffer: per-task, episode-structured, immutable in training.
// ---------------------------------------------------------------------------
//
// Regular pairs are stored episode by episode; synthetic hold-still pairs
// (final state, all-zero action) always form a contiguous tail so their
// location is implied by their count.
class ExpertBuffer {
 public:
  ExpertBuffer() = default;
  ExpertBuffer(std::string task, int obs_dim, int act_dim);

  const std::string& task() const { return task_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  size_t size() const { return pairs_.size(); }
  size_t regular_count() const { return pairs_.size() - final_count_; }
  size_t final_count() const { return final_count_; }
  size_t episode_count() const { return episode_starts_.size(); }
  const std::vector<size_t>& episode_starts() const { return episode_starts_; }
  const Transition& at(size_t i) const { return pairs_[i]; }
  bool is_final_pair(size_t i) const { return i >= regular_count(); }

  // Appends one demonstration episode (dimension-checked). Must not be called
  // after hold-still pairs were added. Throws std::runtime_error on misuse.
  void append_episode(const std::vector<Transition>& episode);

  // Appends n synthetic hold-still pairs: the final state of each stored
  // episode, cycled round-robin, paired with an all-zero action, a self-loop
  // successor, and a terminal flag. n = 0 is a no-op.
  void augment_final_pairs(size_t n);

 private:
  friend ExpertBuffer subsample(const ExpertBuffer&, size_t);
  friend void save_expert(const ExpertBuffer&, const std::string&);
  friend ExpertBuffer load_expert(const std::string&);

  std::string task_;
  int obs_dim_ = 0;
  int act_dim_ = 0;
  std::vector<Transition> pairs_;
  std::vector<size_t> episode_starts_;  // index of each episode's first pair
  size_t final_count_ = 0;
};

// Keeps every stride-th pair of each episode, restarting the count at each
// episode boundary; hold-still tail pairs are always retained. stride must be
// >= 1 (throws std::invalid_argument otherwise); stride 1 copies.
ExpertBuffer subsample(const ExpertBuffer& buf, size_t stride);

// ---------------------------------------------------------------------------
// Demonstration data files
// ---------------------------------------------------------------------------
//
// Layout (bit-exact):
//   line 1:  "lfgp-expert 1"
//   line 2:  "task <name>"
//   line 3:  "obs_dim <int>"
//   line 4:  "act_dim <int>"
//   line 5:  "pairs <int>"            total record count, tail included
//   line 6:  "final_pairs <int>"      hold-still tail length
//   line 7:  "episodes <int>"
//   line 8:  "episode_starts <i0> <i1> ..."   (empty list allowed)
//   line 9:  "data"
//   then pairs * (2*obs_dim + act_dim + 1) little-endian IEEE float32 values,
//   each record laid out as s, a, s_next, terminal (terminal as 0.0 or 1.0).
void save_expert(const ExpertBuffer& buf, const std::string& path);
ExpertBuffer load_expert(const std::string& path);  // throws on any mismatch

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

// Fraction of policy/value batches drawn from demonstration buffers; decays
// geometrically once per batch drawn.
struct ExpertProportion {
  double value = 0.1;
  double decay = 0.99999;
};

struct PolicyBatch {
  std::vector<const Transition*> items;
  int expert_drawn = 0;  // how many items came from demonstration buffers
};

// Each slot comes from a demonstration buffer with probability
// proportion.value (task chosen uniformly, then a pair uniformly within it),
// otherwise uniformly from replay. Decays proportion.value once at the end.
// Throws std::runtime_error when replay is empty, or when the proportion is
// positive but no demonstration pairs exist. Pointers remain valid only until
// the replay buffer is written to again.
PolicyBatch sample_policy_batch(const ReplayBuffer& replay,
                                const std::vector<const ExpertBuffer*>& experts,
                                size_t batch_size, ExpertProportion& proportion,
                                Rng& rng);

// Demonstration-side discriminator batch: with probability final_pair_bias a
// slot is drawn uniformly from the hold-still tail, otherwise uniformly from
// the whole buffer (so bias 0 is plain uniform sampling). Throws
// std::runtime_error if bias > 0 with no tail, or the buffer is empty.
std::vector<const Transition*> sample_discriminator_batch(
    const ExpertBuffer& expert, size_t batch_size, double final_pair_bias,
    Rng& rng);

}  // namespace lfgp::buffers
