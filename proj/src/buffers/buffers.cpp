#include "lfgp/buffers.h"

#include <cstdio>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace lfgp::buffers {

// ---------------------------------------------------------------------------
// ReplayBuffer
// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity == 0)
    throw std::invalid_argument("replay buffer capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::add(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[cursor_] = std::move(t);  // overwrite the oldest entry
  cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (items_.empty())
    throw std::runtime_error(
        "replay buffer is empty: sampling requested before warmup");
  return items_[static_cast<size_t>(
      rng.uniform_int(static_cast<int>(items_.size())))];
}

// ---------------------------------------------------------------------------
// ExpertBuffer
// ---------------------------------------------------------------------------

ExpertBuffer::ExpertBuffer(std::string task, int obs_dim, int act_dim)
    : task_(std::move(task)), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (obs_dim <= 0 || act_dim <= 0)
    throw std::invalid_argument("expert buffer dimensions must be positive");
}

void ExpertBuffer::append_episode(const std::vector<Transition>& episode) {
  if (final_count_ != 0)
    throw std::runtime_error(
        "expert buffer: episodes must be appended before hold-still pairs");
  if (episode.empty())
    throw std::runtime_error("expert buffer: empty episode");
  for (const Transition& t : episode) {
    const bool ok = t.s.size() == static_cast<size_t>(obs_dim_) &&
                    t.s_next.size() == static_cast<size_t>(obs_dim_) &&
                    t.a.size() == static_cast<size_t>(act_dim_);
    if (!ok)
      throw std::runtime_error("expert buffer: transition dimensions differ "
                               "from the buffer's declared dimensions");
  }
  episode_starts_.push_back(pairs_.size());
  pairs_.insert(pairs_.end(), episode.begin(), episode.end());
}

void ExpertBuffer::augment_final_pairs(size_t n) {
  if (n == 0) return;
  if (episode_starts_.empty())
    throw std::runtime_error(
        "expert buffer: no episodes to take final states from");
  // Final state of each episode, cycled in order. Copied up front: growing
  // pairs_ below may reallocate and would invalidate references into it.
  std::vector<std::vector<double>> finals;
  for (size_t e = 0; e < episode_starts_.size(); ++e) {
    const size_t end = (e + 1 < episode_starts_.size() ? episode_starts_[e + 1]
                                                       : regular_count()) -
                       1;
    finals.push_back(pairs_[end].s_next);
  }
  pairs_.reserve(pairs_.size() + n);
  for (size_t i = 0; i < n; ++i) {
    Transition t;
    t.s = finals[i % finals.size()];
    t.a.assign(static_cast<size_t>(act_dim_), 0.0);
    t.s_next = t.s;  // hold still: the state loops onto itself
    t.terminal = true;
    pairs_.push_back(std::move(t));
  }
  final_count_ += n;
}

ExpertBuffer subsample(const ExpertBuffer& buf, size_t stride) {
  if (stride < 1)
    throw std::invalid_argument("subsample stride must be at least 1");
  ExpertBuffer out(buf.task_, buf.obs_dim_, buf.act_dim_);
  for (size_t e = 0; e < buf.episode_starts_.size(); ++e) {
    const size_t begin = buf.episode_starts_[e];
    const size_t end = e + 1 < buf.episode_starts_.size()
                           ? buf.episode_starts_[e + 1]
                           : buf.regular_count();
    std::vector<Transition> kept;
    for (size_t i = begin; i < end; i += stride) kept.push_back(buf.pairs_[i]);
    out.append_episode(kept);
  }
  // The hold-still tail survives subsampling untouched.
  for (size_t i = buf.regular_count(); i < buf.size(); ++i)
    out.pairs_.push_back(buf.pairs_[i]);
  out.final_count_ = buf.final_count_;
  return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

namespace {

void write_f32(std::FILE* f, double v) {
  const float x = static_cast<float>(v);
  if (std::fwrite(&x, sizeof(float), 1, f) != 1)
    throw std::runtime_error("expert file: short write");
}

std::string expect_line(std::FILE* f, const std::string& path) {
  std::string line;
  int c;
  while ((c = std::fgetc(f)) != EOF && c != '\n') line.push_back(static_cast<char>(c));
  if (c == EOF && line.empty())
    throw std::runtime_error("expert file '" + path + "': truncated header");
  return line;
}

long header_int(const std::string& line, const std::string& key,
                const std::string& path) {
  std::istringstream ss(line);
  std::string got;
  long v = 0;
  if (!(ss >> got >> v) || got != key)
    throw std::runtime_error("expert file '" + path + "': expected '" + key +
                             " <n>', got '" + line + "'");
  return v;
}

}  // namespace

void save_expert(const ExpertBuffer& buf, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("expert file: cannot open '" + path + "'");
  std::ostringstream head;
  head << "lfgp-expert 1\n";
  head << "task " << buf.task() << "\n";
  head << "obs_dim " << buf.obs_dim() << "\n";
  head << "act_dim " << buf.act_dim() << "\n";
  head << "pairs " << buf.size() << "\n";
  head << "final_pairs " << buf.final_count() << "\n";
  head << "episodes " << buf.episode_count() << "\n";
  head << "episode_starts";
  for (size_t s : buf.episode_starts()) head << " " << s;
  head << "\ndata\n";
  const std::string h = head.str();
  if (std::fwrite(h.data(), 1, h.size(), f) != h.size()) {
    std::fclose(f);
    throw std::runtime_error("expert file: short write on '" + path + "'");
  }
  try {
    for (size_t i = 0; i < buf.size(); ++i) {
      const Transition& t = buf.at(i);
      for (double v : t.s) write_f32(f, v);
      for (double v : t.a) write_f32(f, v);
      for (double v : t.s_next) write_f32(f, v);
      write_f32(f, t.terminal ? 1.0 : 0.0);
    }
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
}

ExpertBuffer load_expert(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("expert file: cannot open '" + path + "'");
  ExpertBuffer out;
  try {
    if (expect_line(f, path) != "lfgp-expert 1")
      throw std::runtime_error("expert file '" + path +
                               "': bad magic (expected 'lfgp-expert 1')");
    const std::string task_line = expect_line(f, path);
    if (task_line.rfind("task ", 0) != 0)
      throw std::runtime_error("expert file '" + path + "': missing task line");
    const std::string task = task_line.substr(5);
    const int obs_dim = static_cast<int>(
        header_int(expect_line(f, path), "obs_dim", path));
    const int act_dim = static_cast<int>(
        header_int(expect_line(f, path), "act_dim", path));
    const long pairs = header_int(expect_line(f, path), "pairs", path);
    const long finals = header_int(expect_line(f, path), "final_pairs", path);
    const long episodes = header_int(expect_line(f, path), "episodes", path);
    std::istringstream starts_line(expect_line(f, path));
    std::string key;
    starts_line >> key;
    if (key != "episode_starts")
      throw std::runtime_error("expert file '" + path +
                               "': missing episode_starts line");
    std::vector<size_t> starts;
    long v;
    while (starts_line >> v) starts.push_back(static_cast<size_t>(v));
    if (static_cast<long>(starts.size()) != episodes)
      throw std::runtime_error("expert file '" + path +
                               "': episode_starts length disagrees with the "
                               "episodes count");
    if (expect_line(f, path) != "data")
      throw std::runtime_error("expert file '" + path +
                               "': missing data separator");
    if (pairs < 0 || finals < 0 || finals > pairs)
      throw std::runtime_error("expert file '" + path + "': bad pair counts");

    out = ExpertBuffer(task, obs_dim, act_dim);
    const size_t rec = 2 * static_cast<size_t>(obs_dim) +
                       static_cast<size_t>(act_dim) + 1;
    std::vector<float> raw(rec);
    for (long i = 0; i < pairs; ++i) {
      if (std::fread(raw.data(), sizeof(float), rec, f) != rec)
        throw std::runtime_error("expert file '" + path +
                                 "': truncated record " + std::to_string(i));
      Transition t;
      size_t k = 0;
      t.s.assign(raw.begin(), raw.begin() + obs_dim);
      k += static_cast<size_t>(obs_dim);
      t.a.assign(raw.begin() + k, raw.begin() + k + act_dim);
      k += static_cast<size_t>(act_dim);
      t.s_next.assign(raw.begin() + k, raw.begin() + k + obs_dim);
      k += static_cast<size_t>(obs_dim);
      t.terminal = raw[k] != 0.0f;
      out.pairs_.push_back(std::move(t));
    }
    float extra;
    if (std::fread(&extra, sizeof(float), 1, f) == 1)
      throw std::runtime_error("expert file '" + path +
                               "': trailing data past the declared records");
    out.episode_starts_ = std::move(starts);
    out.final_count_ = static_cast<size_t>(finals);
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

PolicyBatch sample_policy_batch(const ReplayBuffer& replay,
                                const std::vector<const ExpertBuffer*>& experts,
                                size_t batch_size, ExpertProportion& proportion,
                                Rng& rng) {
  if (replay.size() == 0)
    throw std::runtime_error(
        "replay buffer is empty: sampling requested before warmup");
  size_t expert_pairs = 0;
  for (const ExpertBuffer* e : experts) expert_pairs += e->size();
  if (proportion.value > 0 && expert_pairs == 0)
    throw std::runtime_error(
        "expert sampling proportion is positive but no demonstration pairs "
        "are available");

  PolicyBatch batch;
  batch.items.reserve(batch_size);
  for (size_t i = 0; i < batch_size; ++i) {
    if (proportion.value > 0 && rng.bernoulli(proportion.value)) {
      // Uniform over tasks first, then uniform within the task's buffer.
      const ExpertBuffer* e = nullptr;
      do {
        e = experts[static_cast<size_t>(
            rng.uniform_int(static_cast<int>(experts.size())))];
      } while (e->size() == 0);
      batch.items.push_back(
          &e->at(static_cast<size_t>(rng.uniform_int(static_cast<int>(e->size())))));
      ++batch.expert_drawn;
    } else {
      batch.items.push_back(&replay.sample(rng));
    }
  }
  proportion.value *= proportion.decay;  // one decay per batch drawn
  return batch;
}

std::vector<const Transition*> sample_discriminator_batch(
    const ExpertBuffer& expert, size_t batch_size, double final_pair_bias,
    Rng& rng) {
  if (expert.size() == 0)
    throw std::runtime_error("demonstration buffer for task '" +
                             expert.task() + "' is empty");
  if (final_pair_bias > 0 && expert.final_count() == 0)
    throw std::runtime_error(
        "final-pair bias is positive but the demonstration buffer for task '" +
        expert.task() + "' has no hold-still tail");
  std::vector<const Transition*> out;
  out.reserve(batch_size);
  for (size_t i = 0; i < batch_size; ++i) {
    if (final_pair_bias > 0 && rng.bernoulli(final_pair_bias)) {
      const size_t j = expert.regular_count() +
                       static_cast<size_t>(rng.uniform_int(
                           static_cast<int>(expert.final_count())));
      out.push_back(&expert.at(j));
    } else {
      out.push_back(&expert.at(static_cast<size_t>(
          rng.uniform_int(static_cast<int>(expert.size())))));
    }
  }
  return out;
}

}  // namespace lfgp::buffers
