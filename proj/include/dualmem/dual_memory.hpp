#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dualmem/main_memory.hpp"
#include "dualmem/priority.hpp"
#include "dualmem/sum_tree.hpp"
#include "dualmem/transition.hpp"

namespace dualmem {

enum class MemoryMode { SinglePER, SinglePSMM, DualDMS };

inline std::string_view to_string(MemoryMode mode) {
  switch (mode) {
    case MemoryMode::SinglePER: return "per";
    case MemoryMode::SinglePSMM: return "psmm";
    case MemoryMode::DualDMS: return "dms";
  }
  return "?";
}

inline MemoryMode parse_memory_mode(std::string_view name) {
  if (name == "per") return MemoryMode::SinglePER;
  if (name == "psmm") return MemoryMode::SinglePSMM;
  if (name == "dms") return MemoryMode::DualDMS;
  throw std::invalid_argument("unknown memory mode '" + std::string(name) + "' (expected per, psmm or dms)");
}

struct MemoryPolicy {
  MemoryMode mode = MemoryMode::DualDMS;
  std::size_t t = 16;  // time-ordered subsets sampled per refresh
  std::size_t n = 4;   // environment steps per training step
  std::size_t main_capacity = 8000;
  std::size_t cache_capacity = 2000;  // ignored by the single modes

  void validate() const {
    if (t == 0) throw std::invalid_argument("t must be positive");
    if (n == 0) throw std::invalid_argument("n must be positive");
    if (main_capacity == 0) throw std::invalid_argument("main_capacity must be positive");
    if (mode == MemoryMode::DualDMS && cache_capacity < t + n)
      throw std::invalid_argument("cache_capacity must be at least t + n for the dual memory");
  }
};

/// Identifies one stored entry. The generation changes whenever the slot is
/// evicted or overwritten, so a handle outliving its entry is detected.
struct EntryHandle {
  std::size_t slot = 0;
  std::uint64_t generation = 0;

  friend bool operator==(const EntryHandle&, const EntryHandle&) = default;
};

/// Slot store of (transition, priority) pairs indexed by a SumTree.
/// Occupied slots always carry a positive priority; free slots have leaf 0.
class CacheMemory {
 public:
  explicit CacheMemory(std::size_t capacity)
      : entries_(capacity), generation_(capacity, 0), tree_(capacity) {
    free_.reserve(capacity);
    for (std::size_t s = capacity; s-- > 0;) free_.push_back(s);
  }

  std::size_t size() const { return entries_.size() - free_.size(); }
  std::size_t capacity() const { return entries_.size(); }
  std::size_t free_space() const { return free_.size(); }
  bool full() const { return free_.empty(); }

  /// Stores into the lowest-numbered free slot on an empty store, otherwise
  /// the most recently freed one.
  EntryHandle insert(Transition tr, double priority) {
    if (free_.empty()) throw std::runtime_error("cache memory is full");
    const std::size_t slot = free_.back();
    free_.pop_back();
    return place(slot, std::move(tr), priority);
  }

  /// Overwrites an occupied slot, invalidating handles to the old entry.
  EntryHandle replace(std::size_t slot, Transition tr, double priority) {
    require_occupied(slot);
    return place(slot, std::move(tr), priority);
  }

  void evict(std::size_t slot) {
    require_occupied(slot);
    entries_[slot].reset();
    ++generation_[slot];
    tree_.update(slot, 0.0);
    free_.push_back(slot);
  }

  bool occupied(std::size_t slot) const { return slot < entries_.size() && entries_[slot].has_value(); }
  bool valid(const EntryHandle& h) const { return occupied(h.slot) && generation_[h.slot] == h.generation; }

  const Transition& entry(std::size_t slot) const {
    require_occupied(slot);
    return *entries_[slot];
  }
  double priority(std::size_t slot) const { return tree_.leaf(slot); }
  EntryHandle handle(std::size_t slot) const {
    require_occupied(slot);
    return {slot, generation_[slot]};
  }

  void set_priority(const EntryHandle& h, double priority) {
    if (!valid(h)) throw std::runtime_error("handle invalidated by eviction");
    check_priority(priority);
    tree_.update(h.slot, priority);
  }

  /// Largest stored priority, or 1.0 while nothing is stored.
  double max_priority() const { return size() == 0 ? 1.0 : tree_.max(); }

  std::vector<std::size_t> occupied_slots() const {
    std::vector<std::size_t> slots;
    slots.reserve(size());
    for (std::size_t s = 0; s < entries_.size(); ++s)
      if (entries_[s]) slots.push_back(s);
    return slots;
  }

  const SumTree& tree() const { return tree_; }

 private:
  static void check_priority(double p) {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("stored priority must be finite and positive");
  }

  void require_occupied(std::size_t slot) const {
    if (slot >= entries_.size()) throw std::out_of_range("cache slot out of range");
    if (!entries_[slot]) throw std::runtime_error("cache slot is empty");
  }

  EntryHandle place(std::size_t slot, Transition tr, double priority) {
    check_priority(priority);
    entries_[slot] = std::move(tr);
    ++generation_[slot];
    tree_.update(slot, priority);
    return {slot, generation_[slot]};
  }

  std::vector<std::optional<Transition>> entries_;
  std::vector<std::uint64_t> generation_;
  std::vector<std::size_t> free_;
  SumTree tree_;
};

struct RefreshReport {
  std::size_t free_before = 0;  // cache free space before eviction
  std::size_t evicted = 0;
  std::size_t copied = 0;
  std::size_t cache_count = 0;  // after the refresh
  std::size_t main_count = 0;
};

struct Minibatch {
  std::vector<Transition> transitions;
  std::vector<double> weights;
  std::vector<EntryHandle> handles;
};

/// Replay memory in one of three configurations:
///
///  - DualDMS: a time-ordered MainMemory feeding a prioritized CacheMemory.
///    Each refresh removes the free-space shortfall from the cache by
///    stochastic inverse-priority selection, then copies t stratified main
///    samples plus the n transitions ingested since the last refresh.
///    Training reads only the cache.
///  - SinglePER: one FIFO buffer of main_capacity with prioritized sampling.
///  - SinglePSMM: one buffer of main_capacity with stochastic inverse-priority
///    eviction and uniform sampling.
class ReplayMemory {
 public:
  ReplayMemory(MemoryPolicy policy, PriorityParams params)
      : policy_(validated(policy)), params_(validated(params)),
        store_(policy.mode == MemoryMode::DualDMS ? policy.cache_capacity : policy.main_capacity) {
    if (policy_.mode == MemoryMode::DualDMS) main_.emplace(policy_.main_capacity);
  }

  template <class Rng>
  void ingest(Transition tr, Rng& rng) {
    switch (policy_.mode) {
      case MemoryMode::DualDMS:
        main_->push(tr);
        pending_.push_back(std::move(tr));
        break;
      case MemoryMode::SinglePER:
        if (store_.full()) {
          store_.replace(fifo_cursor_, std::move(tr), store_.max_priority());
        } else {
          store_.insert(std::move(tr), store_.max_priority());
        }
        fifo_cursor_ = (fifo_cursor_ + 1) % store_.capacity();
        break;
      case MemoryMode::SinglePSMM:
        if (store_.full()) {
          const auto victim = psmm_select_removals(store_.tree().leaves(), 1, params_.alpha_remove, rng).front();
          store_.replace(victim, std::move(tr), store_.max_priority());
        } else {
          store_.insert(std::move(tr), store_.max_priority());
        }
        break;
    }
  }

  /// DualDMS only. Makes room for t + n entries, then copies them in with the
  /// current maximum cache priority.
  template <class Rng>
  RefreshReport refresh_cache(Rng& rng) {
    if (policy_.mode != MemoryMode::DualDMS) throw std::logic_error("refresh_cache requires the dual memory mode");
    if (main_->size() < policy_.t) throw std::runtime_error("warm-up incomplete");
    if (pending_.size() != policy_.n) throw std::runtime_error("training cadence violated");

    RefreshReport report;
    report.free_before = store_.free_space();
    const std::size_t incoming = policy_.t + policy_.n;
    if (store_.free_space() < incoming) {
      const std::size_t shortfall = incoming - store_.free_space();
      const auto slots = store_.occupied_slots();
      std::vector<double> priorities(slots.size());
      for (std::size_t i = 0; i < slots.size(); ++i) priorities[i] = store_.priority(slots[i]);
      for (std::size_t pick : psmm_select_removals(priorities, shortfall, params_.alpha_remove, rng))
        store_.evict(slots[pick]);
      report.evicted = shortfall;
    }

    const double initial = store_.max_priority();
    for (auto& tr : sample_time_stratified(*main_, static_cast<std::ptrdiff_t>(policy_.t), rng))
      store_.insert(std::move(tr), initial);
    for (auto& tr : pending_) store_.insert(std::move(tr), initial);
    pending_.clear();

    report.copied = incoming;
    report.cache_count = store_.size();
    report.main_count = main_->size();
    return report;
  }

  /// Drops the transitions waiting for the next refresh (used while the main
  /// memory is still too small to stratify).
  void discard_pending() { pending_.clear(); }

  template <class Rng>
  Minibatch sample_minibatch(std::size_t batch, Rng& rng) const {
    if (batch == 0) throw std::invalid_argument("batch size must be positive");
    if (store_.size() < batch) throw std::runtime_error("warm-up incomplete");

    Minibatch mb;
    mb.transitions.reserve(batch);
    mb.handles.reserve(batch);
    if (policy_.mode == MemoryMode::SinglePSMM) {
      // the PSMM buffer fills slots 0..size-1 and only ever overwrites in place
      std::uniform_int_distribution<std::size_t> pick(0, store_.size() - 1);
      for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t slot = pick(rng);
        mb.transitions.push_back(store_.entry(slot));
        mb.handles.push_back(store_.handle(slot));
      }
      mb.weights.assign(batch, 1.0);
      return mb;
    }

    auto sample = per_sample(store_.tree(), batch, params_.beta, rng);
    for (std::size_t slot : sample.indices) {
      mb.transitions.push_back(store_.entry(slot));
      mb.handles.push_back(store_.handle(slot));
    }
    mb.weights = std::move(sample.weights);
    return mb;
  }

  void update_priorities(std::span<const EntryHandle> handles, std::span<const double> td_errors) {
    if (handles.size() != td_errors.size()) throw std::invalid_argument("handles and TD errors differ in length");
    for (std::size_t i = 0; i < handles.size(); ++i)
      store_.set_priority(handles[i], stored_priority(td_errors[i], params_));
  }

  /// Transitions in the main memory (the single buffer for the single modes).
  std::size_t main_count() const { return main_ ? main_->size() : store_.size(); }
  /// Transitions in the cache; always 0 for the single modes.
  std::size_t cache_count() const { return main_ ? store_.size() : 0; }
  /// Transitions available to sample_minibatch.
  std::size_t trainable_count() const { return store_.size(); }
  std::size_t pending_count() const { return pending_.size(); }

  const MemoryPolicy& policy() const { return policy_; }
  const PriorityParams& params() const { return params_; }
  const CacheMemory& store() const { return store_; }
  CacheMemory& store() { return store_; }
  const MainMemory* main_memory() const { return main_ ? &*main_ : nullptr; }
  MainMemory* main_memory() { return main_ ? &*main_ : nullptr; }

 private:
  template <class T>
  static T validated(T value) {
    value.validate();
    return value;
  }

  MemoryPolicy policy_;
  PriorityParams params_;
  std::optional<MainMemory> main_;
  CacheMemory store_;
  std::vector<Transition> pending_;
  std::size_t fifo_cursor_ = 0;
};

}  // namespace dualmem
