#pragma once

// Jitter buffers installed at relays, and the playout clock at the sink.
//
// A relay buffer holds early packets until their slot on the flow's CBR
// schedule and lets late ones through at once. An expired high-priority
// packet jumps the queue. Overflow evicts the Normal packet with the most
// slack; nothing is ever lost without being counted.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "csn/model.hpp"

namespace csn {

/// Per-flow CBR schedule at one buffer: slot(k) = epoch + (k - k0) * interval,
/// where epoch is the arrival time of the first packet k0 seen from the flow.
class ScheduleModel {
 public:
  explicit ScheduleModel(SimTime interval_us) : interval_(interval_us) {}

  SimTime interval() const { return interval_; }

  /// Expected arrival of `pkt`; the first packet of a flow fixes its epoch at `now`.
  SimTime expected_arrival(const Packet& pkt, SimTime now) {
    auto [it, inserted] = flows_.try_emplace(pkt.source_id, Flow{now, pkt.id});
    const Flow& f = it->second;
    return f.epoch + (pkt.id - f.first_index) * interval_;
  }

  std::optional<SimTime> epoch(NodeId source) const {
    auto it = flows_.find(source);
    if (it == flows_.end()) return std::nullopt;
    return it->second.epoch;
  }

 private:
  struct Flow {
    SimTime epoch;
    std::int64_t first_index;
  };
  SimTime interval_;
  std::map<NodeId, Flow> flows_;
};

enum class EnqueueResult { Queued, QueuedWithEviction, Rejected };

struct EnqueueOutcome {
  EnqueueResult result = EnqueueResult::Queued;
  SimTime scheduled_release = 0;
  std::optional<Packet> evicted;  // set for QueuedWithEviction
};

struct BufferEntry {
  Packet packet;
  SimTime enqueued_at = 0;
  SimTime scheduled_release = 0;
};

class JitterBuffer {
 public:
  explicit JitterBuffer(std::int32_t capacity_packets) : capacity_(capacity_packets) {}

  std::int32_t capacity() const { return capacity_; }
  std::size_t size() const { return queue_.size(); }
  bool empty() const { return queue_.empty(); }
  std::span<const BufferEntry> entries() const { return queue_; }

  EnqueueOutcome enqueue(Packet pkt, SimTime now, ScheduleModel& sched) {
    EnqueueOutcome out;
    out.scheduled_release = std::max(now, sched.expected_arrival(pkt, now));
    if (static_cast<std::int32_t>(queue_.size()) >= capacity_) {
      const auto victim = pick_victim(pkt);
      if (!victim) {
        out.result = EnqueueResult::Rejected;
        ++rejected_;
        return out;
      }
      out.evicted = std::move(queue_[*victim].packet);
      queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(*victim));
      out.result = EnqueueResult::QueuedWithEviction;
      ++evicted_;
    }
    insert({std::move(pkt), now, out.scheduled_release});
    ++enqueued_;
    peak_ = std::max(peak_, queue_.size());
    return out;
  }

  /// Removes and returns the expired (deadline <= now) High packet with the
  /// earliest deadline, ahead of everything else in the queue.
  std::optional<Packet> preempt_check(SimTime now) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < queue_.size(); ++i) {
      const auto& p = queue_[i].packet;
      if (p.priority != Priority::High || p.lifetime_deadline > now) continue;
      if (!best || p.lifetime_deadline < queue_[*best].packet.lifetime_deadline) best = i;
    }
    if (!best) return std::nullopt;
    Packet p = std::move(queue_[*best].packet);
    queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(*best));
    ++preempted_;
    return p;
  }

  /// Removes and returns every packet with scheduled_release <= now, in queue order.
  std::vector<Packet> release_ready(SimTime now) {
    std::vector<Packet> out;
    auto it = queue_.begin();
    while (it != queue_.end() && it->scheduled_release <= now) {
      out.push_back(std::move(it->packet));
      ++it;
    }
    queue_.erase(queue_.begin(), it);
    released_ += out.size();
    return out;
  }

  /// Empties the buffer (node failure); drained packets count as dropped.
  std::vector<Packet> drain() {
    std::vector<Packet> out;
    for (auto& e : queue_) out.push_back(std::move(e.packet));
    drained_ += queue_.size();
    queue_.clear();
    return out;
  }

  /// Earliest time at which this buffer needs service, if any.
  std::optional<SimTime> next_wakeup() const {
    std::optional<SimTime> t;
    for (const auto& e : queue_) {
      SimTime w = e.scheduled_release;
      if (e.packet.priority == Priority::High) w = std::min(w, e.packet.lifetime_deadline);
      if (!t || w < *t) t = w;
    }
    return t;
  }

  std::uint64_t enqueued() const { return enqueued_; }
  std::uint64_t released() const { return released_; }
  std::uint64_t preemptions() const { return preempted_; }
  std::uint64_t evictions() const { return evicted_; }
  std::uint64_t rejections() const { return rejected_; }
  std::uint64_t drained() const { return drained_; }
  std::uint64_t drops() const { return evicted_ + rejected_ + drained_; }
  std::size_t peak_occupancy() const { return peak_; }

 private:
  static bool before(const BufferEntry& a, const BufferEntry& b) {
    if (a.scheduled_release != b.scheduled_release) return a.scheduled_release < b.scheduled_release;
    if (a.enqueued_at != b.enqueued_at) return a.enqueued_at < b.enqueued_at;
    if (a.packet.id != b.packet.id) return a.packet.id < b.packet.id;
    return a.packet.source_id < b.packet.source_id;
  }

  void insert(BufferEntry e) {
    auto pos = std::upper_bound(queue_.begin(), queue_.end(), e, before);
    queue_.insert(pos, std::move(e));
  }

  // Latest-deadline Normal packet; failing that, for a High arrival, the
  // latest-deadline High packet if it expires after the arrival does.
  std::optional<std::size_t> pick_victim(const Packet& arriving) const {
    auto latest = [this](Priority prio) {
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < queue_.size(); ++i) {
        const auto& p = queue_[i].packet;
        if (p.priority != prio) continue;
        if (!best || p.lifetime_deadline >= queue_[*best].packet.lifetime_deadline) best = i;
      }
      return best;
    };
    if (auto normal = latest(Priority::Normal)) return normal;
    if (arriving.priority != Priority::High) return std::nullopt;
    auto high = latest(Priority::High);
    if (high && queue_[*high].packet.lifetime_deadline > arriving.lifetime_deadline) return high;
    return std::nullopt;
  }

  std::int32_t capacity_;
  std::vector<BufferEntry> queue_;
  std::uint64_t enqueued_ = 0;
  std::uint64_t released_ = 0;
  std::uint64_t preempted_ = 0;
  std::uint64_t evicted_ = 0;
  std::uint64_t rejected_ = 0;
  std::uint64_t drained_ = 0;
  std::size_t peak_ = 0;
};

/// Destination playout clock: packet k of a flow plays at
/// first_arrival + (k - k0) * interval + T_B, or on arrival if later.
class PlayoutBuffer {
 public:
  explicit PlayoutBuffer(SimTime interval_us) : interval_(interval_us) {}

  SimTime release(const Packet& pkt, SimTime now, SimTime playout_delay_us) {
    auto [it, inserted] = flows_.try_emplace(pkt.source_id, Flow{now, pkt.id});
    const Flow& f = it->second;
    return std::max(now, f.first_arrival + (pkt.id - f.first_index) * interval_ + playout_delay_us);
  }

 private:
  struct Flow {
    SimTime first_arrival;
    std::int64_t first_index;
  };
  SimTime interval_;
  std::map<NodeId, Flow> flows_;
};

inline SimTime playout_release(PlayoutBuffer& sink_buffer, const Packet& pkt, SimTime now,
                               SimTime playout_delay_us) {
  return sink_buffer.release(pkt, now, playout_delay_us);
}

}  // namespace csn
