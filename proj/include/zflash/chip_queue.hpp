/*
 * Copyright 2026 the zflash authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <deque>
#include <functional>
#include <limits>
#include <unordered_map>
#include <vector>

#include "zflash/timing.hpp"

namespace zflash {

// Per-chip command queues with host-over-background preemption.
//
// Host commands execute immediately: only background commands that already
// started (start time before the host command's issue) are honored as
// in-flight; everything still queued is deferred behind the host command.
// Background commands may depend on other background commands (a migration's
// program waits for its reads); groups tie commands to a migration whose
// side effects apply only once every member completed.
class ChipQueueEngine {
 public:
  using MediaResolver = std::function<const MediaProfile&(const ChipCommand&)>;
  using CompletionSink = std::function<void(const ChipCommand&, TimeNs)>;

  ChipQueueEngine() = default;
  ChipQueueEngine(const FlashGeometry& geometry, MediaResolver media,
                  CompletionSink on_complete)
      : geometry_(&geometry),
        clock_(geometry),
        media_(std::move(media)),
        on_complete_(std::move(on_complete)),
        queues_(geometry.nchips()) {}

  ParallelUnitClock& clock() { return clock_; }
  const ParallelUnitClock& clock() const { return clock_; }

  bool preemptible = true;

  // Runs a host command now, ahead of any background work that has not
  // started yet.
  TimeNs execute_host(const ChipCommand& cmd) {
    if (preemptible) {
      for (uint64_t g : drain_until(cmd.issue_time))
        leftover_finished_.push_back(g);
    } else {
      drain_chip_all(cmd.chip_index);
    }
    TimeNs done = clock_.schedule(cmd, *geometry_, media_(cmd));
    if (on_complete_) on_complete_(cmd, done);
    return done;
  }

  struct GroupState {
    uint32_t remaining = 0;
    TimeNs completion = 0;
  };

  uint64_t open_group() {
    uint64_t id = next_group_++;
    groups_[id] = GroupState{};
    return id;
  }

  // Enqueues a background command. `deps` are ids of previously enqueued
  // background commands that must complete first. Returns the command id.
  uint64_t enqueue_background(ChipCommand cmd, uint64_t group,
                              std::vector<uint64_t> deps = {}) {
    cmd.origin = Origin::kBackground;
    uint64_t id = next_cmd_++;
    queues_[cmd.chip_index].push_back(Pending{std::move(cmd), id, group,
                                              std::move(deps)});
    groups_[group].remaining++;
    pending_count_++;
    return id;
  }

  bool idle() const { return pending_count_ == 0; }

  // Executes every queued background command whose start time falls before
  // `t`, honoring dependencies. Returns ids of groups that finished.
  // A read queued behind a command that is still waiting on cross-chip
  // dependencies may run first: reads have no ordering constraint against
  // other queued work, and letting them through keeps one stalled migration
  // program from idling the whole chip.
  std::vector<uint64_t> drain_until(TimeNs t) {
    std::vector<uint64_t> finished;
    bool progress = true;
    while (progress) {
      progress = false;
      for (auto& q : queues_) {
        while (!q.empty()) {
          size_t pick = q.size();
          TimeNs ready = 0;
          // Prefer the oldest ready read: reads never depend on queued work
          // and often feed another chip's stalled program.
          for (size_t i = 0; i < q.size(); ++i) {
            TimeNs r = 0;
            if (q[i].cmd.kind == CommandKind::kRead && deps_ready(q[i], &r)) {
              pick = i;
              ready = r;
              break;
            }
          }
          if (pick == q.size() && deps_ready(q.front(), &ready)) pick = 0;
          if (pick == q.size()) break;
          ChipCommand cmd = q[pick].cmd;
          cmd.issue_time = std::max(cmd.issue_time, ready);
          if (clock_.start_time(cmd, *geometry_) >= t) break;
          run(q, pick, cmd, finished);
          progress = true;
        }
      }
    }
    return finished;
  }

  std::vector<uint64_t> drain_all() {
    return drain_until(std::numeric_limits<TimeNs>::max());
  }

  TimeNs group_completion(uint64_t group) const {
    auto it = groups_.find(group);
    return it == groups_.end() ? 0 : it->second.completion;
  }

 private:
  struct Pending {
    ChipCommand cmd;
    uint64_t id;
    uint64_t group;
    std::vector<uint64_t> deps;
  };

  bool deps_ready(const Pending& p, TimeNs* ready) const {
    TimeNs t = 0;
    for (uint64_t d : p.deps) {
      auto it = completed_.find(d);
      if (it == completed_.end()) return false;
      t = std::max(t, it->second);
    }
    *ready = t;
    return true;
  }

  void run(std::deque<Pending>& q, size_t index, const ChipCommand& cmd,
           std::vector<uint64_t>& finished) {
    Pending p = std::move(q[index]);
    q.erase(q.begin() + index);
    pending_count_--;
    TimeNs done = clock_.schedule(cmd, *geometry_, media_(cmd));
    completed_[p.id] = done;
    if (on_complete_) on_complete_(cmd, done);
    GroupState& g = groups_[p.group];
    g.completion = std::max(g.completion, done);
    if (--g.remaining == 0) finished.push_back(p.group);
  }

  // Fully drains one chip's queue, recursively forcing dependencies queued on
  // other chips. Used when preemption is disabled.
  void drain_chip_all(uint32_t chip) {
    std::vector<uint64_t> finished;
    while (!queues_[chip].empty()) {
      Pending& p = queues_[chip].front();
      TimeNs ready = 0;
      while (!deps_ready(p, &ready)) {
        // Dependencies live earlier in some other queue; make one full
        // low-water pass to unblock them.
        for (uint32_t c = 0; c < queues_.size(); ++c) {
          if (c == chip) continue;
          if (queues_[c].empty()) continue;
          Pending& o = queues_[c].front();
          TimeNs r = 0;
          if (!deps_ready(o, &r)) continue;
          ChipCommand cmd = o.cmd;
          cmd.issue_time = std::max(cmd.issue_time, r);
          run(queues_[c], 0, cmd, finished);
          break;
        }
      }
      ChipCommand cmd = p.cmd;
      cmd.issue_time = std::max(cmd.issue_time, ready);
      run(queues_[chip], 0, cmd, finished);
    }
    for (uint64_t g : finished) leftover_finished_.push_back(g);
  }

 public:
  // Groups finished by forced drains outside drain_until(); consumed by the
  // caller together with drain results.
  std::vector<uint64_t> take_leftover_finished() {
    auto v = std::move(leftover_finished_);
    leftover_finished_.clear();
    return v;
  }

 private:
  const FlashGeometry* geometry_ = nullptr;
  ParallelUnitClock clock_;
  MediaResolver media_;
  CompletionSink on_complete_;
  std::vector<std::deque<Pending>> queues_;
  std::unordered_map<uint64_t, TimeNs> completed_;
  std::unordered_map<uint64_t, GroupState> groups_;
  std::vector<uint64_t> leftover_finished_;
  uint64_t next_cmd_ = 1;
  uint64_t next_group_ = 1;
  uint64_t pending_count_ = 0;
};

}  // namespace zflash
