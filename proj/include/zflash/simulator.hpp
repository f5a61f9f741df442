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

#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "zflash/device.hpp"
#include "zflash/trace.hpp"

namespace zflash {

// Replays a trace against a device. Host concurrency is trace timestamps
// plus an outstanding-request cap: when the queue is full, the next request
// waits for the earliest completion.
inline StatsReport run_trace(Device& device,
                             const std::vector<TraceRecord>& trace) {
  uint32_t qd = device.config().host.queue_depth;
  std::priority_queue<TimeNs, std::vector<TimeNs>, std::greater<TimeNs>>
      outstanding;
  for (size_t i = 0; i < trace.size(); ++i) {
    const TraceRecord& r = trace[i];
    TimeNs issue = r.timestamp;
    while (outstanding.size() >= qd) {
      issue = std::max(issue, outstanding.top());
      outstanding.pop();
    }
    try {
      TimeNs done = issue;
      switch (r.op) {
        case TraceOp::kWrite:
          done = device.write(r.ns, r.lba, r.len, issue, r.synced);
          break;
        case TraceOp::kRead:
          done = device.read(r.ns, r.lba, r.len, issue).done;
          break;
        case TraceOp::kFlush:
          done = device.flush(r.ns, issue);
          break;
        case TraceOp::kZoneReset:
          done = device.zone_reset(r.ns, static_cast<uint32_t>(r.lba), issue);
          break;
        case TraceOp::kZoneFinish:
          done = device.zone_finish(r.ns, static_cast<uint32_t>(r.lba), issue);
          break;
      }
      outstanding.push(done);
    } catch (const SimError& e) {
      throw SimError(e.code(), std::string(e.what()) + " (trace record " +
                                   std::to_string(i + 1) + ": " + to_csv(r) +
                                   ")");
    }
  }
  device.drain();
  return device.report();
}

}  // namespace zflash
