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

#include <cstdint>
#include <functional>
#include <vector>

#include "zflash/geometry.hpp"
#include "zflash/types.hpp"

namespace zflash {

enum class CommandKind { kRead, kProgram, kErase };
enum class Origin { kHost, kBackground };

inline const char* to_string(CommandKind k) {
  switch (k) {
    case CommandKind::kRead: return "READ";
    case CommandKind::kProgram: return "PROGRAM";
    case CommandKind::kErase: return "ERASE";
  }
  return "?";
}

inline const char* to_string(Origin o) {
  return o == Origin::kHost ? "HOST" : "BACKGROUND";
}

// One flash command addressed to a single chip.
struct ChipCommand {
  CommandKind kind = CommandKind::kRead;
  Origin origin = Origin::kHost;
  uint32_t chip_index = 0;
  PhysSector target = kInvalidSector;  // first sector; block base for ERASE
  uint64_t payload_bytes = 0;          // transferred bytes; 0 for ERASE
  TimeNs issue_time = 0;
  CellKind media = CellKind::kTlc;
  uint32_t latency_units = 1;  // pages read / programming passes / blocks
};

// Completed command, as recorded in the event log.
struct Event {
  TimeNs time = 0;  // completion time
  uint32_t chip_index = 0;
  Origin origin = Origin::kHost;
  CommandKind kind = CommandKind::kRead;
  PhysSector target = kInvalidSector;
  uint64_t bytes = 0;
};

// Next-free timestamps for every parallel unit. Channel time covers data
// transfer, chip time covers media busy time; READ senses the page before the
// transfer, PROGRAM transfers before the media pass, ERASE never touches the
// channel.
class ParallelUnitClock {
 public:
  ParallelUnitClock() = default;
  explicit ParallelUnitClock(const FlashGeometry& g)
      : channel_free_(g.channels, 0), chip_free_(g.nchips(), 0) {}

  TimeNs channel_free(uint32_t channel) const { return channel_free_[channel]; }
  TimeNs chip_free(uint32_t chip_index) const { return chip_free_[chip_index]; }

  TimeNs schedule(const ChipCommand& cmd, const FlashGeometry& geometry,
                  const MediaProfile& profile) {
    if (cmd.chip_index >= chip_free_.size())
      throw SimError(ErrorCode::kBadAddress, "command outside geometry");
    uint32_t channel = geometry.channel_of(cmd.chip_index);
    TimeNs& ch = channel_free_[channel];
    TimeNs& cp = chip_free_[cmd.chip_index];
    TimeNs tx = transfer_ns(cmd.payload_bytes, geometry.channel_bandwidth);
    TimeNs end = 0;
    switch (cmd.kind) {
      case CommandKind::kProgram: {
        if (cmd.payload_bytes == 0)
          throw SimError(ErrorCode::kBadAddress, "PROGRAM without payload");
        TimeNs tx_start = std::max(cmd.issue_time, ch);
        TimeNs tx_end = tx_start + tx;
        ch = tx_end;
        TimeNs busy_start = std::max(tx_end, cp);
        end = busy_start +
              TimeNs(profile.program_latency_ns) * cmd.latency_units;
        cp = end;
        break;
      }
      case CommandKind::kRead: {
        if (cmd.payload_bytes == 0)
          throw SimError(ErrorCode::kBadAddress, "READ without payload");
        TimeNs sense_start = std::max(cmd.issue_time, cp);
        TimeNs sense_end =
            sense_start + TimeNs(profile.read_latency_ns) * cmd.latency_units;
        cp = sense_end;
        TimeNs tx_start = std::max(sense_end, ch);
        end = tx_start + tx;
        ch = end;
        break;
      }
      case CommandKind::kErase: {
        TimeNs busy_start = std::max(cmd.issue_time, cp);
        end = busy_start +
              TimeNs(profile.erase_latency_ns) * cmd.latency_units;
        cp = end;
        break;
      }
    }
    return end;
  }

  // Earliest time a command issued at `issue` would start occupying the chip.
  TimeNs start_time(const ChipCommand& cmd, const FlashGeometry& geometry) const {
    if (cmd.kind == CommandKind::kProgram) {
      uint32_t channel = geometry.channel_of(cmd.chip_index);
      return std::max(cmd.issue_time, channel_free_[channel]);
    }
    return std::max(cmd.issue_time, chip_free_[cmd.chip_index]);
  }

  static TimeNs transfer_ns(uint64_t bytes, uint64_t bandwidth) {
    // Integer floor; resolution is 1 ns.
    return bytes * 1'000'000'000ull / bandwidth;
  }

 private:
  std::vector<TimeNs> channel_free_;
  std::vector<TimeNs> chip_free_;
};

}  // namespace zflash
