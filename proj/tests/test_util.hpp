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

#include <algorithm>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "zflash/config.hpp"
#include "zflash/device.hpp"
#include "zflash/simulator.hpp"
#include "zflash/trace.hpp"

namespace zflash::testutil {

// Tiny zoned-only device: 4 chips, 12 KiB programming unit, 192 KiB zones.
inline SimConfig small_config() {
  return parse_config_string(R"(
[geometry]
channels = 2
chips_per_channel = 2
blocks_per_chip = 8
pages_per_block = 12
page_size = 4KiB
channel_bandwidth = 3200MiB
slc_blocks_per_chip = 4
[media]
cell = tlc
[buffers]
count = 2
size = 48KiB
policy = fully_associative
[cache]
size = 4KiB
entry_size = 8
strategy = multiple
[host]
queue_depth = 8
[namespace.0]
kind = zoned
zone_count = 3
slc_buffer = 128KiB
)");
}

// Block metadata namespace + zoned namespace on the small geometry.
inline SimConfig small_mixed_config() {
  return parse_config_string(R"(
[geometry]
channels = 2
chips_per_channel = 2
blocks_per_chip = 8
pages_per_block = 12
page_size = 4KiB
channel_bandwidth = 3200MiB
slc_blocks_per_chip = 4
[media]
cell = tlc
[buffers]
count = 3
size = 48KiB
policy = fully_associative
[cache]
size = 4KiB
entry_size = 8
strategy = multiple
[host]
queue_depth = 8
[namespace.0]
kind = block
logical_size = 48KiB
slc_buffer = 128KiB
[namespace.1]
kind = zoned
zone_count = 3
slc_buffer = 64KiB
)");
}

// Geometry with a 96 KiB programming unit (24 x 4 KiB pages per chip pass).
inline SimConfig unit96_config() {
  return parse_config_string(R"(
[geometry]
channels = 2
chips_per_channel = 2
blocks_per_chip = 8
pages_per_block = 48
page_size = 4KiB
channel_bandwidth = 3200MiB
slc_blocks_per_chip = 4
[media]
cell = tlc
min_program_pages = 24
[buffers]
count = 2
size = 96KiB
policy = fully_associative
[cache]
size = 8KiB
entry_size = 8
strategy = multiple
[host]
queue_depth = 8
[namespace.0]
kind = zoned
zone_count = 3
slc_buffer = 512KiB
)");
}

inline uint64_t shadow_key(uint32_t ns, Lpa lpa) {
  return (uint64_t(ns) << 48) | lpa;
}

// Page-level last-writer oracle kept alongside a device; mirrors the
// device's per-namespace write sequence numbering.
struct ShadowMap {
  std::unordered_map<uint64_t, uint64_t> seq;  // (ns, lpa) -> last writer
  std::vector<uint64_t> next;                  // per-namespace counter

  explicit ShadowMap(size_t namespaces) : next(namespaces, 1) {}

  void on_write(uint32_t ns, Lpa lpa, uint64_t len) {
    for (uint64_t p = 0; p < len / kSectorBytes; ++p)
      seq[shadow_key(ns, lpa + p)] = next[ns]++;
  }
  void on_zone_reset(uint32_t ns, Lpa zone_base_lpa, uint64_t zone_lpas) {
    for (uint64_t p = 0; p < zone_lpas; ++p)
      seq.erase(shadow_key(ns, zone_base_lpa + p));
  }
  bool written(uint32_t ns, Lpa lpa) const {
    return seq.count(shadow_key(ns, lpa)) > 0;
  }
  uint64_t expected(uint32_t ns, Lpa lpa) const {
    return seq.at(shadow_key(ns, lpa));
  }
};

// Checks every page of a read result against the shadow map; returns an
// empty string on success and a per-page diff otherwise.
inline std::string stamps_diff(const ShadowMap& shadow, uint32_t ns, Lpa lpa,
                               const Device::ReadResult& r) {
  std::string out;
  for (size_t p = 0; p < r.stamps.size(); ++p) {
    const ContentStamp& s = r.stamps[p];
    uint64_t want = shadow.expected(ns, lpa + p);
    if (s.ns != ns || s.lpa != lpa + p || s.seq != want)
      out += " [page " + std::to_string(p) + ": got ns=" +
             std::to_string(s.ns) + " lpa=" + std::to_string(s.lpa) +
             " seq=" + std::to_string(s.seq) + ", want lpa=" +
             std::to_string(lpa + p) + " seq=" + std::to_string(want) + "]";
  }
  return out;
}

inline bool stamps_match(const ShadowMap& shadow, uint32_t ns, Lpa lpa,
                         const Device::ReadResult& r) {
  return stamps_diff(shadow, ns, lpa, r).empty();
}

// Mixed block + zoned device with SLC partitions sized for sustained random
// overwrites: in-SLC relocation needs free-slot headroom at least as large as
// a victim's live data.
inline SimConfig roomy_mixed_config() {
  return parse_config_string(R"(
[geometry]
channels = 2
chips_per_channel = 2
blocks_per_chip = 12
pages_per_block = 12
page_size = 4KiB
channel_bandwidth = 3200MiB
slc_blocks_per_chip = 7
[media]
cell = tlc
[buffers]
count = 3
size = 48KiB
policy = fully_associative
[cache]
size = 4KiB
entry_size = 8
strategy = multiple
[host]
queue_depth = 8
[namespace.0]
kind = block
logical_size = 48KiB
slc_buffer = 192KiB
[namespace.1]
kind = zoned
zone_count = 3
slc_buffer = 192KiB
)");
}

// Replays a random but always-valid op stream against a device while keeping
// the shadow map in sync, then reads back every live page. Throws
// std::runtime_error on any stamp mismatch or accounting violation.
class ShadowTraceRun {
 public:
  ShadowTraceRun(SimConfig cfg, uint64_t seed)
      : cfg_(std::move(cfg)),
        dev_(cfg_, /*track_content=*/true),
        shadow_(cfg_.namespaces.size()),
        rng_(seed) {
    for (const NamespaceConfig& nc : cfg_.namespaces) {
      NsMirror m;
      m.zoned = nc.kind == NsKind::kZoned;
      m.lpas = cfg_.addressable_size(nc) / kSectorBytes;
      if (m.zoned) {
        m.zone_lpas = cfg_.effective_zone_size(nc) / kSectorBytes;
        m.cap_pages = cfg_.effective_zone_capacity(nc) / kSectorBytes;
        m.zones.resize(nc.zone_count);
      }
      ns_.push_back(m);
    }
  }

  bool verbose = false;  // dump each op for failure diagnosis

  Device& device() { return dev_; }
  const ShadowMap& shadow() const { return shadow_; }

  void step() {
    now_ += 1 + rng_() % 50'000;
    switch (rng_() % 16) {
      case 0: op_flush(); break;
      case 1: op_zone_reset(); break;
      case 2: op_zone_finish(); break;
      case 3: op_fold(); break;
      case 4:
      case 5:
      case 6:
      case 7:
      case 8: op_read(); break;
      default: op_write(); break;
    }
  }

  // Reads back every page the oracle says is live and checks its identity.
  void verify_all() {
    dev_.drain();
    now_ += 1'000'000'000;
    for (uint32_t n = 0; n < ns_.size(); ++n) {
      for (Lpa l = 0; l < ns_[n].lpas; ++l) {
        if (!shadow_.written(n, l)) continue;
        Device::ReadResult r = dev_.read(n, l, kSectorBytes, now_);
        std::string diff = stamps_diff(shadow_, n, l, r);
        if (!diff.empty())
          fail("stale read at ns " + std::to_string(n) + " lpa " +
               std::to_string(l) + diff);
      }
    }
  }

  void check_accounting() const {
    for (uint32_t n = 0; n < ns_.size(); ++n) {
      const NsCounters& s = dev_.ns_ctx(n).stats;
      if (s.device_program_bytes() !=
          s.host_direct_regular_bytes + s.slc_buffer_program_bytes +
              s.fold_program_bytes + s.gc_program_bytes)
        fail("program byte accounting broken for ns " + std::to_string(n));
    }
  }

 private:
  struct ZoneMirror {
    uint64_t wp_pages = 0;
    bool full = false;
  };
  struct NsMirror {
    bool zoned = false;
    uint64_t lpas = 0;
    uint64_t zone_lpas = 0;
    uint64_t cap_pages = 0;
    std::vector<ZoneMirror> zones;
  };

  [[noreturn]] static void fail(const std::string& why) {
    throw std::runtime_error(why);
  }

  template <typename... Args>
  void log(const char* f, Args... args) const {
    if (!verbose) return;
    std::printf(f, args...);
    std::printf("\n");
  }

  uint32_t pick_ns() { return uint32_t(rng_() % ns_.size()); }

  void op_write() {
    uint32_t n = pick_ns();
    NsMirror& m = ns_[n];
    if (!m.zoned) {
      Lpa lpa = rng_() % m.lpas;
      uint64_t max_pages = std::min<uint64_t>(m.lpas - lpa, 8);
      uint64_t pages = 1 + rng_() % max_pages;
      bool synced = rng_() % 4 == 0;
      log("WRITE ns=%u lpa=%llu x%llu sync=%d", n,
          (unsigned long long)lpa, (unsigned long long)pages, int(synced));
      dev_.write(n, lpa, pages * kSectorBytes, now_, synced);
      shadow_.on_write(n, lpa, pages * kSectorBytes);
      return;
    }
    uint32_t z = uint32_t(rng_() % m.zones.size());
    ZoneMirror& zm = m.zones[z];
    if (zm.full || zm.wp_pages >= m.cap_pages) return;
    uint64_t room = m.cap_pages - zm.wp_pages;
    uint64_t pages = 1 + rng_() % std::min<uint64_t>(room, 16);
    bool synced = rng_() % 4 == 0;
    Lpa lpa = Lpa(z) * m.zone_lpas + zm.wp_pages;
    log("WRITE ns=%u z=%u lpa=%llu x%llu sync=%d", n, z,
        (unsigned long long)lpa, (unsigned long long)pages, int(synced));
    dev_.write(n, lpa, pages * kSectorBytes, now_, synced);
    shadow_.on_write(n, lpa, pages * kSectorBytes);
    zm.wp_pages += pages;
    if (zm.wp_pages == m.cap_pages) zm.full = true;
  }

  void op_read() {
    uint32_t n = pick_ns();
    NsMirror& m = ns_[n];
    // Pick a random live page, then extend to a short run of live pages.
    Lpa start = rng_() % m.lpas;
    Lpa lpa = start;
    bool found = false;
    for (uint64_t i = 0; i < m.lpas; ++i) {
      lpa = (start + i) % m.lpas;
      if (shadow_.written(n, lpa)) {
        found = true;
        break;
      }
    }
    if (!found) return;
    uint64_t pages = 1;
    while (pages < 8 && lpa + pages < m.lpas &&
           shadow_.written(n, lpa + pages) && rng_() % 2)
      pages++;
    log("READ ns=%u lpa=%llu x%llu", n, (unsigned long long)lpa,
        (unsigned long long)pages);
    Device::ReadResult r = dev_.read(n, lpa, pages * kSectorBytes, now_);
    std::string diff = stamps_diff(shadow_, n, lpa, r);
    if (!diff.empty())
      fail("stale read at ns " + std::to_string(n) + " lpa " +
           std::to_string(lpa) + " x" + std::to_string(pages) + diff);
  }

  void op_flush() {
    uint32_t n = pick_ns();
    log("FLUSH ns=%u", n);
    dev_.flush(n, now_);
  }

  void op_zone_reset() {
    uint32_t n = pick_ns();
    NsMirror& m = ns_[n];
    if (!m.zoned) return;
    uint32_t z = uint32_t(rng_() % m.zones.size());
    log("RESET ns=%u z=%u", n, z);
    dev_.zone_reset(n, z, now_);
    shadow_.on_zone_reset(n, Lpa(z) * m.zone_lpas, m.zone_lpas);
    m.zones[z] = ZoneMirror{};
  }

  void op_zone_finish() {
    uint32_t n = pick_ns();
    NsMirror& m = ns_[n];
    if (!m.zoned) return;
    uint32_t z = uint32_t(rng_() % m.zones.size());
    log("FINISH ns=%u z=%u", n, z);
    dev_.zone_finish(n, z, now_);
    m.zones[z].full = true;
  }

  void op_fold() {
    uint32_t n = pick_ns();
    if (!ns_[n].zoned) return;
    uint32_t z = uint32_t(rng_() % ns_[n].zones.size());
    log("FOLD ns=%u z=%u", n, z);
    dev_.fold_zone(n, z, now_);
  }

  SimConfig cfg_;
  Device dev_;
  ShadowMap shadow_;
  std::mt19937_64 rng_;
  std::vector<NsMirror> ns_;
  TimeNs now_ = 0;
};

// Rotates the shadow runs through different device configurations so the
// randomized traces exercise every policy combination.
inline SimConfig shadow_variant_config(uint64_t i) {
  switch (i % 6) {
    case 0: {
      SimConfig cfg = small_config();
      cfg.namespaces[0].slc_buffer = 192 * 1024;  // headroom for GC churn
      return cfg;
    }
    case 1: {
      SimConfig cfg = small_config();
      cfg.namespaces[0].slc_buffer = 192 * 1024;
      cfg.buffers.policy = BufferPolicy::kModulo;
      cfg.cache.strategy = FetchStrategy::kBitmap;
      cfg.sub_block_zones = true;
      return cfg;
    }
    case 2: {
      SimConfig cfg = small_config();
      cfg.namespaces[0].slc_buffer = 192 * 1024;
      cfg.gc.preemptible = false;
      cfg.cache.size = 64;  // 8 cached entries: plenty of fetch misses
      return cfg;
    }
    case 3: {
      SimConfig cfg = small_config();
      cfg.namespaces[0].slc_buffer = 192 * 1024;
      cfg.cache.hybrid = false;  // plain page-level mapping
      return cfg;
    }
    case 4:
      return roomy_mixed_config();
    default: {
      SimConfig cfg = roomy_mixed_config();
      cfg.buffers.policy = BufferPolicy::kModulo;
      cfg.gc.preemptible = false;
      cfg.cache.pin_zone_entries = true;
      return cfg;
    }
  }
}

// One full randomized trace: ops, full readback, accounting identity.
// Throws std::runtime_error (with the failing address) on any violation.
inline void run_shadow_trace(uint64_t seed, int ops) {
  ShadowTraceRun run(shadow_variant_config(seed), 0xC0FFEE + seed);
  for (int i = 0; i < ops; ++i) run.step();
  run.verify_all();
  run.check_accounting();
}

inline uint64_t count_events(const std::vector<Event>& events,
                             CommandKind kind, bool slc,
                             const FlashGeometry& g) {
  uint64_t n = 0;
  for (const Event& e : events)
    if (e.kind == kind &&
        g.is_slc_block(g.block_of_sector(e.target)) == slc)
      n++;
  return n;
}

inline uint64_t sum_event_bytes(const std::vector<Event>& events,
                                CommandKind kind, bool slc,
                                const FlashGeometry& g) {
  uint64_t n = 0;
  for (const Event& e : events)
    if (e.kind == kind &&
        g.is_slc_block(g.block_of_sector(e.target)) == slc)
      n += e.bytes;
  return n;
}

}  // namespace zflash::testutil
