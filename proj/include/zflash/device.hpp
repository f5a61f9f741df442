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
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "zflash/allocator.hpp"
#include "zflash/chip_queue.hpp"
#include "zflash/config.hpp"
#include "zflash/geometry.hpp"
#include "zflash/mapping.hpp"
#include "zflash/stats.hpp"
#include "zflash/timing.hpp"
#include "zflash/types.hpp"

namespace zflash {

enum class ZoneState { kEmpty, kOpen, kFull };
enum class FlushReason { kFull, kConflict, kSync, kHostFlush };

// Last-writer marker per physical 4 KiB page, used by the test harness to
// check that reads resolve to the right data.
struct ContentStamp {
  uint32_t ns = 0;
  Lpa lpa = 0;
  uint64_t seq = 0;
};

struct StagedPage {
  Lpa lpa = 0;
  uint64_t seq = 0;
};

struct WriteBuffer {
  uint64_t capacity = 0;
  bool zoned_pool = true;  // false: the block namespace's dedicated buffer
  bool bound = false;
  uint32_t ns = 0;
  uint32_t zone = 0;
  std::vector<StagedPage> staged;
  uint64_t fill() const { return staged.size() * kSectorBytes; }
};

// One stretch of a zone handed to regular flash; folds complete out of order,
// so the durable prefix advances over the done records.
struct ProgressRecord {
  uint64_t id = 0;
  uint64_t offset = 0;
  uint64_t bytes = 0;
  bool done = false;
};

struct Zone {
  ZoneState state = ZoneState::kEmpty;
  uint64_t wp = 0;            // host bytes accepted (incl. still-buffered)
  uint64_t cursor_sched = 0;  // bytes programmed-or-scheduled to regular
  uint64_t durable = 0;       // contiguous regular-resident prefix
  uint64_t promoted_chunks = 0;
  uint64_t epoch = 0;  // bumped on reset; guards stale background work
  std::deque<PhysSector> tail;  // SLC pages for [cursor_sched, flushed)
  std::deque<ProgressRecord> progress;
  std::optional<ZoneRegion> region;
};

struct NamespaceCtx {
  NamespaceConfig cfg;
  NsKind kind = NsKind::kZoned;
  uint64_t addressable = 0;  // bytes of LBA space
  uint64_t zone_size = 0;
  uint64_t zone_capacity = 0;
  std::vector<Zone> zones;
  NsCounters stats;
  uint64_t gc_inflight = 0;  // superblocks currently being reclaimed
  uint64_t next_seq = 1;
};

// The simulated drive: shared flash complex, per-namespace controller
// contexts, write buffers, hybrid mapping, and composite GC, all on one
// deterministic timeline.
class Device {
 public:
  explicit Device(const SimConfig& cfg, bool track_content = false)
      : cfg_(cfg), track_content_(track_content) {
    cfg_.validate();
    geometry_ = cfg_.geometry;
    regular_ = cfg_.regular;
    slc_ = cfg_.slc;
    gc_dest_ = cfg_.effective_gc_destination();
    alloc_ = SpaceAllocator(geometry_, regular_, cfg_.sub_block_zones);
    mapping_ = MappingManager(geometry_, cfg_.cache.strategy, cfg_.cache.size,
                              cfg_.cache.entry_size, cfg_.cache.buckets,
                              cfg_.cache.pin_zone_entries, cfg_.cache.hybrid);
    engine_ = ChipQueueEngine(
        geometry_,
        [this](const ChipCommand& c) -> const MediaProfile& {
          return c.media == CellKind::kSlc ? slc_ : regular_;
        },
        [this](const ChipCommand& c, TimeNs done) {
          events_.push_back(
              {done, c.chip_index, c.origin, c.kind, c.target, c.payload_bytes});
          last_event_time_ = std::max(last_event_time_, done);
        });
    engine_.preemptible = cfg_.gc.preemptible;

    uint32_t next_slc_sb = 0;
    for (const NamespaceConfig& nc : cfg_.namespaces) {
      NamespaceCtx c;
      c.cfg = nc;
      c.kind = nc.kind;
      c.addressable = cfg_.addressable_size(nc);
      if (nc.kind == NsKind::kZoned) {
        c.zone_size = cfg_.effective_zone_size(nc);
        c.zone_capacity = cfg_.effective_zone_capacity(nc);
        c.zones.resize(nc.zone_count);
      }
      uint64_t nsbs = cfg_.slc_superblocks(nc);
      std::vector<uint32_t> sbs;
      for (uint64_t i = 0; i < nsbs; ++i) sbs.push_back(next_slc_sb++);
      alloc_.add_slc_partition(nc.ns_id, sbs);
      uint64_t lpas = c.addressable / kSectorBytes;
      uint64_t zone_lpas =
          nc.kind == NsKind::kZoned ? c.zone_size / kSectorBytes : 0;
      mapping_.add_namespace(nc.ns_id, lpas, zone_lpas);
      if (cfg_.cache.strategy == FetchStrategy::kBitmap)
        c.stats.granularity_bitmap_bytes =
            granularity_bitmap_bytes(c.addressable);
      ns_.push_back(std::move(c));
    }

    // Buffer split: the block namespace (if any) owns buffer 0; zoned
    // namespaces share the rest.
    bool has_block = !ns_.empty() && ns_[0].kind == NsKind::kBlock;
    for (uint32_t i = 0; i < cfg_.buffers.count; ++i) {
      WriteBuffer b;
      b.capacity = cfg_.buffers.size;
      if (has_block && i == 0) {
        b.zoned_pool = false;
        b.bound = true;
        b.ns = 0;
      }
      buffers_.push_back(std::move(b));
    }
    for (uint32_t i = 0; i < buffers_.size(); ++i)
      if (buffers_[i].zoned_pool) zoned_pool_.push_back(i);
  }

  Device(const Device&) = delete;
  Device& operator=(const Device&) = delete;

  // ---- Host operations (all times in simulated ns) ----

  TimeNs write(uint32_t ns, Lpa lpa, uint64_t len, TimeNs now,
               bool synced = false) {
    NamespaceCtx& c = ctx(ns);
    check_extent(c, lpa, len, "write");
    advance_to(now);
    TimeNs done = now;
    if (c.kind == NsKind::kBlock) {
      WriteBuffer& b = buffers_[0];
      uint64_t pages = len / kSectorBytes;
      for (uint64_t p = 0; p < pages; ++p) {
        b.staged.push_back({lpa + p, c.next_seq++});
        if (b.fill() >= b.capacity)
          done = std::max(done, flush_buffer(0, FlushReason::kFull, now));
      }
      if (synced && !b.staged.empty())
        done = std::max(done, flush_buffer(0, FlushReason::kSync, now));
    } else {
      uint64_t zone_lpas = c.zone_size / kSectorBytes;
      uint32_t z = static_cast<uint32_t>(lpa / zone_lpas);
      uint64_t off = (lpa % zone_lpas) * kSectorBytes;
      Zone& zn = c.zones[z];
      if (zn.state == ZoneState::kFull)
        throw SimError(ErrorCode::kZoneFull, "write to FULL zone");
      if (off != zn.wp)
        throw SimError(ErrorCode::kUnalignedWrite,
                       "zoned write not at the zone write pointer");
      if (zn.wp + len > c.zone_capacity)
        throw SimError(ErrorCode::kZoneFull, "write beyond zone capacity");
      if (zn.state == ZoneState::kEmpty) {
        zn.region = alloc_.reserve_zone_region(c.zone_capacity);
        zn.state = ZoneState::kOpen;
      }
      uint64_t threshold =
          std::min<uint64_t>(stripe_unit_bytes(geometry_, regular_),
                             cfg_.buffers.size);
      uint64_t remaining = len / kSectorBytes;
      Lpa cur = lpa;
      while (remaining > 0) {
        uint32_t bid = bind_zone_buffer(ns, z, now, &done);
        WriteBuffer& b = buffers_[bid];
        uint64_t room = (threshold - b.fill()) / kSectorBytes;
        uint64_t take = std::min(remaining, room);
        for (uint64_t p = 0; p < take; ++p)
          b.staged.push_back({cur + p, c.next_seq++});
        zn.wp += take * kSectorBytes;
        cur += take;
        remaining -= take;
        if (b.fill() >= threshold)
          done = std::max(done, flush_buffer(bid, FlushReason::kFull, now));
      }
      if (zn.wp == c.zone_capacity) {
        zn.state = ZoneState::kFull;
        if (int bid = find_binding(ns, z); bid >= 0)
          done = std::max(done, flush_buffer(uint32_t(bid),
                                             FlushReason::kSync, now));
      } else if (synced) {
        if (int bid = find_binding(ns, z); bid >= 0)
          done = std::max(done, flush_buffer(uint32_t(bid),
                                             FlushReason::kSync, now));
      }
    }
    c.stats.host_write_bytes += len;
    c.stats.host_writes++;
    c.stats.note_write(now, done);
    return done;
  }

  struct ReadResult {
    TimeNs done = 0;
    std::vector<ContentStamp> stamps;  // one per 4 KiB page when tracking
  };

  ReadResult read(uint32_t ns, Lpa lpa, uint64_t len, TimeNs now) {
    NamespaceCtx& c = ctx(ns);
    check_extent(c, lpa, len, "read");
    advance_to(now);
    ReadResult res;
    res.done = now;
    uint64_t pages = len / kSectorBytes;
    std::vector<PhysSector> flash_ppas;
    std::vector<size_t> flash_page_idx;
    // Data reads cannot start until the address translation is in hand; on a
    // cache miss they wait for the mapping-fetch flash reads to return.
    TimeNs data_issue = now;
    if (track_content_) res.stamps.resize(pages);
    for (uint64_t p = 0; p < pages; ++p) {
      Lpa l = lpa + p;
      // Still-buffered data is served from controller RAM.
      if (const StagedPage* sp = buffered_page(c, ns, l)) {
        if (track_content_) res.stamps[p] = {ns, l, sp->seq};
        continue;
      }
      Resolution r = mapping_.resolve(ns, l);  // throws UNMAPPED_READ
      if (r.cache_hit) {
        switch (r.gran) {
          case Granularity::kZone: c.stats.l2p_hits_zone++; break;
          case Granularity::kChunk: c.stats.l2p_hits_chunk++; break;
          default: c.stats.l2p_hits_page++; break;
        }
      } else {
        c.stats.l2p_misses++;
        for (uint32_t chip : r.fetch_chips) {
          ChipCommand cmd;
          cmd.kind = CommandKind::kRead;
          cmd.origin = Origin::kHost;
          cmd.chip_index = chip;
          cmd.target = geometry_.linear_sector(chip, 0, 0, 0);
          cmd.payload_bytes = kSectorBytes;
          cmd.issue_time = now;
          cmd.media = CellKind::kSlc;
          TimeNs fetched = engine_.execute_host(cmd);
          res.done = std::max(res.done, fetched);
          data_issue = std::max(data_issue, fetched);
          c.stats.mapping_fetch_reads++;
          c.stats.device_read_bytes_slc += kSectorBytes;
        }
        process_finished(engine_.take_leftover_finished());
      }
      flash_ppas.push_back(r.ppa);
      flash_page_idx.push_back(p);
      if (track_content_) {
        auto it = content_.find(r.ppa);
        if (it != content_.end()) res.stamps[p] = it->second;
      }
    }
    for (const PageRun& run : coalesce_runs(flash_ppas)) {
      bool slc = geometry_.is_slc_block(geometry_.block_of_sector(run.first));
      ChipCommand cmd;
      cmd.kind = CommandKind::kRead;
      cmd.origin = Origin::kHost;
      cmd.chip_index = run.chip;
      cmd.target = run.first;
      cmd.payload_bytes = run.bytes;
      cmd.issue_time = data_issue;
      cmd.media = slc ? CellKind::kSlc : regular_.cell_kind;
      cmd.latency_units = run.pages;
      res.done = std::max(res.done, engine_.execute_host(cmd));
      (slc ? c.stats.device_read_bytes_slc : c.stats.device_read_bytes_regular)
          += run.bytes;
    }
    process_finished(engine_.take_leftover_finished());
    c.stats.host_read_bytes += len;
    c.stats.host_reads++;
    c.stats.note_read(now, res.done);
    return res;
  }

  TimeNs flush(uint32_t ns, TimeNs now) {
    NamespaceCtx& c = ctx(ns);
    advance_to(now);
    TimeNs done = now;
    for (uint32_t i = 0; i < buffers_.size(); ++i) {
      WriteBuffer& b = buffers_[i];
      if (b.bound && b.ns == ns && !b.staged.empty())
        done = std::max(done, flush_buffer(i, FlushReason::kHostFlush, now));
    }
    (void)c;
    return done;
  }

  TimeNs zone_reset(uint32_t ns, uint32_t zone_id, TimeNs now) {
    NamespaceCtx& c = ctx(ns);
    require_zoned(c);
    if (zone_id >= c.zones.size())
      throw SimError(ErrorCode::kBadAddress, "zone id out of range");
    advance_to(now);
    // Resets wait out all background work so no migration or fold lands in
    // freed blocks.
    process_finished(engine_.drain_all());
    Zone& zn = c.zones[zone_id];
    if (zn.state == ZoneState::kEmpty) return now;  // idempotent

    if (int bid = find_binding(ns, zone_id); bid >= 0) {
      buffers_[bid].staged.clear();
      buffers_[bid].bound = false;
    }
    Lpa base = Lpa(zone_id) * (c.zone_size / kSectorBytes);
    uint64_t written_lpas = zn.wp / kSectorBytes;
    for (uint64_t i = 0; i < written_lpas; ++i) {
      Lpa l = base + i;
      if (!mapping_.table(ns).is_mapped(l)) continue;
      PhysSector old = mapping_.table(ns).at(l).ppa;
      if (geometry_.is_slc_block(geometry_.block_of_sector(old))) {
        SlcSlot& slot = alloc_.slc_slot(old);
        if (slot.state == SlcSlot::State::kValid) {
          slot.state = SlcSlot::State::kInvalid;
          alloc_.superblock_of(old).valid_sectors--;
        }
      }
      mapping_.unmap(ns, l);
    }
    TimeNs done = now;
    if (zn.region) {
      for (const BlockRef& b : zn.region->blocks) {
        ChipCommand cmd;
        cmd.kind = CommandKind::kErase;
        cmd.origin = Origin::kHost;
        cmd.chip_index = b.chip_index;
        cmd.target = geometry_.linear_sector(b.chip_index, b.block, 0, 0);
        cmd.issue_time = now;
        cmd.media = regular_.cell_kind;
        done = std::max(done, engine_.execute_host(cmd));
        c.stats.erase_count_regular++;
        if (track_content_) erase_block_content(b.chip_index, b.block);
      }
      alloc_.release_region(*zn.region);
    }
    uint64_t epoch = zn.epoch;
    zn = Zone{};
    zn.epoch = epoch + 1;
    process_finished(engine_.take_leftover_finished());
    return done;
  }

  TimeNs zone_finish(uint32_t ns, uint32_t zone_id, TimeNs now) {
    NamespaceCtx& c = ctx(ns);
    require_zoned(c);
    if (zone_id >= c.zones.size())
      throw SimError(ErrorCode::kBadAddress, "zone id out of range");
    advance_to(now);
    Zone& zn = c.zones[zone_id];
    TimeNs done = now;
    if (int bid = find_binding(ns, zone_id); bid >= 0)
      done = std::max(done, flush_buffer(uint32_t(bid), FlushReason::kSync, now));
    zn.state = ZoneState::kFull;
    advance_zone(ns, zone_id);
    return done;
  }

  // Folds a zone's SLC-resident tail, optionally combining bytes still staged
  // in its write buffer, into the reserved regular region. Whole programming
  // units only.
  TimeNs fold_zone(uint32_t ns, uint32_t zone_id, TimeNs now) {
    NamespaceCtx& c = ctx(ns);
    require_zoned(c);
    advance_to(now);
    Zone& zn = c.zones[zone_id];
    uint64_t g = program_unit_bytes(geometry_, regular_);
    uint64_t staged_fill = 0;
    int bid = find_binding(ns, zone_id);
    if (bid >= 0) staged_fill = buffers_[bid].fill();
    uint64_t avail = zn.tail.size() * kSectorBytes + staged_fill;
    uint64_t k = avail / g;
    if (k == 0) return now;
    uint64_t total_pages = k * g / kSectorBytes;
    uint64_t src_pages = std::min<uint64_t>(zn.tail.size(), total_pages);
    std::vector<StagedPage> staged;
    if (total_pages > src_pages && bid >= 0) {
      uint64_t take = total_pages - src_pages;
      WriteBuffer& b = buffers_[bid];
      staged.assign(b.staged.begin(), b.staged.begin() + take);
      b.staged.erase(b.staged.begin(), b.staged.begin() + take);
    }
    uint64_t group = engine_.open_group();
    std::vector<uint64_t> prog_ids;
    build_fold(ns, zone_id, src_pages, staged, group, now, false, &prog_ids);
    return now;
  }

  // Runs queued background work whose start time falls before `now` and
  // applies the side effects of completed migrations.
  void advance_to(TimeNs now) { process_finished(engine_.drain_until(now)); }

  // Completes all outstanding background work; returns the time of the last
  // flash command seen so far.
  TimeNs drain() {
    process_finished(engine_.drain_all());
    return last_event_time_;
  }

  StatsReport report() const {
    StatsReport r;
    for (const NamespaceCtx& c : ns_)
      r.namespaces.push_back(
          NsReport::from(c.cfg.ns_id, to_string(c.kind), c.stats));
    r.elapsed_ns = last_event_time_;
    return r;
  }

  // ---- Introspection for tests and the harness ----
  const SimConfig& config() const { return cfg_; }
  const FlashGeometry& geometry() const { return geometry_; }
  SpaceAllocator& allocator() { return alloc_; }
  MappingManager& mapping() { return mapping_; }
  ChipQueueEngine& engine() { return engine_; }
  const std::vector<Event>& events() const { return events_; }
  const Zone& zone(uint32_t ns, uint32_t z) const { return ns_[ns].zones[z]; }
  const NamespaceCtx& ns_ctx(uint32_t ns) const { return ns_[ns]; }
  size_t namespace_count() const { return ns_.size(); }
  TimeNs last_event_time() const { return last_event_time_; }

 private:
  struct PageRun {
    uint32_t chip = 0;
    PhysSector first = kInvalidSector;
    uint32_t pages = 1;
    uint64_t bytes = 0;
  };

  NamespaceCtx& ctx(uint32_t ns) {
    if (ns >= ns_.size())
      throw SimError(ErrorCode::kUnknownNamespace,
                     "namespace " + std::to_string(ns) + " does not exist");
    return ns_[ns];
  }

  static void require_zoned(const NamespaceCtx& c) {
    if (c.kind != NsKind::kZoned)
      throw SimError(ErrorCode::kBadAddress,
                     "zone operation on a block namespace");
  }

  void check_extent(const NamespaceCtx& c, Lpa lpa, uint64_t len,
                    const char* what) {
    if (len == 0 || len % kSectorBytes != 0)
      throw SimError(ErrorCode::kUnalignedWrite,
                     std::string(what) + " length must be a positive multiple "
                                         "of 4096");
    if (lpa * kSectorBytes + len > c.addressable)
      throw SimError(ErrorCode::kBadAddress,
                     std::string(what) + " beyond namespace LBA range");
  }

  // Coalesces 4 KiB physical pages into per-chip contiguous runs; one flash
  // command per run, latency charged per flash page touched.
  std::vector<PageRun> coalesce_runs(const std::vector<PhysSector>& ppas) {
    std::vector<PageRun> runs;
    std::vector<int> open_run(geometry_.nchips(), -1);
    for (PhysSector p : ppas) {
      uint32_t chip = geometry_.chip_index_of_sector(p);
      int ri = open_run[chip];
      if (ri >= 0) {
        PageRun& r = runs[ri];
        PhysSector last = r.first + r.bytes / kSectorBytes - 1;
        if (p == last + 1 && geometry_.block_of_sector(p) ==
                                 geometry_.block_of_sector(r.first)) {
          r.bytes += kSectorBytes;
          r.pages = static_cast<uint32_t>(
              (p / geometry_.sectors_per_page()) -
              (r.first / geometry_.sectors_per_page()) + 1);
          continue;
        }
      }
      runs.push_back({chip, p, 1, kSectorBytes});
      open_run[chip] = int(runs.size()) - 1;
    }
    return runs;
  }

  const StagedPage* buffered_page(const NamespaceCtx& c, uint32_t ns, Lpa l) {
    if (c.kind == NsKind::kBlock) {
      const WriteBuffer& b = buffers_[0];
      for (auto it = b.staged.rbegin(); it != b.staged.rend(); ++it)
        if (it->lpa == l) return &*it;
      return nullptr;
    }
    uint64_t zone_lpas = c.zone_size / kSectorBytes;
    uint32_t z = static_cast<uint32_t>(l / zone_lpas);
    int bid = find_binding(ns, z);
    if (bid < 0) return nullptr;
    const WriteBuffer& b = buffers_[bid];
    for (auto it = b.staged.rbegin(); it != b.staged.rend(); ++it)
      if (it->lpa == l) return &*it;
    return nullptr;
  }

  int find_binding(uint32_t ns, uint32_t zone_id) const {
    for (uint32_t i : zoned_pool_) {
      const WriteBuffer& b = buffers_[i];
      if (b.bound && b.ns == ns && b.zone == zone_id) return int(i);
    }
    return -1;
  }

  uint32_t bind_zone_buffer(uint32_t ns, uint32_t zone_id, TimeNs now,
                            TimeNs* done) {
    if (int bid = find_binding(ns, zone_id); bid >= 0) return uint32_t(bid);
    if (zoned_pool_.empty())
      throw SimError(ErrorCode::kConfigInvalid, "no zoned write buffers");
    if (cfg_.buffers.policy == BufferPolicy::kModulo) {
      uint32_t bid = zoned_pool_[zone_id % zoned_pool_.size()];
      WriteBuffer& b = buffers_[bid];
      if (b.bound && (b.ns != ns || b.zone != zone_id))
        *done = std::max(*done, flush_buffer(bid, FlushReason::kConflict, now));
      b.bound = true;
      b.ns = ns;
      b.zone = zone_id;
      return bid;
    }
    // Fully associative: free buffer first, else steal the fullest.
    for (uint32_t bid : zoned_pool_) {
      if (!buffers_[bid].bound) {
        buffers_[bid].bound = true;
        buffers_[bid].ns = ns;
        buffers_[bid].zone = zone_id;
        return bid;
      }
    }
    uint32_t victim = zoned_pool_[0];
    for (uint32_t bid : zoned_pool_)
      if (buffers_[bid].fill() > buffers_[victim].fill()) victim = bid;
    *done = std::max(*done, flush_buffer(victim, FlushReason::kConflict, now));
    buffers_[victim].bound = true;
    buffers_[victim].ns = ns;
    buffers_[victim].zone = zone_id;
    return victim;
  }

  TimeNs flush_buffer(uint32_t bid, FlushReason reason, TimeNs now) {
    WriteBuffer& b = buffers_[bid];
    TimeNs done = now;
    if (b.staged.empty()) {
      if (reason == FlushReason::kConflict && b.zoned_pool) b.bound = false;
      return done;
    }
    uint32_t ns = b.ns;
    NamespaceCtx& c = ns_[ns];
    if (!b.zoned_pool) {
      // Block namespace: everything goes to its SLC partition by design;
      // not counted as premature.
      std::vector<PhysSector> ppas;
      done = std::max(done, program_slc_pages(ns, b.staged, now, &ppas));
      c.stats.slc_buffer_program_bytes += b.fill();
      b.staged.clear();
      return done;
    }

    uint32_t zone_id = b.zone;
    Zone& zn = c.zones[zone_id];
    uint64_t g = program_unit_bytes(geometry_, regular_);
    std::vector<StagedPage> staged = std::move(b.staged);
    b.staged.clear();
    size_t idx = 0;
    bool direct_ok =
        !cfg_.buffers.all_in_slc && zn.tail.empty() && staged.size() * kSectorBytes >= g;
    if (direct_ok) {
      uint64_t units = staged.size() * kSectorBytes / g;
      uint64_t pages_per_unit = g / kSectorBytes;
      Lpa zbase = Lpa(zone_id) * (c.zone_size / kSectorBytes);
      for (uint64_t u = 0; u < units; ++u) {
        uint64_t offset = zn.cursor_sched;
        PhysSector ppa = region_sector(geometry_, regular_, *zn.region, offset);
        ChipCommand cmd;
        cmd.kind = CommandKind::kProgram;
        cmd.origin = Origin::kHost;
        cmd.chip_index = geometry_.chip_index_of_sector(ppa);
        cmd.target = ppa;
        cmd.payload_bytes = g;
        cmd.issue_time = now;
        cmd.media = regular_.cell_kind;
        done = std::max(done, engine_.execute_host(cmd));
        for (uint64_t p = 0; p < pages_per_unit; ++p, ++idx) {
          Lpa l = zbase + offset / kSectorBytes + p;
          mapping_.update(ns, l, ppa + p);
          if (track_content_) content_[ppa + p] = {ns, l, staged[idx].seq};
        }
        c.stats.host_direct_regular_bytes += g;
        c.stats.device_write_bytes_regular += g;
        zn.cursor_sched += g;
        zn.progress.push_back({next_record_id_++, offset, g, true});
      }
      advance_zone(ns, zone_id);
      process_finished(engine_.take_leftover_finished());
    }
    if (idx < staged.size()) {
      std::vector<StagedPage> rest(staged.begin() + idx, staged.end());
      std::vector<PhysSector> ppas;
      done = std::max(done, program_slc_pages(ns, rest, now, &ppas));
      for (PhysSector p : ppas) zn.tail.push_back(p);
      c.stats.slc_buffer_program_bytes += rest.size() * kSectorBytes;
      c.stats.premature_flush_count++;
    }
    if (reason == FlushReason::kConflict) b.bound = false;
    if (!cfg_.buffers.all_in_slc) maybe_fold(ns, zone_id, now);
    return done;
  }

  // Programs 4 KiB pages at the namespace's SLC write pointer (host path).
  TimeNs program_slc_pages(uint32_t ns, const std::vector<StagedPage>& pages,
                           TimeNs now, std::vector<PhysSector>* out) {
    NamespaceCtx& c = ns_[ns];
    ensure_slc_space(ns, pages.size(), now);
    std::vector<PhysSector> ppas =
        alloc_.allocate_slc_stripe(ns, pages.size());
    TimeNs done = now;
    for (const PageRun& run : coalesce_runs(ppas)) {
      ChipCommand cmd;
      cmd.kind = CommandKind::kProgram;
      cmd.origin = Origin::kHost;
      cmd.chip_index = run.chip;
      cmd.target = run.first;
      cmd.payload_bytes = run.bytes;
      cmd.issue_time = now;
      cmd.media = CellKind::kSlc;
      cmd.latency_units = run.pages;
      done = std::max(done, engine_.execute_host(cmd));
    }
    for (size_t i = 0; i < pages.size(); ++i) {
      Lpa l = pages[i].lpa;
      invalidate_old(ns, l);
      SlcSlot& slot = alloc_.slc_slot(ppas[i]);
      slot.state = SlcSlot::State::kValid;
      slot.ns = ns;
      slot.lpa = l;
      alloc_.superblock_of(ppas[i]).valid_sectors++;
      mapping_.update(ns, l, ppas[i]);
      if (track_content_) content_[ppas[i]] = {ns, l, pages[i].seq};
    }
    c.stats.device_write_bytes_slc += pages.size() * kSectorBytes;
    if (out) *out = std::move(ppas);
    process_finished(engine_.take_leftover_finished());
    return done;
  }

  void invalidate_old(uint32_t ns, Lpa l) {
    if (!mapping_.table(ns).is_mapped(l)) return;
    PhysSector old = mapping_.table(ns).at(l).ppa;
    if (!geometry_.is_slc_block(geometry_.block_of_sector(old))) return;
    SlcSlot& slot = alloc_.slc_slot(old);
    if (slot.state == SlcSlot::State::kValid) {
      slot.state = SlcSlot::State::kInvalid;
      alloc_.superblock_of(old).valid_sectors--;
    }
  }

  // ---- Fold (SLC tail -> regular region), issued as background work ----

  void maybe_fold(uint32_t ns, uint32_t zone_id, TimeNs now) {
    NamespaceCtx& c = ns_[ns];
    Zone& zn = c.zones[zone_id];
    uint64_t g = program_unit_bytes(geometry_, regular_);
    uint64_t k = zn.tail.size() * kSectorBytes / g;
    if (k == 0) return;
    uint64_t group = engine_.open_group();
    std::vector<uint64_t> prog_ids;
    build_fold(ns, zone_id, k * g / kSectorBytes, {}, group, now, false,
               &prog_ids);
  }

  // Schedules `src_pages` tail pages plus `staged` buffered pages as whole
  // programming units into the zone's region. Mapping/state changes for the
  // SLC sources apply when the migration group completes; staged pages map
  // immediately (their data never existed in flash before).
  void build_fold(uint32_t ns, uint32_t zone_id, uint64_t src_pages,
                  std::vector<StagedPage> staged, uint64_t group, TimeNs now,
                  bool as_gc, std::vector<uint64_t>* prog_ids) {
    NamespaceCtx& c = ns_[ns];
    Zone& zn = c.zones[zone_id];
    uint64_t g = program_unit_bytes(geometry_, regular_);
    uint64_t total_pages = src_pages + staged.size();
    uint64_t bytes = total_pages * kSectorBytes;
    if (bytes == 0 || bytes % g != 0)
      throw SimError(ErrorCode::kBadAddress, "fold must be unit multiples");
    uint64_t offset = zn.cursor_sched;
    std::vector<PhysSector> src(zn.tail.begin(), zn.tail.begin() + src_pages);
    zn.tail.erase(zn.tail.begin(), zn.tail.begin() + src_pages);

    // Timed SLC reads of the sources, coalesced per chip run.
    std::vector<uint64_t> page_read_id(src_pages, 0);
    {
      size_t i = 0;
      for (const PageRun& run : coalesce_runs(src)) {
        ChipCommand cmd;
        cmd.kind = CommandKind::kRead;
        cmd.chip_index = run.chip;
        cmd.target = run.first;
        cmd.payload_bytes = run.bytes;
        cmd.issue_time = now;
        cmd.media = CellKind::kSlc;
        cmd.latency_units = run.pages;
        uint64_t id = engine_.enqueue_background(cmd, group);
        for (uint64_t p = 0; p < run.bytes / kSectorBytes; ++p)
          page_read_id[i++] = id;
      }
      c.stats.device_read_bytes_slc += src_pages * kSectorBytes;
    }

    Lpa zbase = Lpa(zone_id) * (c.zone_size / kSectorBytes);
    uint64_t units = bytes / g;
    uint64_t pages_per_unit = g / kSectorBytes;
    for (uint64_t u = 0; u < units; ++u) {
      uint64_t uoff = offset + u * g;
      PhysSector ppa = region_sector(geometry_, regular_, *zn.region, uoff);
      std::vector<uint64_t> deps;
      for (uint64_t p = 0; p < pages_per_unit; ++p) {
        uint64_t pi = u * pages_per_unit + p;
        if (pi < src_pages) {
          uint64_t id = page_read_id[pi];
          if (deps.empty() || deps.back() != id) deps.push_back(id);
        }
      }
      ChipCommand cmd;
      cmd.kind = CommandKind::kProgram;
      cmd.chip_index = geometry_.chip_index_of_sector(ppa);
      cmd.target = ppa;
      cmd.payload_bytes = g;
      cmd.issue_time = now;
      cmd.media = regular_.cell_kind;
      uint64_t id = engine_.enqueue_background(cmd, group, deps);
      if (prog_ids) prog_ids->push_back(id);
    }
    (as_gc ? c.stats.gc_program_bytes : c.stats.fold_program_bytes) += bytes;
    c.stats.device_write_bytes_regular += bytes;
    zn.cursor_sched += bytes;
    uint64_t record = next_record_id_++;
    zn.progress.push_back({record, offset, bytes, false});

    // Staged pages map to their regular location right away.
    for (size_t i = 0; i < staged.size(); ++i) {
      uint64_t off = offset + (src_pages + i) * kSectorBytes;
      PhysSector dst = region_sector(geometry_, regular_, *zn.region, off);
      Lpa l = zbase + off / kSectorBytes;
      mapping_.update(ns, l, dst);
      if (track_content_) content_[dst] = {ns, l, staged[i].seq};
    }

    uint64_t epoch = zn.epoch;
    group_apply_[group].push_back([this, ns, zone_id, epoch, offset, record,
                                   src = std::move(src), zbase](TimeNs t) {
      NamespaceCtx& c = ns_[ns];
      Zone& zn = c.zones[zone_id];
      c.stats.last_background_completion =
          std::max(c.stats.last_background_completion, t);
      if (zn.epoch != epoch) return;
      for (size_t i = 0; i < src.size(); ++i) {
        uint64_t off = offset + i * kSectorBytes;
        Lpa l = zbase + off / kSectorBytes;
        PhysSector dst = region_sector(geometry_, regular_, *zn.region, off);
        MappingTable& tbl = mapping_.table(ns);
        if (tbl.is_mapped(l) && tbl.at(l).ppa == src[i]) {
          mapping_.update(ns, l, dst);
          if (track_content_) {
            auto it = content_.find(src[i]);
            if (it != content_.end()) content_[dst] = it->second;
          }
        }
        SlcSlot& slot = alloc_.slc_slot(src[i]);
        if (slot.state == SlcSlot::State::kValid && slot.ns == ns &&
            slot.lpa == l) {
          slot.state = SlcSlot::State::kInvalid;
          alloc_.superblock_of(src[i]).valid_sectors--;
        }
      }
      for (ProgressRecord& r : zn.progress)
        if (r.id == record) r.done = true;
      advance_zone(ns, zone_id);
    });
  }

  // Advances the durable prefix over completed records and promotes mapping
  // aggregates the prefix now covers.
  void advance_zone(uint32_t ns, uint32_t zone_id) {
    NamespaceCtx& c = ns_[ns];
    Zone& zn = c.zones[zone_id];
    while (!zn.progress.empty() && zn.progress.front().done) {
      zn.durable = zn.progress.front().offset + zn.progress.front().bytes;
      zn.progress.pop_front();
    }
    if (!cfg_.cache.hybrid) return;
    Lpa zbase = Lpa(zone_id) * (c.zone_size / kSectorBytes);
    uint64_t chunk_lpas = kChunkBytes / kSectorBytes;
    while ((zn.promoted_chunks + 1) * kChunkBytes <= zn.durable) {
      mapping_.promote(ns, zbase + zn.promoted_chunks * chunk_lpas,
                       Granularity::kChunk, chunk_lpas);
      zn.promoted_chunks++;
    }
    if (zn.state == ZoneState::kFull && zn.wp > 0 && zn.durable == zn.wp &&
        zn.tail.empty() && zn.progress.empty()) {
      mapping_.promote(ns, zbase, Granularity::kZone,
                       c.zone_size / kSectorBytes);
    }
  }

  // ---- Garbage collection over SLC superblocks ----

  void ensure_slc_space(uint32_t ns, uint64_t needed_pages, TimeNs now) {
    maybe_trigger_gc(ns, now);
    size_t guard = alloc_.slc_partition(ns).size() + 2;
    while (alloc_.free_slc_slots(ns) < needed_pages && guard-- > 0) {
      process_finished(engine_.drain_all());
      maybe_trigger_gc(ns, now);
      if (ns_[ns].gc_inflight == 0 &&
          alloc_.free_slc_slots(ns) < needed_pages)
        throw SimError(ErrorCode::kOutOfSpace,
                       "SLC partition exhausted and nothing reclaimable");
    }
  }

  void maybe_trigger_gc(uint32_t ns, TimeNs now) {
    NamespaceCtx& c = ns_[ns];
    if (alloc_.free_slc_superblocks(ns) + c.gc_inflight >=
        cfg_.gc.trigger_free)
      return;
    while (alloc_.free_slc_superblocks(ns) + c.gc_inflight <
           cfg_.gc.target_free) {
      std::optional<uint32_t> victim = alloc_.select_victim(ns);
      if (!victim) break;
      // Relocation must fit in the partition's current free slots; if it
      // cannot, wait for in-flight reclaims to land before picking a victim.
      if (alloc_.superblock(*victim).valid_sectors >
          alloc_.free_slc_slots(ns))
        break;
      schedule_gc(ns, *victim, now);
      c.gc_inflight++;
    }
  }

  void schedule_gc(uint32_t ns, uint32_t victim, TimeNs now) {
    NamespaceCtx& c = ns_[ns];
    alloc_.superblock(victim).state = SbState::kMigrating;
    uint64_t group = engine_.open_group();
    std::vector<uint64_t> prog_ids;

    // Valid pages in slot order.
    struct Victim {
      PhysSector ppa;
      Lpa lpa;
    };
    std::vector<Victim> live;
    const std::vector<SlcSlot>& slots = alloc_.slc_slots(victim);
    for (uint64_t s = 0; s < slots.size(); ++s)
      if (slots[s].state == SlcSlot::State::kValid)
        live.push_back({alloc_.slot_sector(victim, uint64_t(s)), slots[s].lpa});

    std::vector<Victim> relocate;
    if (c.kind == NsKind::kZoned && gc_dest_ == GcDestination::kToRegular) {
      // Fold whole units of every zone whose tail has pages in the victim;
      // what the units cannot cover relocates within SLC.
      uint64_t g = program_unit_bytes(geometry_, regular_);
      uint64_t zone_lpas = c.zone_size / kSectorBytes;
      std::vector<uint32_t> zones;
      for (const Victim& v : live) {
        uint32_t z = static_cast<uint32_t>(v.lpa / zone_lpas);
        if (std::find(zones.begin(), zones.end(), z) == zones.end())
          zones.push_back(z);
      }
      std::vector<bool> covered(live.size(), false);
      for (uint32_t z : zones) {
        Zone& zn = c.zones[z];
        // Highest tail index that lives in the victim.
        int64_t max_idx = -1;
        for (size_t i = 0; i < zn.tail.size(); ++i)
          if (geometry_.block_of_sector(zn.tail[i]) == victim)
            max_idx = int64_t(i);
        if (max_idx < 0) continue;
        uint64_t want_units =
            (uint64_t(max_idx + 1) * kSectorBytes + g - 1) / g;
        uint64_t have_units = zn.tail.size() * kSectorBytes / g;
        uint64_t k = std::min(want_units, have_units);
        if (k == 0) continue;
        uint64_t fold_pages = k * g / kSectorBytes;
        // Mark victim pages covered by this fold.
        for (const auto& p :
             std::vector<PhysSector>(zn.tail.begin(),
                                     zn.tail.begin() + fold_pages)) {
          for (size_t i = 0; i < live.size(); ++i)
            if (live[i].ppa == p) covered[i] = true;
        }
        build_fold(ns, z, fold_pages, {}, group, now, true, &prog_ids);
      }
      for (size_t i = 0; i < live.size(); ++i)
        if (!covered[i]) relocate.push_back(live[i]);
    } else {
      relocate = live;
    }

    std::vector<PhysSector> dst;
    std::vector<uint64_t> reloc_read_id;
    if (!relocate.empty()) {
      std::vector<PhysSector> srcs;
      for (const Victim& v : relocate) srcs.push_back(v.ppa);
      reloc_read_id.resize(relocate.size());
      size_t i = 0;
      for (const PageRun& run : coalesce_runs(srcs)) {
        ChipCommand cmd;
        cmd.kind = CommandKind::kRead;
        cmd.chip_index = run.chip;
        cmd.target = run.first;
        cmd.payload_bytes = run.bytes;
        cmd.issue_time = now;
        cmd.media = CellKind::kSlc;
        cmd.latency_units = run.pages;
        uint64_t id = engine_.enqueue_background(cmd, group);
        for (uint64_t p = 0; p < run.bytes / kSectorBytes; ++p)
          reloc_read_id[i++] = id;
      }
      dst = alloc_.allocate_slc_stripe(ns, relocate.size());
      i = 0;
      for (const PageRun& run : coalesce_runs(dst)) {
        std::vector<uint64_t> deps;
        for (uint64_t p = 0; p < run.bytes / kSectorBytes; ++p, ++i) {
          if (deps.empty() || deps.back() != reloc_read_id[i])
            deps.push_back(reloc_read_id[i]);
        }
        ChipCommand cmd;
        cmd.kind = CommandKind::kProgram;
        cmd.chip_index = run.chip;
        cmd.target = run.first;
        cmd.payload_bytes = run.bytes;
        cmd.issue_time = now;
        cmd.media = CellKind::kSlc;
        cmd.latency_units = run.pages;
        uint64_t id = engine_.enqueue_background(cmd, group, deps);
        prog_ids.push_back(id);
      }
      c.stats.device_read_bytes_slc += relocate.size() * kSectorBytes;
      c.stats.device_write_bytes_slc += relocate.size() * kSectorBytes;
      c.stats.gc_program_bytes += relocate.size() * kSectorBytes;
    }

    // Erase every block of the victim once migrations are done.
    for (uint32_t ci = 0; ci < geometry_.nchips(); ++ci) {
      ChipCommand cmd;
      cmd.kind = CommandKind::kErase;
      cmd.chip_index = ci;
      cmd.target = geometry_.linear_sector(ci, victim, 0, 0);
      cmd.issue_time = now;
      cmd.media = CellKind::kSlc;
      engine_.enqueue_background(cmd, group, prog_ids);
      c.stats.erase_count_slc++;
    }

    uint64_t zone_lpas =
        c.kind == NsKind::kZoned ? c.zone_size / kSectorBytes : 0;
    group_apply_[group].push_back([this, ns, victim, relocate, dst,
                                   zone_lpas](TimeNs t) {
      NamespaceCtx& c = ns_[ns];
      c.stats.last_background_completion =
          std::max(c.stats.last_background_completion, t);
      for (size_t i = 0; i < relocate.size(); ++i) {
        const PhysSector src = relocate[i].ppa;
        const Lpa l = relocate[i].lpa;
        MappingTable& tbl = mapping_.table(ns);
        SlcSlot& dslot = alloc_.slc_slot(dst[i]);
        if (tbl.is_mapped(l) && tbl.at(l).ppa == src) {
          mapping_.update(ns, l, dst[i]);
          dslot.state = SlcSlot::State::kValid;
          dslot.ns = ns;
          dslot.lpa = l;
          alloc_.superblock_of(dst[i]).valid_sectors++;
          if (track_content_) {
            auto it = content_.find(src);
            if (it != content_.end()) content_[dst[i]] = it->second;
          }
          if (zone_lpas) {
            // Fix the zone tail entry that pointed into the victim.
            uint32_t z = static_cast<uint32_t>(l / zone_lpas);
            Zone& zn = c.zones[z];
            uint64_t off = (l % zone_lpas) * kSectorBytes;
            if (off >= zn.cursor_sched) {
              uint64_t idx = (off - zn.cursor_sched) / kSectorBytes;
              if (idx < zn.tail.size() && zn.tail[idx] == src)
                zn.tail[idx] = dst[i];
            }
          }
        } else {
          // Source was superseded mid-flight; the copy is dead on arrival.
          dslot.state = SlcSlot::State::kInvalid;
        }
      }
      if (track_content_) {
        for (uint64_t s = 0; s < alloc_.slc_slots_per_superblock(); ++s)
          content_.erase(alloc_.slot_sector(victim, s));
      }
      alloc_.finish_slc_erase(ns, victim);
      c.gc_inflight--;
    });
  }

  void erase_block_content(uint32_t chip, uint32_t block) {
    uint64_t spp = geometry_.sectors_per_page();
    for (uint32_t pg = 0; pg < geometry_.pages_per_block; ++pg)
      for (uint32_t s = 0; s < spp; ++s)
        content_.erase(geometry_.linear_sector(chip, block, pg, uint32_t(s)));
  }

  void process_finished(const std::vector<uint64_t>& groups) {
    std::vector<uint64_t> all(groups);
    for (uint64_t g : engine_.take_leftover_finished()) all.push_back(g);
    for (uint64_t g : all) {
      auto it = group_apply_.find(g);
      if (it == group_apply_.end()) continue;
      auto fns = std::move(it->second);
      group_apply_.erase(it);
      TimeNs t = engine_.group_completion(g);
      for (auto& fn : fns) fn(t);
    }
  }

  SimConfig cfg_;
  bool track_content_ = false;
  FlashGeometry geometry_;
  MediaProfile regular_;
  MediaProfile slc_;
  GcDestination gc_dest_ = GcDestination::kInSlc;
  SpaceAllocator alloc_;
  MappingManager mapping_;
  ChipQueueEngine engine_;
  std::vector<NamespaceCtx> ns_;
  std::vector<WriteBuffer> buffers_;
  std::vector<uint32_t> zoned_pool_;
  std::vector<Event> events_;
  std::unordered_map<PhysSector, ContentStamp> content_;
  std::unordered_map<uint64_t, std::vector<std::function<void(TimeNs)>>>
      group_apply_;
  uint64_t next_record_id_ = 1;
  TimeNs last_event_time_ = 0;
};

}  // namespace zflash
