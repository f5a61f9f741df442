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
#include <optional>
#include <vector>

#include "zflash/geometry.hpp"
#include "zflash/types.hpp"

namespace zflash {

enum class SbState { kFree, kOpen, kFull, kMigrating };
enum class Region { kSlc, kRegular };

// Group of same-offset blocks across all chips; unit of allocation, GC and
// erase. The superblock id equals the per-chip block index.
struct Superblock {
  uint32_t id = 0;
  Region region = Region::kRegular;
  int owner_ns = -1;  // SLC partitions only
  SbState state = SbState::kFree;
  uint64_t valid_sectors = 0;
  uint64_t erase_count = 0;
};

struct BlockRef {
  uint32_t chip_index = 0;
  uint32_t block = 0;
  bool operator==(const BlockRef&) const = default;
};

// Physical backing of a zone: flash blocks in stripe order. In whole-superblock
// mode this is one block per chip at the same offset; in sub-block mode any
// set of free blocks.
struct ZoneRegion {
  std::vector<BlockRef> blocks;
  uint64_t usable_bytes(const FlashGeometry& g) const {
    return blocks.size() * g.block_bytes();
  }
};

// Stripe-interleaved linearization of a reserved region: the write pointer
// programs one unit per block, rotating across all blocks before advancing to
// the next programming unit of the first block.
inline PhysSector region_sector(const FlashGeometry& g,
                                const MediaProfile& regular,
                                const ZoneRegion& region, uint64_t offset) {
  uint64_t unit = program_unit_bytes(g, regular);
  uint64_t nb = region.blocks.size();
  uint64_t unit_idx = offset / unit;
  uint64_t within = offset % unit;
  const BlockRef& b = region.blocks[unit_idx % nb];
  uint64_t row = unit_idx / nb;
  uint32_t page = static_cast<uint32_t>(row * regular.min_program_pages +
                                        within / g.page_size);
  uint32_t sector = static_cast<uint32_t>((within % g.page_size) / kSectorBytes);
  return g.linear_sector(b.chip_index, b.block, page, sector);
}

// Per-slot bookkeeping for an SLC superblock, used by GC to find valid data.
struct SlcSlot {
  enum class State : uint8_t { kFree, kValid, kInvalid, kReserved };
  State state = State::kFree;
  uint32_t ns = 0;
  Lpa lpa = 0;
};

// Owns the superblock pool: zone-level regions in regular flash, page-level
// stripes in per-namespace SLC partitions.
class SpaceAllocator {
 public:
  SpaceAllocator() = default;
  SpaceAllocator(const FlashGeometry& geometry, const MediaProfile& regular,
                 bool sub_block_mode)
      : geometry_(&geometry),
        regular_(&regular),
        sub_block_mode_(sub_block_mode) {
    superblocks_.resize(geometry.blocks_per_chip);
    for (uint32_t b = 0; b < geometry.blocks_per_chip; ++b) {
      superblocks_[b].id = b;
      superblocks_[b].region =
          geometry.is_slc_block(b) ? Region::kSlc : Region::kRegular;
    }
    // Free-list order is FIFO; initial order is by block index, and in
    // sub-block mode (block-major, chip-minor) so that a fresh reservation of
    // zone size = superblock size picks the same page set as whole-superblock
    // mode.
    for (uint32_t b = geometry.slc_blocks_per_chip; b < geometry.blocks_per_chip;
         ++b) {
      if (sub_block_mode_) {
        for (uint32_t ci = 0; ci < geometry.nchips(); ++ci)
          free_blocks_.push_back({ci, b});
      } else {
        free_superblocks_.push_back(b);
      }
    }
  }

  const FlashGeometry& geometry() const { return *geometry_; }
  bool sub_block_mode() const { return sub_block_mode_; }

  Superblock& superblock(uint32_t id) { return superblocks_[id]; }
  const Superblock& superblock(uint32_t id) const { return superblocks_[id]; }
  Superblock& superblock_of(PhysSector s) {
    return superblocks_[geometry_->block_of_sector(s)];
  }

  uint32_t slc_effective_pages() const {
    return effective_pages(*regular_, *geometry_, CellKind::kSlc);
  }
  uint64_t slc_slots_per_superblock() const {
    return uint64_t(geometry_->nchips()) * slc_effective_pages() *
           geometry_->sectors_per_page();
  }
  uint64_t slc_superblock_bytes() const {
    return slc_slots_per_superblock() * kSectorBytes;
  }

  // ---- Regular flash: zone-level reservation ----

  size_t free_regular_blocks() const {
    return sub_block_mode_ ? free_blocks_.size()
                           : free_superblocks_.size() * geometry_->nchips();
  }

  ZoneRegion reserve_zone_region(uint64_t zone_capacity) {
    uint64_t blocks_needed =
        (zone_capacity + geometry_->block_bytes() - 1) / geometry_->block_bytes();
    ZoneRegion region;
    if (sub_block_mode_) {
      if (free_blocks_.size() < blocks_needed)
        throw SimError(ErrorCode::kOutOfSpace, "no free regular sub-blocks");
      for (uint64_t i = 0; i < blocks_needed; ++i) {
        region.blocks.push_back(free_blocks_.front());
        free_blocks_.pop_front();
      }
    } else {
      if (blocks_needed > geometry_->nchips())
        throw SimError(ErrorCode::kConfigInvalid,
                       "zone capacity exceeds one superblock");
      if (free_superblocks_.empty())
        throw SimError(ErrorCode::kOutOfSpace, "no free regular superblock");
      uint32_t sb = free_superblocks_.front();
      free_superblocks_.pop_front();
      superblocks_[sb].state = SbState::kOpen;
      for (uint32_t ci = 0; ci < geometry_->nchips(); ++ci)
        region.blocks.push_back({ci, sb});
    }
    return region;
  }

  // Returns the region's blocks to the free pool after erase, in erase
  // completion order.
  void release_region(const ZoneRegion& region) {
    if (sub_block_mode_) {
      for (const BlockRef& b : region.blocks) free_blocks_.push_back(b);
    } else {
      uint32_t sb = region.blocks.front().block;
      superblocks_[sb].state = SbState::kFree;
      superblocks_[sb].valid_sectors = 0;
      free_superblocks_.push_back(sb);
    }
  }

  // ---- SLC flash: page-level striping per namespace partition ----

  void add_slc_partition(uint32_t ns, const std::vector<uint32_t>& sb_ids) {
    if (partitions_.size() <= ns) partitions_.resize(ns + 1);
    SlcPartition& p = partitions_[ns];
    p.sbs = sb_ids;
    for (uint32_t id : sb_ids) {
      superblocks_[id].owner_ns = static_cast<int>(ns);
      superblocks_[id].state = SbState::kFree;
      p.free.push_back(id);
      slot_info_.resize(
          std::max<size_t>(slot_info_.size(), geometry_->slc_blocks_per_chip));
      slot_info_[id].assign(slc_slots_per_superblock(), SlcSlot{});
    }
  }

  size_t free_slc_superblocks(uint32_t ns) const {
    return partitions_[ns].free.size();
  }
  const std::vector<uint32_t>& slc_partition(uint32_t ns) const {
    return partitions_[ns].sbs;
  }

  uint64_t free_slc_slots(uint32_t ns) const {
    const SlcPartition& p = partitions_[ns];
    uint64_t n = p.free.size() * slc_slots_per_superblock();
    if (p.open_sb >= 0) n += slc_slots_per_superblock() - p.cursor;
    return n;
  }

  // Allocates n 4 KiB pages at the partition's write pointer, striped across
  // chips. Slots come back reserved; the caller marks them valid once data
  // lands.
  std::vector<PhysSector> allocate_slc_stripe(uint32_t ns, uint64_t n_pages) {
    SlcPartition& p = partitions_[ns];
    std::vector<PhysSector> out;
    out.reserve(n_pages);
    for (uint64_t i = 0; i < n_pages; ++i) {
      if (p.open_sb < 0) {
        if (p.free.empty())
          throw SimError(ErrorCode::kOutOfSpace, "SLC partition exhausted");
        p.open_sb = static_cast<int>(p.free.front());
        p.free.pop_front();
        p.cursor = 0;
        superblocks_[p.open_sb].state = SbState::kOpen;
      }
      uint32_t sb = static_cast<uint32_t>(p.open_sb);
      out.push_back(slot_sector(sb, p.cursor));
      slot_info_[sb][p.cursor].state = SlcSlot::State::kReserved;
      if (++p.cursor == slc_slots_per_superblock()) {
        superblocks_[sb].state = SbState::kFull;
        p.open_sb = -1;
      }
    }
    return out;
  }

  // Slot order rotates chips at 4 KiB granularity; per chip, consecutive
  // slots fill a flash page before moving to the next one.
  PhysSector slot_sector(uint32_t sb, uint64_t slot) const {
    uint32_t n = geometry_->nchips();
    uint32_t spp = geometry_->sectors_per_page();
    uint32_t ci = static_cast<uint32_t>(slot % n);
    uint64_t row = slot / n;
    uint32_t page = static_cast<uint32_t>(row / spp);
    uint32_t sector = static_cast<uint32_t>(row % spp);
    return geometry_->linear_sector(ci, sb, page, sector);
  }

  uint64_t slot_of_sector(PhysSector s) const {
    PhysicalPageAddress a = geometry_->decompose(s);
    uint32_t ci = geometry_->chip_index(a.channel, a.chip);
    uint64_t row = uint64_t(a.page) * geometry_->sectors_per_page() + a.sector;
    return row * geometry_->nchips() + ci;
  }

  SlcSlot& slc_slot(PhysSector s) {
    uint32_t sb = geometry_->block_of_sector(s);
    return slot_info_[sb][slot_of_sector(s)];
  }
  const std::vector<SlcSlot>& slc_slots(uint32_t sb) const {
    return slot_info_[sb];
  }

  // FULL superblock with the fewest valid sectors; ties break to lowest id.
  std::optional<uint32_t> select_victim(uint32_t ns) const {
    const SlcPartition& p = partitions_[ns];
    std::optional<uint32_t> best;
    for (uint32_t id : p.sbs) {
      const Superblock& sb = superblocks_[id];
      if (sb.state != SbState::kFull) continue;
      if (has_reserved_slots(id)) continue;  // in-flight migration target
      if (!best || sb.valid_sectors < superblocks_[*best].valid_sectors)
        best = id;
    }
    return best;
  }

  bool has_reserved_slots(uint32_t sb) const {
    for (const SlcSlot& s : slot_info_[sb])
      if (s.state == SlcSlot::State::kReserved) return true;
    return false;
  }

  void finish_slc_erase(uint32_t ns, uint32_t sb) {
    Superblock& s = superblocks_[sb];
    s.state = SbState::kFree;
    s.valid_sectors = 0;
    s.erase_count++;
    slot_info_[sb].assign(slc_slots_per_superblock(), SlcSlot{});
    partitions_[ns].free.push_back(sb);
  }

 private:
  struct SlcPartition {
    std::vector<uint32_t> sbs;
    std::deque<uint32_t> free;
    int open_sb = -1;
    uint64_t cursor = 0;  // next slot within open_sb
  };

  const FlashGeometry* geometry_ = nullptr;
  const MediaProfile* regular_ = nullptr;
  bool sub_block_mode_ = false;
  std::vector<Superblock> superblocks_;
  std::deque<uint32_t> free_superblocks_;
  std::deque<BlockRef> free_blocks_;
  std::vector<SlcPartition> partitions_;
  std::vector<std::vector<SlcSlot>> slot_info_;  // per SLC superblock
};

}  // namespace zflash
