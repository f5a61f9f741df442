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

#include "zflash/types.hpp"

namespace zflash {

enum class CellKind { kSlc, kTlc, kQlc };

inline const char* to_string(CellKind k) {
  switch (k) {
    case CellKind::kSlc: return "SLC";
    case CellKind::kTlc: return "TLC";
    case CellKind::kQlc: return "QLC";
  }
  return "?";
}

// Access latencies and programming constraints for one flash density.
struct MediaProfile {
  CellKind cell_kind = CellKind::kTlc;
  uint32_t bits_per_cell = 3;
  TimeNs program_latency_ns = 937'500;  // per programming unit
  TimeNs read_latency_ns = 32'000;      // per flash page
  TimeNs erase_latency_ns = 3'500'000;  // per flash block
  bool partial_program_allowed = false;
  uint32_t min_program_pages = 3;  // flash pages programmed together

  static MediaProfile slc() {
    return {CellKind::kSlc, 1, 75'000, 20'000, 2'000'000, true, 1};
  }
  static MediaProfile tlc() {
    return {CellKind::kTlc, 3, 937'500, 32'000, 3'500'000, false, 3};
  }
  static MediaProfile qlc() {
    return {CellKind::kQlc, 4, 6'400'000, 85'000, 10'000'000, false, 4};
  }

  void validate() const {
    if (bits_per_cell == 0)
      throw SimError(ErrorCode::kConfigInvalid, "bits_per_cell must be >= 1");
    if (cell_kind == CellKind::kSlc) {
      if (!partial_program_allowed || min_program_pages != 1)
        throw SimError(ErrorCode::kConfigInvalid,
                       "SLC requires partial programming and "
                       "min_program_pages = 1");
    } else if (min_program_pages < bits_per_cell) {
      throw SimError(ErrorCode::kConfigInvalid,
                     "regular media must program at least bits_per_cell "
                     "pages together");
    }
  }
};

// Shape of the flash complex. The first slc_blocks_per_chip blocks of each
// chip operate in SLC mode; the rest hold regular-density media.
struct FlashGeometry {
  uint32_t channels = 2;
  uint32_t chips_per_channel = 2;
  uint32_t blocks_per_chip = 96;
  uint32_t pages_per_block = 768;  // regular-density flash pages
  uint64_t page_size = 16384;      // bytes
  uint64_t channel_bandwidth = 3200ull << 20;  // bytes per second
  uint32_t slc_blocks_per_chip = 8;

  uint32_t nchips() const { return channels * chips_per_channel; }
  uint32_t sectors_per_page() const {
    return static_cast<uint32_t>(page_size / kSectorBytes);
  }

  // Chips are numbered channel-minor so consecutive chip indexes land on
  // different channels.
  uint32_t channel_of(uint32_t chip_index) const {
    return chip_index % channels;
  }
  uint32_t chip_of(uint32_t chip_index) const { return chip_index / channels; }
  uint32_t chip_index(uint32_t channel, uint32_t chip) const {
    return chip * channels + channel;
  }

  uint64_t sectors_per_block() const {
    return uint64_t(pages_per_block) * sectors_per_page();
  }
  uint64_t block_bytes() const { return uint64_t(pages_per_block) * page_size; }
  uint64_t superblock_bytes() const { return block_bytes() * nchips(); }
  uint64_t total_sectors() const {
    return uint64_t(blocks_per_chip) * nchips() * sectors_per_block();
  }

  PhysSector linear_sector(uint32_t chip_index, uint32_t block, uint32_t page,
                           uint32_t sector) const {
    return ((uint64_t(block) * nchips() + chip_index) * pages_per_block +
            page) *
               sectors_per_page() +
           sector;
  }

  PhysicalPageAddress decompose(PhysSector s) const {
    PhysicalPageAddress a;
    a.sector = static_cast<uint32_t>(s % sectors_per_page());
    uint64_t fp = s / sectors_per_page();
    a.page = static_cast<uint32_t>(fp % pages_per_block);
    uint64_t cb = fp / pages_per_block;
    uint32_t ci = static_cast<uint32_t>(cb % nchips());
    a.block = static_cast<uint32_t>(cb / nchips());
    a.channel = channel_of(ci);
    a.chip = chip_of(ci);
    return a;
  }

  uint32_t chip_index_of_sector(PhysSector s) const {
    return static_cast<uint32_t>((s / sectors_per_page()) / pages_per_block %
                                 nchips());
  }
  uint32_t block_of_sector(PhysSector s) const {
    return static_cast<uint32_t>((s / sectors_per_page()) / pages_per_block /
                                 nchips());
  }
  bool is_slc_block(uint32_t block) const { return block < slc_blocks_per_chip; }

  void validate() const {
    if (channels < 1 || chips_per_channel < 1 || blocks_per_chip < 1 ||
        pages_per_block < 1)
      throw SimError(ErrorCode::kConfigInvalid, "all counts must be >= 1");
    if (page_size < kSectorBytes || page_size % kSectorBytes != 0)
      throw SimError(ErrorCode::kConfigInvalid,
                     "page_size must be >= 4096 and a multiple of 4096");
    if (slc_blocks_per_chip >= blocks_per_chip)
      throw SimError(ErrorCode::kConfigInvalid,
                     "slc_blocks_per_chip must be < blocks_per_chip");
    if (channel_bandwidth == 0)
      throw SimError(ErrorCode::kConfigInvalid, "channel_bandwidth must be > 0");
  }
};

// Flash pages usable in one block. SLC-mode blocks are converted regular
// blocks, so their effective page count shrinks by the density ratio.
inline uint32_t effective_pages(const MediaProfile& regular,
                                const FlashGeometry& geometry, CellKind mode) {
  if (mode == CellKind::kSlc)
    return geometry.pages_per_block / regular.bits_per_cell;
  return geometry.pages_per_block;
}

// Bytes one chip programs in a single pass.
inline uint64_t program_unit_bytes(const FlashGeometry& geometry,
                                   const MediaProfile& profile) {
  return geometry.page_size * profile.min_program_pages;
}

// Bytes programmed simultaneously across all parallel blocks of a superblock.
inline uint64_t stripe_unit_bytes(const FlashGeometry& geometry,
                                  const MediaProfile& profile) {
  return program_unit_bytes(geometry, profile) * geometry.nchips();
}

}  // namespace zflash
