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

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace zflash {
namespace {

using testutil::count_events;
using testutil::small_config;
using testutil::sum_event_bytes;
using testutil::unit96_config;

// Small geometry: programming unit g = 12 KiB, stripe = 48 KiB,
// zone capacity = 192 KiB, write buffers = 2 x 48 KiB.

TEST(WritePath, FullStripeFlushesDirectToRegular) {
  Device dev(small_config());
  dev.write(0, 0, 48 * 1024, 0);
  const NsCounters& s = dev.ns_ctx(0).stats;
  EXPECT_EQ(s.host_direct_regular_bytes, 48u * 1024);
  EXPECT_EQ(s.slc_buffer_program_bytes, 0u);
  EXPECT_EQ(s.premature_flush_count, 0u);
  // One program per chip, nothing through SLC.
  EXPECT_EQ(count_events(dev.events(), CommandKind::kProgram, false,
                         dev.geometry()),
            4u);
  EXPECT_EQ(count_events(dev.events(), CommandKind::kProgram, true,
                         dev.geometry()),
            0u);
  EXPECT_EQ(sum_event_bytes(dev.events(), CommandKind::kProgram, false,
                            dev.geometry()),
            48u * 1024);
  const Zone& z = dev.zone(0, 0);
  EXPECT_EQ(z.wp, 48u * 1024);
  EXPECT_EQ(z.durable, 48u * 1024);
  EXPECT_TRUE(z.tail.empty());
}

TEST(WritePath, SmallSyncedWriteDetoursThroughSlc) {
  Device dev(small_config());
  dev.write(0, 0, 4096, 0, /*synced=*/true);
  const NsCounters& s = dev.ns_ctx(0).stats;
  EXPECT_EQ(s.slc_buffer_program_bytes, 4096u);
  EXPECT_EQ(s.host_direct_regular_bytes, 0u);
  EXPECT_EQ(s.premature_flush_count, 1u);
  EXPECT_EQ(count_events(dev.events(), CommandKind::kProgram, true,
                         dev.geometry()),
            1u);
  EXPECT_EQ(dev.zone(0, 0).tail.size(), 1u);
}

TEST(WritePath, SyncedFlushSplitsUnitsFromResidual) {
  Device dev(small_config());
  // 16 KiB synced: one whole 12 KiB unit goes direct, 4 KiB residual to SLC.
  dev.write(0, 0, 16 * 1024, 0, /*synced=*/true);
  const NsCounters& s = dev.ns_ctx(0).stats;
  EXPECT_EQ(s.host_direct_regular_bytes, 12u * 1024);
  EXPECT_EQ(s.slc_buffer_program_bytes, 4096u);
  EXPECT_EQ(s.premature_flush_count, 1u);
  const Zone& z = dev.zone(0, 0);
  EXPECT_EQ(z.durable, 12u * 1024);
  EXPECT_EQ(z.tail.size(), 1u);
}

TEST(WritePath, RejectsNonSequentialAndOverflowingWrites) {
  Device dev(small_config());
  // Not at the write pointer.
  try {
    dev.write(0, 2, 4096, 0);
    FAIL() << "expected UNALIGNED_WRITE";
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnalignedWrite);
  }
  // Crosses zone capacity.
  dev.write(0, 0, 176 * 1024, 0);
  try {
    dev.write(0, 44, 32 * 1024, 1);
    FAIL() << "expected ZONE_FULL";
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZoneFull);
  }
  // Unaligned length.
  try {
    dev.write(0, 44, 1000, 2);
    FAIL() << "expected UNALIGNED_WRITE";
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnalignedWrite);
  }
}

TEST(WritePath, ZoneFullAtCapacityRejectsFurtherWrites) {
  Device dev(small_config());
  dev.write(0, 0, 192 * 1024, 0);
  EXPECT_EQ(dev.zone(0, 0).state, ZoneState::kFull);
  try {
    dev.write(0, 24, 4096, 1);  // any address inside the full zone
    FAIL() << "expected ZONE_FULL";
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZoneFull);
  }
}

TEST(WritePath, OversizedRequestSplitsAcrossFlushes) {
  Device dev(small_config());
  // 96 KiB in one request: twice the buffer threshold; the write path stages
  // and flushes in 48 KiB installments.
  dev.write(0, 0, 96 * 1024, 0);
  const NsCounters& s = dev.ns_ctx(0).stats;
  EXPECT_EQ(s.host_direct_regular_bytes, 96u * 1024);
  EXPECT_EQ(s.premature_flush_count, 0u);
  EXPECT_EQ(dev.zone(0, 0).durable, 96u * 1024);
}

TEST(WritePath, BufferedDataIsReadFromRam) {
  Device dev(small_config(), /*track_content=*/true);
  dev.write(0, 0, 4096, 0);  // stays staged
  size_t events_before = dev.events().size();
  Device::ReadResult r = dev.read(0, 0, 4096, 10);
  EXPECT_EQ(dev.events().size(), events_before);  // no flash command
  ASSERT_EQ(r.stamps.size(), 1u);
  EXPECT_EQ(r.stamps[0].lpa, 0u);
  EXPECT_EQ(r.stamps[0].seq, 1u);
}

TEST(WritePath, ReadAfterDirectFlushHitsRegularFlash) {
  Device dev(small_config(), /*track_content=*/true);
  dev.write(0, 0, 48 * 1024, 0);
  Device::ReadResult r = dev.read(0, 0, 48 * 1024, 100);
  EXPECT_EQ(sum_event_bytes(dev.events(), CommandKind::kRead, false,
                            dev.geometry()),
            48u * 1024);
  for (uint64_t p = 0; p < 12; ++p) {
    EXPECT_EQ(r.stamps[p].lpa, p);
    EXPECT_EQ(r.stamps[p].seq, p + 1);
  }
  EXPECT_GT(r.done, 100u);
}

TEST(WritePath, ConflictStealsTheFullestBufferIntoSlc) {
  Device dev(small_config());
  uint64_t zone_lpas = dev.ns_ctx(0).zone_size / kSectorBytes;
  dev.write(0, 0, 8192, 0);               // zone 0: 8 KiB staged
  dev.write(0, zone_lpas, 4096, 1);       // zone 1: 4 KiB staged
  EXPECT_EQ(dev.ns_ctx(0).stats.premature_flush_count, 0u);
  // Third zone steals the fullest binding (zone 0); its 8 KiB < g detours.
  dev.write(0, 2 * zone_lpas, 4096, 2);
  const NsCounters& s = dev.ns_ctx(0).stats;
  EXPECT_EQ(s.premature_flush_count, 1u);
  EXPECT_EQ(s.slc_buffer_program_bytes, 8192u);
  EXPECT_EQ(dev.zone(0, 0).tail.size(), 2u);
  EXPECT_EQ(dev.zone(0, 1).tail.size(), 0u);  // zone 1 kept its buffer
}

TEST(WritePath, ModuloPolicyConflictsOnSameParityZones) {
  SimConfig cfg = small_config();
  cfg.buffers.policy = BufferPolicy::kModulo;
  uint64_t zone_lpas = cfg.effective_zone_size(cfg.namespaces[0]) / kSectorBytes;
  {
    // Zones 0 and 2 share buffer 0: ping-pong causes a conflict flush.
    Device dev(cfg);
    dev.write(0, 0, 4096, 0);
    dev.write(0, 2 * zone_lpas, 4096, 1);
    EXPECT_EQ(dev.ns_ctx(0).stats.premature_flush_count, 1u);
  }
  {
    // Zones 0 and 1 use different buffers: no conflict.
    Device dev(cfg);
    dev.write(0, 0, 4096, 0);
    dev.write(0, zone_lpas, 4096, 1);
    EXPECT_EQ(dev.ns_ctx(0).stats.premature_flush_count, 0u);
  }
}

TEST(WritePath, AutoFoldDrainsSlcTailAtUnitSize) {
  Device dev(small_config());
  // Three 4 KiB synced writes: each detours to SLC; the third flush leaves a
  // 12 KiB tail, which equals one programming unit and folds automatically.
  for (uint64_t i = 0; i < 3; ++i)
    dev.write(0, i, 4096, i, /*synced=*/true);
  dev.drain();
  const NsCounters& s = dev.ns_ctx(0).stats;
  EXPECT_EQ(s.slc_buffer_program_bytes, 12u * 1024);
  EXPECT_EQ(s.fold_program_bytes, 12u * 1024);
  EXPECT_EQ(s.host_direct_regular_bytes, 0u);
  const Zone& z = dev.zone(0, 0);
  EXPECT_TRUE(z.tail.empty());
  EXPECT_EQ(z.durable, 12u * 1024);
  // Identity: programmed bytes = direct + SLC detour + fold + GC.
  EXPECT_EQ(s.device_program_bytes(),
            s.host_direct_regular_bytes + s.slc_buffer_program_bytes +
                s.fold_program_bytes + s.gc_program_bytes);
  // Every host byte was written twice (SLC then regular): WAF 2.
  EXPECT_EQ(s.device_program_bytes(), 2 * s.host_write_bytes);
}

// Folding combines the SLC-resident tail with bytes still staged in the
// zone's buffer: a 92 KiB tail plus 4 KiB staged makes one 96 KiB unit, read
// back as 23 SLC pages and programmed with a single regular pass.
TEST(WritePath, FoldCombinesSlcTailWithStagedBytes) {
  Device dev(unit96_config(), /*track_content=*/true);
  dev.write(0, 0, 92 * 1024, 0, /*synced=*/true);  // 23 pages -> SLC
  EXPECT_EQ(dev.zone(0, 0).tail.size(), 23u);
  dev.write(0, 23, 4096, 1);  // stays staged
  size_t before = dev.events().size();
  dev.fold_zone(0, 0, 2);
  dev.drain();

  uint64_t slc_read_bytes = 0, reg_prog_bytes = 0, reg_progs = 0;
  for (size_t i = before; i < dev.events().size(); ++i) {
    const Event& e = dev.events()[i];
    bool slc = dev.geometry().is_slc_block(
        dev.geometry().block_of_sector(e.target));
    if (e.kind == CommandKind::kRead && slc) slc_read_bytes += e.bytes;
    if (e.kind == CommandKind::kProgram && !slc) {
      reg_prog_bytes += e.bytes;
      reg_progs++;
    }
  }
  EXPECT_EQ(slc_read_bytes, 92u * 1024);  // 23 page reads
  EXPECT_EQ(reg_progs, 1u);
  EXPECT_EQ(reg_prog_bytes, 96u * 1024);

  const Zone& z = dev.zone(0, 0);
  EXPECT_TRUE(z.tail.empty());
  EXPECT_EQ(z.durable, 96u * 1024);
  // All 24 pages now resolve into the regular region and read back intact.
  Device::ReadResult r = dev.read(0, 0, 96 * 1024, 1'000'000'000);
  for (uint64_t p = 0; p < 24; ++p) {
    EXPECT_EQ(r.stamps[p].lpa, p);
    EXPECT_EQ(r.stamps[p].seq, p + 1);
    EXPECT_FALSE(dev.geometry().is_slc_block(dev.geometry().block_of_sector(
        dev.mapping().table(0).at(p).ppa)));
  }
}

TEST(WritePath, AllInSlcRoutesEverythingThroughSlc) {
  SimConfig cfg = small_config();
  cfg.buffers.all_in_slc = true;
  Device dev(cfg);
  dev.write(0, 0, 48 * 1024, 0);
  dev.drain();
  const NsCounters& s = dev.ns_ctx(0).stats;
  EXPECT_EQ(s.host_direct_regular_bytes, 0u);
  EXPECT_EQ(s.slc_buffer_program_bytes, 48u * 1024);
  EXPECT_EQ(s.fold_program_bytes, 0u);  // no automatic folding either
  EXPECT_EQ(dev.zone(0, 0).tail.size(), 12u);
}

TEST(WritePath, HostFlushWithEmptyBuffersIsANoOp) {
  Device dev(small_config());
  TimeNs done = dev.flush(0, 42);
  EXPECT_EQ(done, 42u);
  EXPECT_TRUE(dev.events().empty());
}

TEST(WritePath, SequentialFillLeavesZoneFullyDurable) {
  Device dev(small_config(), /*track_content=*/true);
  for (uint64_t off = 0; off < 192 * 1024; off += 16 * 1024)
    dev.write(0, off / kSectorBytes, 16 * 1024, off);
  dev.drain();
  const Zone& z = dev.zone(0, 0);
  EXPECT_EQ(z.state, ZoneState::kFull);
  EXPECT_EQ(z.durable, 192u * 1024);
  EXPECT_TRUE(z.tail.empty());
  Device::ReadResult r = dev.read(0, 0, 192 * 1024, 1'000'000'000);
  for (uint64_t p = 0; p < 48; ++p) EXPECT_EQ(r.stamps[p].seq, p + 1);
}

TEST(WritePath, UnknownNamespaceAndBadAddress) {
  Device dev(small_config());
  try {
    dev.write(9, 0, 4096, 0);
    FAIL() << "expected UNKNOWN_NAMESPACE";
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownNamespace);
  }
  try {
    dev.read(0, 1'000'000, 4096, 0);
    FAIL() << "expected BAD_ADDRESS";
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadAddress);
  }
  try {
    dev.read(0, 0, 4096, 0);  // nothing written yet
    FAIL() << "expected UNMAPPED_READ";
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnmappedRead);
  }
}

}  // namespace
}  // namespace zflash
