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

#include <vector>

#include <gtest/gtest.h>

#include "zflash/mapping.hpp"
#include "zflash/stats.hpp"

namespace zflash {
namespace {

constexpr uint64_t kChunkLpas = kChunkBytes / kSectorBytes;  // 1024

FlashGeometry small_geometry() {
  FlashGeometry g;
  g.channels = 2;
  g.chips_per_channel = 2;
  g.blocks_per_chip = 8;
  g.pages_per_block = 12;
  g.page_size = 4096;
  g.slc_blocks_per_chip = 4;
  return g;
}

// ---- MappingTable ----

TEST(MappingTable, SetResolveUnmap) {
  MappingTable t(64, 16, 32);
  EXPECT_FALSE(t.is_mapped(5));
  EXPECT_THROW(t.resolve(5), SimError);
  t.set(5, 1234);
  EXPECT_EQ(t.resolve(5), 1234u);
  EXPECT_EQ(t.covering(5), Granularity::kPage);
  t.unmap(5);
  EXPECT_FALSE(t.is_mapped(5));
  EXPECT_THROW(t.resolve(5), SimError);
}

// Aggregation never loses the page-exact translation: promoting and demoting
// a range resolves every LPA to the same physical sector throughout.
TEST(MappingTable, PromotionIsLossless) {
  MappingTable t(64, 16, 32);
  for (Lpa l = 0; l < 32; ++l) t.set(l, 1000 + l * 7);
  auto all_resolve = [&] {
    for (Lpa l = 0; l < 32; ++l)
      if (t.resolve(l) != 1000 + l * 7) return false;
    return true;
  };
  ASSERT_TRUE(all_resolve());
  t.promote(0, Granularity::kChunk);
  t.promote(16, Granularity::kChunk);
  EXPECT_TRUE(all_resolve());
  EXPECT_EQ(t.covering(7), Granularity::kChunk);
  EXPECT_EQ(t.covering_base(7), 0u);
  t.promote(0, Granularity::kZone);
  EXPECT_TRUE(all_resolve());
  EXPECT_EQ(t.covering(31), Granularity::kZone);
  EXPECT_EQ(t.covering_base(31), 0u);
  t.demote(0);
  EXPECT_TRUE(all_resolve());
  // The chunk aggregate at 16 still stands; base 0 fell back to page.
  EXPECT_EQ(t.covering(0), Granularity::kPage);
  EXPECT_EQ(t.covering(20), Granularity::kChunk);
}

TEST(MappingTable, PointUpdateDemotesCoveringAggregate) {
  MappingTable t(64, 16, 32);
  for (Lpa l = 0; l < 32; ++l) t.set(l, 2000 + l);
  t.promote(0, Granularity::kZone);
  ASSERT_EQ(t.covering(9), Granularity::kZone);
  t.set(9, 5555);
  // The range is no longer uniformly placed; the aggregate must drop.
  EXPECT_EQ(t.covering(9), Granularity::kPage);
  EXPECT_EQ(t.covering(0), Granularity::kPage);
  EXPECT_EQ(t.resolve(9), 5555u);
  EXPECT_EQ(t.resolve(8), 2008u);
}

// ---- L2PCache ----

TEST(L2PCache, EvictsLeastRecentlyUsed) {
  L2PCache cache(16, 8, 16);  // 2 entries
  CacheKey a{0, Granularity::kPage, 1};
  CacheKey b{0, Granularity::kPage, 2};
  CacheKey c{0, Granularity::kPage, 3};
  cache.insert(a);
  cache.insert(b);
  EXPECT_TRUE(cache.lookup(a));  // a becomes most recent
  cache.insert(c);               // evicts b
  EXPECT_TRUE(cache.lookup(a));
  EXPECT_FALSE(cache.lookup(b));
  EXPECT_TRUE(cache.lookup(c));
  EXPECT_EQ(cache.size(), 2u);
}

TEST(L2PCache, PinnedKeysLiveOutsideTheBudget) {
  L2PCache cache(8, 8, 16);  // 1 entry
  CacheKey z{0, Granularity::kZone, 0};
  CacheKey p{0, Granularity::kPage, 42};
  cache.pin(z);
  cache.insert(p);
  EXPECT_TRUE(cache.lookup(z));
  EXPECT_TRUE(cache.lookup(p));  // pin did not consume the LRU budget
  EXPECT_EQ(cache.pinned_count(), 1u);
  EXPECT_EQ(cache.pinned_bytes(), 8u);
  cache.erase(z);
  EXPECT_FALSE(cache.lookup(z));
}

TEST(L2PCache, ZeroCapacityNeverCaches) {
  L2PCache cache(0, 8, 16);
  CacheKey k{0, Granularity::kPage, 7};
  cache.insert(k);
  EXPECT_FALSE(cache.lookup(k));
}

// ---- MappingManager ----

struct ManagerFixture {
  FlashGeometry g = small_geometry();
  // Zero-byte cache: every lookup misses, making fetch counts deterministic.
  MappingManager mgr{g, FetchStrategy::kMultiple, 0, 8, 16, false, true};
  static constexpr uint64_t kZoneLpas = 4 * kChunkLpas;  // 4 chunks per zone

  ManagerFixture() {
    mgr.add_namespace(0, 8 * kZoneLpas, kZoneLpas);
    for (Lpa l = 0; l < kZoneLpas; ++l) mgr.update(0, l, 10'000 + l);
  }
};

// Probe costs under the largest-first strategy: page-grained entries cost a
// zone probe + chunk probe + page fetch; chunk entries 2; zone entries 1.
TEST(MappingManager, MultipleProbeCounts) {
  ManagerFixture f;
  Resolution r = f.mgr.resolve(0, 5);
  EXPECT_FALSE(r.cache_hit);
  EXPECT_EQ(r.gran, Granularity::kPage);
  EXPECT_EQ(r.fetch_chips.size(), 3u);

  f.mgr.promote(0, 0, Granularity::kChunk, kChunkLpas);
  r = f.mgr.resolve(0, 5);
  EXPECT_EQ(r.gran, Granularity::kChunk);
  EXPECT_EQ(r.fetch_chips.size(), 2u);

  f.mgr.promote(0, 0, Granularity::kZone, ManagerFixture::kZoneLpas);
  r = f.mgr.resolve(0, 5);
  EXPECT_EQ(r.gran, Granularity::kZone);
  EXPECT_EQ(r.fetch_chips.size(), 1u);
  EXPECT_EQ(r.ppa, 10'005u);
}

// Table fetch reads target the chip holding that slice of the on-flash table.
TEST(MappingManager, FetchChipsFollowEntryStriping) {
  ManagerFixture f;
  Resolution r = f.mgr.resolve(0, 5);
  ASSERT_EQ(r.fetch_chips.size(), 3u);
  EXPECT_EQ(r.fetch_chips[0], 0u);  // zone base 0
  EXPECT_EQ(r.fetch_chips[1], 0u);  // chunk base 0
  EXPECT_EQ(r.fetch_chips[2], 5 % f.g.nchips());  // page entry 5
}

TEST(MappingManager, BitmapCostsOneFetch) {
  FlashGeometry g = small_geometry();
  MappingManager mgr(g, FetchStrategy::kBitmap, 0, 8, 16, false, true);
  mgr.add_namespace(0, 4 * kChunkLpas, 2 * kChunkLpas);
  for (Lpa l = 0; l < 8; ++l) mgr.update(0, l, 100 + l);
  Resolution r = mgr.resolve(0, 3);
  EXPECT_EQ(r.fetch_chips.size(), 1u);  // RAM bitmap knows the granularity
}

TEST(MappingManager, BlockNamespaceCostsOneFetch) {
  FlashGeometry g = small_geometry();
  MappingManager mgr(g, FetchStrategy::kMultiple, 0, 8, 16, false, true);
  mgr.add_namespace(0, 1024, 0);  // no zones: page entries only
  mgr.update(0, 9, 999);
  Resolution r = mgr.resolve(0, 9);
  EXPECT_EQ(r.fetch_chips.size(), 1u);
}

TEST(MappingManager, NonHybridIgnoresPromotion) {
  FlashGeometry g = small_geometry();
  MappingManager mgr(g, FetchStrategy::kMultiple, 0, 8, 16, false,
                     /*hybrid=*/false);
  mgr.add_namespace(0, 4 * kChunkLpas, 2 * kChunkLpas);
  for (Lpa l = 0; l < 2 * kChunkLpas; ++l) mgr.update(0, l, 100 + l);
  mgr.promote(0, 0, Granularity::kZone, 2 * kChunkLpas);
  Resolution r = mgr.resolve(0, 5);
  EXPECT_EQ(r.gran, Granularity::kPage);
  EXPECT_EQ(r.fetch_chips.size(), 1u);  // plain page mapping: direct fetch
}

TEST(MappingManager, CacheHitAfterMiss) {
  FlashGeometry g = small_geometry();
  MappingManager mgr(g, FetchStrategy::kMultiple, 1024, 8, 16, false, true);
  mgr.add_namespace(0, 4 * kChunkLpas, 2 * kChunkLpas);
  mgr.update(0, 7, 777);
  // update() caches the fresh page entry, so the first read hits.
  Resolution r = mgr.resolve(0, 7);
  EXPECT_TRUE(r.cache_hit);
}

TEST(MappingManager, PromotionReplacesPageKeysWithOneAggregate) {
  FlashGeometry g = small_geometry();
  MappingManager mgr(g, FetchStrategy::kMultiple, 64 * 1024, 8, 16, false,
                     true);
  mgr.add_namespace(0, 4 * kChunkLpas, 2 * kChunkLpas);
  for (Lpa l = 0; l < 2 * kChunkLpas; ++l) mgr.update(0, l, 100 + l);
  uint64_t before = mgr.cache().size();
  EXPECT_GE(before, 2 * kChunkLpas);
  mgr.promote(0, 0, Granularity::kZone, 2 * kChunkLpas);
  // All covered page (and chunk) keys left; only the zone key represents it.
  EXPECT_EQ(mgr.cache().size(), before - 2 * kChunkLpas + 1);
  Resolution r = mgr.resolve(0, 1500);
  EXPECT_TRUE(r.cache_hit);
  EXPECT_EQ(r.gran, Granularity::kZone);
}

TEST(MappingManager, PinZoneEntriesSurvivesPressure) {
  FlashGeometry g = small_geometry();
  MappingManager mgr(g, FetchStrategy::kMultiple, 16, 8, 16,
                     /*pin_zone_entries=*/true, true);  // 2-entry LRU
  mgr.add_namespace(0, 4 * kChunkLpas, 2 * kChunkLpas);
  for (Lpa l = 0; l < 2 * kChunkLpas; ++l) mgr.update(0, l, 100 + l);
  mgr.promote(0, 0, Granularity::kZone, 2 * kChunkLpas);
  // Flood the LRU with unrelated keys.
  for (Lpa l = 2 * kChunkLpas; l < 2 * kChunkLpas + 64; ++l)
    mgr.update(0, l, 900 + l);
  Resolution r = mgr.resolve(0, 3);
  EXPECT_TRUE(r.cache_hit);  // pinned zone entry never evicted
  EXPECT_EQ(mgr.cache().pinned_count(), 1u);
}

TEST(MappingManager, UpdateInsideAggregateDropsAggregateKey) {
  FlashGeometry g = small_geometry();
  MappingManager mgr(g, FetchStrategy::kMultiple, 64 * 1024, 8, 16, false,
                     true);
  mgr.add_namespace(0, 4 * kChunkLpas, 2 * kChunkLpas);
  for (Lpa l = 0; l < kChunkLpas; ++l) mgr.update(0, l, 100 + l);
  mgr.promote(0, 0, Granularity::kChunk, kChunkLpas);
  mgr.update(0, 10, 42'000);
  EXPECT_EQ(mgr.table(0).covering(5), Granularity::kPage);
  EXPECT_EQ(mgr.resolve(0, 10).ppa, 42'000u);
  EXPECT_EQ(mgr.resolve(0, 11).ppa, 111u);  // neighbours unaffected
}

// ---- RAM-overhead accounting ----

TEST(MappingMemory, BitmapCostFor1TiB) {
  // 2 bits per 4 KiB page over 1 TiB is 64 MiB of controller RAM.
  EXPECT_EQ(granularity_bitmap_bytes(1ull << 40), 64ull << 20);
}

TEST(MappingMemory, PinnedZoneEntriesFor1TiB) {
  // One 4-byte entry per 16 MiB zone over 1 TiB is 256 KiB.
  EXPECT_EQ(pinned_zone_entry_bytes(1ull << 40, 16ull << 20, 4), 256ull << 10);
}

}  // namespace
}  // namespace zflash
