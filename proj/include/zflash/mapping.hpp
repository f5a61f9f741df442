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

#include <list>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "zflash/geometry.hpp"
#include "zflash/types.hpp"

namespace zflash {

enum class Granularity : uint8_t { kUnmapped, kPage, kChunk, kZone };

inline const char* to_string(Granularity g) {
  switch (g) {
    case Granularity::kUnmapped: return "UNMAPPED";
    case Granularity::kPage: return "PAGE";
    case Granularity::kChunk: return "CHUNK";
    case Granularity::kZone: return "ZONE";
  }
  return "?";
}

struct MapEntry {
  PhysSector ppa = kInvalidSector;
  Granularity gran = Granularity::kUnmapped;
};

// Per-namespace logical-to-physical table. Every mapped LPA always keeps its
// exact page-level PPA; aggregation to chunk or zone granularity only flips
// the marker on the range's base entry, so demotion is lossless. Aggregates
// change how many table entries a lookup needs cached, not how an address
// resolves.
class MappingTable {
 public:
  MappingTable() = default;
  MappingTable(uint64_t lpas, uint64_t lpas_per_chunk, uint64_t lpas_per_zone)
      : entries_(lpas),
        lpas_per_chunk_(lpas_per_chunk),
        lpas_per_zone_(lpas_per_zone) {}

  uint64_t lpas() const { return entries_.size(); }
  uint64_t lpas_per_chunk() const { return lpas_per_chunk_; }
  uint64_t lpas_per_zone() const { return lpas_per_zone_; }

  Lpa chunk_base(Lpa lpa) const { return lpa - lpa % lpas_per_chunk_; }
  Lpa zone_base(Lpa lpa) const {
    return lpas_per_zone_ ? lpa - lpa % lpas_per_zone_ : 0;
  }

  const MapEntry& at(Lpa lpa) const { return entries_[lpa]; }

  // Granularity of the aggregate covering this LPA.
  Granularity covering(Lpa lpa) const {
    if (lpas_per_zone_ &&
        entries_[zone_base(lpa)].gran == Granularity::kZone)
      return Granularity::kZone;
    if (entries_[chunk_base(lpa)].gran == Granularity::kChunk)
      return Granularity::kChunk;
    return entries_[lpa].gran;
  }

  Lpa covering_base(Lpa lpa) const {
    switch (covering(lpa)) {
      case Granularity::kZone: return zone_base(lpa);
      case Granularity::kChunk: return chunk_base(lpa);
      default: return lpa;
    }
  }

  bool is_mapped(Lpa lpa) const {
    return entries_[lpa].ppa != kInvalidSector;
  }

  PhysSector resolve(Lpa lpa) const {
    if (!is_mapped(lpa))
      throw SimError(ErrorCode::kUnmappedRead, "read of unmapped LPA");
    return entries_[lpa].ppa;
  }

  // Point update; demotes any aggregate covering the LPA since the range is
  // no longer uniformly placed until the caller re-checks the condition.
  void set(Lpa lpa, PhysSector ppa) {
    demote_covering(lpa);
    entries_[lpa].ppa = ppa;
    entries_[lpa].gran = Granularity::kPage;
  }

  void unmap(Lpa lpa) {
    demote_covering(lpa);
    entries_[lpa] = MapEntry{};
  }

  void promote(Lpa base, Granularity gran) {
    entries_[base].gran = gran;
  }
  void demote(Lpa base) {
    entries_[base].gran =
        is_mapped(base) ? Granularity::kPage : Granularity::kUnmapped;
  }

 private:
  void demote_covering(Lpa lpa) {
    if (lpas_per_zone_) {
      Lpa zb = zone_base(lpa);
      if (entries_[zb].gran == Granularity::kZone) demote(zb);
    }
    Lpa cb = chunk_base(lpa);
    if (entries_[cb].gran == Granularity::kChunk) demote(cb);
  }

  std::vector<MapEntry> entries_;
  uint64_t lpas_per_chunk_ = kChunkBytes / kSectorBytes;
  uint64_t lpas_per_zone_ = 0;
};

struct CacheKey {
  uint32_t ns = 0;
  Granularity gran = Granularity::kPage;
  Lpa base = 0;
  bool operator==(const CacheKey&) const = default;
};

struct CacheKeyHash {
  size_t operator()(const CacheKey& k) const {
    uint64_t h = k.base * 0x9e3779b97f4a7c15ull;
    h ^= (uint64_t(k.ns) << 8 | uint64_t(k.gran)) * 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return size_t(h);
  }
};

// Bounded LRU over translation entries. One cached key proves the
// corresponding table entry is resident in device RAM; the payload itself
// stays in MappingTable. Pinned keys live outside the LRU budget and never
// evict.
class L2PCache {
 public:
  L2PCache() = default;
  L2PCache(uint64_t capacity_bytes, uint64_t entry_bytes, size_t buckets)
      : capacity_entries_(entry_bytes ? capacity_bytes / entry_bytes : 0),
        entry_bytes_(entry_bytes) {
    map_.rehash(buckets);
  }

  uint64_t capacity_entries() const { return capacity_entries_; }
  uint64_t size() const { return map_.size(); }
  uint64_t pinned_count() const { return pinned_.size(); }
  uint64_t pinned_bytes() const { return pinned_.size() * entry_bytes_; }

  bool lookup(const CacheKey& key) {
    if (pinned_.count(key)) return true;
    auto it = map_.find(key);
    if (it == map_.end()) return false;
    lru_.splice(lru_.begin(), lru_, it->second);
    return true;
  }

  void insert(const CacheKey& key) {
    if (pinned_.count(key) || capacity_entries_ == 0) return;
    auto it = map_.find(key);
    if (it != map_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return;
    }
    if (map_.size() >= capacity_entries_) {
      map_.erase(lru_.back());
      lru_.pop_back();
    }
    lru_.push_front(key);
    map_[key] = lru_.begin();
  }

  void erase(const CacheKey& key) {
    pinned_.erase(key);
    auto it = map_.find(key);
    if (it == map_.end()) return;
    lru_.erase(it->second);
    map_.erase(it);
  }

  void pin(const CacheKey& key) {
    erase(key);
    pinned_.insert(key);
  }

 private:
  uint64_t capacity_entries_ = 0;
  uint64_t entry_bytes_ = 8;
  std::list<CacheKey> lru_;
  std::unordered_map<CacheKey, std::list<CacheKey>::iterator, CacheKeyHash>
      map_;
  std::unordered_set<CacheKey, CacheKeyHash> pinned_;
};

// How the device learns an uncached entry's granularity before fetching it.
//  kMultiple: probe largest-first (zone, chunk, page); each failed probe and
//             the final fetch each cost one flash read of the on-flash table.
//  kBitmap:   a RAM bitmap (2 bits per LPA) gives the granularity directly,
//             so a miss costs exactly one flash read.
enum class FetchStrategy { kMultiple, kBitmap };

struct Resolution {
  PhysSector ppa = kInvalidSector;
  Granularity gran = Granularity::kPage;  // granularity that served the lookup
  bool cache_hit = false;
  // Chip index per timed table-fetch read (failed probes + final fetch).
  std::vector<uint32_t> fetch_chips;
};

// Ties the per-namespace tables to the shared translation cache.
class MappingManager {
 public:
  MappingManager() = default;
  MappingManager(const FlashGeometry& geometry, FetchStrategy strategy,
                 uint64_t cache_bytes, uint64_t entry_bytes, size_t buckets,
                 bool pin_zone_entries, bool hybrid = true)
      : geometry_(&geometry),
        strategy_(strategy),
        pin_zone_entries_(pin_zone_entries),
        hybrid_(hybrid),
        cache_(cache_bytes, entry_bytes, buckets) {}

  void add_namespace(uint32_t ns, uint64_t lpas, uint64_t lpas_per_zone) {
    if (tables_.size() <= ns) tables_.resize(ns + 1);
    tables_[ns] =
        MappingTable(lpas, kChunkBytes / kSectorBytes, lpas_per_zone);
  }

  MappingTable& table(uint32_t ns) { return tables_[ns]; }
  const MappingTable& table(uint32_t ns) const { return tables_[ns]; }
  L2PCache& cache() { return cache_; }
  FetchStrategy strategy() const { return strategy_; }

  // Looks up an LPA for a host read, recording what the cache did and which
  // on-flash table reads a miss costs.
  Resolution resolve(uint32_t ns, Lpa lpa) {
    MappingTable& t = tables_[ns];
    Resolution r;
    r.ppa = t.resolve(lpa);  // throws on unmapped
    r.gran = t.covering(lpa);
    CacheKey key{ns, r.gran, t.covering_base(lpa)};
    if (cache_.lookup(key)) {
      r.cache_hit = true;
      return r;
    }
    if (!hybrid_ || strategy_ == FetchStrategy::kBitmap ||
        !t.lpas_per_zone()) {
      // Granularity known up front (or block namespaces, which only ever hold
      // page entries): a single fetch of the right table entry.
      r.fetch_chips.push_back(fetch_chip(key.base));
    } else {
      // Probe largest-first until the granularity matches.
      if (r.gran != Granularity::kZone)
        r.fetch_chips.push_back(fetch_chip(t.zone_base(lpa)));
      if (r.gran == Granularity::kPage)
        r.fetch_chips.push_back(fetch_chip(t.chunk_base(lpa)));
      r.fetch_chips.push_back(fetch_chip(key.base));
    }
    cache_.insert(key);
    return r;
  }

  // Point update from a host write or migration.
  void update(uint32_t ns, Lpa lpa, PhysSector ppa) {
    MappingTable& t = tables_[ns];
    invalidate_aggregates(ns, lpa);
    t.set(lpa, ppa);
    cache_.insert(CacheKey{ns, Granularity::kPage, lpa});
  }

  void unmap(uint32_t ns, Lpa lpa) {
    invalidate_aggregates(ns, lpa);
    tables_[ns].unmap(lpa);
    cache_.erase(CacheKey{ns, Granularity::kPage, lpa});
  }

  // Marks [base, base+n) as one aggregate; covered page keys leave the cache
  // so the single aggregate key represents the range.
  void promote(uint32_t ns, Lpa base, Granularity gran, uint64_t n_lpas) {
    if (!hybrid_) return;
    tables_[ns].promote(base, gran);
    for (uint64_t i = 0; i < n_lpas; ++i)
      cache_.erase(CacheKey{ns, Granularity::kPage, base + i});
    if (gran == Granularity::kZone) {
      for (Lpa cb = base; cb < base + n_lpas;
           cb += tables_[ns].lpas_per_chunk())
        cache_.erase(CacheKey{ns, Granularity::kChunk, cb});
    }
    CacheKey key{ns, gran, base};
    if (gran == Granularity::kZone && pin_zone_entries_)
      cache_.pin(key);
    else
      cache_.insert(key);
  }

 private:
  // Fetch reads land on the chip holding that slice of the on-flash table;
  // the table is striped across chips by entry index.
  uint32_t fetch_chip(Lpa base) const {
    return static_cast<uint32_t>(base % geometry_->nchips());
  }

  void invalidate_aggregates(uint32_t ns, Lpa lpa) {
    MappingTable& t = tables_[ns];
    if (t.lpas_per_zone() &&
        t.at(t.zone_base(lpa)).gran == Granularity::kZone)
      cache_.erase(CacheKey{ns, Granularity::kZone, t.zone_base(lpa)});
    if (t.at(t.chunk_base(lpa)).gran == Granularity::kChunk)
      cache_.erase(CacheKey{ns, Granularity::kChunk, t.chunk_base(lpa)});
  }

  const FlashGeometry* geometry_ = nullptr;
  FetchStrategy strategy_ = FetchStrategy::kMultiple;
  bool pin_zone_entries_ = false;
  bool hybrid_ = true;
  L2PCache cache_;
  std::vector<MappingTable> tables_;
};

}  // namespace zflash
