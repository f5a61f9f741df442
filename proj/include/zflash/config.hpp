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

#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "zflash/geometry.hpp"
#include "zflash/mapping.hpp"
#include "zflash/types.hpp"

namespace zflash {

enum class BufferPolicy { kFullyAssociative, kModulo };
enum class NsKind { kBlock, kZoned };

inline const char* to_string(NsKind k) {
  return k == NsKind::kBlock ? "block" : "zoned";
}

struct BufferConfig {
  uint32_t count = 2;
  uint64_t size = 384 * 1024;
  BufferPolicy policy = BufferPolicy::kFullyAssociative;
  bool all_in_slc = false;  // route every flush through SLC
};

struct CacheConfig {
  uint64_t size = 1024 * 1024;
  uint64_t entry_size = 8;
  size_t buckets = 1024;
  FetchStrategy strategy = FetchStrategy::kMultiple;
  bool pin_zone_entries = false;
  bool hybrid = true;  // false = plain page-level mapping, no aggregation
};

enum class GcDestination { kAuto, kInSlc, kToRegular };

struct GcConfig {
  bool preemptible = true;
  uint32_t trigger_free = 2;  // start GC when free SLC superblocks drop below
  uint32_t target_free = 3;   // run until at least this many are free
  GcDestination destination = GcDestination::kAuto;
};

struct HostConfig {
  uint32_t queue_depth = 32;
};

struct NamespaceConfig {
  uint32_t ns_id = 0;
  NsKind kind = NsKind::kZoned;
  uint64_t logical_size = 0;  // block namespaces
  uint64_t zone_size = 0;     // zoned; 0 means one superblock
  uint64_t zone_capacity = 0; // 0 means zone_size
  uint64_t zone_count = 0;
  uint64_t slc_buffer = 0;    // SLC partition bytes; block ns derives if 0
};

struct SimConfig {
  FlashGeometry geometry;
  MediaProfile regular = MediaProfile::tlc();
  MediaProfile slc = MediaProfile::slc();
  bool sub_block_zones = false;
  BufferConfig buffers;
  CacheConfig cache;
  GcConfig gc;
  HostConfig host;
  std::vector<NamespaceConfig> namespaces;

  uint64_t slc_superblock_bytes() const {
    return uint64_t(geometry.nchips()) *
           (geometry.pages_per_block / regular.bits_per_cell) *
           geometry.page_size;
  }

  uint64_t effective_zone_size(const NamespaceConfig& ns) const {
    return ns.zone_size ? ns.zone_size : geometry.superblock_bytes();
  }
  uint64_t effective_zone_capacity(const NamespaceConfig& ns) const {
    return ns.zone_capacity ? ns.zone_capacity : effective_zone_size(ns);
  }

  // SLC superblocks owned by a namespace. Block namespaces hold all their
  // data plus 1/8 over-provisioning in SLC, rounded up to whole superblocks;
  // zoned namespaces get their configured secondary-buffer capacity.
  uint64_t slc_superblocks(const NamespaceConfig& ns) const {
    uint64_t sb = slc_superblock_bytes();
    uint64_t bytes =
        ns.kind == NsKind::kBlock
            ? (ns.slc_buffer ? ns.slc_buffer
                             : ns.logical_size + ns.logical_size / 8)
            : ns.slc_buffer;
    return (bytes + sb - 1) / sb;
  }

  uint64_t physical_size(const NamespaceConfig& ns) const {
    if (ns.kind == NsKind::kBlock)
      return slc_superblocks(ns) * slc_superblock_bytes();
    return ns.zone_count * effective_zone_capacity(ns) +
           slc_superblocks(ns) * slc_superblock_bytes();
  }

  uint64_t logical_size(const NamespaceConfig& ns) const {
    return ns.kind == NsKind::kBlock
               ? ns.logical_size
               : ns.zone_count * effective_zone_capacity(ns);
  }

  // Zoned LBA space is laid out at zone_size spacing even when capacity is
  // smaller.
  uint64_t addressable_size(const NamespaceConfig& ns) const {
    return ns.kind == NsKind::kBlock ? ns.logical_size
                                     : ns.zone_count * effective_zone_size(ns);
  }

  GcDestination effective_gc_destination() const {
    if (gc.destination != GcDestination::kAuto) return gc.destination;
    return (regular.cell_kind == CellKind::kQlc && buffers.all_in_slc)
               ? GcDestination::kToRegular
               : GcDestination::kInSlc;
  }

  void validate() const {
    geometry.validate();
    regular.validate();
    slc.validate();
    if (regular.cell_kind == CellKind::kSlc)
      throw SimError(ErrorCode::kConfigInvalid,
                     "regular media cannot be SLC");
    if (buffers.count < 1)
      throw SimError(ErrorCode::kConfigInvalid, "buffer count must be >= 1");
    if (buffers.size < kSectorBytes || buffers.size % kSectorBytes != 0)
      throw SimError(ErrorCode::kConfigInvalid,
                     "buffer size must be a positive multiple of 4096");
    if (cache.entry_size == 0)
      throw SimError(ErrorCode::kConfigInvalid, "cache entry_size must be > 0");
    if (gc.target_free < gc.trigger_free)
      throw SimError(ErrorCode::kConfigInvalid,
                     "gc target_free must be >= trigger_free");
    if (regular.cell_kind == CellKind::kQlc && buffers.all_in_slc &&
        gc.destination == GcDestination::kInSlc)
      throw SimError(ErrorCode::kConfigInvalid,
                     "QLC with all_in_slc buffering requires GC destination "
                     "to_regular");
    if (host.queue_depth < 1)
      throw SimError(ErrorCode::kConfigInvalid, "queue_depth must be >= 1");
    if (namespaces.empty())
      throw SimError(ErrorCode::kConfigInvalid,
                     "at least one namespace required");

    uint64_t slc_sbs = 0;
    uint64_t regular_blocks = 0;
    uint32_t block_ns_count = 0;
    for (size_t i = 0; i < namespaces.size(); ++i) {
      const NamespaceConfig& ns = namespaces[i];
      if (ns.ns_id != i)
        throw SimError(ErrorCode::kConfigInvalid,
                       "namespace ids must be contiguous from 0");
      if (ns.kind == NsKind::kBlock) {
        block_ns_count++;
        if (ns.ns_id != 0)
          throw SimError(ErrorCode::kConfigInvalid,
                         "block namespace must be namespace 0");
        if (ns.logical_size == 0 || ns.logical_size % kSectorBytes != 0)
          throw SimError(ErrorCode::kConfigInvalid,
                         "block namespace logical_size must be a positive "
                         "multiple of 4096");
        if (physical_size(ns) < ns.logical_size + ns.logical_size / 8)
          throw SimError(
              ErrorCode::kConfigInvalid,
              "block namespace physical size below logical + over-provision");
      } else {
        uint64_t zsize = effective_zone_size(ns);
        uint64_t zcap = effective_zone_capacity(ns);
        if (ns.zone_count == 0)
          throw SimError(ErrorCode::kConfigInvalid,
                         "zoned namespace needs zone_count >= 1");
        if (zcap == 0 || zcap > zsize)
          throw SimError(ErrorCode::kConfigInvalid,
                         "zone_capacity must be in (0, zone_size]");
        if (zcap % program_unit_bytes(geometry, regular) != 0)
          throw SimError(ErrorCode::kConfigInvalid,
                         "zone_capacity must be a multiple of the programming "
                         "unit");
        if (!sub_block_zones && zcap > geometry.superblock_bytes())
          throw SimError(ErrorCode::kConfigInvalid,
                         "zone_capacity exceeds one superblock");
        regular_blocks += ns.zone_count *
                          ((zcap + geometry.block_bytes() - 1) /
                           geometry.block_bytes());
      }
      slc_sbs += slc_superblocks(ns);
    }
    if (block_ns_count > 1)
      throw SimError(ErrorCode::kConfigInvalid,
                     "at most one block namespace supported");
    if (block_ns_count == 1 && namespaces.size() > 1 && buffers.count < 2)
      throw SimError(ErrorCode::kConfigInvalid,
                     "block + zoned namespaces need >= 2 buffers (block "
                     "namespace takes one dedicated buffer)");
    if (slc_sbs > geometry.slc_blocks_per_chip)
      throw SimError(ErrorCode::kConfigInvalid,
                     "namespace SLC partitions exceed SLC superblock pool");
    uint64_t avail_regular =
        uint64_t(geometry.blocks_per_chip - geometry.slc_blocks_per_chip) *
        geometry.nchips();
    if (regular_blocks > avail_regular)
      throw SimError(ErrorCode::kConfigInvalid,
                     "zoned capacity exceeds regular flash blocks");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::string lower(std::string s) {
  for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline uint64_t parse_size(const std::string& raw, int line) {
  std::string v = trim(raw);
  size_t pos = 0;
  uint64_t n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw SimError(ErrorCode::kParseError,
                   "line " + std::to_string(line) + ": bad number '" + v + "'");
  }
  std::string suf = lower(trim(v.substr(pos)));
  if (suf.empty() || suf == "b") return n;
  if (suf == "k" || suf == "kib") return n << 10;
  if (suf == "m" || suf == "mib") return n << 20;
  if (suf == "g" || suf == "gib") return n << 30;
  throw SimError(ErrorCode::kParseError,
                 "line " + std::to_string(line) + ": bad size suffix '" + suf +
                     "'");
}

inline TimeNs parse_time(const std::string& raw, int line) {
  std::string v = trim(raw);
  size_t pos = 0;
  double n = 0;
  try {
    n = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw SimError(ErrorCode::kParseError,
                   "line " + std::to_string(line) + ": bad number '" + v + "'");
  }
  std::string suf = lower(trim(v.substr(pos)));
  double mul = 1;
  if (suf.empty() || suf == "ns") mul = 1;
  else if (suf == "us") mul = 1e3;
  else if (suf == "ms") mul = 1e6;
  else if (suf == "s") mul = 1e9;
  else
    throw SimError(ErrorCode::kParseError,
                   "line " + std::to_string(line) + ": bad time suffix '" +
                       suf + "'");
  return TimeNs(n * mul);
}

inline bool parse_bool(const std::string& raw, int line) {
  std::string v = lower(trim(raw));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw SimError(ErrorCode::kParseError,
                 "line " + std::to_string(line) + ": bad boolean '" + raw +
                     "'");
}

}  // namespace detail

// INI-style: [section] headers, key = value pairs, '#'/';' comments. Sizes
// take B/KiB/MiB/GiB suffixes, times take ns/us/ms/s.
inline SimConfig parse_config(std::istream& in) {
  using detail::lower;
  using detail::parse_bool;
  using detail::parse_size;
  using detail::parse_time;
  using detail::trim;

  SimConfig cfg;
  std::string section;
  std::string line;
  int lineno = 0;
  bool media_cell_set = false;

  auto fail = [&](const std::string& msg) {
    throw SimError(ErrorCode::kParseError,
                   "line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, line)) {
    lineno++;
    size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (section.rfind("namespace.", 0) == 0) {
        uint32_t id = 0;
        try {
          id = static_cast<uint32_t>(std::stoul(section.substr(10)));
        } catch (const std::exception&) {
          fail("bad namespace id in '" + section + "'");
        }
        if (cfg.namespaces.size() <= id) cfg.namespaces.resize(id + 1);
        cfg.namespaces[id].ns_id = id;
      }
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = lower(trim(line.substr(0, eq)));
    std::string val = trim(line.substr(eq + 1));

    if (section == "geometry") {
      if (key == "channels") cfg.geometry.channels = uint32_t(parse_size(val, lineno));
      else if (key == "chips_per_channel") cfg.geometry.chips_per_channel = uint32_t(parse_size(val, lineno));
      else if (key == "blocks_per_chip") cfg.geometry.blocks_per_chip = uint32_t(parse_size(val, lineno));
      else if (key == "pages_per_block") cfg.geometry.pages_per_block = uint32_t(parse_size(val, lineno));
      else if (key == "page_size") cfg.geometry.page_size = parse_size(val, lineno);
      else if (key == "channel_bandwidth") cfg.geometry.channel_bandwidth = parse_size(val, lineno);
      else if (key == "slc_blocks_per_chip") cfg.geometry.slc_blocks_per_chip = uint32_t(parse_size(val, lineno));
      else fail("unknown geometry key '" + key + "'");
    } else if (section == "media") {
      if (key == "cell") {
        std::string c = lower(val);
        uint32_t mpp = cfg.regular.min_program_pages;
        bool keep_mpp = media_cell_set;
        if (c == "tlc") cfg.regular = MediaProfile::tlc();
        else if (c == "qlc") cfg.regular = MediaProfile::qlc();
        else fail("cell must be tlc or qlc");
        if (keep_mpp) cfg.regular.min_program_pages = mpp;
        media_cell_set = true;
      } else if (key == "min_program_pages") {
        cfg.regular.min_program_pages = uint32_t(parse_size(val, lineno));
        media_cell_set = true;
      } else if (key == "program_latency") cfg.regular.program_latency_ns = parse_time(val, lineno);
      else if (key == "read_latency") cfg.regular.read_latency_ns = parse_time(val, lineno);
      else if (key == "erase_latency") cfg.regular.erase_latency_ns = parse_time(val, lineno);
      else if (key == "slc_program_latency") cfg.slc.program_latency_ns = parse_time(val, lineno);
      else if (key == "slc_read_latency") cfg.slc.read_latency_ns = parse_time(val, lineno);
      else if (key == "slc_erase_latency") cfg.slc.erase_latency_ns = parse_time(val, lineno);
      else if (key == "sub_block_zones") cfg.sub_block_zones = parse_bool(val, lineno);
      else fail("unknown media key '" + key + "'");
    } else if (section == "buffers") {
      if (key == "count") cfg.buffers.count = uint32_t(parse_size(val, lineno));
      else if (key == "size") cfg.buffers.size = parse_size(val, lineno);
      else if (key == "policy") {
        std::string p = lower(val);
        if (p == "fully_associative") cfg.buffers.policy = BufferPolicy::kFullyAssociative;
        else if (p == "modulo") cfg.buffers.policy = BufferPolicy::kModulo;
        else fail("policy must be fully_associative or modulo");
      } else if (key == "all_in_slc") cfg.buffers.all_in_slc = parse_bool(val, lineno);
      else fail("unknown buffers key '" + key + "'");
    } else if (section == "cache") {
      if (key == "size") cfg.cache.size = parse_size(val, lineno);
      else if (key == "entry_size") cfg.cache.entry_size = parse_size(val, lineno);
      else if (key == "buckets") cfg.cache.buckets = size_t(parse_size(val, lineno));
      else if (key == "strategy") {
        std::string s = lower(val);
        if (s == "multiple") cfg.cache.strategy = FetchStrategy::kMultiple;
        else if (s == "bitmap") cfg.cache.strategy = FetchStrategy::kBitmap;
        else fail("strategy must be multiple or bitmap");
      } else if (key == "pin_zone_entries") cfg.cache.pin_zone_entries = parse_bool(val, lineno);
      else if (key == "hybrid") cfg.cache.hybrid = parse_bool(val, lineno);
      else fail("unknown cache key '" + key + "'");
    } else if (section == "gc") {
      if (key == "preemptible") cfg.gc.preemptible = parse_bool(val, lineno);
      else if (key == "trigger_free") cfg.gc.trigger_free = uint32_t(parse_size(val, lineno));
      else if (key == "target_free") cfg.gc.target_free = uint32_t(parse_size(val, lineno));
      else if (key == "destination") {
        std::string d = lower(val);
        if (d == "auto") cfg.gc.destination = GcDestination::kAuto;
        else if (d == "in_slc") cfg.gc.destination = GcDestination::kInSlc;
        else if (d == "to_regular") cfg.gc.destination = GcDestination::kToRegular;
        else fail("destination must be auto, in_slc, or to_regular");
      } else fail("unknown gc key '" + key + "'");
    } else if (section == "host") {
      if (key == "queue_depth") cfg.host.queue_depth = uint32_t(parse_size(val, lineno));
      else fail("unknown host key '" + key + "'");
    } else if (section.rfind("namespace.", 0) == 0) {
      NamespaceConfig& ns = cfg.namespaces.back();
      // Section header already sized the vector; index by parsed id to allow
      // out-of-order sections.
      uint32_t id = static_cast<uint32_t>(std::stoul(section.substr(10)));
      NamespaceConfig& n = cfg.namespaces[id];
      (void)ns;
      if (key == "kind") {
        std::string k = lower(val);
        if (k == "block") n.kind = NsKind::kBlock;
        else if (k == "zoned") n.kind = NsKind::kZoned;
        else fail("kind must be block or zoned");
      } else if (key == "logical_size") n.logical_size = parse_size(val, lineno);
      else if (key == "zone_size") n.zone_size = parse_size(val, lineno);
      else if (key == "zone_capacity") n.zone_capacity = parse_size(val, lineno);
      else if (key == "zone_count") n.zone_count = parse_size(val, lineno);
      else if (key == "slc_buffer") n.slc_buffer = parse_size(val, lineno);
      else fail("unknown namespace key '" + key + "'");
    } else {
      fail("unknown section '" + section + "'");
    }
  }
  return cfg;
}

inline SimConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw SimError(ErrorCode::kParseError, "cannot open config: " + path);
  return parse_config(in);
}

}  // namespace zflash
