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

#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "zflash/config.hpp"
#include "zflash/types.hpp"

namespace zflash {

enum class TraceOp { kRead, kWrite, kFlush, kZoneReset, kZoneFinish };

inline const char* to_string(TraceOp op) {
  switch (op) {
    case TraceOp::kRead: return "READ";
    case TraceOp::kWrite: return "WRITE";
    case TraceOp::kFlush: return "FLUSH";
    case TraceOp::kZoneReset: return "ZONE_RESET";
    case TraceOp::kZoneFinish: return "ZONE_FINISH";
  }
  return "?";
}

// One host request. For ZONE_RESET/ZONE_FINISH, lba carries the zone id and
// len is unused.
struct TraceRecord {
  TimeNs timestamp = 0;
  uint32_t ns = 0;
  TraceOp op = TraceOp::kWrite;
  Lpa lba = 0;
  uint64_t len = 0;
  bool synced = false;
};

// CSV line: timestamp_ns,ns,op,lba,len,synced ('#' starts a comment).
inline std::string to_csv(const TraceRecord& r) {
  std::ostringstream out;
  out << r.timestamp << ',' << r.ns << ',' << to_string(r.op) << ',' << r.lba
      << ',' << r.len << ',' << (r.synced ? 1 : 0);
  return out.str();
}

inline std::vector<TraceRecord> parse_trace(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw SimError(ErrorCode::kParseError,
                   "trace line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    lineno++;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // Trim.
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    line = line.substr(a, line.find_last_not_of(" \t\r") - a + 1);
    std::istringstream f(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(f, field, ',')) fields.push_back(field);
    if (fields.size() != 6) fail("expected 6 comma-separated fields");
    TraceRecord r;
    try {
      r.timestamp = std::stoull(fields[0]);
      r.ns = static_cast<uint32_t>(std::stoul(fields[1]));
      r.lba = std::stoull(fields[3]);
      r.len = std::stoull(fields[4]);
      r.synced = std::stoul(fields[5]) != 0;
    } catch (const std::exception&) {
      fail("bad numeric field");
    }
    const std::string& op = fields[2];
    if (op == "READ") r.op = TraceOp::kRead;
    else if (op == "WRITE") r.op = TraceOp::kWrite;
    else if (op == "FLUSH") r.op = TraceOp::kFlush;
    else if (op == "ZONE_RESET") r.op = TraceOp::kZoneReset;
    else if (op == "ZONE_FINISH") r.op = TraceOp::kZoneFinish;
    else fail("unknown op '" + op + "'");
    if (!records.empty() && r.timestamp < records.back().timestamp)
      fail("timestamps must be non-decreasing");
    if ((r.op == TraceOp::kRead || r.op == TraceOp::kWrite) &&
        (r.len == 0 || r.len % kSectorBytes != 0))
      fail("len must be a positive multiple of 4096");
    records.push_back(r);
  }
  return records;
}

inline std::vector<TraceRecord> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw SimError(ErrorCode::kParseError, "cannot open trace: " + path);
  return parse_trace(in);
}

inline void save_trace(const std::vector<TraceRecord>& records,
                       std::ostream& out) {
  out << "# timestamp_ns,ns,op,lba,len,synced\n";
  for (const TraceRecord& r : records) out << to_csv(r) << '\n';
}

// ---- Synthetic workloads ----

// Sequential writes at a fixed request size, starting at `lba`.
inline std::vector<TraceRecord> gen_seq_write(uint32_t ns, Lpa lba,
                                              uint64_t total_bytes,
                                              uint64_t request_bytes,
                                              bool synced = false,
                                              TimeNs start = 0) {
  std::vector<TraceRecord> t;
  TimeNs ts = start;
  for (uint64_t off = 0; off < total_bytes; off += request_bytes) {
    uint64_t len = std::min(request_bytes, total_bytes - off);
    t.push_back({ts++, ns, TraceOp::kWrite, lba + off / kSectorBytes, len,
                 synced});
  }
  return t;
}

// Uniform 4 KiB random reads in [lba, lba + range_bytes).
inline std::vector<TraceRecord> gen_rand_read_range(uint32_t ns, Lpa lba,
                                                    uint64_t range_bytes,
                                                    uint64_t count,
                                                    uint64_t seed,
                                                    TimeNs start = 0) {
  if (range_bytes < kSectorBytes)
    throw SimError(ErrorCode::kConfigInvalid, "read range below 4096");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<uint64_t> pick(0,
                                               range_bytes / kSectorBytes - 1);
  std::vector<TraceRecord> t;
  TimeNs ts = start;
  for (uint64_t i = 0; i < count; ++i)
    t.push_back({ts++, ns, TraceOp::kRead, lba + pick(rng), kSectorBytes,
                 false});
  return t;
}

// Two interleaved zone streams at 48 KiB granularity. With same-parity zones
// and modulo buffer binding both streams share one buffer (conflicts); with
// different parity they do not.
inline std::vector<TraceRecord> gen_buffer_conflict(const SimConfig& cfg,
                                                    uint32_t ns,
                                                    bool conflict,
                                                    TimeNs start = 0) {
  const NamespaceConfig& nc = cfg.namespaces.at(ns);
  if (nc.kind != NsKind::kZoned)
    throw SimError(ErrorCode::kConfigInvalid, "needs a zoned namespace");
  uint64_t zone_lpas = cfg.effective_zone_size(nc) / kSectorBytes;
  uint64_t cap = cfg.effective_zone_capacity(nc);
  uint32_t za = 0;
  uint32_t zb = conflict ? 2 : 1;
  if (nc.zone_count <= zb)
    throw SimError(ErrorCode::kConfigInvalid, "needs at least 3 zones");
  constexpr uint64_t kReq = 48 * 1024;
  std::vector<TraceRecord> t;
  TimeNs ts = start;
  for (uint64_t off = 0; off < cap; off += kReq) {
    uint64_t len = std::min(kReq, cap - off);
    t.push_back({ts++, ns, TraceOp::kWrite,
                 Lpa(za) * zone_lpas + off / kSectorBytes, len, false});
    t.push_back({ts++, ns, TraceOp::kWrite,
                 Lpa(zb) * zone_lpas + off / kSectorBytes, len, false});
  }
  t.push_back({ts++, ns, TraceOp::kFlush, 0, 0, false});
  return t;
}

// Interleaved write streams with periodic rewrites (zone reset + refill).
inline std::vector<TraceRecord> gen_multi_stream(const SimConfig& cfg,
                                                 uint32_t ns,
                                                 uint32_t streams,
                                                 uint64_t file_bytes,
                                                 uint32_t updates,
                                                 uint64_t request_bytes,
                                                 uint64_t seed,
                                                 TimeNs start = 0) {
  const NamespaceConfig& nc = cfg.namespaces.at(ns);
  if (nc.kind != NsKind::kZoned)
    throw SimError(ErrorCode::kConfigInvalid, "needs a zoned namespace");
  if (streams == 0 || file_bytes == 0 || request_bytes == 0)
    throw SimError(ErrorCode::kConfigInvalid,
                   "multi_stream needs streams, file bytes and request size");
  uint64_t zone_lpas = cfg.effective_zone_size(nc) / kSectorBytes;
  uint64_t cap = cfg.effective_zone_capacity(nc);
  uint64_t zones_per_stream = (file_bytes + cap - 1) / cap;
  if (uint64_t(streams) * zones_per_stream > nc.zone_count)
    throw SimError(ErrorCode::kConfigInvalid,
                   "streams do not fit in the namespace");
  std::mt19937_64 rng(seed);
  std::vector<TraceRecord> t;
  TimeNs ts = start;
  // Round-robin the initial fill across streams.
  std::vector<uint64_t> written(streams, 0);
  bool progress = true;
  while (progress) {
    progress = false;
    for (uint32_t s = 0; s < streams; ++s) {
      if (written[s] >= file_bytes) continue;
      uint64_t off = written[s];
      uint64_t len = std::min(request_bytes, file_bytes - off);
      // Clamp to the zone boundary so every write stays in one zone.
      uint64_t zoff = off % cap;
      len = std::min(len, cap - zoff);
      uint32_t zone = uint32_t(s * zones_per_stream + off / cap);
      t.push_back({ts++, ns, TraceOp::kWrite,
                   Lpa(zone) * zone_lpas + zoff / kSectorBytes, len, false});
      written[s] += len;
      progress = true;
    }
  }
  t.push_back({ts++, ns, TraceOp::kFlush, 0, 0, false});
  // Updates: reset one random zone of a random stream and rewrite it.
  std::uniform_int_distribution<uint32_t> pick_stream(0, streams - 1);
  for (uint32_t u = 0; u < updates; ++u) {
    uint32_t s = pick_stream(rng);
    std::uniform_int_distribution<uint64_t> pick_zone(0, zones_per_stream - 1);
    uint32_t zone = uint32_t(s * zones_per_stream + pick_zone(rng));
    t.push_back({ts++, ns, TraceOp::kZoneReset, zone, 0, false});
    uint64_t refill = std::min(cap, file_bytes);
    for (uint64_t off = 0; off < refill; off += request_bytes) {
      uint64_t len = std::min(request_bytes, refill - off);
      t.push_back({ts++, ns, TraceOp::kWrite,
                   Lpa(zone) * zone_lpas + off / kSectorBytes, len, false});
    }
    t.push_back({ts++, ns, TraceOp::kFlush, 0, 0, false});
  }
  return t;
}

}  // namespace zflash
