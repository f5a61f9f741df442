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
#include <cstdint>
#include <string>
#include <vector>

#include "zflash/types.hpp"

namespace zflash {

struct LatencySummary {
  uint64_t count = 0;
  double mean_ns = 0;
  TimeNs p50_ns = 0;
  TimeNs p99_ns = 0;
  TimeNs p999_ns = 0;

  static LatencySummary from(std::vector<TimeNs> samples) {
    LatencySummary s;
    s.count = samples.size();
    if (samples.empty()) return s;
    std::sort(samples.begin(), samples.end());
    double sum = 0;
    for (TimeNs v : samples) sum += double(v);
    s.mean_ns = sum / double(samples.size());
    auto pick = [&](double q) {
      size_t i = size_t(q * double(samples.size()));
      if (i >= samples.size()) i = samples.size() - 1;
      return samples[i];
    };
    s.p50_ns = pick(0.50);
    s.p99_ns = pick(0.99);
    s.p999_ns = pick(0.999);
    return s;
  }
};

// Raw per-namespace counters accumulated during a run.
struct NsCounters {
  // Host-side volume.
  uint64_t host_read_bytes = 0;
  uint64_t host_write_bytes = 0;
  uint64_t host_reads = 0;
  uint64_t host_writes = 0;

  // Device-side volume, split by flash region.
  uint64_t device_read_bytes_slc = 0;
  uint64_t device_read_bytes_regular = 0;
  uint64_t device_write_bytes_slc = 0;
  uint64_t device_write_bytes_regular = 0;
  uint64_t erase_count_slc = 0;      // flash blocks erased
  uint64_t erase_count_regular = 0;

  // Write-amplification breakdown; the four program categories partition all
  // device-programmed bytes.
  uint64_t host_direct_regular_bytes = 0;
  uint64_t slc_buffer_program_bytes = 0;  // host-path SLC detours
  uint64_t fold_program_bytes = 0;
  uint64_t gc_program_bytes = 0;

  uint64_t premature_flush_count = 0;

  // L2P cache behaviour.
  uint64_t l2p_hits_zone = 0;
  uint64_t l2p_hits_chunk = 0;
  uint64_t l2p_hits_page = 0;
  uint64_t l2p_misses = 0;
  uint64_t mapping_fetch_reads = 0;  // timed flash reads for table fetches
  uint64_t granularity_bitmap_bytes = 0;  // reported under BITMAP strategy

  // Timeline markers.
  TimeNs first_write_issue = 0, last_write_completion = 0;
  TimeNs first_read_issue = 0, last_read_completion = 0;
  TimeNs last_background_completion = 0;
  bool saw_write = false, saw_read = false;

  std::vector<TimeNs> write_latencies;
  std::vector<TimeNs> read_latencies;

  uint64_t device_program_bytes() const {
    return device_write_bytes_slc + device_write_bytes_regular;
  }
  uint64_t l2p_lookups() const {
    return l2p_hits_zone + l2p_hits_chunk + l2p_hits_page + l2p_misses;
  }

  void note_write(TimeNs issue, TimeNs done) {
    if (!saw_write) first_write_issue = issue;
    saw_write = true;
    last_write_completion = std::max(last_write_completion, done);
    write_latencies.push_back(done - issue);
  }
  void note_read(TimeNs issue, TimeNs done) {
    if (!saw_read) first_read_issue = issue;
    saw_read = true;
    last_read_completion = std::max(last_read_completion, done);
    read_latencies.push_back(done - issue);
  }
};

// Finished metrics for one namespace.
struct NsReport {
  uint32_t ns_id = 0;
  std::string kind;

  uint64_t host_read_bytes = 0, host_write_bytes = 0;
  uint64_t host_reads = 0, host_writes = 0;
  uint64_t device_read_bytes_slc = 0, device_read_bytes_regular = 0;
  uint64_t device_write_bytes_slc = 0, device_write_bytes_regular = 0;
  uint64_t erase_count_slc = 0, erase_count_regular = 0;
  uint64_t host_direct_regular_bytes = 0, slc_buffer_program_bytes = 0;
  uint64_t fold_program_bytes = 0, gc_program_bytes = 0;
  uint64_t premature_flush_count = 0;
  uint64_t l2p_hits_zone = 0, l2p_hits_chunk = 0, l2p_hits_page = 0;
  uint64_t l2p_misses = 0, mapping_fetch_reads = 0;
  uint64_t granularity_bitmap_bytes = 0;
  double l2p_miss_rate = 0;

  double write_bandwidth_mibs = 0;  // host bytes over write-to-quiesce span
  double read_bandwidth_mibs = 0;
  double write_iops = 0;
  double read_iops = 0;
  LatencySummary write_latency;
  LatencySummary read_latency;
  double device_waf = 0;  // device writes / host writes

  static NsReport from(uint32_t ns_id, const std::string& kind,
                       const NsCounters& c) {
    NsReport r;
    r.ns_id = ns_id;
    r.kind = kind;
    r.host_read_bytes = c.host_read_bytes;
    r.host_write_bytes = c.host_write_bytes;
    r.host_reads = c.host_reads;
    r.host_writes = c.host_writes;
    r.device_read_bytes_slc = c.device_read_bytes_slc;
    r.device_read_bytes_regular = c.device_read_bytes_regular;
    r.device_write_bytes_slc = c.device_write_bytes_slc;
    r.device_write_bytes_regular = c.device_write_bytes_regular;
    r.erase_count_slc = c.erase_count_slc;
    r.erase_count_regular = c.erase_count_regular;
    r.host_direct_regular_bytes = c.host_direct_regular_bytes;
    r.slc_buffer_program_bytes = c.slc_buffer_program_bytes;
    r.fold_program_bytes = c.fold_program_bytes;
    r.gc_program_bytes = c.gc_program_bytes;
    r.premature_flush_count = c.premature_flush_count;
    r.l2p_hits_zone = c.l2p_hits_zone;
    r.l2p_hits_chunk = c.l2p_hits_chunk;
    r.l2p_hits_page = c.l2p_hits_page;
    r.l2p_misses = c.l2p_misses;
    r.mapping_fetch_reads = c.mapping_fetch_reads;
    r.granularity_bitmap_bytes = c.granularity_bitmap_bytes;
    if (c.l2p_lookups() > 0)
      r.l2p_miss_rate = double(c.l2p_misses) / double(c.l2p_lookups());

    constexpr double kMiB = 1024.0 * 1024.0;
    if (c.saw_write) {
      TimeNs end = std::max(c.last_write_completion,
                            c.last_background_completion);
      TimeNs span = end > c.first_write_issue ? end - c.first_write_issue : 0;
      if (span > 0) {
        r.write_bandwidth_mibs =
            double(c.host_write_bytes) / kMiB / (double(span) * 1e-9);
        r.write_iops = double(c.host_writes) / (double(span) * 1e-9);
      }
    }
    if (c.saw_read) {
      TimeNs span = c.last_read_completion > c.first_read_issue
                        ? c.last_read_completion - c.first_read_issue
                        : 0;
      if (span > 0) {
        r.read_bandwidth_mibs =
            double(c.host_read_bytes) / kMiB / (double(span) * 1e-9);
        r.read_iops = double(c.host_reads) / (double(span) * 1e-9);
      }
    }
    r.write_latency = LatencySummary::from(c.write_latencies);
    r.read_latency = LatencySummary::from(c.read_latencies);
    if (c.host_write_bytes > 0)
      r.device_waf =
          double(c.device_program_bytes()) / double(c.host_write_bytes);
    return r;
  }
};

struct StatsReport {
  std::vector<NsReport> namespaces;
  TimeNs elapsed_ns = 0;  // simulated time until the device quiesced

  uint64_t total_host_write_bytes() const {
    uint64_t t = 0;
    for (auto& n : namespaces) t += n.host_write_bytes;
    return t;
  }
  uint64_t total_device_program_bytes() const {
    uint64_t t = 0;
    for (auto& n : namespaces)
      t += n.device_write_bytes_slc + n.device_write_bytes_regular;
    return t;
  }
};

// Volatile-memory cost of a full 2-bit mapping-granularity bitmap.
inline uint64_t granularity_bitmap_bytes(uint64_t logical_bytes) {
  uint64_t lpas = logical_bytes / kSectorBytes;
  return (lpas * 2 + 7) / 8;
}

// Volatile-memory cost of pinning one aggregated entry per zone.
inline uint64_t pinned_zone_entry_bytes(uint64_t logical_bytes,
                                        uint64_t zone_bytes,
                                        uint64_t entry_size = 4) {
  return (logical_bytes / zone_bytes) * entry_size;
}

}  // namespace zflash
