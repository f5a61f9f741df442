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

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "zflash/stats.hpp"
#include "zflash/timing.hpp"

namespace zflash {

enum class ReportFormat { kJson, kCsv, kHuman };

inline nlohmann::ordered_json latency_to_json(const LatencySummary& l) {
  return {{"count", l.count},
          {"mean_ns", l.mean_ns},
          {"p50_ns", l.p50_ns},
          {"p99_ns", l.p99_ns},
          {"p999_ns", l.p999_ns}};
}

inline nlohmann::ordered_json ns_to_json(const NsReport& n) {
  nlohmann::ordered_json j;
  j["ns"] = n.ns_id;
  j["kind"] = n.kind;
  j["host_read_bytes"] = n.host_read_bytes;
  j["host_write_bytes"] = n.host_write_bytes;
  j["host_reads"] = n.host_reads;
  j["host_writes"] = n.host_writes;
  j["device_read_bytes_slc"] = n.device_read_bytes_slc;
  j["device_read_bytes_regular"] = n.device_read_bytes_regular;
  j["device_write_bytes_slc"] = n.device_write_bytes_slc;
  j["device_write_bytes_regular"] = n.device_write_bytes_regular;
  j["erase_count_slc"] = n.erase_count_slc;
  j["erase_count_regular"] = n.erase_count_regular;
  j["host_direct_regular_bytes"] = n.host_direct_regular_bytes;
  j["slc_buffer_program_bytes"] = n.slc_buffer_program_bytes;
  j["fold_program_bytes"] = n.fold_program_bytes;
  j["gc_program_bytes"] = n.gc_program_bytes;
  j["premature_flush_count"] = n.premature_flush_count;
  j["l2p_hits_zone"] = n.l2p_hits_zone;
  j["l2p_hits_chunk"] = n.l2p_hits_chunk;
  j["l2p_hits_page"] = n.l2p_hits_page;
  j["l2p_misses"] = n.l2p_misses;
  j["l2p_miss_rate"] = n.l2p_miss_rate;
  j["mapping_fetch_reads"] = n.mapping_fetch_reads;
  j["granularity_bitmap_bytes"] = n.granularity_bitmap_bytes;
  j["write_bandwidth_mibs"] = n.write_bandwidth_mibs;
  j["read_bandwidth_mibs"] = n.read_bandwidth_mibs;
  j["write_iops"] = n.write_iops;
  j["read_iops"] = n.read_iops;
  j["write_latency"] = latency_to_json(n.write_latency);
  j["read_latency"] = latency_to_json(n.read_latency);
  j["device_waf"] = n.device_waf;
  return j;
}

inline nlohmann::ordered_json report_to_json(const StatsReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["elapsed_ns"] = r.elapsed_ns;
  j["namespaces"] = nlohmann::ordered_json::array();
  for (const NsReport& n : r.namespaces) j["namespaces"].push_back(ns_to_json(n));
  return j;
}

inline LatencySummary latency_from_json(const nlohmann::json& j) {
  LatencySummary l;
  l.count = j.at("count");
  l.mean_ns = j.at("mean_ns");
  l.p50_ns = j.at("p50_ns");
  l.p99_ns = j.at("p99_ns");
  l.p999_ns = j.at("p999_ns");
  return l;
}

inline StatsReport report_from_json(const nlohmann::json& j) {
  StatsReport r;
  r.elapsed_ns = j.at("elapsed_ns");
  for (const auto& n : j.at("namespaces")) {
    NsReport x;
    x.ns_id = n.at("ns");
    x.kind = n.at("kind");
    x.host_read_bytes = n.at("host_read_bytes");
    x.host_write_bytes = n.at("host_write_bytes");
    x.host_reads = n.at("host_reads");
    x.host_writes = n.at("host_writes");
    x.device_read_bytes_slc = n.at("device_read_bytes_slc");
    x.device_read_bytes_regular = n.at("device_read_bytes_regular");
    x.device_write_bytes_slc = n.at("device_write_bytes_slc");
    x.device_write_bytes_regular = n.at("device_write_bytes_regular");
    x.erase_count_slc = n.at("erase_count_slc");
    x.erase_count_regular = n.at("erase_count_regular");
    x.host_direct_regular_bytes = n.at("host_direct_regular_bytes");
    x.slc_buffer_program_bytes = n.at("slc_buffer_program_bytes");
    x.fold_program_bytes = n.at("fold_program_bytes");
    x.gc_program_bytes = n.at("gc_program_bytes");
    x.premature_flush_count = n.at("premature_flush_count");
    x.l2p_hits_zone = n.at("l2p_hits_zone");
    x.l2p_hits_chunk = n.at("l2p_hits_chunk");
    x.l2p_hits_page = n.at("l2p_hits_page");
    x.l2p_misses = n.at("l2p_misses");
    x.l2p_miss_rate = n.at("l2p_miss_rate");
    x.mapping_fetch_reads = n.at("mapping_fetch_reads");
    x.granularity_bitmap_bytes = n.at("granularity_bitmap_bytes");
    x.write_bandwidth_mibs = n.at("write_bandwidth_mibs");
    x.read_bandwidth_mibs = n.at("read_bandwidth_mibs");
    x.write_iops = n.at("write_iops");
    x.read_iops = n.at("read_iops");
    x.write_latency = latency_from_json(n.at("write_latency"));
    x.read_latency = latency_from_json(n.at("read_latency"));
    x.device_waf = n.at("device_waf");
    r.namespaces.push_back(std::move(x));
  }
  return r;
}

inline std::string emit_csv(const StatsReport& r) {
  std::ostringstream out;
  out << "ns,kind,host_read_bytes,host_write_bytes,host_reads,host_writes,"
         "device_read_bytes_slc,device_read_bytes_regular,"
         "device_write_bytes_slc,device_write_bytes_regular,"
         "erase_count_slc,erase_count_regular,host_direct_regular_bytes,"
         "slc_buffer_program_bytes,fold_program_bytes,gc_program_bytes,"
         "premature_flush_count,l2p_hits_zone,l2p_hits_chunk,l2p_hits_page,"
         "l2p_misses,l2p_miss_rate,mapping_fetch_reads,"
         "granularity_bitmap_bytes,write_bandwidth_mibs,read_bandwidth_mibs,"
         "write_iops,read_iops,write_mean_ns,write_p99_ns,read_mean_ns,"
         "read_p99_ns,device_waf\n";
  for (const NsReport& n : r.namespaces) {
    out << n.ns_id << ',' << n.kind << ',' << n.host_read_bytes << ','
        << n.host_write_bytes << ',' << n.host_reads << ',' << n.host_writes
        << ',' << n.device_read_bytes_slc << ',' << n.device_read_bytes_regular
        << ',' << n.device_write_bytes_slc << ','
        << n.device_write_bytes_regular << ',' << n.erase_count_slc << ','
        << n.erase_count_regular << ',' << n.host_direct_regular_bytes << ','
        << n.slc_buffer_program_bytes << ',' << n.fold_program_bytes << ','
        << n.gc_program_bytes << ',' << n.premature_flush_count << ','
        << n.l2p_hits_zone << ',' << n.l2p_hits_chunk << ',' << n.l2p_hits_page
        << ',' << n.l2p_misses << ',' << n.l2p_miss_rate << ','
        << n.mapping_fetch_reads << ',' << n.granularity_bitmap_bytes << ','
        << n.write_bandwidth_mibs << ',' << n.read_bandwidth_mibs << ','
        << n.write_iops << ',' << n.read_iops << ',' << n.write_latency.mean_ns
        << ',' << n.write_latency.p99_ns << ',' << n.read_latency.mean_ns
        << ',' << n.read_latency.p99_ns << ',' << n.device_waf << '\n';
  }
  return out.str();
}

inline std::string emit_human(const StatsReport& r) {
  std::ostringstream out;
  out << "simulated time: " << r.elapsed_ns << " ns\n";
  for (const NsReport& n : r.namespaces) {
    out << "namespace " << n.ns_id << " (" << n.kind << ")\n";
    out << "  host:   " << n.host_write_bytes << " B written, "
        << n.host_read_bytes << " B read (" << n.host_writes << " writes, "
        << n.host_reads << " reads)\n";
    out << "  device: " << n.device_write_bytes_slc << " B -> SLC, "
        << n.device_write_bytes_regular << " B -> regular, erases slc/reg "
        << n.erase_count_slc << '/' << n.erase_count_regular << '\n';
    out << "  write bw: " << std::fixed << std::setprecision(1)
        << n.write_bandwidth_mibs << " MiB/s, read IOPS: "
        << std::setprecision(0) << n.read_iops << '\n';
    out << "  premature flushes: " << n.premature_flush_count
        << ", L2P miss rate: " << std::setprecision(4) << n.l2p_miss_rate
        << ", fetch reads: " << n.mapping_fetch_reads << '\n';
    out << "  WAF: " << std::setprecision(2) << n.device_waf << '\n';
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

inline std::string emit_report(const StatsReport& r, ReportFormat fmt) {
  switch (fmt) {
    case ReportFormat::kJson: return report_to_json(r).dump(2) + "\n";
    case ReportFormat::kCsv: return emit_csv(r);
    case ReportFormat::kHuman: return emit_human(r);
  }
  return "";
}

// Newline-delimited event log: time,unit,origin,kind,ppa,bytes.
inline void emit_events(const std::vector<Event>& events, std::ostream& out) {
  out << "# time,unit,origin,kind,ppa,bytes\n";
  for (const Event& e : events)
    out << e.time << ',' << e.chip_index << ',' << to_string(e.origin) << ','
        << to_string(e.kind) << ',' << e.target << ',' << e.bytes << '\n';
}

}  // namespace zflash
