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

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "zflash/report.hpp"
#include "zflash/simulator.hpp"
#include "zflash/trace.hpp"

namespace {

zflash::ReportFormat parse_format(const std::string& f) {
  if (f == "json") return zflash::ReportFormat::kJson;
  if (f == "csv") return zflash::ReportFormat::kCsv;
  if (f == "human") return zflash::ReportFormat::kHuman;
  throw zflash::SimError(zflash::ErrorCode::kParseError,
                         "unknown format: " + f);
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    return;
  }
  std::ofstream out(path);
  if (!out)
    throw zflash::SimError(zflash::ErrorCode::kParseError,
                           "cannot open output: " + path);
  out << data;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zflash: deterministic zoned-flash device simulator"};
  app.require_subcommand(1);

  std::string config_path, trace_path, out_path, events_path;
  std::string format = "json";
  uint64_t seed = 42;

  auto* run = app.add_subcommand("run", "replay a trace");
  run->add_option("--config", config_path, "device configuration file")
      ->required();
  run->add_option("--trace", trace_path, "CSV trace file ('-' for stdin)")
      ->required();
  run->add_option("--out", out_path, "report output path (default stdout)");
  run->add_option("--format", format, "json|csv|human");
  run->add_option("--events", events_path, "write the flash event log here");

  auto* gen = app.add_subcommand("gen", "generate a synthetic workload");
  std::string kind;
  uint32_t g_ns = 0, g_streams = 2, g_updates = 4;
  uint64_t g_lba = 0, g_bytes = 0, g_request = 48 * 1024, g_count = 1000;
  uint64_t g_range = 1 << 20, g_file_bytes = 0;
  bool g_conflict = false, g_synced = false;
  gen->add_option("--config", config_path, "device configuration file")
      ->required();
  gen->add_option("--kind", kind,
                  "seq_write|rand_read_range|buffer_conflict|multi_stream")
      ->required();
  gen->add_option("--out", out_path, "trace output path (default stdout)");
  gen->add_option("--seed", seed, "PRNG seed");
  gen->add_option("--ns", g_ns, "namespace id");
  gen->add_option("--lba", g_lba, "start LBA (4 KiB units)");
  gen->add_option("--bytes", g_bytes, "total bytes (seq_write)");
  gen->add_option("--request", g_request, "request size in bytes");
  gen->add_option("--count", g_count, "read count (rand_read_range)");
  gen->add_option("--range", g_range, "read range bytes (rand_read_range)");
  gen->add_flag("--conflict", g_conflict,
                "same-parity zone streams (buffer_conflict)");
  gen->add_flag("--synced", g_synced, "mark writes synced");
  gen->add_option("--streams", g_streams, "stream count (multi_stream)");
  gen->add_option("--file-bytes", g_file_bytes, "per-stream bytes");
  gen->add_option("--updates", g_updates, "rewrite rounds (multi_stream)");

  auto* validate = app.add_subcommand("validate", "check a configuration");
  validate->add_option("--config", config_path, "device configuration file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) {
      zflash::SimConfig cfg = zflash::load_config(config_path);
      cfg.validate();
      std::cout << "OK: " << cfg.namespaces.size() << " namespace(s), "
                << cfg.geometry.nchips() << " chips\n";
      return 0;
    }
    if (app.got_subcommand(gen)) {
      zflash::SimConfig cfg = zflash::load_config(config_path);
      cfg.validate();
      std::vector<zflash::TraceRecord> trace;
      if (kind == "seq_write") {
        trace = zflash::gen_seq_write(g_ns, g_lba, g_bytes, g_request,
                                      g_synced);
      } else if (kind == "rand_read_range") {
        trace = zflash::gen_rand_read_range(g_ns, g_lba, g_range, g_count,
                                            seed);
      } else if (kind == "buffer_conflict") {
        trace = zflash::gen_buffer_conflict(cfg, g_ns, g_conflict);
      } else if (kind == "multi_stream") {
        trace = zflash::gen_multi_stream(cfg, g_ns, g_streams, g_file_bytes,
                                         g_updates, g_request, seed);
      } else {
        throw zflash::SimError(zflash::ErrorCode::kParseError,
                               "unknown workload kind: " + kind);
      }
      std::ostringstream out;
      zflash::save_trace(trace, out);
      write_output(out_path, out.str());
      return 0;
    }
    // run
    zflash::SimConfig cfg = zflash::load_config(config_path);
    cfg.validate();
    std::vector<zflash::TraceRecord> trace;
    if (trace_path == "-")
      trace = zflash::parse_trace(std::cin);
    else
      trace = zflash::load_trace(trace_path);
    zflash::Device device(cfg);
    zflash::StatsReport report = zflash::run_trace(device, trace);
    write_output(out_path, zflash::emit_report(report, parse_format(format)));
    if (!events_path.empty()) {
      std::ofstream ev(events_path);
      if (!ev)
        throw zflash::SimError(zflash::ErrorCode::kParseError,
                               "cannot open events path: " + events_path);
      zflash::emit_events(device.events(), ev);
    }
    return 0;
  } catch (const zflash::SimError& e) {
    std::cerr << "error [" << zflash::to_string(e.code()) << "]: " << e.what()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
