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
#include <stdexcept>
#include <string>

namespace zflash {

// Simulated time in nanoseconds, starting at 0.
using TimeNs = uint64_t;

// Logical page address in 4 KiB units, namespace-local.
using Lpa = uint64_t;

// Linear physical sector (4 KiB) index into the flash complex.
// Linearization: ((block * nchips + chip_index) * pages_per_block + page)
//   * sectors_per_page + sector.
using PhysSector = uint64_t;

constexpr PhysSector kInvalidSector = ~0ull;
constexpr uint64_t kSectorBytes = 4096;
constexpr uint64_t kChunkBytes = 4ull << 20;  // hybrid-mapping chunk

enum class ErrorCode {
  kConfigInvalid,
  kParseError,
  kUnknownNamespace,
  kUnalignedWrite,
  kZoneFull,
  kUnmappedRead,
  kOutOfSpace,
  kNoVictim,
  kBadAddress,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::kConfigInvalid: return "CONFIG_INVALID";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kUnknownNamespace: return "UNKNOWN_NAMESPACE";
    case ErrorCode::kUnalignedWrite: return "UNALIGNED_WRITE";
    case ErrorCode::kZoneFull: return "ZONE_FULL";
    case ErrorCode::kUnmappedRead: return "UNMAPPED_READ";
    case ErrorCode::kOutOfSpace: return "OUT_OF_SPACE";
    case ErrorCode::kNoVictim: return "NO_VICTIM";
    case ErrorCode::kBadAddress: return "BAD_ADDRESS";
  }
  return "UNKNOWN";
}

class SimError : public std::runtime_error {
 public:
  SimError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// (channel, chip, block, page) coordinate into the flash complex, plus the
// 4 KiB sector within the flash page.
struct PhysicalPageAddress {
  uint32_t channel = 0;
  uint32_t chip = 0;
  uint32_t block = 0;
  uint32_t page = 0;
  uint32_t sector = 0;

  bool operator==(const PhysicalPageAddress&) const = default;
};

}  // namespace zflash
