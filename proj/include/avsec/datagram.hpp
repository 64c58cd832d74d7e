#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avsec/geometry.hpp"

namespace avsec {

// Wire layout, little-endian:
//   12 blocks x (0xFF 0xEE, u16 azimuth in 0.01 deg, 32 x (u16 range in 2 mm, u8 intensity))
//   + u32 timestamp in us + mode byte + model byte = 1206 bytes.
constexpr size_t kBlocksPerDatagram = 12;
constexpr size_t kCellsPerBlock = 32;
constexpr size_t kBlockSize = 4 + kCellsPerBlock * 3;
constexpr size_t kDatagramSize = kBlocksPerDatagram * kBlockSize + 6;
constexpr uint8_t kFlagByte0 = 0xFF;
constexpr uint8_t kFlagByte1 = 0xEE;
constexpr double kRangeUnit = 0.002;  // meters per range count
constexpr uint8_t kModeStrongest = 0x37;
constexpr uint8_t kModeLast = 0x38;
constexpr uint8_t kModeDual = 0x39;
constexpr uint8_t kModelId = 0x21;

struct DatagramCell {
  uint16_t range_raw = 0;  // 0 means no return
  uint8_t intensity = 0;
};

struct DatagramBlock {
  uint16_t azimuth_raw = 0;  // hundredths of a degree, < 36000
  std::array<DatagramCell, kCellsPerBlock> cells;
};

struct Datagram {
  std::array<DatagramBlock, kBlocksPerDatagram> blocks;
  uint32_t timestamp_us = 0;
  uint8_t mode = kModeStrongest;
  uint8_t model = kModelId;

  bool operator==(const Datagram&) const = default;
};

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OrderingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::array<uint8_t, kDatagramSize> encode_datagram(const Datagram& d);

/// Throws CodecError on wrong size, bad block flags, or azimuth >= 36000.
Datagram decode_datagram(const uint8_t* data, size_t size);

/// One full rotation as a point matrix, sorted by (azimuth, elevation, range).
struct Sweep {
  std::vector<SphericalPoint> points;
  int index = 0;                  // k-th sweep of the stream
  int source_datagram_count = 0;  // datagrams that contributed blocks
};

/// Groups datagrams into sweeps on azimuth wraparound. Blocks before the
/// first wrap form sweep 0. Throws OrderingError when datagram timestamps
/// regress (u32 rollover excepted).
class SweepAssembler {
 public:
  explicit SweepAssembler(const SensorModel& s) : sensor_(s) {}

  /// Returns a completed sweep when this datagram wrapped past 0 azimuth.
  std::optional<Sweep> feed(const Datagram& d);

  /// Whatever is buffered, as a final partial sweep (empty -> nullopt).
  std::optional<Sweep> flush();

 private:
  void add_block(const DatagramBlock& b, uint32_t ts_us, int local_idx, bool second_return);

  SensorModel sensor_;
  std::vector<SphericalPoint> points_;
  int next_index_ = 0;
  int datagrams_in_sweep_ = 0;
  bool have_last_ts_ = false;
  uint32_t last_ts_us_ = 0;
  double last_azimuth_ = -1.0;
};

struct ReverseReport {
  int conflicts = 0;  // grid cells contested by >1 point; higher intensity kept
  int dropped = 0;    // points outside the half-spacing gate
};

/// Packs a point matrix back into wire datagrams. Each point is assigned to
/// the nearest (azimuth step, channel) cell; the assignment is gated at half
/// the grid spacing per axis, which makes nearest-cell digitization the
/// optimal one-to-one assignment. Cell conflicts keep the higher intensity.
/// fallback_t0 seeds timestamps when the sweep has no points.
std::vector<Datagram> reverse_engineer_datagrams(const Sweep& sweep, const SensorModel& s,
                                                 ReverseReport* report = nullptr,
                                                 double fallback_t0 = 0.0);

/// "LSWP" file: magic, u32 version, u32 count, then per point
/// f32 range, f32 azimuth, f32 elevation, f64 t, f32 intensity.
void write_sweep_file(const std::string& path, const Sweep& sweep);
Sweep read_sweep_file(const std::string& path);

/// Serialized forms used by the network tools and tests.
std::vector<uint8_t> sweep_to_bytes(const Sweep& sweep);
Sweep sweep_from_bytes(const std::vector<uint8_t>& bytes);

}  // namespace avsec
