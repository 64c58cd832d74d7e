#include "avsec/datagram.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace avsec {

namespace {

void put_u16(uint8_t* p, uint16_t v) {
  p[0] = static_cast<uint8_t>(v & 0xFF);
  p[1] = static_cast<uint8_t>(v >> 8);
}

void put_u32(uint8_t* p, uint32_t v) {
  p[0] = static_cast<uint8_t>(v & 0xFF);
  p[1] = static_cast<uint8_t>((v >> 8) & 0xFF);
  p[2] = static_cast<uint8_t>((v >> 16) & 0xFF);
  p[3] = static_cast<uint8_t>((v >> 24) & 0xFF);
}

uint16_t get_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

bool point_order(const SphericalPoint& a, const SphericalPoint& b) {
  if (a.azimuth != b.azimuth) return a.azimuth < b.azimuth;
  if (a.elevation != b.elevation) return a.elevation < b.elevation;
  return a.range < b.range;
}

}  // namespace

std::array<uint8_t, kDatagramSize> encode_datagram(const Datagram& d) {
  std::array<uint8_t, kDatagramSize> out{};
  uint8_t* p = out.data();
  for (const DatagramBlock& b : d.blocks) {
    p[0] = kFlagByte0;
    p[1] = kFlagByte1;
    put_u16(p + 2, b.azimuth_raw);
    uint8_t* c = p + 4;
    for (const DatagramCell& cell : b.cells) {
      put_u16(c, cell.range_raw);
      c[2] = cell.intensity;
      c += 3;
    }
    p += kBlockSize;
  }
  put_u32(p, d.timestamp_us);
  p[4] = d.mode;
  p[5] = d.model;
  return out;
}

Datagram decode_datagram(const uint8_t* data, size_t size) {
  if (size != kDatagramSize) throw CodecError("datagram size " + std::to_string(size));
  Datagram d;
  const uint8_t* p = data;
  for (DatagramBlock& b : d.blocks) {
    if (p[0] != kFlagByte0 || p[1] != kFlagByte1) throw CodecError("bad block flag");
    b.azimuth_raw = get_u16(p + 2);
    if (b.azimuth_raw >= 36000) throw CodecError("azimuth out of range");
    const uint8_t* c = p + 4;
    for (DatagramCell& cell : b.cells) {
      cell.range_raw = get_u16(c);
      cell.intensity = c[2];
      c += 3;
    }
    p += kBlockSize;
  }
  d.timestamp_us = get_u32(p);
  d.mode = p[4];
  d.model = p[5];
  return d;
}

void SweepAssembler::add_block(const DatagramBlock& b, uint32_t ts_us, int local_idx,
                               bool /*second_return*/) {
  const double azimuth = deg2rad(b.azimuth_raw / 100.0);
  const double t = ts_us * 1e-6 + local_idx * sensor_.firing_interval();
  const int m = std::min<int>(sensor_.channels, kCellsPerBlock);
  for (int j = 0; j < m; ++j) {
    if (b.cells[j].range_raw == 0) continue;
    SphericalPoint pt;
    pt.range = b.cells[j].range_raw * kRangeUnit;
    pt.azimuth = azimuth;
    pt.elevation = sensor_.elevation_angles[j];
    pt.t = t;
    pt.intensity = b.cells[j].intensity / 255.0;
    points_.push_back(pt);
  }
}

std::optional<Sweep> SweepAssembler::feed(const Datagram& d) {
  if (have_last_ts_) {
    const uint32_t prev = last_ts_us_;
    if (d.timestamp_us < prev && prev - d.timestamp_us < 0x80000000u)
      throw OrderingError("datagram timestamps regress");
  }
  last_ts_us_ = d.timestamp_us;
  have_last_ts_ = true;

  const bool dual = d.mode == kModeDual;
  std::optional<Sweep> done;
  bool contributed_prev = false, contributed_next = false;
  for (size_t bi = 0; bi < kBlocksPerDatagram; ++bi) {
    const DatagramBlock& b = d.blocks[bi];
    const bool second = dual && (bi % 2 == 1);
    const double az = deg2rad(b.azimuth_raw / 100.0);
    if (!second && last_azimuth_ >= 0.0 && az < last_azimuth_ && !done) {
      // wrapped past zero: everything so far is one rotation
      Sweep s;
      s.points = std::move(points_);
      std::sort(s.points.begin(), s.points.end(), point_order);
      s.index = next_index_++;
      s.source_datagram_count = datagrams_in_sweep_ + (contributed_prev ? 1 : 0);
      points_.clear();
      datagrams_in_sweep_ = 0;
      done = std::move(s);
    }
    if (!second) last_azimuth_ = az;
    add_block(b, d.timestamp_us, static_cast<int>(bi), second);
    (done ? contributed_next : contributed_prev) = true;
  }
  datagrams_in_sweep_ += (done ? (contributed_next ? 1 : 0) : 1);
  return done;
}

std::optional<Sweep> SweepAssembler::flush() {
  if (points_.empty() && datagrams_in_sweep_ == 0) return std::nullopt;
  Sweep s;
  s.points = std::move(points_);
  std::sort(s.points.begin(), s.points.end(), point_order);
  s.index = next_index_++;
  s.source_datagram_count = datagrams_in_sweep_;
  points_.clear();
  datagrams_in_sweep_ = 0;
  last_azimuth_ = -1.0;
  return s;
}

std::vector<Datagram> reverse_engineer_datagrams(const Sweep& sweep, const SensorModel& s,
                                                 ReverseReport* report, double fallback_t0) {
  const bool dual = s.mode == ReturnMode::kDual;
  const int blocks_per_step = dual ? 2 : 1;
  const int total_blocks = s.azimuth_steps * blocks_per_step;
  const int n_datagrams = (total_blocks + kBlocksPerDatagram - 1) / kBlocksPerDatagram;
  const double az_gate = s.azimuth_step() / 2.0;

  // elevation gate: half the smallest channel spacing
  double elev_gate = kPi;
  for (size_t j = 1; j < s.elevation_angles.size(); ++j)
    elev_gate = std::min(elev_gate, (s.elevation_angles[j] - s.elevation_angles[j - 1]) / 2.0);

  ReverseReport rep;
  // per grid cell: up to two returns (dual), ordered by range
  struct CellHit {
    double range = 0.0, intensity = 0.0;
    bool used = false;
  };
  std::vector<CellHit> first(static_cast<size_t>(s.points_per_sweep()));
  std::vector<CellHit> second(dual ? first.size() : 0);

  double t0 = fallback_t0;
  bool have_t0 = false;
  for (const SphericalPoint& p : sweep.points) {
    const int i = nearest_azimuth_step(s, p.azimuth);
    const int j = nearest_channel(s, p.elevation);
    double daz = std::fabs(wrap_pi(p.azimuth - s.grid_azimuth(i)));
    if (daz > az_gate || std::fabs(p.elevation - s.elevation_angles[j]) > elev_gate) {
      ++rep.dropped;
      continue;
    }
    if (!have_t0) {
      t0 = p.t - i * s.firing_interval();
      have_t0 = true;
    }
    const size_t cell = static_cast<size_t>(i) * s.channels + j;
    CellHit hit{p.range, p.intensity, true};
    CellHit& f = first[cell];
    if (!f.used) {
      f = hit;
    } else if (dual) {
      CellHit& sec = second[cell];
      if (!sec.used) {
        sec = hit;
        if (sec.range < f.range) std::swap(f, sec);
      } else {
        ++rep.conflicts;
        // keep the two highest intensities, then order by range
        CellHit* weakest = &f;
        if (sec.intensity < weakest->intensity) weakest = &sec;
        if (hit.intensity > weakest->intensity) *weakest = hit;
        if (sec.range < f.range) std::swap(f, sec);
      }
    } else {
      ++rep.conflicts;
      if (hit.intensity > f.intensity) f = hit;
    }
  }

  std::vector<Datagram> out(static_cast<size_t>(n_datagrams));
  for (int d = 0; d < n_datagrams; ++d) {
    Datagram& dg = out[d];
    dg.mode = dual ? kModeDual : (s.mode == ReturnMode::kLast ? kModeLast : kModeStrongest);
    dg.timestamp_us = static_cast<uint32_t>(std::llround(
        (t0 + (static_cast<double>(d) * kBlocksPerDatagram / blocks_per_step) *
                  s.firing_interval()) *
        1e6));
    for (size_t bi = 0; bi < kBlocksPerDatagram; ++bi) {
      const int gb = d * static_cast<int>(kBlocksPerDatagram) + static_cast<int>(bi);
      const int step = (gb / blocks_per_step) % s.azimuth_steps;
      const bool second_ret = dual && (gb % 2 == 1);
      DatagramBlock& blk = dg.blocks[bi];
      blk.azimuth_raw = static_cast<uint16_t>(
          std::lround(rad2deg(s.grid_azimuth(step)) * 100.0) % 36000);
      if (gb >= total_blocks) continue;  // padding blocks stay empty
      const int m = std::min<int>(s.channels, kCellsPerBlock);
      for (int j = 0; j < m; ++j) {
        const size_t cell = static_cast<size_t>(step) * s.channels + j;
        const CellHit& hit = second_ret ? second[cell] : first[cell];
        if (!hit.used) continue;
        const long raw = std::lround(hit.range / kRangeUnit);
        blk.cells[j].range_raw = static_cast<uint16_t>(std::clamp<long>(raw, 1, 65535));
        blk.cells[j].intensity = static_cast<uint8_t>(
            std::clamp<long>(std::lround(hit.intensity * 255.0), 0, 255));
      }
    }
  }
  if (report) *report = rep;
  return out;
}

namespace {

constexpr char kSweepMagic[4] = {'L', 'S', 'W', 'P'};
constexpr uint32_t kSweepVersion = 1;

template <typename T>
void append_raw(std::vector<uint8_t>& v, T value) {
  uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  v.insert(v.end(), buf, buf + sizeof(T));
}

template <typename T>
T read_raw(const std::vector<uint8_t>& v, size_t& off) {
  if (off + sizeof(T) > v.size()) throw CodecError("sweep data truncated");
  T value;
  std::memcpy(&value, v.data() + off, sizeof(T));
  off += sizeof(T);
  return value;
}

}  // namespace

std::vector<uint8_t> sweep_to_bytes(const Sweep& sweep) {
  std::vector<uint8_t> out;
  out.reserve(12 + sweep.points.size() * 24);
  out.insert(out.end(), kSweepMagic, kSweepMagic + 4);
  append_raw(out, kSweepVersion);
  append_raw(out, static_cast<uint32_t>(sweep.points.size()));
  for (const SphericalPoint& p : sweep.points) {
    append_raw(out, static_cast<float>(p.range));
    append_raw(out, static_cast<float>(p.azimuth));
    append_raw(out, static_cast<float>(p.elevation));
    append_raw(out, p.t);
    append_raw(out, static_cast<float>(p.intensity));
  }
  return out;
}

Sweep sweep_from_bytes(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kSweepMagic, 4) != 0)
    throw CodecError("not a sweep file");
  size_t off = 4;
  const uint32_t version = read_raw<uint32_t>(bytes, off);
  if (version != kSweepVersion) throw CodecError("unsupported sweep version");
  const uint32_t n = read_raw<uint32_t>(bytes, off);
  Sweep s;
  s.points.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    SphericalPoint p;
    p.range = read_raw<float>(bytes, off);
    p.azimuth = read_raw<float>(bytes, off);
    p.elevation = read_raw<float>(bytes, off);
    p.t = read_raw<double>(bytes, off);
    p.intensity = read_raw<float>(bytes, off);
    s.points.push_back(p);
  }
  return s;
}

void write_sweep_file(const std::string& path, const Sweep& sweep) {
  const std::vector<uint8_t> bytes = sweep_to_bytes(sweep);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CodecError("cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CodecError("short write to " + path);
}

Sweep read_sweep_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CodecError("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return sweep_from_bytes(bytes);
}

}  // namespace avsec
