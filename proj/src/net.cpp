#include "avsec/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "avsec/integrity.hpp"

namespace avsec {

const std::array<uint8_t, 8> kStreamEndMarker = {'L', 'S', 'T', 'R', 'E', 'N', 'D', 0};

namespace {

struct UdpSocket {
  int fd = -1;

  UdpSocket() {
    fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    const int buf = 4 * 1024 * 1024;
    ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &buf, sizeof(buf));
  }
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;
  ~UdpSocket() {
    if (fd >= 0) ::close(fd);
  }

  void bind_port(int port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
      throw TransportError("bind() failed on port " + std::to_string(port));
    }
  }

  void set_timeout(double seconds) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(seconds);
    tv.tv_usec = static_cast<suseconds_t>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  }

  void send_to(const sockaddr_in& dst, const uint8_t* data, size_t size) const {
    const ssize_t n = ::sendto(fd, data, size, 0,
                               reinterpret_cast<const sockaddr*>(&dst), sizeof(dst));
    if (n != static_cast<ssize_t>(size)) throw TransportError("sendto() failed");
  }

  // Returns bytes received, or -1 on timeout.
  ssize_t recv(uint8_t* data, size_t cap) const {
    const ssize_t n = ::recvfrom(fd, data, cap, 0, nullptr, nullptr);
    return n;
  }
};

sockaddr_in make_addr(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw TransportError("bad host: " + host);
  }
  return addr;
}

bool is_end_marker(const uint8_t* data, ssize_t size) {
  return size == static_cast<ssize_t>(kStreamEndMarker.size()) &&
         std::memcmp(data, kStreamEndMarker.data(), kStreamEndMarker.size()) == 0;
}

std::vector<Datagram> encode_sweep(const Sweep& sweep, const SensorModel& sensor, double t0) {
  return reverse_engineer_datagrams(sweep, sensor, nullptr, t0);
}

double sweep_t0(const Sweep& sweep, double fallback) {
  return sweep.points.empty() ? fallback : sweep.points.front().t;
}

}  // namespace

int run_sender(const Scene& scene, const SenderOptions& opt) {
  UdpSocket sock;
  const sockaddr_in dst = make_addr(opt.host, opt.port);
  const double datagram_interval =
      scene.sensor.firing_interval() * static_cast<double>(kBlocksPerDatagram);
  int sent = 0;
  for (int k = 0; k < scene.frames; ++k) {
    const RenderResult r = render_sweep(scene, k);
    const std::vector<Datagram> datagrams =
        encode_sweep(r.sweep, scene.sensor, scene.frame_time(k));
    for (const Datagram& d : datagrams) {
      const std::array<uint8_t, kDatagramSize> wire = encode_datagram(d);
      sock.send_to(dst, wire.data(), wire.size());
      ++sent;
      if (opt.realtime) {
        std::this_thread::sleep_for(std::chrono::duration<double>(datagram_interval));
      } else if (opt.pacing_us > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(opt.pacing_us * 1e-6));
      }
    }
  }
  sock.send_to(dst, kStreamEndMarker.data(), kStreamEndMarker.size());
  return sent;
}

ProxyStats run_proxy(const ProxyOptions& opt) {
  UdpSocket sock;
  sock.bind_port(opt.listen_port);
  sock.set_timeout(opt.recv_timeout_s);
  const sockaddr_in dst = make_addr(opt.forward_host, opt.forward_port);

  ProxyStats stats;
  SweepAssembler assembler(opt.sensor);
  Attacker attacker(opt.attack, opt.config.attacker, opt.sensor,
                    opt.sensor.rotation_rate);

  auto process_sweep = [&](const Sweep& sweep) {
    const double t0 = sweep_t0(sweep, 0.0);
    const Sweep attacked = attacker.step(sweep, t0);
    for (const Datagram& d : encode_sweep(attacked, opt.sensor, t0)) {
      const std::array<uint8_t, kDatagramSize> wire = encode_datagram(d);
      sock.send_to(dst, wire.data(), wire.size());
      ++stats.forwarded;
    }
  };

  std::vector<uint8_t> buf(65536);
  for (;;) {
    const ssize_t n = sock.recv(buf.data(), buf.size());
    if (n < 0) break;  // timeout: give up quietly
    ++stats.received;
    if (is_end_marker(buf.data(), n)) {
      if (const auto tail = assembler.flush()) process_sweep(*tail);
      sock.send_to(dst, kStreamEndMarker.data(), kStreamEndMarker.size());
      ++stats.forwarded;
      break;
    }
    bool decoded = false;
    if (n == static_cast<ssize_t>(kDatagramSize)) {
      try {
        const Datagram d = decode_datagram(buf.data(), static_cast<size_t>(n));
        if (const auto done = assembler.feed(d)) process_sweep(*done);
        decoded = true;
      } catch (const std::runtime_error&) {
        decoded = false;
      }
    }
    if (!decoded) {
      // unknown traffic: pass through untouched
      sock.send_to(dst, buf.data(), static_cast<size_t>(n));
      ++stats.forwarded;
      ++stats.malformed;
    }
  }
  stats.attacker_log = attacker.log();
  return stats;
}

ReceiverStats run_receiver(const ReceiverOptions& opt) {
  UdpSocket sock;
  sock.bind_port(opt.listen_port);
  sock.set_timeout(opt.recv_timeout_s);

  ReceiverStats stats;
  SweepAssembler assembler(opt.sensor);
  TimingEstimator timing(opt.sensor.sweep_period(), opt.config.integrity);
  std::vector<Datagram> sweep_datagrams;
  std::ostringstream csv;
  csv << "sweep,count_max,count_min,timing,dual,all\n";

  const bool to_disk = !opt.out_dir.empty();
  if (to_disk) std::filesystem::create_directories(opt.out_dir);

  auto finish_sweep = [&](const Sweep& sweep) {
    const double arrival = sweep_t0(sweep, 0.0);
    const IntegrityVerdict v = check_all(sweep, opt.sensor, timing, arrival,
                                         opt.config.integrity, &sweep_datagrams);
    csv << stats.sweeps << ',' << v.count_max << ',' << v.count_min << ',' << v.timing
        << ',' << v.dual << ',' << v.all() << '\n';
    if (to_disk) {
      char name[32];
      std::snprintf(name, sizeof(name), "sweep_%04d.lswp", stats.sweeps);
      write_sweep_file((std::filesystem::path(opt.out_dir) / name).string(), sweep);
    }
    stats.collected.push_back(sweep);
    ++stats.sweeps;
  };

  std::vector<uint8_t> buf(65536);
  for (;;) {
    const ssize_t n = sock.recv(buf.data(), buf.size());
    if (n < 0) break;
    if (is_end_marker(buf.data(), n)) {
      if (const auto tail = assembler.flush()) finish_sweep(*tail);
      break;
    }
    if (n != static_cast<ssize_t>(kDatagramSize)) {
      ++stats.malformed;
      continue;
    }
    try {
      const Datagram d = decode_datagram(buf.data(), static_cast<size_t>(n));
      ++stats.datagrams;
      const auto done = assembler.feed(d);
      sweep_datagrams.push_back(d);
      if (done) {
        // the wrapping datagram also opens the next sweep; keep it on both sides
        const Datagram carry = sweep_datagrams.back();
        finish_sweep(*done);
        sweep_datagrams.clear();
        sweep_datagrams.push_back(carry);
      }
    } catch (const std::runtime_error&) {
      ++stats.malformed;
    }
  }
  stats.integrity_csv = csv.str();
  if (to_disk) {
    std::ofstream out(std::filesystem::path(opt.out_dir) / "integrity.csv");
    out << stats.integrity_csv;
  }
  return stats;
}

std::vector<Sweep> offline_attacked_stream(const Scene& scene, AttackKind attack,
                                           const PipelineConfig& cfg) {
  // stage 1: wire-faithful clean sweeps, exactly as the proxy assembles them
  SweepAssembler clean_asm(scene.sensor);
  std::vector<Sweep> clean;
  for (int k = 0; k < scene.frames; ++k) {
    const RenderResult r = render_sweep(scene, k);
    for (const Datagram& d : encode_sweep(r.sweep, scene.sensor, scene.frame_time(k))) {
      const std::array<uint8_t, kDatagramSize> wire = encode_datagram(d);
      const Datagram back = decode_datagram(wire.data(), wire.size());
      if (auto done = clean_asm.feed(back)) clean.push_back(std::move(*done));
    }
  }
  if (auto tail = clean_asm.flush()) clean.push_back(std::move(*tail));

  // stage 2: attack and re-encode, exactly as the proxy forwards
  Attacker attacker(attack, cfg.attacker, scene.sensor, scene.sensor.rotation_rate);
  SweepAssembler recv_asm(scene.sensor);
  std::vector<Sweep> out;
  for (const Sweep& sweep : clean) {
    const double t0 = sweep_t0(sweep, 0.0);
    const Sweep attacked = attacker.step(sweep, t0);
    for (const Datagram& d : encode_sweep(attacked, scene.sensor, t0)) {
      const std::array<uint8_t, kDatagramSize> wire = encode_datagram(d);
      const Datagram back = decode_datagram(wire.data(), wire.size());
      if (auto done = recv_asm.feed(back)) out.push_back(std::move(*done));
    }
  }
  if (auto tail = recv_asm.flush()) out.push_back(std::move(*tail));
  return out;
}

}  // namespace avsec
