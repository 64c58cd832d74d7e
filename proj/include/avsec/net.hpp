#pragma once

#include <string>
#include <vector>

#include "avsec/attacker.hpp"
#include "avsec/config.hpp"
#include "avsec/scene.hpp"

namespace avsec {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stream framing: every lidar packet is one wire datagram; the stream ends
// with an 8-byte end marker so receivers can flush their partial sweep.
extern const std::array<uint8_t, 8> kStreamEndMarker;

struct SenderOptions {
  std::string host = "127.0.0.1";
  int port = 0;
  bool realtime = false;   // sleep one datagram interval between packets
  double pacing_us = 0.0;  // fixed inter-packet gap when not realtime
};

// Renders the scene, reverse-engineers each sweep to datagrams, transmits in
// azimuth order, then sends the end marker. Returns lidar packets sent.
int run_sender(const Scene& scene, const SenderOptions& opt);

struct ProxyOptions {
  int listen_port = 0;
  std::string forward_host = "127.0.0.1";
  int forward_port = 0;
  SensorModel sensor;
  AttackKind attack = AttackKind::kNone;
  PipelineConfig config;
  double recv_timeout_s = 10.0;
};

struct ProxyStats {
  int received = 0;
  int forwarded = 0;
  int malformed = 0;  // passed through unmodified
  std::vector<AttackerLogRow> attacker_log;
};

// Man-in-the-middle: buffers datagrams into sweeps, applies the attack at
// sweep granularity (one sweep of latency), re-encodes and forwards.
// Returns after forwarding the end marker or on receive timeout.
ProxyStats run_proxy(const ProxyOptions& opt);

struct ReceiverOptions {
  int listen_port = 0;
  SensorModel sensor;
  PipelineConfig config;
  std::string out_dir;  // empty: keep sweeps in memory only
  double recv_timeout_s = 10.0;
};

struct ReceiverStats {
  int datagrams = 0;
  int malformed = 0;
  int sweeps = 0;
  std::string integrity_csv;
  std::vector<Sweep> collected;
};

// Assembles sweeps, runs the integrity battery per sweep, writes sweep files
// and integrity.csv when out_dir is set. Returns on the end marker or on
// receive timeout.
ReceiverStats run_receiver(const ReceiverOptions& opt);

// Receiver-view reference for the offline/online equivalence property: the
// scene rendered, wire-encoded, assembled, attacked, re-encoded, and
// assembled again, entirely in process. A proxy/receiver pair over loopback
// must reproduce these sweeps bit-for-bit.
std::vector<Sweep> offline_attacked_stream(const Scene& scene, AttackKind attack,
                                           const PipelineConfig& cfg);

}  // namespace avsec
