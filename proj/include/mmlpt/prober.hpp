#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmlpt/address.hpp"

namespace mmlpt {

enum class ProbeKind {
  indirect,  // TTL-limited, traceroute style
  direct,    // ping style, addressed to `target`
};

struct Probe {
  FlowId flow;
  int ttl = 1;
  ProbeKind kind = ProbeKind::indirect;
  std::uint64_t probe_id = 0;
  std::optional<Address> target;
};

enum class ReplyKind { none, time_exceeded, destination_unreachable, echo_reply };

inline const char* to_string(ReplyKind k) {
  switch (k) {
    case ReplyKind::none: return "none";
    case ReplyKind::time_exceeded: return "time-exceeded";
    case ReplyKind::destination_unreachable: return "destination-unreachable";
    case ReplyKind::echo_reply: return "echo-reply";
  }
  return "none";
}

inline ReplyKind reply_kind_from_string(const std::string& s) {
  if (s == "time-exceeded") return ReplyKind::time_exceeded;
  if (s == "destination-unreachable") return ReplyKind::destination_unreachable;
  if (s == "echo-reply") return ReplyKind::echo_reply;
  if (s == "none") return ReplyKind::none;
  throw std::invalid_argument("unknown reply kind: " + s);
}

/// kind == none implies no responder and no ip_id.
struct ProbeReply {
  std::optional<Address> responder;
  ReplyKind kind = ReplyKind::none;
  std::optional<std::uint16_t> ip_id;
  int reply_ttl = 0;
  std::vector<std::uint32_t> mpls_labels;
  std::uint64_t observed_at = 0;

  bool answered() const { return kind != ReplyKind::none; }
};

class SessionClosed : public std::runtime_error {
 public:
  SessionClosed() : std::runtime_error("probe session is closed") {}
};

/// Probe transport. One reply per probe, a timeout being a reply of kind
/// none. Sessions are single-owner.
class Prober {
 public:
  virtual ~Prober() = default;

  ProbeReply send(const Probe& p) {
    if (!open_) throw SessionClosed{};
    ++sent_;
    return do_send(p);
  }

  /// Replies come back in probe order. The default transport has no real
  /// concurrency, so windows of `max_in_flight` are sent back to back.
  virtual std::vector<ProbeReply> send_batch(std::span<const Probe> probes, std::size_t max_in_flight) {
    if (max_in_flight == 0) throw std::invalid_argument("max_in_flight must be positive");
    std::vector<ProbeReply> out;
    out.reserve(probes.size());
    for (std::size_t start = 0; start < probes.size(); start += max_in_flight) {
      const auto end = std::min(probes.size(), start + max_in_flight);
      for (std::size_t i = start; i < end; ++i) out.push_back(send(probes[i]));
    }
    return out;
  }

  void close() { open_ = false; }
  bool is_open() const { return open_; }
  std::uint64_t probes_sent() const { return sent_; }

 protected:
  virtual ProbeReply do_send(const Probe& p) = 0;

 private:
  bool open_ = true;
  std::uint64_t sent_ = 0;
};

struct ExchangeRecord {
  Probe probe;
  ProbeReply reply;
  int round = 0;
};

/// Forwards to another prober and keeps every probe/reply pair, tagged with
/// the current alias-resolution round.
class RecordingProber : public Prober {
 public:
  explicit RecordingProber(Prober& inner) : inner_(inner) {}

  void set_round(int round) { round_ = round; }
  const std::vector<ExchangeRecord>& log() const { return log_; }

 protected:
  ProbeReply do_send(const Probe& p) override {
    auto reply = inner_.send(p);
    log_.push_back({p, reply, round_});
    return reply;
  }

 private:
  Prober& inner_;
  int round_ = 0;
  std::vector<ExchangeRecord> log_;
};

}  // namespace mmlpt
