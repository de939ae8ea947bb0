#include "ubvm/link.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "ubvm/error.hpp"

namespace ubvm {

TimestampFrame::TimestampFrame(std::uint16_t session_id, std::uint8_t transducer_id,
                               std::uint8_t flags, std::uint32_t timestamp_ticks)
    : session_id_(session_id), transducer_id_(transducer_id), flags_(flags), ticks_(timestamp_ticks) {
  if (transducer_id < 1 || transducer_id > 4) {
    throw ProtocolError("transducer id " + std::to_string(transducer_id) + " outside 1..4");
  }
  if (flags & kReservedFlagMask) {
    throw ProtocolError("reserved flag bits set: " + std::to_string(flags));
  }
}

FrameBytes encode_frame(const TimestampFrame& frame) {
  const std::uint16_t s = frame.session_id();
  const std::uint32_t t = frame.timestamp_ticks();
  return {static_cast<std::uint8_t>(s & 0xFF),
          static_cast<std::uint8_t>(s >> 8),
          frame.transducer_id(),
          frame.flags(),
          static_cast<std::uint8_t>(t & 0xFF),
          static_cast<std::uint8_t>((t >> 8) & 0xFF),
          static_cast<std::uint8_t>((t >> 16) & 0xFF),
          static_cast<std::uint8_t>(t >> 24)};
}

TimestampFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kFrameSize) {
    throw FramingError("frame must be 8 bytes, got " + std::to_string(bytes.size()));
  }
  const auto session = static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
  const std::uint32_t ticks = static_cast<std::uint32_t>(bytes[4]) |
                              (static_cast<std::uint32_t>(bytes[5]) << 8) |
                              (static_cast<std::uint32_t>(bytes[6]) << 16) |
                              (static_cast<std::uint32_t>(bytes[7]) << 24);
  return TimestampFrame(session, bytes[2], bytes[3], ticks);
}

std::vector<std::uint8_t> encode_stream(std::span<const TimestampFrame> frames) {
  std::vector<std::uint8_t> out;
  out.reserve(frames.size() * kFrameSize);
  for (const auto& f : frames) {
    const FrameBytes b = encode_frame(f);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

DecodedStream decode_stream(std::span<const std::uint8_t> bytes) {
  DecodedStream out;
  const std::size_t whole = bytes.size() / kFrameSize;
  out.frames.reserve(whole);
  for (std::size_t i = 0; i < whole; ++i) {
    out.frames.push_back(decode_frame(bytes.subspan(i * kFrameSize, kFrameSize)));
  }
  out.trailing_bytes = bytes.size() % kFrameSize;
  return out;
}

void write_frames_text(std::ostream& out, std::span<const TimestampFrame> frames) {
  for (const auto& f : frames) {
    out << f.session_id() << ' ' << static_cast<int>(f.transducer_id()) << ' '
        << static_cast<int>(f.flags()) << ' ' << f.timestamp_ticks() << '\n';
  }
}

std::vector<TimestampFrame> read_frames_text(std::istream& in) {
  std::vector<TimestampFrame> frames;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    long long session = 0, id = 0, flags = 0, ticks = 0;
    std::string extra;
    if (!(row >> session >> id >> flags >> ticks) || (row >> extra)) {
      throw FramingError("malformed frame text on line " + std::to_string(lineno));
    }
    if (session < 0 || session > 0xFFFF || id < 0 || id > 0xFF || flags < 0 || flags > 0xFF ||
        ticks < 0 || ticks > 0xFFFFFFFFLL) {
      throw FramingError("frame field out of range on line " + std::to_string(lineno));
    }
    frames.emplace_back(static_cast<std::uint16_t>(session), static_cast<std::uint8_t>(id),
                        static_cast<std::uint8_t>(flags), static_cast<std::uint32_t>(ticks));
  }
  return frames;
}

void SweepSchedule::validate() const {
  if (!(pulse_period > 0.0) || !std::isfinite(pulse_period)) throw ParameterError("pulse period must be > 0");
  if (!(channel_dwell >= pulse_period) || !std::isfinite(channel_dwell)) {
    throw ParameterError("channel dwell must be >= pulse period");
  }
  auto sorted = channel_order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::array<int, 4>{1, 2, 3, 4}) {
    throw ParameterError("channel order must be a permutation of 1..4");
  }
  if (!(notification_interval > 0.0)) throw ParameterError("notification interval must be > 0");
}

int SweepSchedule::firings_per_dwell() const {
  return static_cast<int>(std::floor(channel_dwell / pulse_period + 1e-9));
}

std::vector<ScheduledFrame> run_sweep(const SweepSchedule& schedule, const SweepCaptures& captures,
                                      std::uint16_t session_id, double sweep_start_s) {
  schedule.validate();
  std::vector<ScheduledFrame> out;
  for (std::size_t slot = 0; slot < schedule.channel_order.size(); ++slot) {
    const int id = schedule.channel_order[slot];
    const ChannelCapture& cap = captures[static_cast<std::size_t>(id - 1)];
    const double t = sweep_start_s + static_cast<double>(slot) * schedule.channel_dwell;
    const std::uint8_t flags = cap.overflow ? kFlagOverflow : 0;
    std::vector<std::int64_t> ticks = cap.edges.rising_edges;
    std::sort(ticks.begin(), ticks.end());
    for (std::int64_t tick : ticks) {
      // The counter restarts at each firing, so a tick that does not fit is
      // a capture fault rather than a wrap.
      if (tick < 0 || tick > std::numeric_limits<std::uint32_t>::max()) {
        throw ParameterError("tick " + std::to_string(tick) + " does not fit the frame");
      }
      out.push_back({t, TimestampFrame(session_id, static_cast<std::uint8_t>(id), flags,
                                       static_cast<std::uint32_t>(tick))});
    }
  }
  return out;
}

std::vector<TimestampFrame> SweepBuffer::frames_for(int transducer_id) const {
  std::vector<TimestampFrame> out;
  for (const auto& f : frames) {
    if (f.transducer_id() == transducer_id) out.push_back(f);
  }
  return out;
}

SweepUpdate detect_sweep_complete(SweepBuffer buffer, const TimestampFrame& incoming) {
  SweepUpdate update;
  if (!buffer.frames.empty() && buffer.frames.back().transducer_id() == 4 &&
      incoming.transducer_id() == 1) {
    buffer.complete = true;
    update.completed = std::move(buffer);
    update.buffer.frames.push_back(incoming);
  } else {
    update.buffer = std::move(buffer);
    update.buffer.frames.push_back(incoming);
  }
  return update;
}

std::optional<SweepBuffer> SweepAssembler::push(const TimestampFrame& frame) {
  SweepUpdate u = detect_sweep_complete(std::move(pending_), frame);
  pending_ = std::move(u.buffer);
  return std::move(u.completed);
}

SweepBuffer SweepAssembler::take_pending() {
  SweepBuffer out = std::move(pending_);
  pending_ = SweepBuffer{};
  return out;
}

}  // namespace ubvm
