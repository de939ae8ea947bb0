#pragma once

// Sweep scheduling and the timestamp wire protocol.
//
// Frame layout, 8 bytes, little-endian:
//
//   offset 0  u16  session_id
//   offset 2  u8   transducer_id   1..4
//   offset 3  u8   flags           bit0 capture overflow, bits 1-7 zero
//   offset 4  u32  timestamp_ticks
//
// A binary stream is plain concatenated frames with no header or padding.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ubvm/afe.hpp"

namespace ubvm {

constexpr std::size_t kFrameSize = 8;
constexpr std::uint8_t kFlagOverflow = 0x01;
constexpr std::uint8_t kReservedFlagMask = 0xFE;

class TimestampFrame {
 public:
  TimestampFrame() = default;
  // Throws ProtocolError if transducer_id is outside 1..4 or reserved flag
  // bits are set.
  TimestampFrame(std::uint16_t session_id, std::uint8_t transducer_id, std::uint8_t flags,
                 std::uint32_t timestamp_ticks);

  std::uint16_t session_id() const noexcept { return session_id_; }
  std::uint8_t transducer_id() const noexcept { return transducer_id_; }
  std::uint8_t flags() const noexcept { return flags_; }
  std::uint32_t timestamp_ticks() const noexcept { return ticks_; }
  bool overflow() const noexcept { return (flags_ & kFlagOverflow) != 0; }

  friend bool operator==(const TimestampFrame&, const TimestampFrame&) = default;

 private:
  std::uint16_t session_id_ = 0;
  std::uint8_t transducer_id_ = 1;
  std::uint8_t flags_ = 0;
  std::uint32_t ticks_ = 0;
};

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

FrameBytes encode_frame(const TimestampFrame& frame);

// Throws FramingError unless bytes.size() == 8, ProtocolError on an invalid
// transducer id or reserved flag bits.
TimestampFrame decode_frame(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_stream(std::span<const TimestampFrame> frames);

struct DecodedStream {
  std::vector<TimestampFrame> frames;
  std::size_t trailing_bytes = 0;  // incomplete frame at the end of the input
};
// Stops at the first partial frame; malformed complete frames throw as in
// decode_frame.
DecodedStream decode_stream(std::span<const std::uint8_t> bytes);

// Debug text form: "session transducer flags ticks" per line, decimal.
void write_frames_text(std::ostream& out, std::span<const TimestampFrame> frames);
std::vector<TimestampFrame> read_frames_text(std::istream& in);

struct SweepSchedule {
  double pulse_period = 2.5;            // s between firings
  double channel_dwell = 10.0;          // s per channel
  std::array<int, 4> channel_order{1, 2, 3, 4};
  double notification_interval = 25.0;  // ms between BLE notifications

  void validate() const;
  double sweep_duration() const { return channel_dwell * static_cast<double>(channel_order.size()); }
  int firings_per_dwell() const;
};

struct ScheduledFrame {
  double time_s;  // nominal simulated time of the firing that produced it
  TimestampFrame frame;
};

// Per-transducer captures indexed by id - 1.
using SweepCaptures = std::array<ChannelCapture, 4>;

// One sweep of frames in channel order; each channel contributes its edges
// in tick order, all stamped with the time of that channel's first firing.
// An overflowed capture marks every frame of that firing.
std::vector<ScheduledFrame> run_sweep(const SweepSchedule& schedule, const SweepCaptures& captures,
                                      std::uint16_t session_id, double sweep_start_s = 0.0);

struct SweepBuffer {
  std::vector<TimestampFrame> frames;
  bool complete = false;

  // Frames of one transducer in arrival order.
  std::vector<TimestampFrame> frames_for(int transducer_id) const;
};

struct SweepUpdate {
  SweepBuffer buffer;                  // frames still being collected
  std::optional<SweepBuffer> completed;  // set when this frame closed a sweep
};

// A sweep closes when a transducer-1 frame follows a transducer-4 frame.
// The completed sweep holds everything before the incoming frame, which
// starts the next buffer.
SweepUpdate detect_sweep_complete(SweepBuffer buffer, const TimestampFrame& incoming);

// Streaming form of detect_sweep_complete for a single consumer.
class SweepAssembler {
 public:
  std::optional<SweepBuffer> push(const TimestampFrame& frame);
  const SweepBuffer& pending() const noexcept { return pending_; }
  // Hands back whatever is buffered, leaving the assembler empty.
  SweepBuffer take_pending();

 private:
  SweepBuffer pending_;
};

}  // namespace ubvm
