#pragma once

// Receive chain: op-amp gain, RC low-pass, hysteresis comparator and timer
// input capture.

#include <cstdint>
#include <vector>

#include "ubvm/acoustics.hpp"
#include "ubvm/error.hpp"

namespace ubvm {

struct ReceiverConfig {
  double gain = 10.0;
  double lpf_cutoff = 5.88;        // MHz, single pole
  double v_supply = 5.0;           // V
  double bias = 2.5;               // V, divider midpoint the echo rides on
  double threshold_rise = 2.857;   // V
  double threshold_fall = 2.143;   // V
  double tick_rate = 64.0;         // MHz timer clock
  std::size_t capture_depth = 64;  // DMA buffer, edges per firing

  void validate() const;
};

// The Schmitt levels produced by a supply divider of two equal resistors
// fed back from the comparator output through r_feedback.
struct SchmittLevels {
  double rise;
  double fall;
};
SchmittLevels schmitt_levels(double v_supply, double r_divider, double r_feedback);

struct EdgeTimestamps {
  std::vector<std::int64_t> rising_edges;  // timer ticks, strictly increasing
  double tick_rate = 64.0;                 // MHz
};

struct BinaryWaveform {
  double sample_rate = 40.0;  // MHz
  double start_time = 0.0;    // us
  std::vector<std::uint8_t> level;  // 0 or 1

  double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate; }
};

class CaptureOverflowError : public Error {
 public:
  CaptureOverflowError(const std::string& what, EdgeTimestamps captured)
      : Error(ErrorKind::capture_overflow, what), captured_(std::move(captured)) {}

  // The edges that fit in the buffer before it filled.
  const EdgeTimestamps& captured() const noexcept { return captured_; }

 private:
  EdgeTimestamps captured_;
};

// Single-pole low-pass with a prewarped bilinear transform so the -3 dB
// point lands exactly on lpf_cutoff, applied to gain * input. Filter state
// starts at rest.
EchoTrace amplify_and_filter(const EchoTrace& trace, const ReceiverConfig& cfg);

// Adds the comparator bias level to every sample.
EchoTrace add_bias(const EchoTrace& trace, double bias);

// Schmitt trigger: goes high when the input reaches threshold_rise, low when
// it drops to threshold_fall. Starts low.
BinaryWaveform comparator(const EchoTrace& trace, const ReceiverConfig& cfg);

// Counter value floor(t * tick_rate) at every low-to-high transition.
// Edges that land on the same tick collapse into one. Throws
// CaptureOverflowError, carrying the first capture_depth edges, when there
// are more edges than the buffer holds.
EdgeTimestamps capture_timestamps(const BinaryWaveform& wave, double tick_rate,
                                  std::size_t capture_depth);

struct ChannelCapture {
  EdgeTimestamps edges;
  bool overflow = false;
};

// Whole chain for one firing. Overflow is reported in the result instead of
// thrown; the truncated edge list is kept.
ChannelCapture receive(const EchoTrace& trace, const ReceiverConfig& cfg);

}  // namespace ubvm
