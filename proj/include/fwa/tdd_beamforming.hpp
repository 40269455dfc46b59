#pragma once

// TDD beamforming: initiator and responder state machines for individual,
// group and beam-measurement modes, and a driver that runs them over the
// channel model inside a training SP.
//
// Timeline of one run (all offsets carried in the TDD SSW frames):
//
//   sweep     Nt * R SSW periods; SSW j uses transmit sector j / R while
//             responder k listens on receive sector j mod Nr(k)
//   feedback  one window per (transmit sector s, responder k); the initiator
//             listens on s, responder k answers only in the window of the
//             SSW it heard best
//   ack       one window per responder
//   announce  one window per trained responder, two opaque Announce frames

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fwa/channel.hpp"
#include "fwa/domain.hpp"
#include "fwa/event_queue.hpp"
#include "fwa/frames.hpp"
#include "fwa/trace.hpp"

namespace fwa {

enum class BeamformingMode { Individual, Group, Measurement };

std::string to_string(BeamformingMode mode);
BeamformingMode beamforming_mode_from_string(const std::string& text);

struct BeamformingTiming {
  TimeUs ssw_period_us = 3;
  TimeUs feedback_slot_us = 4;
  TimeUs ack_slot_us = 4;
  TimeUs announce_slot_us = 10;
  /// Consecutive SSWs per transmit sector; 0 picks the largest responder
  /// codebook so every (transmit, receive) pair is probed.
  int repetitions = 0;

  bool operator==(const BeamformingTiming&) const = default;
};

struct TrainedLink {
  NodeId initiator_id;
  NodeId responder_id;
  int initiator_sector = 0;
  int responder_sector = 0;
  double snr_db = 0.0;

  bool operator==(const TrainedLink&) const = default;
};

struct MeasurementSample {
  int initiator_sector = 0;
  int responder_sector = 0;
  double snr_db = 0.0;
};

struct BeamMeasurementReport {
  NodeId initiator_id;
  NodeId responder_id;
  std::vector<MeasurementSample> samples;
};

/// Sector with the highest SNR; ties go to the lowest sector index.
int select_best_rx_sector(std::span<const std::pair<int, double>> measurements);

/// Absolute times of every phase of a run.
struct SweepLayout {
  TimeUs start_us = 0;
  int tx_sectors = 0;
  int repetitions = 0;
  int responders = 0;
  BeamformingMode mode = BeamformingMode::Individual;
  BeamformingTiming timing;

  int ssw_count() const { return tx_sectors * repetitions; }
  int sector_of(int ssw_index) const { return ssw_index / repetitions; }
  TimeUs ssw_time(int ssw_index) const { return start_us + ssw_index * timing.ssw_period_us; }
  TimeUs sweep_end() const { return ssw_time(ssw_count()); }
  TimeUs feedback_time(int sector, int responder) const;
  TimeUs feedback_end() const;
  TimeUs ack_time(int responder) const;
  TimeUs ack_end() const;
  TimeUs announce_time(int responder) const;
  TimeUs end() const;
};

// ---- state machine events and actions --------------------------------------

enum class TimerTag { FeedbackWindowEnd, FeedbackDue, AckWindowEnd, MeasurementEnd };

struct SlotTick {
  TimeUs now_us = 0;
  int ssw_index = 0;
};

struct FrameReceived {
  TimeUs now_us = 0;
  TimeUs frame_start_us = 0;
  TddFrame frame;
  int rx_sector = 0;
  double snr_db = 0.0;
};

struct Timeout {
  TimeUs now_us = 0;
  TimerTag tag = TimerTag::FeedbackWindowEnd;
  int a = 0;
  int b = 0;
};

using BfEvent = std::variant<SlotTick, FrameReceived, Timeout>;

struct TransmitAction {
  TimeUs at_us = 0;
  int sector = 0;
  TddFrame frame;
};

struct ListenAction {
  TimeUs from_us = 0;
  TimeUs until_us = 0;
  int sector = 0;
};

struct TimerAction {
  TimeUs at_us = 0;
  TimerTag tag = TimerTag::FeedbackWindowEnd;
  int a = 0;
  int b = 0;
};

struct LinkEstablished {
  TrainedLink link;
};

struct ReportToController {
  BeamMeasurementReport report;
};

struct DropFrame {
  std::string reason;
};

using BfAction =
    std::variant<TransmitAction, ListenAction, TimerAction, LinkEstablished, ReportToController,
                 DropFrame>;

template <class State>
struct StepResult {
  State state;
  std::vector<BfAction> actions;
};

struct FeedbackRecord {
  int initiator_sector = 0;
  int responder_sector = 0;
  double snr_db = 0.0;
};

struct InitiatorState {
  NodeId self;
  BeamformingMode mode = BeamformingMode::Individual;
  std::vector<NodeId> responders;
  SweepLayout layout;
  FrameSizes sizes;
  TimeUs window_end_us = 0;
  int next_ssw = 0;
  std::map<NodeId, FeedbackRecord> feedback;
  bool finished = false;
};

InitiatorState make_initiator(const NodeModel& initiator, BeamformingMode mode,
                              std::vector<NodeId> responders, const SweepLayout& layout,
                              TimeUs window_end_us, const FrameSizes& sizes = {});

StepResult<InitiatorState> initiator_step(InitiatorState state, const BfEvent& event);

enum class ResponderPhase { Sweeping, AwaitingAck, Locked };

struct SswObservation {
  int tx_sector = 0;
  int rx_sector = 0;
  double snr_db = 0.0;
  TimeUs frame_start_us = 0;
  TimeUs feedback_offset_us = 0;
  TimeUs ack_offset_us = 0;
};

struct ResponderState {
  NodeId self;
  NodeId initiator;
  int rx_sectors = 0;
  BeamformingTiming timing;
  FrameSizes sizes;
  ResponderPhase phase = ResponderPhase::Sweeping;
  int current_rx_sector = 0;
  std::vector<SswObservation> observations;
  std::set<TimeUs> feedback_timers;
  std::optional<TimeUs> measurement_end_us;
  std::optional<SswObservation> chosen;
  std::optional<TrainedLink> locked;
};

ResponderState make_responder(const NodeModel& responder, const NodeId& initiator,
                              const BeamformingTiming& timing, const FrameSizes& sizes = {});

StepResult<ResponderState> responder_step(ResponderState state, const BfEvent& event);

/// Best observation: highest SNR, then lowest transmit sector, then lowest
/// receive sector. Requires a non-empty span.
const SswObservation& best_observation(std::span<const SswObservation> observations);

// ---- driver ---------------------------------------------------------------

struct BeamformingRequest {
  BeamformingMode mode = BeamformingMode::Individual;
  NodeId initiator;
  std::vector<NodeId> responders;
  TimeUs window_start_us = 0;
  TimeUs window_end_us = 25600;
  BeamformingTiming timing;
};

struct BeamformingResult {
  BeamformingMode mode = BeamformingMode::Individual;
  std::vector<TrainedLink> links;
  std::vector<BeamMeasurementReport> reports;
  int ssw_transmissions = 0;
  int responder_transmissions = 0;
  TimeUs end_us = 0;
};

/// Node lookup the driver needs; nodes must stay alive for the call.
using NodeLookup = std::map<NodeId, const NodeModel*>;

/// Runs one beamforming procedure to completion. Frames decode iff their SNR
/// reaches the lowest MCS threshold. `clock` is advanced; `trace` may be null.
BeamformingResult run_beamforming(const BeamformingRequest& request, const NodeLookup& nodes,
                                  const ChannelModel& channel, const McsTable& mcs,
                                  const FrameSizes& sizes, SimClock& clock,
                                  TraceSink* trace = nullptr);

/// Convenience overload with a private clock starting at the window start.
BeamformingResult run_beamforming(const BeamformingRequest& request,
                                  std::span<const NodeModel> nodes, const ChannelModel& channel,
                                  const McsTable& mcs = McsTable::default_table(),
                                  const FrameSizes& sizes = {}, TraceSink* trace = nullptr);

}  // namespace fwa
