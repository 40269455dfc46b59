#include "fwa/tdd_beamforming.hpp"

#include <algorithm>

#include "fwa/errors.hpp"

namespace fwa {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string to_string(TimerTag tag) {
  switch (tag) {
    case TimerTag::FeedbackWindowEnd: return "feedback_window_end";
    case TimerTag::FeedbackDue: return "feedback_due";
    case TimerTag::AckWindowEnd: return "ack_window_end";
    case TimerTag::MeasurementEnd: return "measurement_end";
  }
  return "?";
}

TddFrame make_frame(FrameKind kind, const NodeId& tx, const NodeId& rx, const FrameSizes& sizes,
                    FrameBody body) {
  TddFrame frame;
  frame.kind = kind;
  frame.tx = tx;
  frame.rx = rx;
  frame.size_bits = static_cast<std::int64_t>(control_frame_bytes(sizes, kind)) * 8;
  frame.body = std::move(body);
  return frame;
}

TddFrame make_announce(const NodeId& tx, const NodeId& rx, const FrameSizes& sizes,
                       MaintenanceElement element) {
  AnnounceFrame announce;
  announce.sender = tx;
  announce.receiver = rx;
  announce.elements.push_back(std::move(element));
  return make_frame(FrameKind::Announce, tx, rx, sizes, std::move(announce));
}

int index_of(const std::vector<NodeId>& ids, const NodeId& id) {
  auto it = std::find(ids.begin(), ids.end(), id);
  return it == ids.end() ? -1 : static_cast<int>(it - ids.begin());
}

}  // namespace

std::string to_string(BeamformingMode mode) {
  switch (mode) {
    case BeamformingMode::Individual: return "INDIVIDUAL";
    case BeamformingMode::Group: return "GROUP";
    case BeamformingMode::Measurement: return "MEASUREMENT";
  }
  return "?";
}

BeamformingMode beamforming_mode_from_string(const std::string& text) {
  if (text == "INDIVIDUAL") return BeamformingMode::Individual;
  if (text == "GROUP") return BeamformingMode::Group;
  if (text == "MEASUREMENT") return BeamformingMode::Measurement;
  throw InvalidArgument("unknown beamforming mode '" + text + "'");
}

int select_best_rx_sector(std::span<const std::pair<int, double>> measurements) {
  if (measurements.empty()) throw InvalidArgument("no sector measurements");
  auto best = measurements.front();
  for (const auto& m : measurements.subspan(1)) {
    if (m.second > best.second || (m.second == best.second && m.first < best.first)) best = m;
  }
  return best.first;
}

const SswObservation& best_observation(std::span<const SswObservation> observations) {
  if (observations.empty()) throw InvalidArgument("no SSW observations");
  double best_snr = observations.front().snr_db;
  for (const auto& o : observations) best_snr = std::max(best_snr, o.snr_db);
  int best_tx = -1;
  for (const auto& o : observations) {
    if (o.snr_db == best_snr && (best_tx < 0 || o.tx_sector < best_tx)) best_tx = o.tx_sector;
  }
  std::vector<std::pair<int, double>> per_rx;
  for (const auto& o : observations) {
    if (o.tx_sector == best_tx) per_rx.emplace_back(o.rx_sector, o.snr_db);
  }
  const int best_rx = select_best_rx_sector(per_rx);
  for (const auto& o : observations) {
    if (o.tx_sector == best_tx && o.rx_sector == best_rx) return o;
  }
  throw EngineAssertion("best observation vanished");
}

TimeUs SweepLayout::feedback_time(int sector, int responder) const {
  return sweep_end() + (static_cast<TimeUs>(sector) * responders + responder) *
                           timing.feedback_slot_us;
}

TimeUs SweepLayout::feedback_end() const {
  if (mode == BeamformingMode::Measurement) return sweep_end();
  return sweep_end() + static_cast<TimeUs>(tx_sectors) * responders * timing.feedback_slot_us;
}

TimeUs SweepLayout::ack_time(int responder) const {
  return feedback_end() + responder * timing.ack_slot_us;
}

TimeUs SweepLayout::ack_end() const {
  if (mode == BeamformingMode::Measurement) return sweep_end();
  return feedback_end() + responders * timing.ack_slot_us;
}

TimeUs SweepLayout::announce_time(int responder) const {
  return ack_end() + responder * timing.announce_slot_us;
}

TimeUs SweepLayout::end() const {
  if (mode == BeamformingMode::Measurement) return sweep_end();
  return ack_end() + responders * timing.announce_slot_us;
}

// ---- initiator --------------------------------------------------------------

InitiatorState make_initiator(const NodeModel& initiator, BeamformingMode mode,
                              std::vector<NodeId> responders, const SweepLayout& layout,
                              TimeUs window_end_us, const FrameSizes& sizes) {
  InitiatorState state;
  state.self = initiator.id;
  state.mode = mode;
  state.responders = std::move(responders);
  state.layout = layout;
  state.sizes = sizes;
  state.window_end_us = window_end_us;
  return state;
}

StepResult<InitiatorState> initiator_step(InitiatorState state, const BfEvent& event) {
  std::vector<BfAction> actions;
  const SweepLayout& layout = state.layout;

  std::visit(
      overloaded{
          [&](const SlotTick& tick) {
            if (tick.now_us < layout.start_us || tick.now_us >= state.window_end_us) {
              throw ProtocolError("SSW tick at t=" + std::to_string(tick.now_us) +
                                  " outside the training SP");
            }
            if (tick.ssw_index != state.next_ssw || tick.ssw_index >= layout.ssw_count() ||
                tick.now_us != layout.ssw_time(tick.ssw_index)) {
              throw ProtocolError("unexpected SSW tick " + std::to_string(tick.ssw_index));
            }
            const int sector = layout.sector_of(tick.ssw_index);
            const int remaining = layout.ssw_count() - 1 - tick.ssw_index;
            TddSswFrame ssw;
            ssw.tx_sector_index = sector;
            if (state.mode == BeamformingMode::Measurement) {
              ssw.slot_countdown = remaining;
              ssw.end_of_training = remaining == 0;
            } else {
              for (std::size_t k = 0; k < state.responders.size(); ++k) {
                const int kk = static_cast<int>(k);
                ssw.feedback_offset_us[state.responders[k]] =
                    layout.feedback_time(sector, kk) - tick.now_us;
                ssw.ack_offset_us[state.responders[k]] = layout.ack_time(kk) - tick.now_us;
              }
            }
            actions.push_back(TransmitAction{
                tick.now_us, sector,
                make_frame(FrameKind::TddSsw, state.self, NodeId{}, state.sizes, std::move(ssw))});
            // The initiator cannot tell whether anyone heard this SSW, so it
            // always listens on the same sector in every feedback window the
            // frame advertised.
            if (state.mode != BeamformingMode::Measurement &&
                tick.ssw_index % layout.repetitions == 0) {
              for (std::size_t k = 0; k < state.responders.size(); ++k) {
                const TimeUs from = layout.feedback_time(sector, static_cast<int>(k));
                const TimeUs until = from + layout.timing.feedback_slot_us;
                actions.push_back(ListenAction{from, until, sector});
                actions.push_back(
                    TimerAction{until, TimerTag::FeedbackWindowEnd, sector, static_cast<int>(k)});
              }
            }
            ++state.next_ssw;
            if (state.mode == BeamformingMode::Measurement && remaining == 0) state.finished = true;
          },
          [&](const FrameReceived& rx) {
            if (rx.frame.kind != FrameKind::TddSswFeedback) {
              actions.push_back(DropFrame{"initiator ignores " + to_string(rx.frame.kind)});
              return;
            }
            const auto& feedback = std::get<TddSswFeedbackFrame>(rx.frame.body);
            const int k = index_of(state.responders, feedback.responder_id);
            if (k < 0 || state.feedback.contains(feedback.responder_id)) {
              actions.push_back(DropFrame{"unexpected feedback from " + feedback.responder_id.str()});
              return;
            }
            const int sector = rx.rx_sector;
            state.feedback[feedback.responder_id] =
                FeedbackRecord{sector, feedback.responder_sector_index, rx.snr_db};

            const TimeUs ack_at = layout.ack_time(k);
            const TimeUs announce_at = layout.announce_time(k);
            const TimeUs half = layout.timing.announce_slot_us / 2;
            TddSswAckFrame ack;
            ack.initiator_tx_sector = sector;
            ack.responder_feedback_sector = feedback.responder_sector_index;
            ack.measured_snr_db = rx.snr_db;
            // Each responder gets exactly one Ack per run, and it closes that
            // responder's training.
            ack.end_of_training = true;
            ack.announce_offsets_us = {announce_at - ack_at, announce_at + half - ack_at};
            actions.push_back(TransmitAction{
                ack_at, sector,
                make_frame(FrameKind::TddSswAck, state.self, feedback.responder_id, state.sizes,
                           ack)});
            HeartbeatElement config;
            config.updated_params["capabilities"] = 1.0;
            actions.push_back(TransmitAction{
                announce_at, sector,
                make_announce(state.self, feedback.responder_id, state.sizes, std::move(config))});
            actions.push_back(ListenAction{announce_at + half, announce_at + 2 * half, sector});
            if (state.feedback.size() == state.responders.size()) state.finished = true;
          },
          [&](const Timeout&) {
            // A silent feedback window needs no reaction; the sweep goes on.
          },
      },
      event);
  return {std::move(state), std::move(actions)};
}

// ---- responder --------------------------------------------------------------

ResponderState make_responder(const NodeModel& responder, const NodeId& initiator,
                              const BeamformingTiming& timing, const FrameSizes& sizes) {
  ResponderState state;
  state.self = responder.id;
  state.initiator = initiator;
  state.rx_sectors = responder.codebook.size();
  state.timing = timing;
  state.sizes = sizes;
  return state;
}

StepResult<ResponderState> responder_step(ResponderState state, const BfEvent& event) {
  std::vector<BfAction> actions;

  std::visit(
      overloaded{
          [&](const SlotTick& tick) {
            if (state.phase != ResponderPhase::Sweeping) return;
            state.current_rx_sector = tick.ssw_index % state.rx_sectors;
            actions.push_back(ListenAction{tick.now_us, tick.now_us + state.timing.ssw_period_us,
                                           state.current_rx_sector});
          },
          [&](const FrameReceived& rx) {
            if (rx.frame.tx != state.initiator) {
              actions.push_back(DropFrame{"frame from unexpected sender " + rx.frame.tx.str()});
              return;
            }
            switch (rx.frame.kind) {
              case FrameKind::TddSsw: {
                if (state.phase != ResponderPhase::Sweeping) {
                  actions.push_back(DropFrame{"SSW outside receive sweep"});
                  return;
                }
                const auto& ssw = std::get<TddSswFrame>(rx.frame.body);
                SswObservation obs;
                obs.tx_sector = ssw.tx_sector_index;
                obs.rx_sector = rx.rx_sector;
                obs.snr_db = rx.snr_db;
                obs.frame_start_us = rx.frame_start_us;
                if (ssw.slot_countdown) {
                  state.observations.push_back(obs);
                  if (!state.measurement_end_us) {
                    state.measurement_end_us =
                        rx.frame_start_us + (*ssw.slot_countdown + 1) * state.timing.ssw_period_us;
                    actions.push_back(TimerAction{*state.measurement_end_us,
                                                  TimerTag::MeasurementEnd, 0, 0});
                  }
                  return;
                }
                auto fb = ssw.feedback_offset_us.find(state.self);
                auto ack = ssw.ack_offset_us.find(state.self);
                if (fb == ssw.feedback_offset_us.end() || ack == ssw.ack_offset_us.end()) {
                  actions.push_back(DropFrame{"SSW carries no offsets for " + state.self.str()});
                  return;
                }
                obs.feedback_offset_us = fb->second;
                obs.ack_offset_us = ack->second;
                state.observations.push_back(obs);
                const TimeUs due = rx.frame_start_us + fb->second;
                if (state.feedback_timers.insert(due).second) {
                  actions.push_back(TimerAction{due, TimerTag::FeedbackDue, 0, 0});
                }
                return;
              }
              case FrameKind::TddSswAck: {
                if (state.phase != ResponderPhase::AwaitingAck || !state.chosen) {
                  actions.push_back(DropFrame{"unsolicited SSW Ack"});
                  return;
                }
                const auto& ack = std::get<TddSswAckFrame>(rx.frame.body);
                if (!ack.end_of_training) return;
                state.phase = ResponderPhase::Locked;
                const int sector = state.chosen->rx_sector;
                state.locked = TrainedLink{state.initiator, state.self, ack.initiator_tx_sector,
                                           sector, ack.measured_snr_db};
                actions.push_back(LinkEstablished{*state.locked});
                const TimeUs listen_at = rx.frame_start_us + ack.announce_offsets_us.first;
                const TimeUs reply_at = rx.frame_start_us + ack.announce_offsets_us.second;
                actions.push_back(ListenAction{listen_at, reply_at, sector});
                actions.push_back(TransmitAction{
                    reply_at, sector,
                    make_announce(state.self, state.initiator, state.sizes,
                                  TddSynchronizationElement{SyncQuality::GlobalSync, 0.0})});
                return;
              }
              case FrameKind::Announce: return;
              default:
                actions.push_back(DropFrame{"responder ignores " + to_string(rx.frame.kind)});
                return;
            }
          },
          [&](const Timeout& timeout) {
            switch (timeout.tag) {
              case TimerTag::FeedbackDue: {
                if (state.phase != ResponderPhase::Sweeping || state.observations.empty()) return;
                const SswObservation& best = best_observation(state.observations);
                if (best.frame_start_us + best.feedback_offset_us != timeout.now_us) return;
                state.chosen = best;
                state.phase = ResponderPhase::AwaitingAck;
                TddSswFeedbackFrame feedback{state.self, best.rx_sector, best.tx_sector};
                actions.push_back(TransmitAction{
                    timeout.now_us, best.rx_sector,
                    make_frame(FrameKind::TddSswFeedback, state.self, state.initiator, state.sizes,
                               feedback)});
                const TimeUs ack_at = best.frame_start_us + best.ack_offset_us;
                const TimeUs until = ack_at + state.timing.ack_slot_us;
                actions.push_back(ListenAction{ack_at, until, best.rx_sector});
                actions.push_back(TimerAction{until, TimerTag::AckWindowEnd, 0, 0});
                return;
              }
              case TimerTag::AckWindowEnd:
                if (state.phase == ResponderPhase::AwaitingAck) {
                  // No retry inside a run: wait for the next training SP.
                  state.phase = ResponderPhase::Sweeping;
                  state.observations.clear();
                  state.feedback_timers.clear();
                  state.chosen.reset();
                }
                return;
              case TimerTag::MeasurementEnd: {
                BeamMeasurementReport report;
                report.initiator_id = state.initiator;
                report.responder_id = state.self;
                for (const auto& o : state.observations) {
                  report.samples.push_back({o.tx_sector, o.rx_sector, o.snr_db});
                }
                actions.push_back(ReportToController{std::move(report)});
                return;
              }
              case TimerTag::FeedbackWindowEnd: return;
            }
          },
      },
      event);
  return {std::move(state), std::move(actions)};
}

// ---- driver -----------------------------------------------------------------

namespace {

struct TickEv {
  int ssw_index = 0;
};
struct TxEv {
  NodeId node;
  int sector = 0;
  TddFrame frame;
};
struct RxEv {
  NodeId node;
  TddFrame frame;
  TimeUs frame_start_us = 0;
  int rx_sector = 0;
  double snr_db = 0.0;
  bool decoded = false;
};
struct TimerEv {
  NodeId node;
  TimerAction timer;
};
struct NoticeEv {
  NodeId node;
  std::string what;
  nlohmann::ordered_json detail;
};
using DriverEvent = std::variant<TickEv, TxEv, RxEv, TimerEv, NoticeEv>;

nlohmann::ordered_json link_json(const TrainedLink& link) {
  return {{"initiator", link.initiator_id.str()},
          {"responder", link.responder_id.str()},
          {"initiator_sector", link.initiator_sector},
          {"responder_sector", link.responder_sector},
          {"snr_db", link.snr_db}};
}

class Driver {
 public:
  Driver(const BeamformingRequest& request, const NodeLookup& nodes, const ChannelModel& channel,
         const McsTable& mcs, const FrameSizes& sizes, SimClock& clock, TraceSink* trace)
      : request_(request),
        nodes_(nodes),
        channel_(channel),
        sizes_(sizes),
        queue_(clock),
        trace_(trace),
        threshold_db_(mcs.lowest().min_snr_db),
        min_rate_bps_(mcs.lowest().phy_rate_bps) {}

  BeamformingResult run() {
    const NodeModel& initiator = node(request_.initiator);
    check_preconditions(initiator);

    int max_rx = 1;
    for (const auto& id : request_.responders) max_rx = std::max(max_rx, node(id).codebook.size());
    SweepLayout layout;
    layout.start_us = request_.window_start_us;
    layout.tx_sectors = initiator.codebook.size();
    layout.repetitions = request_.timing.repetitions > 0 ? request_.timing.repetitions : max_rx;
    layout.responders = static_cast<int>(request_.responders.size());
    layout.mode = request_.mode;
    layout.timing = request_.timing;
    check_timing(layout);

    if (queue_.now() > layout.start_us) {
      throw ProtocolError("training SP starts in the past");
    }
    if (layout.end() > request_.window_end_us) {
      throw ProtocolError("beamforming needs " + std::to_string(layout.end() - layout.start_us) +
                          " us but the training SP is " +
                          std::to_string(request_.window_end_us - request_.window_start_us) +
                          " us");
    }

    initiator_ = make_initiator(initiator, request_.mode, request_.responders, layout,
                                request_.window_end_us, sizes_);
    for (const auto& id : request_.responders) {
      responders_.emplace(id, make_responder(node(id), request_.initiator, request_.timing, sizes_));
    }
    result_.mode = request_.mode;

    for (int j = 0; j < layout.ssw_count(); ++j) queue_.schedule(layout.ssw_time(j), TickEv{j});
    while (!queue_.empty()) dispatch(queue_.pop());
    result_.end_us = std::max(queue_.now(), layout.end());
    return std::move(result_);
  }

 private:
  const NodeModel& node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end() || it->second == nullptr) {
      throw InvalidArgument("unknown node '" + id.str() + "'");
    }
    return *it->second;
  }

  void check_preconditions(const NodeModel& initiator) const {
    const auto count = request_.responders.size();
    if (request_.mode == BeamformingMode::Individual && count != 1) {
      throw InvalidArgument("individual beamforming needs exactly one responder");
    }
    if (count == 0) throw InvalidArgument("beamforming needs at least one responder");
    if (!initiator.tdd_capable) {
      throw InvalidArgument("initiator " + initiator.id.str() + " is not TDD capable");
    }
    std::set<NodeId> seen;
    for (const auto& id : request_.responders) {
      if (id == request_.initiator || !seen.insert(id).second) {
        throw InvalidArgument("responder list repeats a node");
      }
      if (!node(id).tdd_capable) {
        throw InvalidArgument("responder " + id.str() + " is not TDD capable");
      }
    }
  }

  void check_timing(const SweepLayout& layout) const {
    TimeUs max_prop = 0;
    const NodeModel& init = node(request_.initiator);
    for (const auto& id : request_.responders) {
      max_prop = std::max(max_prop,
                          propagation_delay_us(distance_m(init.position, node(id).position)));
    }
    const TimeUs ssw = airtime_us(sizes_.ssw_bytes * 8LL, min_rate_bps_);
    const TimeUs announce = airtime_us(sizes_.announce_bytes * 8LL, min_rate_bps_);
    const auto& t = layout.timing;
    if (t.ssw_period_us < ssw + max_prop || t.feedback_slot_us < ssw + max_prop ||
        t.ack_slot_us < ssw + max_prop ||
        (layout.mode != BeamformingMode::Measurement && t.announce_slot_us / 2 < announce + max_prop)) {
      throw InvalidArgument("beamforming slot timing too short for frame airtime plus "
                            "propagation delay");
    }
  }

  void trace(const std::string& kind, const NodeId& node, nlohmann::ordered_json slot,
             nlohmann::ordered_json frame, const std::string& outcome, std::uint64_t seq) {
    if (trace_ != nullptr) {
      trace_->emit(queue_.now(), seq, kind, node.str(), std::move(slot), std::move(frame), outcome);
    }
  }

  void dispatch(SimEvent<DriverEvent> ev) {
    const TimeUs now = ev.time_us;
    std::visit(
        overloaded{
            [&](TickEv& tick) {
              trace("slot_boundary", request_.initiator,
                    {{"phase", "bf_sweep"}, {"ssw_index", tick.ssw_index}}, nullptr, "", ev.seq);
              step_initiator(SlotTick{now, tick.ssw_index});
              for (const auto& id : request_.responders) step_responder(id, SlotTick{now, tick.ssw_index});
            },
            [&](TxEv& tx) { on_transmit(tx, ev.seq); },
            [&](RxEv& rx) {
              auto frame = to_json(rx.frame);
              frame["rx_sector"] = rx.rx_sector;
              frame["snr_db"] = rx.snr_db;
              const bool addressed = rx.frame.rx.empty() || rx.frame.rx == rx.node;
              trace("frame_rx_complete", rx.node, nullptr, std::move(frame),
                    !rx.decoded ? "below_threshold" : (addressed ? "decoded" : "not_addressed"),
                    ev.seq);
              if (!rx.decoded || !addressed) return;
              FrameReceived received{now, rx.frame_start_us, std::move(rx.frame), rx.rx_sector,
                                     rx.snr_db};
              if (rx.node == request_.initiator) {
                step_initiator(received);
              } else {
                step_responder(rx.node, received);
              }
            },
            [&](TimerEv& timer) {
              trace("timer", timer.node, nullptr, nullptr, to_string(timer.timer.tag), ev.seq);
              Timeout timeout{now, timer.timer.tag, timer.timer.a, timer.timer.b};
              if (timer.node == request_.initiator) {
                step_initiator(timeout);
              } else {
                step_responder(timer.node, timeout);
              }
            },
            [&](NoticeEv& notice) {
              trace("timer", notice.node, nullptr, std::move(notice.detail), notice.what, ev.seq);
            },
        },
        ev.payload);
  }

  void on_transmit(const TxEv& tx, std::uint64_t seq) {
    const TimeUs now = queue_.now();
    const NodeModel& sender = node(tx.node);
    auto frame_json = to_json(tx.frame);
    frame_json["tx_sector"] = tx.sector;
    trace("frame_tx_start", tx.node, nullptr, std::move(frame_json), "sent", seq);
    if (tx.frame.kind == FrameKind::TddSsw) ++result_.ssw_transmissions;
    if (tx.node != request_.initiator) ++result_.responder_transmissions;

    const TimeUs air = airtime_us(tx.frame.size_bits, min_rate_bps_);
    std::vector<NodeId> listeners = request_.responders;
    listeners.push_back(request_.initiator);
    for (const auto& id : listeners) {
      if (id == tx.node) continue;
      const NodeModel& receiver = node(id);
      const TimeUs arrive = now + propagation_delay_us(distance_m(sender.position, receiver.position));
      const ListenAction* window = find_window(id, arrive, arrive + air);
      if (window == nullptr) continue;
      const double snr = channel_.sample(sender, tx.sector, receiver, window->sector).snr_db;
      queue_.schedule(arrive + air, RxEv{id, tx.frame, now, window->sector, snr, snr >= threshold_db_});
    }
  }

  const ListenAction* find_window(const NodeId& id, TimeUs from, TimeUs until) const {
    auto it = listen_.find(id);
    if (it == listen_.end()) return nullptr;
    for (const auto& w : it->second) {
      if (w.from_us <= from && until <= w.until_us) return &w;
    }
    return nullptr;
  }

  void step_initiator(const BfEvent& event) {
    auto result = initiator_step(std::move(initiator_), event);
    initiator_ = std::move(result.state);
    apply(request_.initiator, result.actions);
  }

  void step_responder(const NodeId& id, const BfEvent& event) {
    auto& state = responders_.at(id);
    auto result = responder_step(std::move(state), event);
    state = std::move(result.state);
    apply(id, result.actions);
  }

  void apply(const NodeId& id, std::vector<BfAction>& actions) {
    for (auto& action : actions) {
      std::visit(overloaded{
                     [&](TransmitAction& a) {
                       queue_.schedule(a.at_us, TxEv{id, a.sector, std::move(a.frame)});
                     },
                     [&](ListenAction& a) {
                       auto& windows = listen_[id];
                       // Drop windows that have fully elapsed.
                       std::erase_if(windows, [&](const ListenAction& w) {
                         return w.until_us < queue_.now();
                       });
                       windows.push_back(a);
                     },
                     [&](TimerAction& a) { queue_.schedule(a.at_us, TimerEv{id, a}); },
                     [&](LinkEstablished& a) {
                       result_.links.push_back(a.link);
                       queue_.schedule(queue_.now(),
                                       NoticeEv{id, "link_established", link_json(a.link)});
                     },
                     [&](ReportToController& a) {
                       nlohmann::ordered_json detail{{"initiator", a.report.initiator_id.str()},
                                                     {"samples", a.report.samples.size()}};
                       result_.reports.push_back(std::move(a.report));
                       queue_.schedule(queue_.now(),
                                       NoticeEv{id, "measurement_report", std::move(detail)});
                     },
                     [&](DropFrame& a) {
                       queue_.schedule(queue_.now(),
                                       NoticeEv{id, "dropped", {{"reason", a.reason}}});
                     },
                 },
                 action);
    }
  }

  const BeamformingRequest& request_;
  const NodeLookup& nodes_;
  const ChannelModel& channel_;
  FrameSizes sizes_;
  EventQueue<DriverEvent> queue_;
  TraceSink* trace_;
  double threshold_db_;
  double min_rate_bps_;
  InitiatorState initiator_;
  std::map<NodeId, ResponderState> responders_;
  std::map<NodeId, std::vector<ListenAction>> listen_;
  BeamformingResult result_;
};

}  // namespace

BeamformingResult run_beamforming(const BeamformingRequest& request, const NodeLookup& nodes,
                                  const ChannelModel& channel, const McsTable& mcs,
                                  const FrameSizes& sizes, SimClock& clock, TraceSink* trace) {
  Driver driver(request, nodes, channel, mcs, sizes, clock, trace);
  return driver.run();
}

BeamformingResult run_beamforming(const BeamformingRequest& request,
                                  std::span<const NodeModel> nodes, const ChannelModel& channel,
                                  const McsTable& mcs, const FrameSizes& sizes, TraceSink* trace) {
  NodeLookup lookup;
  for (const auto& n : nodes) lookup[n.id] = &n;
  SimClock clock{request.window_start_us, 0};
  return run_beamforming(request, lookup, channel, mcs, sizes, clock, trace);
}

}  // namespace fwa
