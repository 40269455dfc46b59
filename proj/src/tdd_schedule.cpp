#include "fwa/tdd_schedule.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "fwa/errors.hpp"

namespace fwa {

std::string to_string(SlotCategory category) {
  return category == SlotCategory::Basic ? "BASIC" : "DATA";
}

SlotCategory slot_category_from_string(const std::string& text) {
  if (text == "BASIC") return SlotCategory::Basic;
  if (text == "DATA") return SlotCategory::Data;
  throw InvalidArgument("unknown slot category '" + text + "'");
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::OverlappingSlots: return "overlapping slots";
    case ViolationKind::SlotOutsideInterval: return "slot outside interval";
    case ViolationKind::DualDirectionSlot: return "dual-direction slot";
    case ViolationKind::DanglingSlotIndex: return "dangling slot index";
    case ViolationKind::NoBasicSlot: return "no basic slot";
    case ViolationKind::AllocationMismatch: return "allocation id mismatch";
  }
  return "?";
}

void validate_extended_schedule(std::span<const ExtendedScheduleEntry> entries,
                                TimeUs beacon_interval_us) {
  std::vector<ExtendedScheduleEntry> sorted(entries.begin(), entries.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.start_time_us < b.start_time_us; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& e = sorted[i];
    if (e.duration_us <= 0) {
      throw InvalidArgument("allocation " + std::to_string(e.allocation_id) +
                            " has non-positive duration");
    }
    if (e.start_time_us < 0 || e.start_time_us + e.duration_us > beacon_interval_us) {
      throw InvalidArgument("allocation " + std::to_string(e.allocation_id) +
                            " does not fit in the beacon interval");
    }
    if (i > 0 && sorted[i - 1].start_time_us + sorted[i - 1].duration_us > e.start_time_us) {
      throw InvalidArgument("allocations " + std::to_string(sorted[i - 1].allocation_id) +
                            " and " + std::to_string(e.allocation_id) + " overlap");
    }
  }
}

TddSlotStructure default_slot_structure(int allocation_id) {
  TddSlotStructure structure;
  structure.allocation_id = allocation_id;
  structure.interval_duration_us = 1600;
  for (int i = 0; i < 24; ++i) {
    structure.slots.push_back({i * 66, 66,
                               (i == 0 || i == 12) ? SlotCategory::Basic : SlotCategory::Data});
  }
  return structure;
}

std::vector<AbsoluteSlot> expand_sp(const ExtendedScheduleEntry& entry,
                                    const TddSlotStructure& structure,
                                    const TddSlotSchedule& schedule, TimeUs bi_start_us) {
  if (!entry.is_tdd) throw InvalidArgument("allocation is not a TDD SP");
  if (entry.allocation_id != structure.allocation_id ||
      structure.allocation_id != schedule.allocation_id) {
    throw InvalidArgument("allocation id mismatch between SP, structure and schedule");
  }
  if (structure.interval_duration_us <= 0) {
    throw StructureError("interval duration must be positive");
  }
  if (entry.duration_us <= 0 || entry.duration_us % structure.interval_duration_us != 0) {
    throw StructureError("SP duration " + std::to_string(entry.duration_us) +
                         " us is not a whole number of " +
                         std::to_string(structure.interval_duration_us) + " us intervals");
  }

  // First schedule entry per slot wins; validate_schedule reports conflicts.
  std::map<int, const SlotAssignment*> by_slot;
  for (const auto& assignment : schedule.entries) by_slot.try_emplace(assignment.slot_index, &assignment);

  std::vector<std::size_t> order(structure.slots.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return structure.slots[a].start_offset_us < structure.slots[b].start_offset_us;
  });

  const auto intervals = static_cast<int>(entry.duration_us / structure.interval_duration_us);
  const TimeUs sp_start = bi_start_us + entry.start_time_us;
  std::vector<AbsoluteSlot> out;
  out.reserve(static_cast<std::size_t>(intervals) * structure.slots.size());
  for (int interval = 0; interval < intervals; ++interval) {
    const TimeUs interval_start = sp_start + interval * structure.interval_duration_us;
    for (std::size_t idx : order) {
      const SlotSpec& spec = structure.slots[idx];
      AbsoluteSlot slot;
      slot.sp_allocation_id = entry.allocation_id;
      slot.interval_index = interval;
      slot.slot_index = static_cast<int>(idx);
      slot.start_us = interval_start + spec.start_offset_us;
      slot.duration_us = spec.duration_us;
      slot.category = spec.category;
      if (auto it = by_slot.find(slot.slot_index); it != by_slot.end()) {
        slot.assignee = it->second->assignee;
        slot.direction = it->second->direction;
      }
      out.push_back(std::move(slot));
    }
  }
  return out;
}

std::vector<ScheduleViolation> validate_schedule(const TddSlotStructure& structure,
                                                 const TddSlotSchedule& schedule) {
  std::vector<ScheduleViolation> violations;
  if (structure.allocation_id != schedule.allocation_id) {
    violations.push_back({ViolationKind::AllocationMismatch, -1,
                          "structure " + std::to_string(structure.allocation_id) +
                              " vs schedule " + std::to_string(schedule.allocation_id)});
  }

  const int slot_count = static_cast<int>(structure.slots.size());
  bool has_basic = false;
  for (int i = 0; i < slot_count; ++i) {
    const SlotSpec& s = structure.slots[static_cast<std::size_t>(i)];
    has_basic = has_basic || s.category == SlotCategory::Basic;
    if (s.duration_us <= 0 || s.start_offset_us < 0 ||
        s.start_offset_us + s.duration_us > structure.interval_duration_us) {
      violations.push_back({ViolationKind::SlotOutsideInterval, i, "slot not inside interval"});
    }
    for (int j = i + 1; j < slot_count; ++j) {
      const SlotSpec& t = structure.slots[static_cast<std::size_t>(j)];
      if (s.start_offset_us < t.start_offset_us + t.duration_us &&
          t.start_offset_us < s.start_offset_us + s.duration_us) {
        violations.push_back({ViolationKind::OverlappingSlots, i,
                              "slots " + std::to_string(i) + " and " + std::to_string(j)});
      }
    }
  }
  if (!has_basic) {
    violations.push_back({ViolationKind::NoBasicSlot, -1, "structure has no BASIC slot"});
  }

  std::map<int, std::set<Direction>> directions;
  std::set<int> dangling;
  for (const auto& entry : schedule.entries) {
    if (entry.slot_index < 0 || entry.slot_index >= slot_count) {
      if (dangling.insert(entry.slot_index).second) {
        violations.push_back({ViolationKind::DanglingSlotIndex, entry.slot_index,
                              "schedule references a slot the structure lacks"});
      }
      continue;
    }
    if (entry.assignee) directions[entry.slot_index].insert(entry.direction);
  }
  for (const auto& [slot, dirs] : directions) {
    if (dirs.size() > 1) {
      violations.push_back({ViolationKind::DualDirectionSlot, slot,
                            "slot carries both downlink and uplink"});
    }
  }
  return violations;
}

const AbsoluteSlot& next_basic_tx_slot(std::span<const AbsoluteSlot> slots, const NodeId& sta,
                                       TimeUs after_us, Direction sender_direction) {
  const AbsoluteSlot* best = nullptr;
  for (const AbsoluteSlot& slot : slots) {
    if (slot.start_us <= after_us || slot.category != SlotCategory::Basic) continue;
    if (!slot.assignee || *slot.assignee != sta || slot.direction != sender_direction) continue;
    if (best == nullptr || slot.start_us < best->start_us) best = &slot;
  }
  if (best == nullptr) {
    throw NoOpportunityError("no BASIC " + to_string(sender_direction) + " slot for " +
                             sta.str() + " after t=" + std::to_string(after_us));
  }
  return *best;
}

bool is_frame_allowed_in_tdd_slot(FrameKind kind) {
  switch (kind) {
    case FrameKind::Rts:
    case FrameKind::DmgCts:
    case FrameKind::Grant:
    case FrameKind::GrantAck: return false;
    default: return true;
  }
}

bool can_access_tdd_sp(const NodeModel& sta, const ExtendedScheduleEntry& entry) {
  return sta.tdd_capable && entry.is_tdd;
}

}  // namespace fwa
