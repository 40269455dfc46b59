#pragma once

// TDD service-period scheduling: SP allocation, slot structure expansion,
// access assignment, delayed-ack slot lookup and frame admissibility.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fwa/domain.hpp"
#include "fwa/frames.hpp"

namespace fwa {

/// One allocation in the Extended Schedule element, relative to the start of
/// the beacon interval.
struct ExtendedScheduleEntry {
  int allocation_id = 0;
  TimeUs start_time_us = 0;
  TimeUs duration_us = 0;
  bool is_tdd = true;

  bool operator==(const ExtendedScheduleEntry&) const = default;
};

/// Throws InvalidArgument on non-positive durations or overlapping entries.
void validate_extended_schedule(std::span<const ExtendedScheduleEntry> entries,
                                TimeUs beacon_interval_us);

enum class SlotCategory { Basic, Data };

std::string to_string(SlotCategory category);
SlotCategory slot_category_from_string(const std::string& text);

struct SlotSpec {
  TimeUs start_offset_us = 0;
  TimeUs duration_us = 0;
  SlotCategory category = SlotCategory::Data;

  bool operator==(const SlotSpec&) const = default;
};

struct TddSlotStructure {
  int allocation_id = 0;
  TimeUs interval_duration_us = 0;
  std::vector<SlotSpec> slots;

  bool operator==(const TddSlotStructure&) const = default;
};

/// 24 slots of 66 us in a 1.6 ms interval (16 us trailing guard); slots 0
/// and 12 are Basic.
TddSlotStructure default_slot_structure(int allocation_id = 1);

struct SlotAssignment {
  int slot_index = 0;
  std::optional<NodeId> assignee;  // nullopt = unassigned
  Direction direction = Direction::Downlink;

  bool operator==(const SlotAssignment&) const = default;
};

struct TddSlotSchedule {
  int allocation_id = 0;
  std::vector<SlotAssignment> entries;

  bool operator==(const TddSlotSchedule&) const = default;
};

struct AbsoluteSlot {
  int sp_allocation_id = 0;
  int interval_index = 0;
  int slot_index = 0;
  TimeUs start_us = 0;
  TimeUs duration_us = 0;
  SlotCategory category = SlotCategory::Data;
  std::optional<NodeId> assignee;
  Direction direction = Direction::Downlink;

  TimeUs end_us() const { return start_us + duration_us; }
  bool operator==(const AbsoluteSlot&) const = default;
};

/// Lays the slot structure over every interval of a TDD SP. `bi_start_us` is
/// the absolute start of the beacon interval the entry belongs to.
std::vector<AbsoluteSlot> expand_sp(const ExtendedScheduleEntry& entry,
                                    const TddSlotStructure& structure,
                                    const TddSlotSchedule& schedule, TimeUs bi_start_us = 0);

enum class ViolationKind {
  OverlappingSlots,
  SlotOutsideInterval,
  DualDirectionSlot,
  DanglingSlotIndex,
  NoBasicSlot,
  AllocationMismatch,
};

std::string to_string(ViolationKind kind);

struct ScheduleViolation {
  ViolationKind kind;
  int slot_index = -1;
  std::string detail;
};

/// Every rule the structure/schedule pair breaks; empty means well formed.
std::vector<ScheduleViolation> validate_schedule(const TddSlotStructure& structure,
                                                 const TddSlotSchedule& schedule);

/// Earliest Basic slot starting strictly after `after_us` in which `sta`
/// transmits. With `sender_direction == Downlink` the lookup is for the AP
/// sending towards `sta`. Throws NoOpportunityError if the list has none.
const AbsoluteSlot& next_basic_tx_slot(std::span<const AbsoluteSlot> slots, const NodeId& sta,
                                       TimeUs after_us,
                                       Direction sender_direction = Direction::Uplink);

/// RTS/DMG CTS and Grant/Grant Ack solicit immediate responses and are
/// therefore barred from TDD slots.
bool is_frame_allowed_in_tdd_slot(FrameKind kind);

bool can_access_tdd_sp(const NodeModel& sta, const ExtendedScheduleEntry& entry);

}  // namespace fwa
