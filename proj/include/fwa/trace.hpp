#pragma once

// JSON-lines trace: one record per processed event,
// {t, seq, kind, node, slot, frame, outcome}.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fwa/frames.hpp"
#include "fwa/tdd_schedule.hpp"

namespace fwa {

class TraceSink {
 public:
  TraceSink() = default;
  /// Writes each record as one line to `out` (which must outlive the sink).
  explicit TraceSink(std::ostream& out) : out_(&out) {}

  /// Also retain records in memory for inspection.
  void keep_records(bool keep) { keep_ = keep; }
  const std::vector<nlohmann::ordered_json>& records() const { return records_; }

  void emit(TimeUs t, std::uint64_t seq, const std::string& kind, const std::string& node,
            nlohmann::ordered_json slot, nlohmann::ordered_json frame, const std::string& outcome);

  std::size_t count() const { return count_; }

 private:
  std::ostream* out_ = nullptr;
  bool keep_ = false;
  std::size_t count_ = 0;
  std::vector<nlohmann::ordered_json> records_;
};

nlohmann::ordered_json to_json(const TddFrame& frame);
nlohmann::ordered_json to_json(const AbsoluteSlot& slot);

}  // namespace fwa
