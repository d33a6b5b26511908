#pragma once

#include <cstdint>
#include <vector>

#include "feedbias/context.hpp"

namespace feedbias {

/// One logged impression of an interventional feed session.
struct ImpressionRecord {
  std::uint64_t session_id = 0;
  ContextVector context = ContextVector::constant();
  std::uint64_t item_id = 0;
  std::int64_t rank = 1;  // 1-based, after intervention
  bool viewed = false;
  bool clicked = false;  // implies viewed

  friend bool operator==(const ImpressionRecord&, const ImpressionRecord&) = default;
};

using Dataset = std::vector<ImpressionRecord>;

}  // namespace feedbias
