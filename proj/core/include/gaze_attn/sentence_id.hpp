#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace gaze_attn {

/// Corpus-wide join key `<article>:<index>` with a zero-based index.
///
/// Ordering is (article, index) with a numeric index, so `mars:10` sorts
/// after `mars:2`. Every concatenation across sentences uses this order.
struct SentenceId {
  std::string article;
  std::uint32_t index = 0;

  static SentenceId parse(std::string_view text);
  std::string str() const;

  auto operator<=>(const SentenceId&) const = default;
  bool operator==(const SentenceId&) const = default;
};

}  // namespace gaze_attn
