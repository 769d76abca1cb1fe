#include "gaze_attn/sentence_id.hpp"

#include <charconv>

#include "gaze_attn/error.hpp"

namespace gaze_attn {

SentenceId SentenceId::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw DataError("malformed sentence_id '" + std::string(text) + "' (expected <article>:<index>)");
  }
  SentenceId id;
  id.article = std::string(text.substr(0, colon));
  const auto digits = text.substr(colon + 1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id.index);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw DataError("malformed sentence_id '" + std::string(text) + "' (index is not a non-negative integer)");
  }
  return id;
}

std::string SentenceId::str() const { return article + ":" + std::to_string(index); }

}  // namespace gaze_attn
