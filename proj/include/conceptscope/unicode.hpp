#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace conceptscope {

/// Byte offset of the first ill-formed UTF-8 sequence, if any.
std::optional<std::size_t> find_invalid_utf8(std::string_view text) noexcept;

/// NFKC normalization followed by full Unicode lowercasing. ASCII input takes
/// a fast path. Input must be valid UTF-8.
std::string fold_text(std::string_view text);

/// Canonical key for concept names across every table and index: folded,
/// trimmed, internal whitespace runs collapsed to one space.
std::string normalize_concept_name(std::string_view name);

}  // namespace conceptscope
