#pragma once
// Segment selector: 16 bits = index(13) | table-indicator(1) | rpl(2).

#include <cstdint>

namespace gatesim {

struct Selector {
  uint16_t raw = 0;

  constexpr Selector() = default;
  constexpr explicit Selector(uint16_t r) : raw(r) {}
  static constexpr Selector make(uint16_t index, bool ldt, uint8_t rpl) {
    return Selector(static_cast<uint16_t>((index << 3) | (ldt ? 0x4 : 0) |
                                          (rpl & 0x3)));
  }

  constexpr uint16_t index() const { return raw >> 3; }
  constexpr bool uses_ldt() const { return (raw >> 2) & 1; }
  constexpr uint8_t rpl() const { return raw & 0x3; }
  // Null selectors (index 0, TI 0) can't be used for data/code access.
  constexpr bool is_null() const { return (raw & ~0x3u) == 0; }
  // Byte offset of the descriptor inside its table.
  constexpr uint32_t table_offset() const { return (raw & ~0x7u); }

  constexpr bool operator==(const Selector&) const = default;
};

}  // namespace gatesim
