#pragma once
// Segment and gate descriptors with byte-exact encode/decode.
//
// Layouts follow the architectural formats: code/data and legacy system
// descriptors are 8 bytes; 64-bit system descriptors (TSS, LDT, gates)
// occupy two consecutive slots (16 bytes) with the offset/base extension in
// the second slot.

#include <array>
#include <cstdint>
#include <cstring>

#include "gatesim/selector.hpp"

namespace gatesim {

enum class DescriptorMode { Legacy32, Long64 };

// System-descriptor type nibbles (S=0).
inline constexpr uint8_t kTypeLdt = 0x2;
inline constexpr uint8_t kTypeCallGate16 = 0x4;
inline constexpr uint8_t kTypeTaskGate = 0x5;
inline constexpr uint8_t kTypeTssAvail = 0x9;
inline constexpr uint8_t kTypeTssBusy = 0xB;
inline constexpr uint8_t kTypeCallGate32 = 0xC;
inline constexpr uint8_t kTypeIntGate = 0xE;
inline constexpr uint8_t kTypeTrapGate = 0xF;

// Is this system type a call gate in the given mode?  64-bit mode dropped
// the 16-bit gate; only 0xC remains.
constexpr bool type_is_call_gate(uint8_t type, DescriptorMode m) {
  if (m == DescriptorMode::Long64) return type == kTypeCallGate32;
  return type == kTypeCallGate16 || type == kTypeCallGate32;
}

// True if the nibble names a recognized system descriptor in the mode;
// 0x0, 0x8, 0xA, 0xD are reserved everywhere, and 64-bit mode additionally
// retires all 16-bit and task-gate types.
constexpr bool type_valid_system(uint8_t type, DescriptorMode m) {
  if (m == DescriptorMode::Long64) {
    switch (type) {
      case kTypeLdt:
      case kTypeTssAvail:
      case kTypeTssBusy:
      case kTypeCallGate32:
      case kTypeIntGate:
      case kTypeTrapGate:
        return true;
      default:
        return false;
    }
  }
  switch (type) {
    case 0x0: case 0x8: case 0xA: case 0xD:
      return false;
    default:
      return true;
  }
}

const char* system_type_name(uint8_t type, DescriptorMode m);

// True if a system descriptor of this type spans two slots in long mode.
constexpr bool type_is_16byte(uint8_t type, DescriptorMode m) {
  if (m != DescriptorMode::Long64) return false;
  switch (type) {
    case kTypeLdt:
    case kTypeTssAvail:
    case kTypeTssBusy:
    case kTypeCallGate32:
    case kTypeIntGate:
    case kTypeTrapGate:
      return true;
    default:
      return false;
  }
}

// Code/data or system segment descriptor (one 8-byte slot; long-mode system
// segments extend base into a second slot).
struct SegmentDescriptor {
  uint64_t base = 0;
  uint32_t limit = 0;   // raw 20-bit field
  uint8_t type = 0;     // low nibble of the access byte
  bool s = false;       // true = code/data, false = system
  uint8_t dpl = 0;
  bool present = false;
  bool avl = false;
  bool l = false;       // 64-bit code segment
  bool db = false;      // default operand size / stack size
  bool granularity = false;

  bool is_code() const { return s && (type & 0x8); }
  bool is_data() const { return s && !(type & 0x8); }
  bool conforming() const { return is_code() && (type & 0x4); }
  bool code_readable() const { return is_code() && (type & 0x2); }
  bool data_writable() const { return is_data() && (type & 0x2); }
  bool expand_down() const { return is_data() && (type & 0x4); }

  uint32_t effective_limit() const {
    return granularity ? ((limit << 12) | 0xFFF) : limit;
  }
};

// Call gate: far-call target plus its own privilege gate.
struct CallGateDescriptor {
  Selector selector;      // target code segment
  uint64_t offset = 0;    // target entry point
  uint8_t type = kTypeCallGate32;
  uint8_t dpl = 0;
  bool present = false;
  uint8_t param_count = 0;  // legacy stack-copy count, 0 in long mode
  DescriptorMode mode = DescriptorMode::Long64;

  size_t encoded_size() const {
    return mode == DescriptorMode::Long64 ? 16 : 8;
  }
};

std::array<uint8_t, 8> encode(const SegmentDescriptor& d);

struct EncodedGate {
  std::array<uint8_t, 16> bytes{};
  uint8_t size = 8;
};
EncodedGate encode(const CallGateDescriptor& g);

SegmentDescriptor decode_segment(const uint8_t* p);
CallGateDescriptor decode_call_gate(const uint8_t* p, DescriptorMode m);

// One decoded table entry.  `loadable` is false for null slots and reserved
// type nibbles; such entries fault when a selector references them.
struct DecodedEntry {
  enum class Kind { Null, Segment, CallGate, OtherGate, SystemSegment, Reserved };
  Kind kind = Kind::Null;
  bool loadable = false;
  bool spans_two_slots = false;
  SegmentDescriptor seg;   // Segment / SystemSegment / Reserved (raw fields)
  CallGateDescriptor gate; // CallGate / OtherGate (interrupt, trap, task)
};

// Decode the entry starting at p; avail is the number of readable bytes
// (16-byte entries need both slots inside the table limit).
DecodedEntry decode_entry(const uint8_t* p, size_t avail, DescriptorMode m);

}  // namespace gatesim
