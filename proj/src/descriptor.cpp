#include "gatesim/descriptor.hpp"

namespace gatesim {

const char* system_type_name(uint8_t type, DescriptorMode m) {
  if (m == DescriptorMode::Long64) {
    switch (type) {
      case kTypeLdt: return "LDT";
      case kTypeTssAvail: return "64-bit TSS (available)";
      case kTypeTssBusy: return "64-bit TSS (busy)";
      case kTypeCallGate32: return "64-bit call gate";
      case kTypeIntGate: return "64-bit interrupt gate";
      case kTypeTrapGate: return "64-bit trap gate";
      default: return "reserved";
    }
  }
  switch (type) {
    case 0x1: return "16-bit TSS (available)";
    case kTypeLdt: return "LDT";
    case 0x3: return "16-bit TSS (busy)";
    case kTypeCallGate16: return "16-bit call gate";
    case kTypeTaskGate: return "task gate";
    case 0x6: return "16-bit interrupt gate";
    case 0x7: return "16-bit trap gate";
    case kTypeTssAvail: return "32-bit TSS (available)";
    case kTypeTssBusy: return "32-bit TSS (busy)";
    case kTypeCallGate32: return "32-bit call gate";
    case kTypeIntGate: return "32-bit interrupt gate";
    case kTypeTrapGate: return "32-bit trap gate";
    default: return "reserved";
  }
}

std::array<uint8_t, 8> encode(const SegmentDescriptor& d) {
  std::array<uint8_t, 8> b{};
  const uint32_t base32 = static_cast<uint32_t>(d.base);
  b[0] = d.limit & 0xFF;
  b[1] = (d.limit >> 8) & 0xFF;
  b[2] = base32 & 0xFF;
  b[3] = (base32 >> 8) & 0xFF;
  b[4] = (base32 >> 16) & 0xFF;
  b[5] = static_cast<uint8_t>((d.type & 0xF) | (d.s ? 0x10 : 0) |
                              ((d.dpl & 0x3) << 5) | (d.present ? 0x80 : 0));
  b[6] = static_cast<uint8_t>(((d.limit >> 16) & 0xF) | (d.avl ? 0x10 : 0) |
                              (d.l ? 0x20 : 0) | (d.db ? 0x40 : 0) |
                              (d.granularity ? 0x80 : 0));
  b[7] = (base32 >> 24) & 0xFF;
  return b;
}

EncodedGate encode(const CallGateDescriptor& g) {
  EncodedGate out;
  auto& b = out.bytes;
  b[0] = g.offset & 0xFF;
  b[1] = (g.offset >> 8) & 0xFF;
  b[2] = g.selector.raw & 0xFF;
  b[3] = (g.selector.raw >> 8) & 0xFF;
  b[4] = g.mode == DescriptorMode::Legacy32 ? (g.param_count & 0x1F) : 0;
  b[5] = static_cast<uint8_t>((g.type & 0xF) | ((g.dpl & 0x3) << 5) |
                              (g.present ? 0x80 : 0));
  b[6] = (g.offset >> 16) & 0xFF;
  b[7] = (g.offset >> 24) & 0xFF;
  if (g.mode == DescriptorMode::Long64) {
    b[8] = (g.offset >> 32) & 0xFF;
    b[9] = (g.offset >> 40) & 0xFF;
    b[10] = (g.offset >> 48) & 0xFF;
    b[11] = (g.offset >> 56) & 0xFF;
    // bytes 12..15 reserved, must be zero
    out.size = 16;
  } else {
    out.size = 8;
  }
  return out;
}

SegmentDescriptor decode_segment(const uint8_t* p) {
  SegmentDescriptor d;
  d.limit = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
            ((static_cast<uint32_t>(p[6]) & 0xF) << 16);
  d.base = static_cast<uint64_t>(p[2]) | (static_cast<uint64_t>(p[3]) << 8) |
           (static_cast<uint64_t>(p[4]) << 16) |
           (static_cast<uint64_t>(p[7]) << 24);
  d.type = p[5] & 0xF;
  d.s = p[5] & 0x10;
  d.dpl = (p[5] >> 5) & 0x3;
  d.present = p[5] & 0x80;
  d.avl = p[6] & 0x10;
  d.l = p[6] & 0x20;
  d.db = p[6] & 0x40;
  d.granularity = p[6] & 0x80;
  return d;
}

CallGateDescriptor decode_call_gate(const uint8_t* p, DescriptorMode m) {
  CallGateDescriptor g;
  g.mode = m;
  g.offset = static_cast<uint64_t>(p[0]) | (static_cast<uint64_t>(p[1]) << 8) |
             (static_cast<uint64_t>(p[6]) << 16) |
             (static_cast<uint64_t>(p[7]) << 24);
  g.selector =
      Selector(static_cast<uint16_t>(p[2] | (static_cast<uint16_t>(p[3]) << 8)));
  g.type = p[5] & 0xF;
  g.dpl = (p[5] >> 5) & 0x3;
  g.present = p[5] & 0x80;
  if (m == DescriptorMode::Long64) {
    g.offset |= static_cast<uint64_t>(p[8]) << 32 |
                static_cast<uint64_t>(p[9]) << 40 |
                static_cast<uint64_t>(p[10]) << 48 |
                static_cast<uint64_t>(p[11]) << 56;
  } else {
    g.param_count = p[4] & 0x1F;
  }
  return g;
}

DecodedEntry decode_entry(const uint8_t* p, size_t avail, DescriptorMode m) {
  DecodedEntry e;
  if (avail < 8) {
    e.kind = DecodedEntry::Kind::Reserved;
    return e;
  }
  bool all_zero = true;
  for (int i = 0; i < 8; ++i) all_zero &= p[i] == 0;
  if (all_zero) {
    e.kind = DecodedEntry::Kind::Null;
    return e;
  }

  const uint8_t access = p[5];
  const bool s = access & 0x10;
  const uint8_t type = access & 0xF;
  if (s) {
    e.kind = DecodedEntry::Kind::Segment;
    e.seg = decode_segment(p);
    e.loadable = true;
    return e;
  }
  if (!type_valid_system(type, m)) {
    e.kind = DecodedEntry::Kind::Reserved;
    e.seg = decode_segment(p);
    return e;
  }
  e.spans_two_slots = type_is_16byte(type, m);
  if (e.spans_two_slots && avail < 16) {
    // Second slot lies beyond the table limit: unusable.
    e.kind = DecodedEntry::Kind::Reserved;
    e.seg = decode_segment(p);
    return e;
  }
  const bool other_gate =
      type == kTypeIntGate || type == kTypeTrapGate ||
      (m == DescriptorMode::Legacy32 &&
       (type == 0x6 || type == 0x7 || type == kTypeTaskGate));
  if (type_is_call_gate(type, m) || other_gate) {
    e.kind = type_is_call_gate(type, m) ? DecodedEntry::Kind::CallGate
                                        : DecodedEntry::Kind::OtherGate;
    e.gate = decode_call_gate(p, m);
    e.loadable = true;
    return e;
  }
  // TSS / LDT
  e.kind = DecodedEntry::Kind::SystemSegment;
  e.seg = decode_segment(p);
  if (e.spans_two_slots) {
    e.seg.base |= static_cast<uint64_t>(p[8]) << 32 |
                  static_cast<uint64_t>(p[9]) << 40 |
                  static_cast<uint64_t>(p[10]) << 48 |
                  static_cast<uint64_t>(p[11]) << 56;
  }
  e.loadable = true;
  return e;
}

}  // namespace gatesim
