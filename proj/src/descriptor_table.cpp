#include "gatesim/descriptor_table.hpp"

#include <cstring>

#include "gatesim/hexfmt.hpp"

namespace gatesim {

static std::string sel_str(Selector s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%04x", s.raw);
  return buf;
}

Result<DecodedEntry> DescriptorTable::lookup(Selector sel,
                                             DescriptorMode mode) const {
  if (kind != TableKind::Idt && sel.is_null()) {
    return Fault::gp("null selector");
  }
  const uint32_t off = sel.table_offset();
  if (off + 7u > limit()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "selector %s beyond table limit 0x%x",
                  sel_str(sel).c_str(), limit());
    return Fault::gp(buf);
  }
  size_t avail = static_cast<size_t>(limit()) + 1 - off;
  DecodedEntry e = decode_entry(bytes.data() + off, avail, mode);
  if (e.spans_two_slots && off + 15u > limit()) {
    return Fault::gp("16-byte descriptor crosses table limit");
  }
  return e;
}

DecodedEntry DescriptorTable::entry_at(size_t slot, DescriptorMode mode) const {
  size_t off = slot * 8;
  if (off + 8 > bytes.size()) return DecodedEntry{};
  return decode_entry(bytes.data() + off, bytes.size() - off, mode);
}

void DescriptorTable::write_slot(size_t slot, const uint8_t* data, size_t n) {
  size_t off = slot * 8;
  if (off + n > bytes.size()) return;
  std::memcpy(bytes.data() + off, data, n);
}

bool DescriptorTable::slot_is_zero(size_t slot) const {
  size_t off = slot * 8;
  if (off + 8 > bytes.size()) return false;
  for (size_t i = 0; i < 8; ++i)
    if (bytes[off + i] != 0) return false;
  return true;
}

int find_free_slot_pair(const DescriptorTable& t, size_t first_slot) {
  for (size_t s = first_slot; s + 1 < t.slot_count(); ++s) {
    if (t.slot_is_zero(s) && t.slot_is_zero(s + 1)) return static_cast<int>(s);
  }
  return -1;
}

DescriptorTable make_os_gdt(uint64_t base, uint64_t tss_base) {
  DescriptorTable t;
  t.kind = TableKind::Gdt;
  t.base = base;
  t.bytes.assign(4096, 0);

  auto put = [&](size_t slot, const SegmentDescriptor& d) {
    auto b = encode(d);
    t.write_slot(slot, b.data(), b.size());
  };

  SegmentDescriptor code0;
  code0.type = 0xB;  // execute/read, accessed
  code0.s = true;
  code0.dpl = 0;
  code0.present = true;
  code0.l = true;
  code0.limit = 0xFFFFF;
  code0.granularity = true;
  put(1, code0);

  SegmentDescriptor data0;
  data0.type = 0x3;  // read/write, accessed
  data0.s = true;
  data0.dpl = 0;
  data0.present = true;
  data0.db = true;
  data0.limit = 0xFFFFF;
  data0.granularity = true;
  put(2, data0);

  SegmentDescriptor code3 = code0;
  code3.dpl = 3;
  put(3, code3);

  SegmentDescriptor data3 = data0;
  data3.dpl = 3;
  put(4, data3);

  // 64-bit TSS descriptor spans slots 5 and 6.
  SegmentDescriptor tss;
  tss.type = kTypeTssAvail;
  tss.s = false;
  tss.dpl = 0;
  tss.present = true;
  tss.base = tss_base;
  tss.limit = 0x67;
  auto low = encode(tss);
  t.write_slot(5, low.data(), low.size());
  uint8_t high[8] = {
      static_cast<uint8_t>(tss_base >> 32), static_cast<uint8_t>(tss_base >> 40),
      static_cast<uint8_t>(tss_base >> 48), static_cast<uint8_t>(tss_base >> 56),
      0, 0, 0, 0};
  t.write_slot(6, high, sizeof high);
  return t;
}

DescriptorTable make_os_idt(uint64_t base, uint64_t handler_base) {
  DescriptorTable t;
  t.kind = TableKind::Idt;
  t.base = base;
  t.bytes.assign(4096, 0);
  for (int vec = 0; vec < 256; ++vec) {
    CallGateDescriptor g;
    g.mode = DescriptorMode::Long64;
    g.type = kTypeIntGate;
    g.selector = kSelKernelCode;
    g.offset = handler_base + 16ull * vec;
    g.dpl = 0;
    g.present = true;
    auto enc = encode(g);
    t.write_slot(static_cast<size_t>(vec) * 2, enc.bytes.data(), enc.size);
  }
  return t;
}

std::string hex_dump(uint64_t base, const uint8_t* data, size_t n) {
  std::string out;
  for (size_t i = 0; i < n; i += 16) {
    out += hex16(base + i);
    out += ':';
    for (size_t j = i; j < i + 16 && j < n; ++j) {
      out += ' ';
      out += hex_byte(data[j]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace gatesim
