#pragma once
// Architectural fault reporting.  Operations that can fault return
// Result<T>: either a value or a Fault carrying the kind plus a short
// human-readable cause ("selector 0x23 beyond gdt limit", ...).

#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace gatesim {

enum class FaultKind {
  GeneralProtection,
  PageFault,
  VmExit,
  Bugcheck,
};

inline const char* fault_kind_name(FaultKind k) {
  switch (k) {
    case FaultKind::GeneralProtection: return "GeneralProtection";
    case FaultKind::PageFault: return "PageFault";
    case FaultKind::VmExit: return "VmExit";
    case FaultKind::Bugcheck: return "Bugcheck";
  }
  return "?";
}

struct Fault {
  FaultKind kind;
  std::string detail;

  static Fault gp(std::string d) {
    return {FaultKind::GeneralProtection, std::move(d)};
  }
  static Fault page(std::string d) { return {FaultKind::PageFault, std::move(d)}; }
  static Fault vmexit(std::string d) { return {FaultKind::VmExit, std::move(d)}; }
  static Fault bugcheck(std::string d) {
    return {FaultKind::Bugcheck, std::move(d)};
  }

  std::string to_string() const {
    return std::string(fault_kind_name(kind)) + ": " + detail;
  }
};

template <class T>
class [[nodiscard]] Result {
 public:
  Result(T v) : v_(std::move(v)) {}
  Result(Fault f) : v_(std::move(f)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const { return std::get<T>(v_); }
  T& value() { return std::get<T>(v_); }
  const Fault& fault() const { return std::get<Fault>(v_); }

 private:
  std::variant<T, Fault> v_;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() = default;
  Result(Fault f) : f_(std::move(f)) {}

  bool ok() const { return !f_.has_value(); }
  explicit operator bool() const { return ok(); }

  const Fault& fault() const { return *f_; }

 private:
  std::optional<Fault> f_;
};

}  // namespace gatesim
