#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace schemadoc {

// Scalar cell value. Monostate is SQL NULL; empty string is a distinct value.
using Value = std::variant<std::monostate, int64_t, double, bool, std::string>;

inline bool is_null(const Value &v) {
  return std::holds_alternative<std::monostate>(v);
}

inline Value null_value() { return Value{std::monostate{}}; }

// Canonical string key used for distinct counting and set membership.
// Integers and doubles that hold the same number map to the same key so that
// coercible cross-type comparisons (VARCHAR "42" vs INT 42) behave.
inline std::string value_key(const Value &v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return std::string("\x00N", 2); }
    std::string operator()(int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      if (d == static_cast<double>(static_cast<int64_t>(d)) && d > -1e15 && d < 1e15) {
        return std::to_string(static_cast<int64_t>(d));
      }
      char buf[32];
      snprintf(buf, sizeof(buf), "%.17g", d);
      return buf;
    }
    std::string operator()(bool b) const { return b ? "1" : "0"; }
    std::string operator()(const std::string &s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

// Rendering for samples, frequency tables and prompt context.
inline std::string value_text(const Value &v) {
  if (is_null(v)) return "NULL";
  return value_key(v);
}

inline bool value_less(const Value &a, const Value &b) {
  const bool an = is_null(a), bn = is_null(b);
  if (an != bn) return an;
  if (an && bn) return false;
  const bool a_num = std::holds_alternative<int64_t>(a) || std::holds_alternative<double>(a);
  const bool b_num = std::holds_alternative<int64_t>(b) || std::holds_alternative<double>(b);
  if (a_num && b_num) {
    const double av = std::holds_alternative<int64_t>(a)
                          ? static_cast<double>(std::get<int64_t>(a))
                          : std::get<double>(a);
    const double bv = std::holds_alternative<int64_t>(b)
                          ? static_cast<double>(std::get<int64_t>(b))
                          : std::get<double>(b);
    if (av != bv) return av < bv;
    return false;
  }
  if (a_num != b_num) return a_num;
  return value_key(a) < value_key(b);
}

inline bool value_equal(const Value &a, const Value &b) {
  if (is_null(a) || is_null(b)) return is_null(a) && is_null(b);
  return value_key(a) == value_key(b);
}

inline std::optional<double> value_numeric(const Value &v) {
  if (std::holds_alternative<int64_t>(v)) return static_cast<double>(std::get<int64_t>(v));
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  return std::nullopt;
}

inline bool is_blank_or_zero(const Value &v) {
  if (is_null(v)) return false;
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v).empty();
  if (std::holds_alternative<int64_t>(v)) return std::get<int64_t>(v) == 0;
  if (std::holds_alternative<double>(v)) return std::get<double>(v) == 0.0;
  return false;
}

}  // namespace schemadoc
