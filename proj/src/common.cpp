#include "filco/common.hpp"

namespace filco {

std::string dtype_name(Dtype d) {
  switch (d) {
    case Dtype::f32: return "fp32";
    case Dtype::i32: return "int32";
    case Dtype::i8: return "int8";
  }
  return "?";
}

Dtype dtype_from_name(const std::string& s) {
  if (s == "fp32" || s == "f32" || s == "float32") return Dtype::f32;
  if (s == "int32" || s == "i32") return Dtype::i32;
  if (s == "int8" || s == "i8") return Dtype::i8;
  throw ParseError("unknown dtype '" + s + "'");
}

u64 fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  u64 h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

u64 fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

i64 ceil_div(i64 a, i64 b) { return (a + b - 1) / b; }
i64 round_up(i64 a, i64 b) { return ceil_div(a, b) * b; }

}  // namespace filco
