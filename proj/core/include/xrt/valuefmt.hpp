#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xrt/handles.hpp"

namespace xrt {
class NativeHeap;
}

// Format-string marshalling between flat value sequences and native tuples,
// the ParseTuple/BuildValue pair.
//
//   format := unit*
//   unit   := 'i' | 'd' | 's' | 'O' | '(' unit* ')'
//
// 'i' signed 64-bit int, 'd' 64-bit float, 's' byte string, 'O' any native
// object. A format with exactly one top-level unit builds that unit's value
// bare; any other count builds a tuple of the top-level units.
namespace xrt::valuefmt {

enum class UnitKind : std::uint8_t { Int, Double, Str, Object, Group };

struct Unit {
  UnitKind kind = UnitKind::Int;
  std::size_t offset = 0;  // position in the source text
  std::vector<Unit> children;

  friend bool operator==(const Unit& a, const Unit& b) { return a.kind == b.kind && a.children == b.children; }
};

struct FormatSpec {
  std::vector<Unit> units;
  std::string source;

  std::size_t arity() const;  // number of leaf units
  std::size_t depth() const;  // 0 for a flat format
};

using Value = std::variant<std::int64_t, double, std::string, NativeRef>;

// Throws FormatSyntaxError carrying the 0-based offset of the first bad
// character (for an unclosed group, the offset of its '(').
FormatSpec parseFormat(std::string_view text);

// Returns a new reference. 'O' values are borrowed and gain one reference.
// Throws ArityError or KindError (flat leaf index).
NativeRef buildValue(NativeHeap& heap, const FormatSpec& spec, std::span<const Value> values);

// Unpacks the tuple args positionally against the top-level units. 'O'
// values come back as new references owned by the caller; see releaseValues.
std::vector<Value> parseArgs(NativeHeap& heap, const FormatSpec& spec, NativeRef args);

// Drops the references held by 'O' entries.
void releaseValues(NativeHeap& heap, std::span<const Value> values);

char unitChar(UnitKind kind) noexcept;
std::string_view unitKindName(UnitKind kind) noexcept;

}  // namespace xrt::valuefmt
