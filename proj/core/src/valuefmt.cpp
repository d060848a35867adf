#include "xrt/valuefmt.hpp"

#include <algorithm>

#include "xrt/error.hpp"
#include "xrt/native_heap.hpp"

namespace xrt::valuefmt {

char unitChar(UnitKind kind) noexcept {
  switch (kind) {
    case UnitKind::Int: return 'i';
    case UnitKind::Double: return 'd';
    case UnitKind::Str: return 's';
    case UnitKind::Object: return 'O';
    case UnitKind::Group: return '(';
  }
  return '?';
}

std::string_view unitKindName(UnitKind kind) noexcept {
  switch (kind) {
    case UnitKind::Int: return "int";
    case UnitKind::Double: return "float";
    case UnitKind::Str: return "str";
    case UnitKind::Object: return "object";
    case UnitKind::Group: return "tuple";
  }
  return "?";
}

namespace {

std::size_t leafCount(const std::vector<Unit>& units) {
  std::size_t n = 0;
  for (const auto& u : units) n += u.kind == UnitKind::Group ? leafCount(u.children) : 1;
  return n;
}

std::size_t depthOf(const std::vector<Unit>& units) {
  std::size_t d = 0;
  for (const auto& u : units) {
    if (u.kind == UnitKind::Group) d = std::max(d, 1 + depthOf(u.children));
  }
  return d;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::vector<Unit> parse() {
    auto units = sequence();
    if (pos_ < text_.size()) {
      throw FormatSyntaxError("unbalanced ')' at offset " + std::to_string(pos_), pos_);
    }
    return units;
  }

 private:
  std::vector<Unit> sequence() {
    std::vector<Unit> out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ')') return out;
      if (c == '(') {
        const std::size_t open = pos_++;
        Unit group{UnitKind::Group, open, sequence()};
        if (pos_ >= text_.size()) throw FormatSyntaxError("unclosed '(' at offset " + std::to_string(open), open);
        ++pos_;
        out.push_back(std::move(group));
        continue;
      }
      UnitKind kind;
      switch (c) {
        case 'i': kind = UnitKind::Int; break;
        case 'd': kind = UnitKind::Double; break;
        case 's': kind = UnitKind::Str; break;
        case 'O': kind = UnitKind::Object; break;
        default:
          throw FormatSyntaxError("unknown format unit '" + std::string(1, c) + "' at offset " + std::to_string(pos_),
                                  pos_);
      }
      out.push_back(Unit{kind, pos_++, {}});
    }
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Builder {
 public:
  Builder(NativeHeap& heap, std::span<const Value> values) : heap_(heap), values_(values) {}

  // New reference.
  NativeRef unit(const Unit& u) {
    if (u.kind == UnitKind::Group) return group(u.children);
    const std::size_t index = next_++;
    const Value& v = values_[index];
    switch (u.kind) {
      case UnitKind::Int:
        if (auto* p = std::get_if<std::int64_t>(&v)) return heap_.newInt(*p);
        break;
      case UnitKind::Double:
        if (auto* p = std::get_if<double>(&v)) return heap_.newFloat(*p);
        break;
      case UnitKind::Str:
        if (auto* p = std::get_if<std::string>(&v)) return heap_.newStr(*p);
        break;
      case UnitKind::Object:
        if (auto* p = std::get_if<NativeRef>(&v); p && *p) {
          heap_.incref(*p);
          return *p;
        }
        break;
      case UnitKind::Group: break;
    }
    throw KindError("value " + std::to_string(index) + " does not match unit '" + std::string(1, unitChar(u.kind)) +
                        "' (expected " + std::string(unitKindName(u.kind)) + ")",
                    index);
  }

  NativeRef group(const std::vector<Unit>& units) {
    std::vector<NativeRef> parts;
    parts.reserve(units.size());
    try {
      for (const auto& u : units) parts.push_back(unit(u));
    } catch (...) {
      for (NativeRef r : parts) heap_.decref(r);
      throw;
    }
    const NativeRef tuple = heap_.newTuple(parts);
    for (NativeRef r : parts) heap_.decref(r);
    return tuple;
  }

 private:
  NativeHeap& heap_;
  std::span<const Value> values_;
  std::size_t next_ = 0;
};

class Unpacker {
 public:
  explicit Unpacker(NativeHeap& heap) : heap_(heap) {}

  void units(const std::vector<Unit>& units, NativeRef tuple, std::size_t groupStart) {
    if (heap_.kind(tuple) != NativeKind::Tuple) {
      throw KindError("value " + std::to_string(groupStart) + " is a " + std::string(kindName(heap_.kind(tuple))) +
                          ", expected tuple",
                      groupStart);
    }
    const auto items = heap_.items(tuple);
    if (items.size() != units.size()) {
      throw ArityError("expected " + std::to_string(units.size()) + " arguments, got " + std::to_string(items.size()));
    }
    for (std::size_t i = 0; i < units.size(); ++i) unit(units[i], items[i]);
  }

  void unit(const Unit& u, NativeRef item) {
    const std::size_t index = out.size();
    if (u.kind == UnitKind::Group) {
      units(u.children, item, index);
      return;
    }
    const NativeKind k = heap_.kind(item);
    switch (u.kind) {
      case UnitKind::Int:
        if (k == NativeKind::Int) return out.emplace_back(heap_.intValue(item)), void();
        break;
      case UnitKind::Double:
        if (k == NativeKind::Float) return out.emplace_back(heap_.floatValue(item)), void();
        break;
      case UnitKind::Str:
        if (k == NativeKind::Str) return out.emplace_back(heap_.strValue(item)), void();
        break;
      case UnitKind::Object:
        heap_.incref(item);
        out.emplace_back(item);
        return;
      case UnitKind::Group: break;
    }
    throw KindError("argument " + std::to_string(index) + " is a " + std::string(kindName(k)) + ", expected " +
                        std::string(unitKindName(u.kind)),
                    index);
  }

  std::vector<Value> out;

 private:
  NativeHeap& heap_;
};

}  // namespace

std::size_t FormatSpec::arity() const { return leafCount(units); }
std::size_t FormatSpec::depth() const { return depthOf(units); }

FormatSpec parseFormat(std::string_view text) { return FormatSpec{Parser(text).parse(), std::string(text)}; }

NativeRef buildValue(NativeHeap& heap, const FormatSpec& spec, std::span<const Value> values) {
  const std::size_t arity = spec.arity();
  if (values.size() != arity) {
    throw ArityError("format \"" + spec.source + "\" takes " + std::to_string(arity) + " values, got " +
                     std::to_string(values.size()));
  }
  Builder builder(heap, values);
  if (spec.units.size() == 1) return builder.unit(spec.units.front());
  return builder.group(spec.units);
}

std::vector<Value> parseArgs(NativeHeap& heap, const FormatSpec& spec, NativeRef args) {
  if (!args) throw TypeError("argument tuple is null");
  Unpacker unpacker(heap);
  try {
    unpacker.units(spec.units, args, 0);
  } catch (...) {
    releaseValues(heap, unpacker.out);
    throw;
  }
  return std::move(unpacker.out);
}

void releaseValues(NativeHeap& heap, std::span<const Value> values) {
  for (const auto& v : values) {
    if (auto* p = std::get_if<NativeRef>(&v); p && *p) heap.decref(*p);
  }
}

}  // namespace xrt::valuefmt
