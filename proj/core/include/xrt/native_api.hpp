#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xrt/handles.hpp"

namespace xrt {

class Runtime;

// The C-API surface seen by extension code. Delegate-strategy objects keep
// their data on the managed side, so dict and attribute operations go
// through here instead of touching the native payload directly.
//
// Callers hold the boundary lock; the entry points also take it reentrantly.
class NativeApi {
 public:
  explicit NativeApi(Runtime& rt) : rt_(rt) {}

  // Generic attribute lookup. Returns a new reference, or null when absent.
  // Delegate objects forward to the managed side; every other object takes
  // the native path (instance dict, getsets, members, methods).
  NativeRef getAttr(NativeRef obj, std::string_view name);
  void setAttr(NativeRef obj, std::string_view name, NativeRef value);

  // New reference.
  NativeRef call(NativeRef callable, NativeRef args);

  std::string repr(NativeRef obj);
  std::string str(NativeRef obj);

  NativeRef dictGetItemString(NativeRef dict, std::string_view key);  // borrowed or null
  void dictSetItemString(NativeRef dict, std::string_view key, NativeRef value);
  std::size_t dictSize(NativeRef dict);

  // Instrumentation for the fallback-detection property.
  std::uint64_t managedForwards() const noexcept { return forwards_; }
  std::size_t maxGetAttrDepth() const noexcept { return maxDepth_; }

 private:
  NativeRef construct(NativeRef type, NativeRef args);
  std::string render(NativeRef obj, bool repr);

  Runtime& rt_;
  std::atomic<std::uint64_t> forwards_{0};
  std::atomic<std::size_t> maxDepth_{0};
};

}  // namespace xrt
