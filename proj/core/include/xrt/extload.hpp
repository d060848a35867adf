#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xrt/handles.hpp"
#include "xrt/native_heap.hpp"
#include "xrt/valuefmt.hpp"

namespace xrt {

class Runtime;

struct BehaviorContext {
  Runtime& rt;
  NativeRef self;  // bound receiver for methods and getsets, else null
  std::string_view function;
};

// Native code behind a CFunction, getset, method or renderer. Receives the
// unpacked arguments (borrowed) and returns values for resultFormat; 'O'
// results are new references handed to the caller.
using BehaviorBody =
    std::function<std::vector<valuefmt::Value>(BehaviorContext&, std::span<const valuefmt::Value>)>;

struct Behavior {
  std::string name;
  std::string resultFormat;
  BehaviorBody body;
};

class BehaviorRegistry {
 public:
  // identity, add_ints, make_point, make_capsule, capsule_roundtrip, wrap,
  // range_list, sum_list, spin_allow, point_norm, point_repr, point_str,
  // point_moved, counter_bump.
  static BehaviorRegistry builtins();

  void add(Behavior behavior);
  const Behavior* find(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Behavior, std::less<>> behaviors_;
};

struct FunctionDef {
  std::string name;
  std::string format;
  std::string behavior;
};

struct ExtensionModuleDef {
  std::string name;
  std::string doc;
  std::vector<FunctionDef> functions;
  std::vector<TypeInfo> types;
};

// Line-oriented descriptor records:
//   module <name>
//   doc <text...>
//   fn <name> <format|-> <behavior>
//   type <name> static|heap [dict] [member:<n>@<off>] [getset:<n>:<behavior>]
//        [method:<n>:<format|->:<behavior>] [repr:<behavior>] [str:<behavior>]
// '#' starts a comment. Throws ExtensionError naming the line.
std::vector<ExtensionModuleDef> parseDescriptors(std::string_view text);

// The built-in "demo" extension.
ExtensionModuleDef demoExtension();

// In-process extension loading and CFunction invocation.
class ExtensionRegistry {
 public:
  explicit ExtensionRegistry(Runtime& rt);
  ExtensionRegistry(const ExtensionRegistry&) = delete;
  ExtensionRegistry& operator=(const ExtensionRegistry&) = delete;

  void registerExtension(ExtensionModuleDef def);
  bool isRegistered(std::string_view name) const;
  // Same handle on every call; the module stays rooted.
  ManagedHandle importModule(std::string_view name);

  NativeRef nativeModule(std::string_view name) const;  // borrowed
  std::vector<NativeRef> nativeModules() const;
  std::vector<std::string> names() const;
  const ExtensionModuleDef* definition(std::string_view name) const;

  // New references. Marshalling errors carry the function name.
  NativeRef invokeCFunction(NativeRef fn, NativeRef args);
  NativeRef invokeGetter(const std::string& behavior, NativeRef self);
  std::string invokeRenderer(const std::string& behavior, NativeRef self);

  BehaviorRegistry& behaviors() noexcept { return behaviors_; }
  std::uint64_t invocations() const noexcept { return invocations_; }

 private:
  struct Entry {
    ExtensionModuleDef def;
    NativeRef module;
    ManagedHandle handle;
  };

  const Behavior& behavior(std::string_view name) const;
  const valuefmt::FormatSpec& spec(const std::string& format);
  NativeRef run(const Behavior& b, NativeRef self, std::string_view name, std::span<const valuefmt::Value> args);

  Runtime& rt_;
  BehaviorRegistry behaviors_;
  std::map<std::string, Entry, std::less<>> modules_;
  std::mutex specMutex_;
  std::unordered_map<std::string, valuefmt::FormatSpec> specs_;
  std::uint64_t invocations_ = 0;
};

}  // namespace xrt
