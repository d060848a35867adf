#include "xrt/extload.hpp"

#include <algorithm>
#include <set>

#include "xrt/error.hpp"
#include "xrt/runtime.hpp"

namespace xrt {

namespace {

std::string prefixed(std::string_view name, const char* what) { return std::string(name) + "(): " + what; }

// Re-raises marshalling and behavior errors with the function name attached.
template <class F>
decltype(auto) named(std::string_view name, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const ArityError& e) {
    throw ArityError(prefixed(name, e.what()));
  } catch (const KindError& e) {
    throw KindError(prefixed(name, e.what()), e.unit());
  } catch (const CallError& e) {
    throw CallError(prefixed(name, e.what()));
  } catch (const Error& e) {
    throw CallError(prefixed(name, e.what()));
  }
}

std::uint64_t alignedEnd(const TypeInfo& info) {
  std::uint64_t end = info.dictOffset ? *info.dictOffset + 8 : 0;
  for (const auto& m : info.members) end = std::max(end, m.offset + 8);
  return end;
}

}  // namespace

ExtensionRegistry::ExtensionRegistry(Runtime& rt) : rt_(rt), behaviors_(BehaviorRegistry::builtins()) {}

const Behavior& ExtensionRegistry::behavior(std::string_view name) const {
  const Behavior* b = behaviors_.find(name);
  if (b == nullptr) throw ExtensionError("unknown behavior '" + std::string(name) + "'");
  return *b;
}

const valuefmt::FormatSpec& ExtensionRegistry::spec(const std::string& format) {
  std::lock_guard lk(specMutex_);
  auto it = specs_.find(format);
  if (it == specs_.end()) it = specs_.emplace(format, valuefmt::parseFormat(format)).first;
  return it->second;
}

void ExtensionRegistry::registerExtension(ExtensionModuleDef def) {
  if (def.name.empty()) throw ExtensionError("extension module needs a name");
  if (modules_.contains(def.name)) throw ExtensionError("extension '" + def.name + "' is already registered");

  // Validate everything before touching the heap.
  std::set<std::string> names;
  auto unique = [&](const std::string& name) {
    if (name.empty() || !names.insert(name).second) {
      throw ExtensionError("duplicate or empty name '" + name + "' in extension '" + def.name + "'");
    }
  };
  auto format = [&](const std::string& text, const std::string& where) {
    try {
      spec(text);
    } catch (const FormatSyntaxError& e) {
      throw ExtensionError(where + ": " + e.what());
    }
  };
  for (const auto& fn : def.functions) {
    unique(fn.name);
    behavior(fn.behavior);
    format(fn.format, fn.name);
  }
  for (auto& t : def.types) {
    unique(t.name);
    t.module = def.name;
    if (!t.dictOffset && t.isHeapType) t.dictOffset = 0;
    if (t.basicSize == 0) t.basicSize = std::max<std::uint64_t>(8, alignedEnd(t));
    for (const auto& g : t.getsets) behavior(g.getter);
    for (const auto& m : t.methods) {
      behavior(m.behavior);
      format(m.format, t.name + "." + m.name);
    }
    if (!t.reprBehavior.empty()) behavior(t.reprBehavior);
    if (!t.strBehavior.empty()) behavior(t.strBehavior);
  }

  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  const NativeRef module = n.newModule(def.name);
  const NativeRef dict = n.module(module).dict;
  auto put = [&](const std::string& key, NativeRef value) {
    n.dictSetString(dict, key, value);
    n.decref(value);
  };
  put("__name__", n.newStr(def.name));
  if (def.doc.empty()) {
    n.dictSetString(dict, "__doc__", n.singleton(SingletonId::None));
  } else {
    put("__doc__", n.newStr(def.doc));
  }
  for (const auto& fn : def.functions) put(fn.name, n.newCFunction(FunctionInfo{fn.name, fn.format, fn.behavior, def.name, {}}));
  for (const auto& t : def.types) {
    const NativeRef type = n.newType(t);
    if (!t.isHeapType) {
      n.makeImmortal(type);
      rt_.bridge.registerStaticType(type);
      n.dictSetString(dict, t.name, type);
    } else {
      put(t.name, type);
    }
  }
  std::string name = def.name;
  modules_.emplace(std::move(name), Entry{std::move(def), module, kNullHandle});
}

bool ExtensionRegistry::isRegistered(std::string_view name) const { return modules_.contains(name); }

ManagedHandle ExtensionRegistry::importModule(std::string_view name) {
  auto guard = rt_.lock.enterNative();
  auto it = modules_.find(name);
  if (it == modules_.end()) throw ExtensionError("no extension module named '" + std::string(name) + "'");
  if (!it->second.handle) {
    const ManagedHandle h = rt_.bridge.toManaged(it->second.module);
    rt_.managed.addRoot(h);
    it->second.handle = h;
  }
  return it->second.handle;
}

NativeRef ExtensionRegistry::nativeModule(std::string_view name) const {
  auto it = modules_.find(name);
  return it == modules_.end() ? kNullRef : it->second.module;
}

std::vector<NativeRef> ExtensionRegistry::nativeModules() const {
  std::vector<NativeRef> out;
  for (const auto& [name, e] : modules_) out.push_back(e.module);
  return out;
}

std::vector<std::string> ExtensionRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : modules_) out.push_back(name);
  return out;
}

const ExtensionModuleDef* ExtensionRegistry::definition(std::string_view name) const {
  auto it = modules_.find(name);
  return it == modules_.end() ? nullptr : &it->second.def;
}

NativeRef ExtensionRegistry::run(const Behavior& b, NativeRef self, std::string_view name,
                                 std::span<const valuefmt::Value> args) {
  auto& n = rt_.natives;
  BehaviorContext ctx{rt_, self, name};
  const auto results = b.body(ctx, args);
  NativeRef out;
  try {
    out = valuefmt::buildValue(n, spec(b.resultFormat), results);
  } catch (...) {
    valuefmt::releaseValues(n, results);
    throw;
  }
  valuefmt::releaseValues(n, results);
  ++invocations_;
  return out;
}

NativeRef ExtensionRegistry::invokeCFunction(NativeRef fn, NativeRef args) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  const FunctionInfo info = n.function(fn);
  return named(info.name, [&] {
    const Behavior& b = behavior(info.behavior);
    const auto values = valuefmt::parseArgs(n, spec(info.format), args);
    try {
      const NativeRef out = run(b, info.self, info.name, values);
      valuefmt::releaseValues(n, values);
      return out;
    } catch (...) {
      valuefmt::releaseValues(n, values);
      throw;
    }
  });
}

NativeRef ExtensionRegistry::invokeGetter(const std::string& name, NativeRef self) {
  auto guard = rt_.lock.enterNative();
  return named(name, [&] { return run(behavior(name), self, name, {}); });
}

std::string ExtensionRegistry::invokeRenderer(const std::string& name, NativeRef self) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  const NativeRef r = invokeGetter(name, self);
  if (n.kind(r) != NativeKind::Str) {
    n.decref(r);
    throw CallError(name + "(): renderer must return str");
  }
  std::string out = n.strValue(r);
  n.decref(r);
  return out;
}

}  // namespace xrt
