#include "xrt/native_api.hpp"

#include <algorithm>

#include "xrt/error.hpp"
#include "xrt/render.hpp"
#include "xrt/runtime.hpp"

namespace xrt {

namespace {

thread_local std::size_t getAttrDepth = 0;

bool isDelegate(const NativeHeap& n, NativeRef r) {
  const auto f = n.flags(r);
  return (f & hflag::kInitialized) && (f & hflag::kDelegate);
}

const MemberDef* findMember(const TypeInfo& info, std::string_view name) {
  auto it = std::find_if(info.members.begin(), info.members.end(), [&](const auto& m) { return m.name == name; });
  return it == info.members.end() ? nullptr : &*it;
}

}  // namespace

NativeRef NativeApi::getAttr(NativeRef obj, std::string_view name) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  struct Depth {
    NativeApi& api;
    explicit Depth(NativeApi& a) : api(a) {
      ++getAttrDepth;
      std::size_t seen = api.maxDepth_.load();
      while (getAttrDepth > seen && !api.maxDepth_.compare_exchange_weak(seen, getAttrDepth)) {
      }
    }
    ~Depth() { --getAttrDepth; }
  } depth(*this);

  if (isDelegate(n, obj)) {
    ++forwards_;
    const ManagedHandle twin = n.peer(obj);
    const auto found = rt_.lock.callbackToManaged([&] { return rt_.managed.findAttr(twin, name); });
    if (!found) return kNullRef;
    const NativeRef r = rt_.bridge.toNative(*found);
    n.incref(r);
    return r;
  }

  if (name == "__class__") {
    const NativeRef t = n.typeOf(obj);
    n.incref(t);
    return t;
  }

  switch (n.kind(obj)) {
    case NativeKind::Type: {
      const auto& info = n.typeInfo(obj);
      if (name == "__name__") return n.newStr(info.name);
      if (name == "__module__") return info.module.empty() ? kNullRef : n.newStr(info.module);
      if (name == "__doc__") {
        if (info.doc.empty()) {
          const NativeRef none = n.singleton(SingletonId::None);
          n.incref(none);
          return none;
        }
        return n.newStr(info.doc);
      }
      return kNullRef;
    }
    case NativeKind::Module: {
      if (const NativeRef dict = n.module(obj).dict) {
        if (const NativeRef v = dictGetItemString(dict, name)) {
          n.incref(v);
          return v;
        }
      }
      if (name == "__name__") return n.newStr(n.module(obj).name);
      return kNullRef;
    }
    case NativeKind::CFunction:
      if (name == "__name__") return n.newStr(n.function(obj).name);
      return kNullRef;
    case NativeKind::Instance: {
      // Instance dict, then getsets, then members, then methods.
      if (const NativeRef dict = n.instanceDict(obj)) {
        if (const NativeRef v = dictGetItemString(dict, name)) {
          n.incref(v);
          return v;
        }
      }
      const TypeInfo info = n.typeInfo(n.typeOf(obj));
      for (const auto& gs : info.getsets) {
        if (gs.name == name) return rt_.extensions.invokeGetter(gs.getter, obj);
      }
      if (const MemberDef* m = findMember(info, name)) return n.newInt(n.memberGet(obj, m->offset));
      for (const auto& md : info.methods) {
        if (md.name == name) return n.newCFunction(FunctionInfo{md.name, md.format, md.behavior, info.module, obj});
      }
      return kNullRef;
    }
    default:
      return kNullRef;
  }
}

void NativeApi::setAttr(NativeRef obj, std::string_view name, NativeRef value) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  if (isDelegate(n, obj)) {
    ++forwards_;
    const ManagedHandle twin = n.peer(obj);
    const ManagedHandle v = rt_.bridge.toManaged(value);
    rt_.lock.callbackToManaged([&] { rt_.managed.setAttr(twin, std::string(name), v); });
    return;
  }
  switch (n.kind(obj)) {
    case NativeKind::Module:
      if (const NativeRef dict = n.module(obj).dict) return dictSetItemString(dict, name, value);
      break;
    case NativeKind::Instance: {
      const TypeInfo info = n.typeInfo(n.typeOf(obj));
      if (const MemberDef* m = findMember(info, name)) {
        if (n.kind(value) != NativeKind::Int) throw TypeError("member " + m->name + " holds an int");
        return n.memberSet(obj, m->offset, n.intValue(value));
      }
      if (!info.dictOffset) break;
      NativeRef dict = n.instanceDict(obj);
      if (!dict) {
        dict = n.newDict();
        n.setInstanceDict(obj, dict);
        n.decref(dict);
      }
      return dictSetItemString(dict, name, value);
    }
    default:
      break;
  }
  throw AttributeError("'" + std::string(kindName(n.kind(obj))) + "' object has no writable attribute '" +
                       std::string(name) + "'");
}

NativeRef NativeApi::call(NativeRef callable, NativeRef args) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  switch (n.kind(callable)) {
    case NativeKind::CFunction: return rt_.extensions.invokeCFunction(callable, args);
    case NativeKind::Type: return construct(callable, args);
    default: throw TypeError("'" + std::string(kindName(n.kind(callable))) + "' object is not callable");
  }
}

// Positional ints fill the declared members in order.
NativeRef NativeApi::construct(NativeRef type, NativeRef args) {
  auto& n = rt_.natives;
  const TypeInfo info = n.typeInfo(type);
  if (info.instanceKind != NativeKind::Instance) {
    throw TypeError("cannot create '" + info.qualifiedName() + "' instances");
  }
  const auto items = n.items(args);
  if (items.size() != info.members.size()) {
    throw ArityError(info.qualifiedName() + "() takes exactly " + std::to_string(info.members.size()) +
                     (info.members.size() == 1 ? " argument (" : " arguments (") + std::to_string(items.size()) + " given)");
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (n.kind(items[i]) != NativeKind::Int) {
      throw KindError(info.qualifiedName() + "() argument " + std::to_string(i) + " must be int", i);
    }
  }
  const std::vector<NativeRef> values(items.begin(), items.end());
  const NativeRef obj = n.newInstance(type);
  for (std::size_t i = 0; i < values.size(); ++i) n.memberSet(obj, info.members[i].offset, n.intValue(values[i]));
  return obj;
}

NativeRef NativeApi::dictGetItemString(NativeRef dict, std::string_view key) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  if (!isDelegate(n, dict)) return n.dictGetString(dict, key);
  ++forwards_;
  const ManagedHandle twin = n.peer(dict);
  const ManagedHandle found = rt_.lock.callbackToManaged([&] {
    auto& m = rt_.managed;
    for (const auto& [k, v] : m.dictItems(twin)) {
      if (m.kind(k) == ManagedKind::Str && m.strValue(k) == key) return v;
    }
    return kNullHandle;
  });
  return rt_.bridge.toNative(found);
}

void NativeApi::dictSetItemString(NativeRef dict, std::string_view key, NativeRef value) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  if (!isDelegate(n, dict)) return n.dictSetString(dict, key, value);
  ++forwards_;
  const ManagedHandle twin = n.peer(dict);
  const ManagedHandle v = rt_.bridge.toManaged(value);
  rt_.lock.callbackToManaged([&] { rt_.managed.dictSet(twin, rt_.managed.newStr(std::string(key)), v); });
}

std::size_t NativeApi::dictSize(NativeRef dict) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  if (!isDelegate(n, dict)) return n.size(dict);
  ++forwards_;
  const ManagedHandle twin = n.peer(dict);
  return rt_.lock.callbackToManaged([&] { return rt_.managed.dictItems(twin).size(); });
}

std::string NativeApi::repr(NativeRef obj) { return render(obj, true); }
std::string NativeApi::str(NativeRef obj) { return render(obj, false); }

std::string NativeApi::render(NativeRef obj, bool repr) {
  thread_local std::vector<std::uint64_t> active;
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  if (!obj) return "<NULL>";
  if (isDelegate(n, obj) && n.kind(obj) != NativeKind::Module) {
    ++forwards_;
    const ManagedHandle twin = n.peer(obj);
    return rt_.lock.callbackToManaged([&] { return repr ? rt_.managed.reprOf(twin) : rt_.managed.strOf(twin); });
  }
  const NativeKind kind = n.kind(obj);
  switch (kind) {
    case NativeKind::Int: return render::formatInt(n.intValue(obj));
    case NativeKind::Float: return render::formatFloat(n.floatValue(obj));
    case NativeKind::Str: return repr ? render::quoteBytes(n.strValue(obj)) : n.strValue(obj);
    case NativeKind::Singleton: {
      static constexpr std::string_view names[] = {"None", "True", "False", "NotImplemented", "Ellipsis"};
      return std::string(names[static_cast<std::size_t>(n.singletonId(obj))]);
    }
    case NativeKind::Module: return "<module '" + n.module(obj).name + "'>";
    case NativeKind::CFunction: {
      const auto& f = n.function(obj);
      if (f.self) return "<built-in method " + f.name + " of " + n.typeInfo(n.typeOf(f.self)).qualifiedName() + " object>";
      return "<built-in function " + f.name + ">";
    }
    case NativeKind::Capsule: return "<capsule '" + n.capsule(obj).name + "'>";
    case NativeKind::Type: return "<type '" + n.typeInfo(obj).qualifiedName() + "'>";
    case NativeKind::Instance: {
      const TypeInfo info = n.typeInfo(n.typeOf(obj));
      const std::string& behavior = repr || info.strBehavior.empty() ? info.reprBehavior : info.strBehavior;
      if (!behavior.empty()) return rt_.extensions.invokeRenderer(behavior, obj);
      return "<" + info.qualifiedName() + " object>";
    }
    default: break;
  }

  const char* recursion = kind == NativeKind::List ? "[...]" : kind == NativeKind::Dict ? "{...}" : "(...)";
  if (std::find(active.begin(), active.end(), obj.addr) != active.end()) return recursion;
  active.push_back(obj.addr);
  struct Pop {
    ~Pop() { active.pop_back(); }
  } pop;

  auto join = [&](const std::vector<NativeRef>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += items[i] ? render(items[i], true) : "None";
    }
    return out;
  };
  switch (kind) {
    case NativeKind::Tuple: {
      const std::vector<NativeRef> items(n.items(obj).begin(), n.items(obj).end());
      return "(" + join(items) + (items.size() == 1 ? ",)" : ")");
    }
    case NativeKind::List: {
      const std::vector<NativeRef> items(n.items(obj).begin(), n.items(obj).end());
      return "[" + join(items) + "]";
    }
    case NativeKind::Slice: {
      const SliceInfo s = n.slice(obj);
      return "slice(" + join({s.start, s.stop, s.step}) + ")";
    }
    case NativeKind::Dict: {
      const std::vector<std::pair<NativeRef, NativeRef>> entries(n.dictEntries(obj).begin(), n.dictEntries(obj).end());
      std::string out = "{";
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += ", ";
        out += render(entries[i].first, true) + ": " + render(entries[i].second, true);
      }
      return out + "}";
    }
    default: return "<?>";
  }
}

}  // namespace xrt
