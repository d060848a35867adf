#include "xrt/bridge.hpp"

#include <algorithm>
#include <array>

#include "xrt/error.hpp"
#include "xrt/runtime.hpp"

namespace xrt {

std::string_view strategyName(Strategy s) noexcept {
  switch (s) {
    case Strategy::Delegate: return "DELEGATE";
    case Strategy::Mirror: return "MIRROR";
    case Strategy::Peer: return "PEER";
  }
  return "?";
}

std::uint16_t strategyFlag(Strategy s) noexcept {
  switch (s) {
    case Strategy::Delegate: return hflag::kDelegate;
    case Strategy::Mirror: return hflag::kMirror;
    case Strategy::Peer: return hflag::kPeer;
  }
  return 0;
}

// Kinds with a managed counterpart are delegated unless native code reads
// their memory directly (the PyTuple_GET_ITEM / PyString_AS_STRING family),
// in which case they are mirrored. Everything else gets a peer.
Strategy strategyForKind(NativeKind instanceKind) noexcept {
  switch (instanceKind) {
    case NativeKind::Int:
    case NativeKind::Float:
    case NativeKind::Str:
    case NativeKind::Tuple:
    case NativeKind::List: return Strategy::Mirror;
    case NativeKind::Dict:
    case NativeKind::Slice:
    case NativeKind::Module: return Strategy::Delegate;
    default: return Strategy::Peer;
  }
}

// --- StaticTypeRegistry -----------------------------------------------------------

void StaticTypeRegistry::add(NativeRef type, std::string name, ManagedHandle handle) {
  if (byName_.contains(name)) throw ExtensionError("static type '" + name + "' is already registered");
  byRef_.emplace(type.addr, handle);
  byName_.emplace(std::move(name), type);
}

std::optional<ManagedHandle> StaticTypeRegistry::byRef(NativeRef type) const {
  if (auto it = byRef_.find(type.addr); it != byRef_.end()) return it->second;
  return std::nullopt;
}

NativeRef StaticTypeRegistry::byName(std::string_view name) const {
  if (auto it = byName_.find(std::string(name)); it != byName_.end()) return it->second;
  return {};
}

std::vector<std::pair<std::string, NativeRef>> StaticTypeRegistry::entries() const {
  std::vector<std::pair<std::string, NativeRef>> out(byName_.begin(), byName_.end());
  std::sort(out.begin(), out.end());
  return out;
}

// --- Bridge -----------------------------------------------------------------------

Bridge::Bridge(Runtime& rt) : rt_(rt) {
  rt_.managed.setPeerDelegate(this);
  auto guard = rt_.lock.enterNative();
  const auto& b = rt_.natives.builtins();
  for (NativeRef t : {b.type, b.int_, b.float_, b.str, b.tuple, b.list, b.dict, b.slice, b.module, b.cfunction,
                      b.capsule, b.noneType, b.bool_, b.notImplementedType, b.ellipsisType}) {
    registerStaticType(t);
  }
  for (std::size_t i = 0; i < kSingletonCount; ++i) {
    const auto id = static_cast<SingletonId>(i);
    rt_.natives.setPeer(rt_.natives.singleton(id), rt_.managed.singleton(id));
  }
}

Strategy Bridge::strategyFor(NativeRef type) const { return strategyForKind(rt_.natives.typeInfo(type).instanceKind); }

ManagedHandle Bridge::registerStaticType(NativeRef type) {
  auto guard = rt_.lock.enterNative();
  const auto& info = rt_.natives.typeInfo(type);
  if (info.isHeapType) throw ExtensionError("heap type " + info.qualifiedName() + " cannot be registered statically");
  if (auto h = statics_.byRef(type)) return *h;
  const ManagedHandle h = rt_.managed.newPeerType(type.addr);
  rt_.managed.setFinalizable(h, false);
  rt_.managed.addRoot(h);
  statics_.add(type, info.qualifiedName(), h);
  return h;
}

std::optional<NativeRef> Bridge::lookup(ManagedHandle h) const {
  if (auto it = table_.find(h.id); it != table_.end()) return it->second;
  return std::nullopt;
}

void Bridge::forget(ManagedHandle h) { table_.erase(h.id); }

ConversionStats Bridge::stats() const {
  return ConversionStats{toManagedHit_.load(), toManagedInit_.load(), toNativeHit_.load(), toNativeInit_.load()};
}

ManagedObject Bridge::counterpartShell(NativeRef r, Strategy s) {
  auto& n = rt_.natives;
  ManagedObject obj;
  obj.finalizable = true;
  auto set = [&](ManagedKind kind, ManagedObject::Payload payload) {
    obj.kind = kind;
    obj.payload = std::move(payload);
  };
  switch (n.kind(r)) {
    case NativeKind::Int: set(ManagedKind::Int, n.intValue(r)); break;
    case NativeKind::Float: set(ManagedKind::Float, n.floatValue(r)); break;
    case NativeKind::Str: set(ManagedKind::Str, n.strValue(r)); break;
    case NativeKind::Tuple: set(ManagedKind::Tuple, ManagedObject::HandleVec{}); break;
    case NativeKind::List:
      set(ManagedKind::List, std::shared_ptr<ListBackend>(std::make_shared<NativeListBackend>(rt_, r)));
      break;
    case NativeKind::Dict: set(ManagedKind::Dict, ManagedObject::DictItems{}); break;
    case NativeKind::Slice: set(ManagedKind::Slice, ManagedObject::HandleVec(3)); break;
    case NativeKind::Module: set(ManagedKind::Module, ManagedObject::ModuleData{n.module(r).name}); break;
    case NativeKind::Type: set(ManagedKind::PeerType, ManagedObject::NativeAddr{r.addr}); break;
    case NativeKind::CFunction:
    case NativeKind::Capsule:
    case NativeKind::Instance: set(ManagedKind::Peer, ManagedObject::NativeAddr{r.addr}); break;
    case NativeKind::Singleton:
      throw ConversionError("singletons are interned, not converted");
  }
  if (s == Strategy::Peer && obj.kind != ManagedKind::Peer && obj.kind != ManagedKind::PeerType) {
    throw ConversionError("kind " + std::string(kindName(n.kind(r))) + " has no peer representation");
  }
  return obj;
}

void Bridge::link(NativeRef r, ManagedHandle h, Strategy s) {
  auto& n = rt_.natives;
  n.setPeer(r, h);
  n.setFlags(r, static_cast<std::uint16_t>((n.flags(r) & hflag::kHasGcHead) | strategyFlag(s) | hflag::kInitialized));
  table_[h.id] = r;
  rt_.gc.onLinked(r, h);
}

ManagedHandle Bridge::toManaged(NativeRef r) {
  if (!r) return kNullHandle;
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  const NativeKind kind = n.kind(r);
  if (kind == NativeKind::Singleton) {
    ++toManagedHit_;
    return rt_.managed.singleton(n.singletonId(r));
  }
  if (kind == NativeKind::Type) {
    if (auto h = statics_.byRef(r)) {
      ++toManagedHit_;
      return *h;
    }
  }
  if (const ManagedHandle h = n.peer(r)) {
    ++toManagedHit_;
    return h;
  }

  ++toManagedInit_;
  const Strategy s = strategyFor(n.typeOf(r));
  ManagedObject shell = counterpartShell(r, s);
  ManagedHandle h;
  if (auto head = rt_.gc.headOf(r)) {
    // The GC head already pins r; it becomes the counterpart in place.
    rt_.managed.replace(*head, std::move(shell));
    h = *head;
    rt_.gc.onHeadPromoted(r);
  } else {
    h = rt_.managed.adopt(std::move(shell));
    n.incref(r);
  }
  // Link before filling, so cyclic structures resolve to this handle.
  link(r, h, s);
  syncFromNative(r, h);
  if (s != Strategy::Peer) n.setFlags(r, n.flags(r) | hflag::kSyncOnInitDone);
  return h;
}

void Bridge::syncFromNative(NativeRef r, ManagedHandle h) {
  auto& n = rt_.natives;
  auto& m = rt_.managed;
  switch (n.kind(r)) {
    case NativeKind::Tuple: {
      const std::vector<NativeRef> items(n.items(r).begin(), n.items(r).end());
      std::vector<ManagedHandle> handles;
      handles.reserve(items.size());
      for (NativeRef x : items) handles.push_back(toManaged(x));
      m.setTupleItems(h, std::move(handles));
      break;
    }
    case NativeKind::Slice: {
      const SliceInfo s = n.slice(r);
      auto part = [&](NativeRef x) { return x ? toManaged(x) : m.singleton(SingletonId::None); };
      m.setTupleItems(h, {part(s.start), part(s.stop), part(s.step)});
      break;
    }
    case NativeKind::Dict: {
      // The managed twin becomes the only store; the native shell forwards.
      const std::vector<std::pair<NativeRef, NativeRef>> entries(n.dictEntries(r).begin(), n.dictEntries(r).end());
      for (auto [k, v] : entries) m.dictSet(h, toManaged(k), toManaged(v));
      n.clearPayload(r);
      break;
    }
    case NativeKind::Module: {
      const NativeRef dict = n.module(r).dict;
      if (!dict) break;
      std::vector<std::pair<std::string, NativeRef>> entries;
      const ManagedHandle dictTwin = (n.flags(dict) & hflag::kDelegate) ? n.peer(dict) : kNullHandle;
      if (dictTwin) {
        for (auto [k, v] : m.dictItems(dictTwin)) {
          if (m.kind(k) == ManagedKind::Str) m.setAttr(h, m.strValue(k), v);
        }
      } else {
        for (auto [k, v] : n.dictEntries(dict)) {
          if (n.kind(k) == NativeKind::Str) entries.emplace_back(n.strValue(k), v);
        }
        for (const auto& [name, v] : entries) m.setAttr(h, name, toManaged(v));
      }
      n.setModuleDict(r, kNullRef);
      break;
    }
    default:
      break;
  }
}

NativeRef Bridge::toNative(ManagedHandle h) {
  if (!h) return kNullRef;
  auto guard = rt_.lock.enterNative();
  if (auto it = table_.find(h.id); it != table_.end()) {
    ++toNativeHit_;
    return it->second;
  }
  const ManagedKind kind = rt_.managed.kind(h);
  switch (kind) {
    case ManagedKind::Singleton:
      ++toNativeHit_;
      return rt_.natives.singleton(rt_.managed.singletonId(h));
    case ManagedKind::Peer:
    case ManagedKind::PeerType:
      ++toNativeHit_;
      return NativeRef{rt_.managed.nativeAddr(h)};
    case ManagedKind::Function:
    case ManagedKind::GcHeadCarrier:
      throw ConversionError("managed " + std::string(managedKindName(kind)) + " has no native representation");
    default:
      break;
  }
  ++toNativeInit_;
  return nativeFromManaged(h, kind);
}

NativeRef Bridge::nativeFromManaged(ManagedHandle h, ManagedKind kind) {
  auto& n = rt_.natives;
  auto& m = rt_.managed;
  // The allocation's own reference is the pin held by h.
  NativeRef r;
  Strategy s = Strategy::Mirror;
  switch (kind) {
    case ManagedKind::Int:
      r = n.newInt(m.intValue(h));
      link(r, h, s);
      break;
    case ManagedKind::Float:
      r = n.newFloat(m.floatValue(h));
      link(r, h, s);
      break;
    case ManagedKind::Str:
      r = n.newStr(m.strValue(h));
      link(r, h, s);
      break;
    case ManagedKind::Tuple: {
      const auto items = m.tupleItems(h);
      r = n.newTupleUninit(items.size());
      link(r, h, s);
      for (std::size_t i = 0; i < items.size(); ++i) n.tupleInitItem(r, i, toNative(items[i]));
      break;
    }
    case ManagedKind::List: {
      const auto items = m.listItems(h);
      r = n.newList();
      link(r, h, s);
      for (ManagedHandle item : items) n.listAppend(r, toNative(item));
      m.swapListBackend(h, std::make_shared<NativeListBackend>(rt_, r));
      break;
    }
    case ManagedKind::Dict:
      s = Strategy::Delegate;
      r = n.newDict();
      link(r, h, s);
      break;
    case ManagedKind::Slice: {
      s = Strategy::Delegate;
      const auto parts = m.tupleItems(h);
      r = n.newSlice(toNative(parts.at(0)), toNative(parts.at(1)), toNative(parts.at(2)));
      link(r, h, s);
      break;
    }
    case ManagedKind::Module:
      s = Strategy::Delegate;
      r = n.newModule(m.moduleName(h));
      n.setModuleDict(r, kNullRef);
      link(r, h, s);
      break;
    default:
      throw ConversionError("managed " + std::string(managedKindName(kind)) + " has no native representation");
  }
  m.setFinalizable(h, true);
  n.setFlags(r, n.flags(r) | hflag::kSyncOnInitDone);
  return r;
}

// --- peer delegation ----------------------------------------------------------------

std::optional<ManagedHandle> Bridge::peerGetAttr(ManagedHandle peer, std::string_view name) {
  auto guard = rt_.lock.enterNative();
  const NativeRef r = toNative(peer);
  NativeRef result;
  try {
    result = rt_.api.getAttr(r, name);
  } catch (const AttributeError&) {
    throw;
  } catch (const Error& e) {
    throw AttributeError(std::string(name) + ": " + e.what());
  }
  if (!result) return std::nullopt;
  const ManagedHandle h = toManaged(result);
  rt_.natives.decref(result);
  return h;
}

std::optional<ManagedHandle> Bridge::getAttr(ManagedHandle peer, std::string_view name) {
  return peerGetAttr(peer, name);
}

ManagedHandle Bridge::call(ManagedHandle callable, std::span<const ManagedHandle> args) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  const NativeRef fn = toNative(callable);
  const NativeRef tuple = n.newTupleUninit(args.size());
  NativeRef result;
  try {
    for (std::size_t i = 0; i < args.size(); ++i) n.tupleInitItem(tuple, i, toNative(args[i]));
    result = rt_.api.call(fn, tuple);
  } catch (...) {
    n.decref(tuple);
    throw;
  }
  const ManagedHandle h = toManaged(result);
  n.decref(result);
  n.decref(tuple);
  return h;
}

std::string Bridge::repr(ManagedHandle peer) {
  auto guard = rt_.lock.enterNative();
  return rt_.api.repr(toNative(peer));
}

std::string Bridge::str(ManagedHandle peer) {
  auto guard = rt_.lock.enterNative();
  return rt_.api.str(toNative(peer));
}

// --- NativeListBackend ----------------------------------------------------------------

std::size_t NativeListBackend::size() const {
  auto guard = rt_.lock.enterNative();
  return rt_.natives.size(list_);
}

ManagedHandle NativeListBackend::get(std::size_t index) const {
  auto guard = rt_.lock.enterNative();
  const auto items = rt_.natives.items(list_);
  if (index >= items.size()) throw TypeError("list index out of range");
  return rt_.bridge.toManaged(items[index]);
}

void NativeListBackend::set(std::size_t index, ManagedHandle item) {
  auto guard = rt_.lock.enterNative();
  rt_.natives.listSet(list_, index, rt_.bridge.toNative(item));
}

void NativeListBackend::insert(std::size_t index, ManagedHandle item) {
  auto guard = rt_.lock.enterNative();
  rt_.natives.listInsert(list_, index, rt_.bridge.toNative(item));
}

void NativeListBackend::erase(std::size_t index) {
  auto guard = rt_.lock.enterNative();
  rt_.natives.listDelete(list_, index);
}

// Runs during marking with the boundary lock already held by the collector;
// reads headers only.
void NativeListBackend::trace(std::vector<ManagedHandle>& out) const {
  const auto& n = rt_.natives;
  if (!n.isLive(list_)) return;
  for (NativeRef item : n.items(list_)) {
    if (const ManagedHandle p = n.peer(item)) out.push_back(p);
  }
}

}  // namespace xrt
