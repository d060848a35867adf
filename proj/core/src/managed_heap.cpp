#include "xrt/managed_heap.hpp"

#include <algorithm>
#include <unordered_set>

#include "xrt/error.hpp"
#include "xrt/render.hpp"

namespace xrt {

std::string_view managedKindName(ManagedKind kind) noexcept {
  switch (kind) {
    case ManagedKind::Int: return "int";
    case ManagedKind::Float: return "float";
    case ManagedKind::Str: return "str";
    case ManagedKind::Tuple: return "tuple";
    case ManagedKind::List: return "list";
    case ManagedKind::Dict: return "dict";
    case ManagedKind::Slice: return "slice";
    case ManagedKind::Module: return "module";
    case ManagedKind::Function: return "function";
    case ManagedKind::Peer: return "peer";
    case ManagedKind::PeerType: return "peer-type";
    case ManagedKind::GcHeadCarrier: return "gc-head";
    case ManagedKind::Singleton: return "singleton";
  }
  return "?";
}

// --- LocalListBackend ---------------------------------------------------------

std::size_t LocalListBackend::size() const {
  std::lock_guard lk(mutex_);
  return items_.size();
}

ManagedHandle LocalListBackend::get(std::size_t index) const {
  std::lock_guard lk(mutex_);
  if (index >= items_.size()) throw TypeError("list index out of range");
  return items_[index];
}

void LocalListBackend::set(std::size_t index, ManagedHandle item) {
  std::lock_guard lk(mutex_);
  if (index >= items_.size()) throw TypeError("list assignment index out of range");
  items_[index] = item;
}

void LocalListBackend::insert(std::size_t index, ManagedHandle item) {
  std::lock_guard lk(mutex_);
  if (index > items_.size()) throw TypeError("list insert index out of range");
  items_.insert(items_.begin() + static_cast<std::ptrdiff_t>(index), item);
}

void LocalListBackend::erase(std::size_t index) {
  std::lock_guard lk(mutex_);
  if (index >= items_.size()) throw TypeError("list deletion index out of range");
  items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(index));
}

void LocalListBackend::trace(std::vector<ManagedHandle>& out) const {
  std::lock_guard lk(mutex_);
  out.insert(out.end(), items_.begin(), items_.end());
}

std::vector<ManagedHandle> LocalListBackend::snapshot() const {
  std::lock_guard lk(mutex_);
  return items_;
}

// --- FinalizationQueue --------------------------------------------------------

void FinalizationQueue::push(std::span<const ManagedHandle> handles) {
  {
    std::lock_guard lk(mutex_);
    items_.insert(items_.end(), handles.begin(), handles.end());
    enqueued_ += handles.size();
  }
  ready_.notify_all();
}

std::optional<ManagedHandle> FinalizationQueue::poll() {
  std::lock_guard lk(mutex_);
  if (items_.empty()) return std::nullopt;
  const ManagedHandle h = items_.front();
  items_.pop_front();
  ++polled_;
  return h;
}

std::optional<ManagedHandle> FinalizationQueue::waitPoll(std::chrono::milliseconds timeout) {
  std::unique_lock lk(mutex_);
  if (!ready_.wait_for(lk, timeout, [&] { return !items_.empty(); })) return std::nullopt;
  const ManagedHandle h = items_.front();
  items_.pop_front();
  ++polled_;
  return h;
}

std::size_t FinalizationQueue::size() const {
  std::lock_guard lk(mutex_);
  return items_.size();
}

std::uint64_t FinalizationQueue::totalEnqueued() const {
  std::lock_guard lk(mutex_);
  return enqueued_;
}

std::uint64_t FinalizationQueue::totalPolled() const {
  std::lock_guard lk(mutex_);
  return polled_;
}

void FinalizationQueue::wakeAll() { ready_.notify_all(); }

// --- ManagedHeap ----------------------------------------------------------------

ManagedHeap::ManagedHeap() {
  for (std::size_t i = 0; i < kSingletonCount; ++i) {
    ManagedObject obj;
    obj.kind = ManagedKind::Singleton;
    obj.payload = static_cast<SingletonId>(i);
    singletons_[i] = insert(std::move(obj));
    roots_[singletons_[i].id] = 1;
  }
}

ManagedHandle ManagedHeap::insert(ManagedObject object) {
  std::lock_guard lk(mutex_);
  const ManagedHandle h{nextId_++};
  objects_.emplace(h.id, std::move(object));
  return h;
}

ManagedObject& ManagedHeap::objectLocked(ManagedHandle h) {
  auto it = objects_.find(h.id);
  if (it == objects_.end() || it->second.zombie) {
    throw InvariantViolation("use of dead managed handle #" + std::to_string(h.id));
  }
  return it->second;
}

const ManagedObject& ManagedHeap::objectLocked(ManagedHandle h) const {
  auto it = objects_.find(h.id);
  if (it == objects_.end() || it->second.zombie) {
    throw InvariantViolation("use of dead managed handle #" + std::to_string(h.id));
  }
  return it->second;
}

namespace {

template <class T>
ManagedObject make(ManagedKind kind, T payload) {
  ManagedObject obj;
  obj.kind = kind;
  obj.payload = std::move(payload);
  return obj;
}

template <class T>
const T& payloadOf(const ManagedObject& obj, ManagedKind expected) {
  if (obj.kind != expected || !std::holds_alternative<T>(obj.payload)) {
    throw TypeError("expected managed " + std::string(managedKindName(expected)) + ", got " +
                    std::string(managedKindName(obj.kind)));
  }
  return std::get<T>(obj.payload);
}

}  // namespace

ManagedHandle ManagedHeap::newInt(std::int64_t v) { return insert(make(ManagedKind::Int, v)); }
ManagedHandle ManagedHeap::newFloat(double v) { return insert(make(ManagedKind::Float, v)); }
ManagedHandle ManagedHeap::newStr(std::string v) { return insert(make(ManagedKind::Str, std::move(v))); }

ManagedHandle ManagedHeap::newTuple(std::vector<ManagedHandle> items) {
  return insert(make(ManagedKind::Tuple, std::move(items)));
}

ManagedHandle ManagedHeap::newList(std::vector<ManagedHandle> items) {
  return insert(make(ManagedKind::List,
                     std::shared_ptr<ListBackend>(std::make_shared<LocalListBackend>(std::move(items)))));
}

ManagedHandle ManagedHeap::newDict() { return insert(make(ManagedKind::Dict, ManagedObject::DictItems{})); }

ManagedHandle ManagedHeap::newSlice(ManagedHandle start, ManagedHandle stop, ManagedHandle step) {
  return insert(make(ManagedKind::Slice, ManagedObject::HandleVec{start, stop, step}));
}

ManagedHandle ManagedHeap::newModule(std::string name) {
  return insert(make(ManagedKind::Module, ManagedObject::ModuleData{std::move(name)}));
}

ManagedHandle ManagedHeap::newFunction(std::string name, ManagedBody body) {
  return insert(make(ManagedKind::Function, ManagedObject::FunctionData{std::move(name), std::move(body)}));
}

ManagedHandle ManagedHeap::newPeer(std::uint64_t nativeAddr) {
  if (nativeAddr == 0) throw InvariantViolation("peer over a null native address");
  auto obj = make(ManagedKind::Peer, ManagedObject::NativeAddr{nativeAddr});
  obj.finalizable = true;
  return insert(std::move(obj));
}

ManagedHandle ManagedHeap::newPeerType(std::uint64_t nativeAddr) {
  if (nativeAddr == 0) throw InvariantViolation("peer type over a null native address");
  auto obj = make(ManagedKind::PeerType, ManagedObject::NativeAddr{nativeAddr});
  obj.finalizable = true;
  return insert(std::move(obj));
}

ManagedHandle ManagedHeap::newGcHead(std::uint64_t nativeAddr) {
  auto obj = make(ManagedKind::GcHeadCarrier, ManagedObject::NativeAddr{nativeAddr});
  obj.finalizable = true;
  return insert(std::move(obj));
}

ManagedHandle ManagedHeap::adopt(ManagedObject object) {
  object.zombie = false;
  return insert(std::move(object));
}

void ManagedHeap::replace(ManagedHandle h, ManagedObject object) {
  std::lock_guard lk(mutex_);
  auto& slot = objectLocked(h);
  object.nativeEdges = std::move(slot.nativeEdges);
  object.edgeGeneration = slot.edgeGeneration;
  object.finalizable = object.finalizable || slot.finalizable;
  object.zombie = false;
  slot = std::move(object);
}

void ManagedHeap::setTupleItems(ManagedHandle h, std::vector<ManagedHandle> items) {
  std::lock_guard lk(mutex_);
  auto& obj = objectLocked(h);
  if (obj.kind != ManagedKind::Tuple && obj.kind != ManagedKind::Slice) throw TypeError("setTupleItems on a non-tuple");
  obj.payload = std::move(items);
}

void ManagedHeap::swapListBackend(ManagedHandle h, std::shared_ptr<ListBackend> backend) {
  std::lock_guard lk(mutex_);
  auto& obj = objectLocked(h);
  if (obj.kind != ManagedKind::List) throw TypeError("swapListBackend on a non-list");
  obj.payload = std::move(backend);
}

// --- inspection -------------------------------------------------------------------

bool ManagedHeap::isLive(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  auto it = objects_.find(h.id);
  return it != objects_.end() && !it->second.zombie;
}

bool ManagedHeap::isZombie(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  auto it = objects_.find(h.id);
  return it != objects_.end() && it->second.zombie;
}

ManagedKind ManagedHeap::kind(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return objectLocked(h).kind;
}

std::int64_t ManagedHeap::intValue(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return payloadOf<std::int64_t>(objectLocked(h), ManagedKind::Int);
}

double ManagedHeap::floatValue(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return payloadOf<double>(objectLocked(h), ManagedKind::Float);
}

std::string ManagedHeap::strValue(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return payloadOf<std::string>(objectLocked(h), ManagedKind::Str);
}

std::vector<ManagedHandle> ManagedHeap::tupleItems(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  const auto& obj = objectLocked(h);
  if (obj.kind == ManagedKind::Slice) return std::get<ManagedObject::HandleVec>(obj.payload);
  return payloadOf<ManagedObject::HandleVec>(obj, ManagedKind::Tuple);
}

std::uint64_t ManagedHeap::nativeAddr(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  const auto& obj = objectLocked(h);
  if (!std::holds_alternative<ManagedObject::NativeAddr>(obj.payload)) {
    throw TypeError("managed " + std::string(managedKindName(obj.kind)) + " carries no native address");
  }
  return std::get<ManagedObject::NativeAddr>(obj.payload).addr;
}

SingletonId ManagedHeap::singletonId(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return payloadOf<SingletonId>(objectLocked(h), ManagedKind::Singleton);
}

std::string ManagedHeap::moduleName(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return payloadOf<ManagedObject::ModuleData>(objectLocked(h), ManagedKind::Module).name;
}

std::string ManagedHeap::functionName(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return payloadOf<ManagedObject::FunctionData>(objectLocked(h), ManagedKind::Function).name;
}

bool ManagedHeap::valueEquals(ManagedHandle a, ManagedHandle b) const {
  if (a == b) return true;
  if (!a || !b) return false;
  std::lock_guard lk(mutex_);
  const auto& x = objectLocked(a);
  const auto& y = objectLocked(b);
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case ManagedKind::Int: return std::get<std::int64_t>(x.payload) == std::get<std::int64_t>(y.payload);
    case ManagedKind::Float: return std::get<double>(x.payload) == std::get<double>(y.payload);
    case ManagedKind::Str: return std::get<std::string>(x.payload) == std::get<std::string>(y.payload);
    default: return false;
  }
}

std::optional<ManagedHandle> ManagedHeap::getAttrLocal(ManagedHandle h, std::string_view name) const {
  std::lock_guard lk(mutex_);
  const auto& attrs = objectLocked(h).attributes;
  if (auto it = attrs.find(name); it != attrs.end()) return it->second;
  return std::nullopt;
}

void ManagedHeap::setAttr(ManagedHandle h, std::string name, ManagedHandle value) {
  std::lock_guard lk(mutex_);
  auto& obj = objectLocked(h);
  if (obj.kind == ManagedKind::Peer || obj.kind == ManagedKind::PeerType) {
    throw AttributeError("attribute writes through a native peer are not supported");
  }
  if (obj.kind == ManagedKind::Singleton) throw AttributeError("singletons are read-only");
  obj.attributes[std::move(name)] = value;
}

std::vector<std::pair<std::string, ManagedHandle>> ManagedHeap::attributes(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  const auto& attrs = objectLocked(h).attributes;
  return {attrs.begin(), attrs.end()};
}

// --- lists ------------------------------------------------------------------------

std::shared_ptr<ListBackend> ManagedHeap::backendOf(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return payloadOf<std::shared_ptr<ListBackend>>(objectLocked(h), ManagedKind::List);
}

std::size_t ManagedHeap::listSize(ManagedHandle h) const { return backendOf(h)->size(); }
ManagedHandle ManagedHeap::listGet(ManagedHandle h, std::size_t index) const { return backendOf(h)->get(index); }
void ManagedHeap::listSet(ManagedHandle h, std::size_t index, ManagedHandle item) { backendOf(h)->set(index, item); }
void ManagedHeap::listInsert(ManagedHandle h, std::size_t index, ManagedHandle item) {
  backendOf(h)->insert(index, item);
}
void ManagedHeap::listErase(ManagedHandle h, std::size_t index) { backendOf(h)->erase(index); }
void ManagedHeap::listAppend(ManagedHandle h, ManagedHandle item) { backendOf(h)->append(item); }
std::shared_ptr<ListBackend> ManagedHeap::listBackend(ManagedHandle h) const { return backendOf(h); }

std::vector<ManagedHandle> ManagedHeap::listItems(ManagedHandle h) const {
  const auto backend = backendOf(h);
  std::vector<ManagedHandle> out;
  const std::size_t n = backend->size();
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(backend->get(i));
  return out;
}

// --- dicts --------------------------------------------------------------------------

std::optional<ManagedHandle> ManagedHeap::dictGet(ManagedHandle h, ManagedHandle key) const {
  const auto items = dictItems(h);
  for (const auto& [k, v] : items) {
    if (valueEquals(k, key)) return v;
  }
  return std::nullopt;
}

void ManagedHeap::dictSet(ManagedHandle h, ManagedHandle key, ManagedHandle value) {
  const auto items = dictItems(h);
  std::size_t index = items.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (valueEquals(items[i].first, key)) {
      index = i;
      break;
    }
  }
  std::lock_guard lk(mutex_);
  auto& obj = objectLocked(h);
  auto& entries = std::get<ManagedObject::DictItems>(obj.payload);
  if (index < entries.size()) {
    entries[index].second = value;
  } else {
    entries.emplace_back(key, value);
  }
}

bool ManagedHeap::dictDel(ManagedHandle h, ManagedHandle key) {
  const auto items = dictItems(h);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (valueEquals(items[i].first, key)) {
      std::lock_guard lk(mutex_);
      auto& entries = std::get<ManagedObject::DictItems>(objectLocked(h).payload);
      entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(i));
      return true;
    }
  }
  return false;
}

std::vector<std::pair<ManagedHandle, ManagedHandle>> ManagedHeap::dictItems(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return payloadOf<ManagedObject::DictItems>(objectLocked(h), ManagedKind::Dict);
}

// --- mirrored connectivity ------------------------------------------------------------

std::vector<ManagedHandle> ManagedHeap::nativeEdges(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return objectLocked(h).nativeEdges;
}

void ManagedHeap::setNativeEdges(ManagedHandle h, std::vector<ManagedHandle> edges, std::uint64_t generation) {
  std::lock_guard lk(mutex_);
  auto& obj = objectLocked(h);
  obj.nativeEdges = std::move(edges);
  obj.edgeGeneration = generation;
}

void ManagedHeap::addNativeEdge(ManagedHandle h, ManagedHandle to) {
  std::lock_guard lk(mutex_);
  objectLocked(h).nativeEdges.push_back(to);
}

std::uint64_t ManagedHeap::edgeGeneration(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return objectLocked(h).edgeGeneration;
}

void ManagedHeap::setFinalizable(ManagedHandle h, bool finalizable) {
  std::lock_guard lk(mutex_);
  objectLocked(h).finalizable = finalizable;
}

bool ManagedHeap::isFinalizable(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return objectLocked(h).finalizable;
}

// --- language entry points --------------------------------------------------------------

void ManagedHeap::checkEntry() {
  if (lockProbe_ && lockProbe_()) ++entriesUnderLock_;
}

PeerDelegate& ManagedHeap::delegate() const {
  if (delegate_ == nullptr) throw InvariantViolation("no peer delegate installed");
  return *delegate_;
}

std::optional<ManagedHandle> ManagedHeap::builtinMethod(ManagedHandle h, ManagedKind kind, std::string_view name) {
  if (kind == ManagedKind::List && name == "append") {
    return newFunction("append", [h](ManagedHeap& heap, std::span<const ManagedHandle> args) {
      if (args.size() != 1) throw ArityError("append() takes exactly one argument");
      heap.listAppend(h, args[0]);
      return heap.singleton(SingletonId::None);
    });
  }
  if (kind == ManagedKind::Dict && name == "get") {
    return newFunction("get", [h](ManagedHeap& heap, std::span<const ManagedHandle> args) {
      if (args.size() != 1) throw ArityError("get() takes exactly one argument");
      return heap.dictGet(h, args[0]).value_or(heap.singleton(SingletonId::None));
    });
  }
  return std::nullopt;
}

std::optional<ManagedHandle> ManagedHeap::findAttr(ManagedHandle h, std::string_view name) {
  checkEntry();
  const ManagedKind k = kind(h);
  if (k == ManagedKind::Peer || k == ManagedKind::PeerType) return delegate().getAttr(h, name);
  if (auto local = getAttrLocal(h, name)) return local;
  return builtinMethod(h, k, name);
}

ManagedHandle ManagedHeap::callObject(ManagedHandle h, ManagedHandle argsTuple) {
  const auto args = tupleItems(argsTuple);
  return callObject(h, std::span<const ManagedHandle>(args));
}

ManagedHandle ManagedHeap::callObject(ManagedHandle h, std::span<const ManagedHandle> args) {
  checkEntry();
  const ManagedKind k = kind(h);
  if (k == ManagedKind::Peer || k == ManagedKind::PeerType) return delegate().call(h, args);
  if (k == ManagedKind::Function) {
    ManagedBody body;
    {
      std::lock_guard lk(mutex_);
      body = std::get<ManagedObject::FunctionData>(objectLocked(h).payload).body;
    }
    return body(*this, args);
  }
  throw TypeError("'" + std::string(managedKindName(k)) + "' object is not callable");
}

std::string ManagedHeap::reprOf(ManagedHandle h) { return render(h, true); }
std::string ManagedHeap::strOf(ManagedHandle h) { return render(h, false); }

std::string ManagedHeap::render(ManagedHandle h, bool repr) {
  // Guards self-containing containers: "[[...]]".
  thread_local std::vector<std::uint64_t> active;
  const ManagedKind k = kind(h);
  switch (k) {
    case ManagedKind::Int: return render::formatInt(intValue(h));
    case ManagedKind::Float: return render::formatFloat(floatValue(h));
    case ManagedKind::Str: return repr ? render::quoteBytes(strValue(h)) : strValue(h);
    case ManagedKind::Singleton: {
      static constexpr std::string_view names[] = {"None", "True", "False", "NotImplemented", "Ellipsis"};
      return std::string(names[static_cast<std::size_t>(singletonId(h))]);
    }
    case ManagedKind::Module: return "<module '" + moduleName(h) + "'>";
    case ManagedKind::Function: return "<function " + functionName(h) + ">";
    case ManagedKind::GcHeadCarrier: return "<gc-head native@" + std::to_string(nativeAddr(h)) + ">";
    case ManagedKind::Peer:
    case ManagedKind::PeerType: return repr ? delegate().repr(h) : delegate().str(h);
    default: break;
  }

  const char* recursion = k == ManagedKind::List ? "[...]" : k == ManagedKind::Dict ? "{...}" : "(...)";
  if (std::find(active.begin(), active.end(), h.id) != active.end()) return recursion;
  active.push_back(h.id);
  struct Pop {
    ~Pop() { active.pop_back(); }
  } pop;

  auto join = [&](const std::vector<ManagedHandle>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += render(items[i], true);
    }
    return out;
  };
  switch (k) {
    case ManagedKind::Tuple: {
      const auto items = tupleItems(h);
      return "(" + join(items) + (items.size() == 1 ? ",)" : ")");
    }
    case ManagedKind::List: return "[" + join(listItems(h)) + "]";
    case ManagedKind::Slice: return "slice(" + join(tupleItems(h)) + ")";
    case ManagedKind::Dict: {
      std::string out = "{";
      bool first = true;
      for (const auto& [key, value] : dictItems(h)) {
        if (!first) out += ", ";
        first = false;
        out += render(key, true) + ": " + render(value, true);
      }
      return out + "}";
    }
    default: return "<?>";
  }
}

// --- roots and collection ----------------------------------------------------------------

void ManagedHeap::addRoot(ManagedHandle h) {
  std::lock_guard lk(mutex_);
  objectLocked(h);
  ++roots_[h.id];
}

void ManagedHeap::removeRoot(ManagedHandle h) {
  std::lock_guard lk(mutex_);
  auto it = roots_.find(h.id);
  if (it == roots_.end()) throw InvariantViolation("removeRoot of unrooted handle #" + std::to_string(h.id));
  if (--it->second == 0) roots_.erase(it);
}

bool ManagedHeap::isRooted(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  return roots_.contains(h.id);
}

std::vector<ManagedHandle> ManagedHeap::roots() const {
  std::lock_guard lk(mutex_);
  std::vector<ManagedHandle> out;
  out.reserve(roots_.size());
  for (const auto& [id, count] : roots_) out.push_back(ManagedHandle{id});
  std::sort(out.begin(), out.end());
  return out;
}

void ManagedHeap::addRootProvider(std::function<void(std::vector<ManagedHandle>&)> provider) {
  rootProviders_.push_back(std::move(provider));
}

void ManagedHeap::setSweepObserver(std::function<void(std::span<const ManagedHandle>)> observer) {
  sweepObserver_ = std::move(observer);
}

void ManagedHeap::collectReferents(const ManagedObject& obj, std::vector<ManagedHandle>& out) {
  for (const auto& [name, h] : obj.attributes) out.push_back(h);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ManagedObject::HandleVec>) {
          out.insert(out.end(), p.begin(), p.end());
        } else if constexpr (std::is_same_v<T, ManagedObject::DictItems>) {
          for (const auto& [k, v] : p) {
            out.push_back(k);
            out.push_back(v);
          }
        } else if constexpr (std::is_same_v<T, std::shared_ptr<ListBackend>>) {
          if (p) p->trace(out);
        }
      },
      obj.payload);
}

std::vector<ManagedHandle> ManagedHeap::referents(ManagedHandle h) const {
  std::lock_guard lk(mutex_);
  std::vector<ManagedHandle> out;
  collectReferents(objectLocked(h), out);
  return out;
}

CollectReport ManagedHeap::gcCollect() {
  std::vector<ManagedHandle> extra;
  for (const auto& provider : rootProviders_) provider(extra);

  CollectReport report;
  {
    std::lock_guard lk(mutex_);
    std::unordered_set<std::uint64_t> marked;
    std::vector<ManagedHandle> work = extra;
    for (const auto& [id, count] : roots_) work.push_back(ManagedHandle{id});
    std::vector<ManagedHandle> scratch;
    while (!work.empty()) {
      const ManagedHandle h = work.back();
      work.pop_back();
      if (!h) continue;
      auto it = objects_.find(h.id);
      if (it == objects_.end() || it->second.zombie) continue;
      if (!marked.insert(h.id).second) continue;
      scratch.clear();
      collectReferents(it->second, scratch);
      work.insert(work.end(), scratch.begin(), scratch.end());
      work.insert(work.end(), it->second.nativeEdges.begin(), it->second.nativeEdges.end());
    }

    std::vector<std::uint64_t> garbage;
    for (const auto& [id, obj] : objects_) {
      if (!obj.zombie && !marked.contains(id)) garbage.push_back(id);
    }
    std::sort(garbage.begin(), garbage.end());
    for (std::uint64_t id : garbage) {
      auto it = objects_.find(id);
      ++report.reclaimedCount;
      if (it->second.finalizable) {
        it->second.zombie = true;
        it->second.attributes.clear();
        it->second.nativeEdges.clear();
        ++zombies_;
        report.enqueued.push_back(ManagedHandle{id});
      } else {
        objects_.erase(it);
      }
    }
    report.enqueuedFinalizables = report.enqueued.size();
  }
  if (sweepObserver_) sweepObserver_(report.enqueued);
  queue_.push(report.enqueued);
  return report;
}

void ManagedHeap::release(ManagedHandle h) {
  std::lock_guard lk(mutex_);
  auto it = objects_.find(h.id);
  if (it == objects_.end() || !it->second.zombie) {
    throw InvariantViolation("release of managed handle #" + std::to_string(h.id) + " that is not awaiting finalization");
  }
  objects_.erase(it);
  --zombies_;
}

std::size_t ManagedHeap::liveCount() const {
  std::lock_guard lk(mutex_);
  return objects_.size() - zombies_;
}

std::vector<ManagedHandle> ManagedHeap::liveHandles() const {
  std::lock_guard lk(mutex_);
  std::vector<ManagedHandle> out;
  out.reserve(objects_.size());
  for (const auto& [id, obj] : objects_) {
    if (!obj.zombie) out.push_back(ManagedHandle{id});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace xrt
