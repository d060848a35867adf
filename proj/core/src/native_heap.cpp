#include "xrt/native_heap.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "xrt/error.hpp"

namespace xrt {

namespace {

constexpr std::uint64_t alignUp(std::uint64_t n) {
  return (n + layout::kAlign - 1) & ~(layout::kAlign - 1);
}

// Body field offsets.
constexpr std::uint64_t kRefcountAt = 0;
constexpr std::uint64_t kTypeAt = 8;
constexpr std::uint64_t kKindAt = 16;
constexpr std::uint64_t kGcBitAt = 20;

// Header field offsets.
constexpr std::uint64_t kPeerAt = 0;
constexpr std::uint64_t kFlagsAt = 8;
constexpr std::uint64_t kAuxAt = 16;

std::string refText(NativeRef r) { return "native@" + std::to_string(r.addr); }

}  // namespace

std::string_view kindName(NativeKind kind) noexcept {
  switch (kind) {
    case NativeKind::Int: return "int";
    case NativeKind::Float: return "float";
    case NativeKind::Str: return "str";
    case NativeKind::Tuple: return "tuple";
    case NativeKind::List: return "list";
    case NativeKind::Dict: return "dict";
    case NativeKind::Slice: return "slice";
    case NativeKind::Module: return "module";
    case NativeKind::CFunction: return "builtin_function_or_method";
    case NativeKind::Capsule: return "PyCapsule";
    case NativeKind::Instance: return "instance";
    case NativeKind::Type: return "type";
    case NativeKind::Singleton: return "singleton";
  }
  return "?";
}

std::string TypeInfo::qualifiedName() const { return module.empty() ? name : module + "." + name; }

NativeHeap::NativeHeap(std::size_t capacityBytes) : capacity_(capacityBytes) {
  bytes_.reserve(std::min<std::size_t>(capacityBytes, std::size_t{1} << 20));
  bootstrap();
}

template <class T>
T NativeHeap::load(std::uint64_t addr) const {
  if (addr == 0 || addr + sizeof(T) > bytes_.size()) {
    throw InvariantViolation("arena read out of bounds at " + std::to_string(addr));
  }
  T value;
  std::memcpy(&value, bytes_.data() + addr, sizeof(T));
  return value;
}

template <class T>
void NativeHeap::store(std::uint64_t addr, T value) {
  if (addr == 0 || addr + sizeof(T) > bytes_.size()) {
    throw InvariantViolation("arena write out of bounds at " + std::to_string(addr));
  }
  std::memcpy(bytes_.data() + addr, &value, sizeof(T));
}

void NativeHeap::checkMutation(const char* op) const {
  if (mutationGuard_ && !mutationGuard_()) {
    throw InvariantViolation(std::string("native heap mutated without the boundary lock: ") + op);
  }
}

const NativeHeap::BlockInfo& NativeHeap::block(NativeRef r) const {
  auto it = blocks_.find(r.addr);
  if (it == blocks_.end()) throw InvariantViolation("use of dead or unknown " + refText(r));
  return it->second;
}

void NativeHeap::noteEdge(NativeRef from, NativeRef to) const {
  if (edgeObserver_ && to) edgeObserver_(from, to);
}

// --- layout ----------------------------------------------------------------

std::uint64_t NativeHeap::inlineSize(NativeRef type, NativeKind kind) const {
  switch (kind) {
    case NativeKind::Int:
    case NativeKind::Float:
    case NativeKind::Singleton:
      return 8;
    case NativeKind::Instance:
      return alignUp(typeInfo(type).basicSize);
    default:
      return 0;
  }
}

NativeRef NativeHeap::alloc(NativeRef type, NativeKind kind, bool wantsGcHead) {
  checkMutation("alloc");
  // `type` is null only while bootstrapping the type of types.
  if (type && (!isLive(type) || this->kind(type) != NativeKind::Type)) {
    throw TypeError("alloc: " + refText(type) + " is not a type object");
  }
  const std::uint64_t body = layout::kHeaderSize + (wantsGcHead ? layout::kGcHeadSize : 0);
  const std::uint64_t total = body + layout::kObjectHeadSize + (type ? inlineSize(type, kind) : 0);

  std::uint64_t start = 0;
  if (auto it = freeBySize_.find(total); it != freeBySize_.end() && !it->second.empty()) {
    start = it->second.back();
    it->second.pop_back();
  } else {
    if (bump_ + total > capacity_) {
      throw AllocationError("native arena exhausted: need " + std::to_string(total) + " bytes, " +
                            std::to_string(capacity_ - bump_) + " left");
    }
    start = bump_;
    bump_ += total;
    if (bytes_.size() < bump_) bytes_.resize(bump_);
  }
  std::memset(bytes_.data() + start, 0, total);

  const NativeRef r{start + body};
  store<std::int64_t>(r.addr + kRefcountAt, 1);
  store<std::uint64_t>(r.addr + kTypeAt, type.addr);
  store<std::uint32_t>(r.addr + kKindAt, static_cast<std::uint32_t>(kind));
  store<std::uint8_t>(r.addr + kGcBitAt, wantsGcHead ? 1 : 0);
  store<std::uint16_t>(start + kFlagsAt, wantsGcHead ? hflag::kHasGcHead : 0);

  blocks_.emplace(r.addr, BlockInfo{start, total, false});
  switch (kind) {
    case NativeKind::Str: payloads_.emplace(r.addr, std::string{}); break;
    case NativeKind::Tuple:
    case NativeKind::List: payloads_.emplace(r.addr, RefVec{}); break;
    case NativeKind::Dict: payloads_.emplace(r.addr, DictEntries{}); break;
    case NativeKind::Slice: payloads_.emplace(r.addr, SliceInfo{}); break;
    case NativeKind::Module: payloads_.emplace(r.addr, ModuleInfo{}); break;
    case NativeKind::CFunction: payloads_.emplace(r.addr, FunctionInfo{}); break;
    case NativeKind::Capsule: payloads_.emplace(r.addr, CapsuleInfo{}); break;
    case NativeKind::Type: payloads_.emplace(r.addr, TypeInfo{}); break;
    default: break;
  }
  if (kind == NativeKind::Instance && type && typeInfo(type).isHeapType) incref(type);

  ++liveCount_;
  ++allocations_;
  bytesInUse_ += total;
  bytesHighWater_ = std::max(bytesHighWater_, bytesInUse_);
  return r;
}

HeaderLoc NativeHeap::asHeader(NativeRef r) const {
  const bool gc = load<std::uint8_t>(r.addr + kGcBitAt) != 0;
  return HeaderLoc{r.addr - (gc ? layout::kGcHeadSize : 0) - layout::kHeaderSize};
}

NativeRef NativeHeap::fromHeader(HeaderLoc h) const {
  const bool gc = (load<std::uint16_t>(h.addr + kFlagsAt) & hflag::kHasGcHead) != 0;
  return NativeRef{h.addr + layout::kHeaderSize + (gc ? layout::kGcHeadSize : 0)};
}

BridgeHeader NativeHeap::header(NativeRef r) const {
  block(r);
  const HeaderLoc h = asHeader(r);
  return BridgeHeader{ManagedHandle{load<std::uint64_t>(h.addr + kPeerAt)}, load<std::uint16_t>(h.addr + kFlagsAt),
                      load<std::uint64_t>(h.addr + kAuxAt)};
}

ManagedHandle NativeHeap::peer(NativeRef r) const {
  block(r);
  return ManagedHandle{load<std::uint64_t>(asHeader(r).addr + kPeerAt)};
}

void NativeHeap::setPeer(NativeRef r, ManagedHandle h) {
  checkMutation("setPeer");
  block(r);
  store<std::uint64_t>(asHeader(r).addr + kPeerAt, h.id);
}

std::uint16_t NativeHeap::flags(NativeRef r) const {
  block(r);
  return load<std::uint16_t>(asHeader(r).addr + kFlagsAt);
}

void NativeHeap::setFlags(NativeRef r, std::uint16_t flags) {
  checkMutation("setFlags");
  const std::uint16_t old = this->flags(r);
  if (flags & hflag::kReservedMask) throw InvariantViolation("reserved header flag bits must stay zero");
  if ((flags ^ old) & hflag::kHasGcHead) throw InvariantViolation("HAS_GC_HEAD is fixed at allocation");
  const auto strategy = flags & hflag::kStrategyMask;
  if ((flags & hflag::kInitialized) && (strategy == 0 || (strategy & (strategy - 1)) != 0)) {
    throw InvariantViolation("an initialized header needs exactly one strategy bit");
  }
  store<std::uint16_t>(asHeader(r).addr + kFlagsAt, flags);
}

std::uint64_t NativeHeap::auxHead(NativeRef r) const { return load<std::uint64_t>(asHeader(r).addr + kAuxAt); }

void NativeHeap::setAuxHead(NativeRef r, std::uint64_t id) { store<std::uint64_t>(asHeader(r).addr + kAuxAt, id); }

// --- aux list ----------------------------------------------------------------

void NativeHeap::auxSet(NativeRef r, std::uint32_t tag, std::vector<std::byte> blob) {
  checkMutation("auxSet");
  block(r);
  for (std::uint64_t id = auxHead(r); id != 0; id = aux_.at(id).next) {
    if (auto& node = aux_.at(id); node.tag == tag) {
      node.blob = std::move(blob);
      return;
    }
  }
  const std::uint64_t id = nextAuxId_++;
  aux_.emplace(id, AuxNode{tag, std::move(blob), auxHead(r)});
  setAuxHead(r, id);
}

std::optional<std::vector<std::byte>> NativeHeap::auxGet(NativeRef r, std::uint32_t tag) const {
  block(r);
  for (std::uint64_t id = auxHead(r); id != 0; id = aux_.at(id).next) {
    if (const auto& node = aux_.at(id); node.tag == tag) return node.blob;
  }
  return std::nullopt;
}

bool NativeHeap::auxRemove(NativeRef r, std::uint32_t tag) {
  checkMutation("auxRemove");
  block(r);
  std::uint64_t prev = 0;
  for (std::uint64_t id = auxHead(r); id != 0;) {
    auto& node = aux_.at(id);
    const std::uint64_t next = node.next;
    if (node.tag == tag) {
      if (prev == 0) {
        setAuxHead(r, next);
      } else {
        aux_.at(prev).next = next;
      }
      aux_.erase(id);
      return true;
    }
    prev = id;
    id = next;
  }
  return false;
}

// --- reference counting -------------------------------------------------------

bool NativeHeap::isLive(NativeRef r) const { return blocks_.contains(r.addr); }

bool NativeHeap::isImmortal(NativeRef r) const { return block(r).immortal; }

void NativeHeap::makeImmortal(NativeRef r) {
  auto it = blocks_.find(r.addr);
  if (it == blocks_.end()) throw InvariantViolation("makeImmortal on dead " + refText(r));
  if (it->second.immortal) return;
  it->second.immortal = true;
  --liveCount_;
  ++immortalCount_;
}

std::int64_t NativeHeap::refcount(NativeRef r) const {
  block(r);
  return load<std::int64_t>(r.addr + kRefcountAt);
}

void NativeHeap::incref(NativeRef r) {
  checkMutation("incref");
  block(r);
  store<std::int64_t>(r.addr + kRefcountAt, load<std::int64_t>(r.addr + kRefcountAt) + 1);
}

void NativeHeap::decref(NativeRef r) {
  checkMutation("decref");
  std::vector<NativeRef> pending{r};
  while (!pending.empty()) {
    const NativeRef x = pending.back();
    pending.pop_back();
    if (!isLive(x)) throw InvariantViolation("decref of freed or unknown " + refText(x));
    const std::int64_t rc = load<std::int64_t>(x.addr + kRefcountAt);
    if (rc <= 0) throw InvariantViolation("decref of " + refText(x) + " with refcount 0");
    store<std::int64_t>(x.addr + kRefcountAt, rc - 1);
    if (rc - 1 > 0) continue;
    if (block(x).immortal) throw InvariantViolation("immortal " + refText(x) + " reached refcount 0");
    deallocate(x, pending);
  }
}

void NativeHeap::deallocate(NativeRef r, std::vector<NativeRef>& released) {
  for (std::uint64_t id = auxHead(r); id != 0;) {
    const std::uint64_t next = aux_.at(id).next;
    aux_.erase(id);
    id = next;
  }
  releasePayload(r, released);
  if (kind(r) == NativeKind::Instance) {
    const NativeRef type = typeOf(r);
    if (typeInfo(type).isHeapType) released.push_back(type);
  }
  payloads_.erase(r.addr);

  const BlockInfo info = block(r);
  blocks_.erase(r.addr);
  freeBySize_[info.size].push_back(info.start);
  --liveCount_;
  ++frees_;
  bytesInUse_ -= info.size;
}

void NativeHeap::releasePayload(NativeRef r, std::vector<NativeRef>& released) {
  auto keep = [&](NativeRef x) {
    if (x) released.push_back(x);
  };
  switch (kind(r)) {
    case NativeKind::Tuple:
    case NativeKind::List: {
      auto& items = std::get<RefVec>(payloads_.at(r.addr));
      std::for_each(items.begin(), items.end(), keep);
      if (kind(r) == NativeKind::Tuple) {
        std::fill(items.begin(), items.end(), NativeRef{});
      } else {
        items.clear();
      }
      break;
    }
    case NativeKind::Dict: {
      auto& entries = std::get<DictEntries>(payloads_.at(r.addr));
      for (auto [k, v] : entries) {
        keep(k);
        keep(v);
      }
      entries.clear();
      break;
    }
    case NativeKind::Slice: {
      auto& s = std::get<SliceInfo>(payloads_.at(r.addr));
      keep(s.start);
      keep(s.stop);
      keep(s.step);
      s = SliceInfo{};
      break;
    }
    case NativeKind::Module: {
      auto& m = std::get<ModuleInfo>(payloads_.at(r.addr));
      keep(m.dict);
      m.dict = {};
      break;
    }
    case NativeKind::CFunction: {
      auto& f = std::get<FunctionInfo>(payloads_.at(r.addr));
      keep(f.self);
      f.self = {};
      break;
    }
    case NativeKind::Instance: {
      const auto& info = typeInfo(typeOf(r));
      if (info.dictOffset) {
        const std::uint64_t slot = r.addr + layout::kObjectHeadSize + *info.dictOffset;
        keep(NativeRef{load<std::uint64_t>(slot)});
        store<std::uint64_t>(slot, 0);
      }
      break;
    }
    default:
      break;
  }
}

void NativeHeap::clearPayload(NativeRef r) {
  checkMutation("clearPayload");
  block(r);
  std::vector<NativeRef> released;
  releasePayload(r, released);
  for (NativeRef x : released) decref(x);
}

// --- introspection -----------------------------------------------------------

NativeKind NativeHeap::kind(NativeRef r) const {
  block(r);
  return static_cast<NativeKind>(load<std::uint32_t>(r.addr + kKindAt));
}

NativeRef NativeHeap::typeOf(NativeRef r) const {
  block(r);
  return NativeRef{load<std::uint64_t>(r.addr + kTypeAt)};
}

void NativeHeap::visitRefs(NativeRef r, const RefVisitor& visit) const {
  auto emit = [&](NativeRef x) {
    if (x) visit(x);
  };
  switch (kind(r)) {
    case NativeKind::Tuple:
    case NativeKind::List:
      for (NativeRef x : std::get<RefVec>(payloads_.at(r.addr))) emit(x);
      break;
    case NativeKind::Dict:
      for (auto [k, v] : std::get<DictEntries>(payloads_.at(r.addr))) {
        emit(k);
        emit(v);
      }
      break;
    case NativeKind::Slice: {
      const auto& s = std::get<SliceInfo>(payloads_.at(r.addr));
      emit(s.start);
      emit(s.stop);
      emit(s.step);
      break;
    }
    case NativeKind::Module:
      emit(std::get<ModuleInfo>(payloads_.at(r.addr)).dict);
      break;
    case NativeKind::CFunction:
      emit(std::get<FunctionInfo>(payloads_.at(r.addr)).self);
      break;
    case NativeKind::Instance: {
      emit(instanceDict(r));
      const NativeRef type = typeOf(r);
      if (typeInfo(type).isHeapType) emit(type);
      break;
    }
    default:
      break;
  }
}

std::vector<NativeRef> NativeHeap::refsOf(NativeRef r) const {
  std::vector<NativeRef> out;
  visitRefs(r, [&](NativeRef x) { out.push_back(x); });
  return out;
}

// --- payload helpers -----------------------------------------------------------

template <class T>
T& NativeHeap::payloadAs(NativeRef r, NativeKind expected) {
  if (kind(r) != expected) {
    throw TypeError("expected " + std::string(kindName(expected)) + ", got " + std::string(kindName(kind(r))));
  }
  return std::get<T>(payloads_.at(r.addr));
}

template <class T>
const T& NativeHeap::payloadAs(NativeRef r, NativeKind expected) const {
  if (kind(r) != expected) {
    throw TypeError("expected " + std::string(kindName(expected)) + ", got " + std::string(kindName(kind(r))));
  }
  return std::get<T>(payloads_.at(r.addr));
}

// --- constructors ---------------------------------------------------------------

NativeRef NativeHeap::newInt(std::int64_t v) {
  const NativeRef r = alloc(builtins_.int_, NativeKind::Int, false);
  store<std::int64_t>(r.addr + layout::kObjectHeadSize, v);
  return r;
}

NativeRef NativeHeap::newFloat(double v) {
  const NativeRef r = alloc(builtins_.float_, NativeKind::Float, false);
  store<double>(r.addr + layout::kObjectHeadSize, v);
  return r;
}

NativeRef NativeHeap::newStr(std::string_view bytes) {
  const NativeRef r = alloc(builtins_.str, NativeKind::Str, false);
  std::get<std::string>(payloads_.at(r.addr)) = std::string(bytes);
  return r;
}

NativeRef NativeHeap::newTuple(std::span<const NativeRef> items) {
  const NativeRef r = newTupleUninit(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) tupleInitItem(r, i, items[i]);
  return r;
}

NativeRef NativeHeap::newTupleUninit(std::size_t size) {
  const NativeRef r = alloc(builtins_.tuple, NativeKind::Tuple, true);
  std::get<RefVec>(payloads_.at(r.addr)).resize(size);
  return r;
}

NativeRef NativeHeap::newList(std::span<const NativeRef> items) {
  const NativeRef r = alloc(builtins_.list, NativeKind::List, true);
  for (NativeRef x : items) listAppend(r, x);
  return r;
}

NativeRef NativeHeap::newDict() { return alloc(builtins_.dict, NativeKind::Dict, true); }

NativeRef NativeHeap::newSlice(NativeRef start, NativeRef stop, NativeRef step) {
  const NativeRef r = alloc(builtins_.slice, NativeKind::Slice, false);
  for (NativeRef x : {start, stop, step}) {
    if (x) incref(x);
  }
  std::get<SliceInfo>(payloads_.at(r.addr)) = SliceInfo{start, stop, step};
  return r;
}

NativeRef NativeHeap::newModule(std::string name) {
  const NativeRef r = alloc(builtins_.module, NativeKind::Module, true);
  const NativeRef dict = newDict();
  std::get<ModuleInfo>(payloads_.at(r.addr)) = ModuleInfo{std::move(name), dict};
  return r;
}

NativeRef NativeHeap::newCFunction(FunctionInfo info) {
  const NativeRef r = alloc(builtins_.cfunction, NativeKind::CFunction, true);
  if (info.self) incref(info.self);
  const NativeRef self = info.self;
  std::get<FunctionInfo>(payloads_.at(r.addr)) = std::move(info);
  if (self) noteEdge(r, self);
  return r;
}

NativeRef NativeHeap::newCapsule(std::string name, std::vector<std::byte> blob) {
  const NativeRef r = alloc(builtins_.capsule, NativeKind::Capsule, false);
  std::get<CapsuleInfo>(payloads_.at(r.addr)) = CapsuleInfo{std::move(name), std::move(blob)};
  return r;
}

NativeRef NativeHeap::newInstance(NativeRef type) {
  const auto& info = typeInfo(type);
  if (info.instanceKind != NativeKind::Instance) {
    throw TypeError("type " + info.qualifiedName() + " does not create instances");
  }
  return alloc(type, NativeKind::Instance, true);
}

NativeRef NativeHeap::newType(TypeInfo info) {
  if (info.instanceKind == NativeKind::Instance) {
    for (const auto& m : info.members) {
      if (m.offset % layout::kAlign != 0 || m.offset + 8 > info.basicSize) {
        throw TypeError("member " + m.name + " offset " + std::to_string(m.offset) + " outside payload of " +
                        info.qualifiedName());
      }
      if (info.dictOffset && m.offset == *info.dictOffset) {
        throw TypeError("member " + m.name + " overlaps the instance dict slot");
      }
    }
    if (info.dictOffset && (*info.dictOffset % layout::kAlign != 0 || *info.dictOffset + 8 > info.basicSize)) {
      throw TypeError("dict offset outside payload of " + info.qualifiedName());
    }
  }
  const NativeRef r = alloc(builtins_.type, NativeKind::Type, true);
  std::get<TypeInfo>(payloads_.at(r.addr)) = std::move(info);
  return r;
}

void NativeHeap::bootstrap() {
  auto makeType = [&](NativeRef meta, std::string name, NativeKind instanceKind) {
    const NativeRef r = alloc(meta, NativeKind::Type, true);
    auto& info = std::get<TypeInfo>(payloads_.at(r.addr));
    info.name = std::move(name);
    info.instanceKind = instanceKind;
    makeImmortal(r);
    return r;
  };
  builtins_.type = makeType(NativeRef{}, "type", NativeKind::Type);
  store<std::uint64_t>(builtins_.type.addr + kTypeAt, builtins_.type.addr);
  builtins_.int_ = makeType(builtins_.type, "int", NativeKind::Int);
  builtins_.float_ = makeType(builtins_.type, "float", NativeKind::Float);
  builtins_.str = makeType(builtins_.type, "str", NativeKind::Str);
  builtins_.tuple = makeType(builtins_.type, "tuple", NativeKind::Tuple);
  builtins_.list = makeType(builtins_.type, "list", NativeKind::List);
  builtins_.dict = makeType(builtins_.type, "dict", NativeKind::Dict);
  builtins_.slice = makeType(builtins_.type, "slice", NativeKind::Slice);
  builtins_.module = makeType(builtins_.type, "module", NativeKind::Module);
  builtins_.cfunction = makeType(builtins_.type, "builtin_function_or_method", NativeKind::CFunction);
  builtins_.capsule = makeType(builtins_.type, "PyCapsule", NativeKind::Capsule);
  builtins_.noneType = makeType(builtins_.type, "NoneType", NativeKind::Singleton);
  builtins_.bool_ = makeType(builtins_.type, "bool", NativeKind::Singleton);
  builtins_.notImplementedType = makeType(builtins_.type, "NotImplementedType", NativeKind::Singleton);
  builtins_.ellipsisType = makeType(builtins_.type, "ellipsis", NativeKind::Singleton);

  const NativeRef singletonTypes[kSingletonCount] = {builtins_.noneType, builtins_.bool_, builtins_.bool_,
                                                     builtins_.notImplementedType, builtins_.ellipsisType};
  for (std::size_t i = 0; i < kSingletonCount; ++i) {
    const NativeRef r = alloc(singletonTypes[i], NativeKind::Singleton, false);
    store<std::uint64_t>(r.addr + layout::kObjectHeadSize, i);
    makeImmortal(r);
    singletons_[i] = r;
  }
}

// --- payload access ----------------------------------------------------------------

std::int64_t NativeHeap::intValue(NativeRef r) const {
  if (kind(r) != NativeKind::Int) throw TypeError("expected int, got " + std::string(kindName(kind(r))));
  return load<std::int64_t>(r.addr + layout::kObjectHeadSize);
}

double NativeHeap::floatValue(NativeRef r) const {
  if (kind(r) != NativeKind::Float) throw TypeError("expected float, got " + std::string(kindName(kind(r))));
  return load<double>(r.addr + layout::kObjectHeadSize);
}

const std::string& NativeHeap::strValue(NativeRef r) const { return payloadAs<std::string>(r, NativeKind::Str); }

void NativeHeap::strSetByte(NativeRef r, std::size_t index, char byte) {
  checkMutation("strSetByte");
  payloadAs<std::string>(r, NativeKind::Str).at(index) = byte;
}

SingletonId NativeHeap::singletonId(NativeRef r) const {
  if (kind(r) != NativeKind::Singleton) throw TypeError("not a singleton");
  return static_cast<SingletonId>(load<std::uint64_t>(r.addr + layout::kObjectHeadSize));
}

std::span<const NativeRef> NativeHeap::items(NativeRef r) const {
  const auto k = kind(r);
  if (k != NativeKind::Tuple && k != NativeKind::List) {
    throw TypeError("expected tuple or list, got " + std::string(kindName(k)));
  }
  return std::get<RefVec>(payloads_.at(r.addr));
}

std::size_t NativeHeap::size(NativeRef r) const {
  switch (kind(r)) {
    case NativeKind::Tuple:
    case NativeKind::List: return items(r).size();
    case NativeKind::Dict: return dictEntries(r).size();
    case NativeKind::Str: return strValue(r).size();
    default: throw TypeError("object of kind " + std::string(kindName(kind(r))) + " has no size");
  }
}

void NativeHeap::tupleInitItem(NativeRef tuple, std::size_t index, NativeRef item) {
  checkMutation("tupleInitItem");
  auto& items = payloadAs<RefVec>(tuple, NativeKind::Tuple);
  if (index >= items.size()) throw InvariantViolation("tuple init index out of range");
  if (items[index]) throw InvariantViolation("tuple slot already initialized");
  if (item) incref(item);
  items[index] = item;
  noteEdge(tuple, item);
}

void NativeHeap::listAppend(NativeRef list, NativeRef item) {
  checkMutation("listAppend");
  auto& items = payloadAs<RefVec>(list, NativeKind::List);
  incref(item);
  items.push_back(item);
  noteEdge(list, item);
}

void NativeHeap::listInsert(NativeRef list, std::size_t index, NativeRef item) {
  checkMutation("listInsert");
  auto& items = payloadAs<RefVec>(list, NativeKind::List);
  if (index > items.size()) throw TypeError("list insert index out of range");
  incref(item);
  items.insert(items.begin() + static_cast<std::ptrdiff_t>(index), item);
  noteEdge(list, item);
}

void NativeHeap::listSet(NativeRef list, std::size_t index, NativeRef item) {
  checkMutation("listSet");
  auto& items = payloadAs<RefVec>(list, NativeKind::List);
  if (index >= items.size()) throw TypeError("list assignment index out of range");
  incref(item);
  const NativeRef old = std::exchange(items[index], item);
  noteEdge(list, item);
  decref(old);
}

void NativeHeap::listDelete(NativeRef list, std::size_t index) {
  checkMutation("listDelete");
  auto& items = payloadAs<RefVec>(list, NativeKind::List);
  if (index >= items.size()) throw TypeError("list deletion index out of range");
  const NativeRef old = items[index];
  items.erase(items.begin() + static_cast<std::ptrdiff_t>(index));
  decref(old);
}

bool NativeHeap::valueEquals(NativeRef a, NativeRef b) const {
  if (a == b) return true;
  if (!a || !b) return false;
  const auto k = kind(a);
  if (k != kind(b)) return false;
  switch (k) {
    case NativeKind::Int: return intValue(a) == intValue(b);
    case NativeKind::Float: return floatValue(a) == floatValue(b);
    case NativeKind::Str: return strValue(a) == strValue(b);
    default: return false;
  }
}

std::size_t NativeHeap::findDictKey(const DictEntries& entries, NativeRef key) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (valueEquals(entries[i].first, key)) return i;
  }
  return entries.size();
}

NativeRef NativeHeap::dictGet(NativeRef dict, NativeRef key) const {
  const auto& entries = payloadAs<DictEntries>(dict, NativeKind::Dict);
  const std::size_t i = findDictKey(entries, key);
  return i == entries.size() ? NativeRef{} : entries[i].second;
}

NativeRef NativeHeap::dictGetString(NativeRef dict, std::string_view key) const {
  for (auto [k, v] : payloadAs<DictEntries>(dict, NativeKind::Dict)) {
    if (kind(k) == NativeKind::Str && strValue(k) == key) return v;
  }
  return NativeRef{};
}

void NativeHeap::dictSet(NativeRef dict, NativeRef key, NativeRef value) {
  checkMutation("dictSet");
  auto& entries = payloadAs<DictEntries>(dict, NativeKind::Dict);
  incref(value);
  const std::size_t i = findDictKey(entries, key);
  if (i < entries.size()) {
    const NativeRef old = std::exchange(entries[i].second, value);
    noteEdge(dict, value);
    decref(old);
    return;
  }
  incref(key);
  entries.emplace_back(key, value);
  noteEdge(dict, key);
  noteEdge(dict, value);
}

void NativeHeap::dictSetString(NativeRef dict, std::string_view key, NativeRef value) {
  const NativeRef k = newStr(key);
  dictSet(dict, k, value);
  decref(k);
}

bool NativeHeap::dictDel(NativeRef dict, NativeRef key) {
  checkMutation("dictDel");
  auto& entries = payloadAs<DictEntries>(dict, NativeKind::Dict);
  const std::size_t i = findDictKey(entries, key);
  if (i == entries.size()) return false;
  const auto [k, v] = entries[i];
  entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(i));
  decref(k);
  decref(v);
  return true;
}

std::span<const std::pair<NativeRef, NativeRef>> NativeHeap::dictEntries(NativeRef dict) const {
  return payloadAs<DictEntries>(dict, NativeKind::Dict);
}

const SliceInfo& NativeHeap::slice(NativeRef r) const { return payloadAs<SliceInfo>(r, NativeKind::Slice); }

const ModuleInfo& NativeHeap::module(NativeRef r) const { return payloadAs<ModuleInfo>(r, NativeKind::Module); }

void NativeHeap::setModuleDict(NativeRef r, NativeRef dict) {
  checkMutation("setModuleDict");
  auto& m = payloadAs<ModuleInfo>(r, NativeKind::Module);
  if (dict) incref(dict);
  const NativeRef old = std::exchange(m.dict, dict);
  noteEdge(r, dict);
  if (old) decref(old);
}

const FunctionInfo& NativeHeap::function(NativeRef r) const {
  return payloadAs<FunctionInfo>(r, NativeKind::CFunction);
}

const CapsuleInfo& NativeHeap::capsule(NativeRef r) const { return payloadAs<CapsuleInfo>(r, NativeKind::Capsule); }

const TypeInfo& NativeHeap::typeInfo(NativeRef r) const { return payloadAs<TypeInfo>(r, NativeKind::Type); }

NativeRef NativeHeap::instanceDict(NativeRef r) const {
  if (kind(r) != NativeKind::Instance) throw TypeError("expected instance");
  const auto& info = typeInfo(typeOf(r));
  if (!info.dictOffset) return NativeRef{};
  return NativeRef{load<std::uint64_t>(r.addr + layout::kObjectHeadSize + *info.dictOffset)};
}

void NativeHeap::setInstanceDict(NativeRef r, NativeRef dict) {
  checkMutation("setInstanceDict");
  if (kind(r) != NativeKind::Instance) throw TypeError("expected instance");
  const auto& info = typeInfo(typeOf(r));
  if (!info.dictOffset) throw TypeError(info.qualifiedName() + " instances have no dict");
  const std::uint64_t slot = r.addr + layout::kObjectHeadSize + *info.dictOffset;
  if (dict) incref(dict);
  const NativeRef old{load<std::uint64_t>(slot)};
  store<std::uint64_t>(slot, dict.addr);
  noteEdge(r, dict);
  if (old) decref(old);
}

std::int64_t NativeHeap::memberGet(NativeRef r, std::uint64_t offset) const {
  if (kind(r) != NativeKind::Instance) throw TypeError("expected instance");
  const auto& info = typeInfo(typeOf(r));
  if (offset % layout::kAlign != 0 || offset + 8 > info.basicSize) throw TypeError("member offset out of range");
  return load<std::int64_t>(r.addr + layout::kObjectHeadSize + offset);
}

void NativeHeap::memberSet(NativeRef r, std::uint64_t offset, std::int64_t value) {
  checkMutation("memberSet");
  if (kind(r) != NativeKind::Instance) throw TypeError("expected instance");
  const auto& info = typeInfo(typeOf(r));
  if (offset % layout::kAlign != 0 || offset + 8 > info.basicSize) throw TypeError("member offset out of range");
  store<std::int64_t>(r.addr + layout::kObjectHeadSize + offset, value);
}

// --- bookkeeping ------------------------------------------------------------------

ArenaStats NativeHeap::stats() const {
  return ArenaStats{liveCount_, immortalCount_, allocations_, frees_, bytesInUse_, bytesHighWater_, aux_.size()};
}

std::vector<Block> NativeHeap::blocks() const {
  std::vector<Block> out;
  out.reserve(blocks_.size());
  for (const auto& [body, info] : blocks_) out.push_back(Block{info.start, info.size, NativeRef{body}, info.immortal});
  std::sort(out.begin(), out.end(), [](const Block& a, const Block& b) { return a.start < b.start; });
  return out;
}

std::vector<NativeRef> NativeHeap::liveObjects() const {
  std::vector<NativeRef> out;
  out.reserve(liveCount_);
  for (const auto& [body, info] : blocks_) {
    if (!info.immortal) out.push_back(NativeRef{body});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace xrt
