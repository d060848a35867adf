#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "xrt/handles.hpp"

namespace xrt {

// Payload kinds of the simulated native runtime.
enum class NativeKind : std::uint32_t {
  Int,
  Float,
  Str,
  Tuple,
  List,
  Dict,
  Slice,
  Module,
  CFunction,
  Capsule,
  Instance,
  Type,
  Singleton,
};

std::string_view kindName(NativeKind kind) noexcept;

// Bridge header flag bits. Bits 6..15 are reserved and always zero.
namespace hflag {
inline constexpr std::uint16_t kDelegate = 1u << 0;
inline constexpr std::uint16_t kMirror = 1u << 1;
inline constexpr std::uint16_t kPeer = 1u << 2;
inline constexpr std::uint16_t kHasGcHead = 1u << 3;
inline constexpr std::uint16_t kInitialized = 1u << 4;
inline constexpr std::uint16_t kSyncOnInitDone = 1u << 5;
inline constexpr std::uint16_t kStrategyMask = kDelegate | kMirror | kPeer;
inline constexpr std::uint16_t kReservedMask = 0xFFC0;
}  // namespace hflag

// Fixed sizes of the three regions of an allocation, all 8-byte aligned:
//
//   [ BridgeHeader | optional GC head | object body ]
//                                     ^ NativeRef::addr
namespace layout {
inline constexpr std::uint64_t kAlign = 8;
inline constexpr std::uint64_t kHeaderSize = 24;      // peer:8 flags:2 pad:6 aux:8
inline constexpr std::uint64_t kGcHeadSize = 16;      // two link words, never read
inline constexpr std::uint64_t kObjectHeadSize = 24;  // refcount:8 type:8 kind:4 pad:4
}  // namespace layout

// Location of a BridgeHeader inside the arena.
struct HeaderLoc {
  std::uint64_t addr = 0;
  friend constexpr auto operator<=>(HeaderLoc, HeaderLoc) = default;
};

// Decoded view of the bytes stored at a HeaderLoc.
struct BridgeHeader {
  ManagedHandle peer;
  std::uint16_t flags = 0;
  std::uint64_t auxHead = 0;
};

struct MemberDef {
  std::string name;
  std::uint64_t offset = 0;  // into the instance payload; holds a signed 64-bit int
};

struct GetSetDef {
  std::string name;
  std::string getter;  // behavior id
};

struct MethodDef {
  std::string name;
  std::string format;
  std::string behavior;
};

struct TypeInfo {
  std::string name;
  std::string module;  // empty for builtins
  bool isHeapType = false;
  NativeKind instanceKind = NativeKind::Instance;
  std::uint64_t basicSize = 0;  // instance payload bytes
  std::optional<std::uint64_t> dictOffset;
  std::vector<MemberDef> members;
  std::vector<GetSetDef> getsets;
  std::vector<MethodDef> methods;
  std::string doc;
  std::string reprBehavior;
  std::string strBehavior;

  std::string qualifiedName() const;
};

struct FunctionInfo {
  std::string name;
  std::string format;
  std::string behavior;
  std::string module;
  NativeRef self;  // bound receiver for methods, owned reference
};

struct ModuleInfo {
  std::string name;
  NativeRef dict;  // owned; null once the dict has been handed to a delegate
};

struct CapsuleInfo {
  std::string name;
  std::vector<std::byte> blob;
};

struct SliceInfo {
  NativeRef start;
  NativeRef stop;
  NativeRef step;
};

struct BuiltinTypes {
  NativeRef type;
  NativeRef int_;
  NativeRef float_;
  NativeRef str;
  NativeRef tuple;
  NativeRef list;
  NativeRef dict;
  NativeRef slice;
  NativeRef module;
  NativeRef cfunction;
  NativeRef capsule;
  NativeRef noneType;
  NativeRef bool_;
  NativeRef notImplementedType;
  NativeRef ellipsisType;
};

// One reserved allocation as recorded by the arena.
struct Block {
  std::uint64_t start = 0;
  std::uint64_t size = 0;
  NativeRef body;
  bool immortal = false;
};

struct ArenaStats {
  std::size_t liveObjects = 0;  // excluding immortals
  std::size_t immortalObjects = 0;
  std::uint64_t allocations = 0;
  std::uint64_t frees = 0;
  std::uint64_t bytesInUse = 0;
  std::uint64_t bytesHighWater = 0;
  std::size_t auxLive = 0;
};

using RefVisitor = std::function<void(NativeRef)>;

// The simulated native runtime: a flat byte arena holding bridge headers,
// optional GC heads and object bodies, plus reference counting over them.
//
// Variable-length payloads (string bytes, item arrays, dict entries, type
// descriptors) live in a side store keyed by body address, the way
// PyListObject keeps ob_item outside the object.
//
// Not internally synchronized: callers hold the boundary lock. A mutation
// guard can be installed to assert that contract.
class NativeHeap {
 public:
  static constexpr std::size_t kDefaultCapacity = std::size_t{64} << 20;

  explicit NativeHeap(std::size_t capacityBytes = kDefaultCapacity);
  NativeHeap(const NativeHeap&) = delete;
  NativeHeap& operator=(const NativeHeap&) = delete;

  // --- layout ---------------------------------------------------------------

  // Reserves [header][gc head?][body]; refcount starts at 1, flags are clear
  // except kHasGcHead. Throws AllocationError when the arena is exhausted.
  NativeRef alloc(NativeRef type, NativeKind kind, bool wantsGcHead);

  // Pure offset arithmetic; no table lookups.
  HeaderLoc asHeader(NativeRef r) const;
  NativeRef fromHeader(HeaderLoc h) const;

  BridgeHeader header(NativeRef r) const;
  ManagedHandle peer(NativeRef r) const;
  void setPeer(NativeRef r, ManagedHandle h);
  std::uint16_t flags(NativeRef r) const;
  void setFlags(NativeRef r, std::uint16_t flags);
  bool hasGcHead(NativeRef r) const { return (flags(r) & hflag::kHasGcHead) != 0; }

  // --- aux list -------------------------------------------------------------

  void auxSet(NativeRef r, std::uint32_t tag, std::vector<std::byte> blob);
  std::optional<std::vector<std::byte>> auxGet(NativeRef r, std::uint32_t tag) const;
  bool auxRemove(NativeRef r, std::uint32_t tag);
  std::size_t auxLiveCount() const noexcept { return aux_.size(); }

  // --- reference counting ---------------------------------------------------

  void incref(NativeRef r);
  void decref(NativeRef r);
  std::int64_t refcount(NativeRef r) const;
  bool isLive(NativeRef r) const;
  bool isImmortal(NativeRef r) const;
  void makeImmortal(NativeRef r);

  // --- introspection --------------------------------------------------------

  NativeKind kind(NativeRef r) const;
  NativeRef typeOf(NativeRef r) const;
  // One call per outgoing reference held by the payload, multiplicity kept.
  void visitRefs(NativeRef r, const RefVisitor& visit) const;
  std::vector<NativeRef> refsOf(NativeRef r) const;

  // --- constructors (all return a new reference) ----------------------------

  NativeRef newInt(std::int64_t v);
  NativeRef newFloat(double v);
  NativeRef newStr(std::string_view bytes);
  NativeRef newTuple(std::span<const NativeRef> items);
  NativeRef newTupleUninit(std::size_t size);
  NativeRef newList(std::span<const NativeRef> items = {});
  NativeRef newDict();
  NativeRef newSlice(NativeRef start, NativeRef stop, NativeRef step);
  NativeRef newModule(std::string name);
  NativeRef newCFunction(FunctionInfo info);
  NativeRef newCapsule(std::string name, std::vector<std::byte> blob);
  NativeRef newInstance(NativeRef type);
  NativeRef newType(TypeInfo info);

  // Borrowed; singletons are immortal.
  NativeRef singleton(SingletonId id) const { return singletons_[static_cast<std::size_t>(id)]; }
  const BuiltinTypes& builtins() const noexcept { return builtins_; }

  // --- payload access -------------------------------------------------------

  std::int64_t intValue(NativeRef r) const;
  double floatValue(NativeRef r) const;
  const std::string& strValue(NativeRef r) const;
  // Direct byte write, the PyString_AS_STRING escape hatch.
  void strSetByte(NativeRef r, std::size_t index, char byte);
  SingletonId singletonId(NativeRef r) const;

  std::span<const NativeRef> items(NativeRef r) const;  // tuple or list
  std::size_t size(NativeRef r) const;
  // Construction-time only: the slot must still be null. Increfs item.
  void tupleInitItem(NativeRef tuple, std::size_t index, NativeRef item);

  void listAppend(NativeRef list, NativeRef item);
  void listInsert(NativeRef list, std::size_t index, NativeRef item);
  void listSet(NativeRef list, std::size_t index, NativeRef item);
  void listDelete(NativeRef list, std::size_t index);

  // Dict keys compare by value for Int/Float/Str, by identity otherwise.
  NativeRef dictGet(NativeRef dict, NativeRef key) const;  // borrowed or null
  NativeRef dictGetString(NativeRef dict, std::string_view key) const;
  void dictSet(NativeRef dict, NativeRef key, NativeRef value);
  void dictSetString(NativeRef dict, std::string_view key, NativeRef value);
  bool dictDel(NativeRef dict, NativeRef key);
  std::span<const std::pair<NativeRef, NativeRef>> dictEntries(NativeRef dict) const;

  const SliceInfo& slice(NativeRef r) const;
  const ModuleInfo& module(NativeRef r) const;
  void setModuleDict(NativeRef r, NativeRef dict);
  const FunctionInfo& function(NativeRef r) const;
  const CapsuleInfo& capsule(NativeRef r) const;
  const TypeInfo& typeInfo(NativeRef r) const;

  NativeRef instanceDict(NativeRef r) const;
  void setInstanceDict(NativeRef r, NativeRef dict);
  std::int64_t memberGet(NativeRef r, std::uint64_t offset) const;
  void memberSet(NativeRef r, std::uint64_t offset, std::int64_t value);

  // tp_clear analog: drops every reference the payload holds, leaving an
  // empty container. Used to break garbage cycles.
  void clearPayload(NativeRef r);

  bool valueEquals(NativeRef a, NativeRef b) const;

  // --- bookkeeping ----------------------------------------------------------

  std::size_t liveCount() const noexcept { return liveCount_; }
  ArenaStats stats() const;
  std::vector<Block> blocks() const;
  std::vector<NativeRef> liveObjects() const;
  std::size_t capacity() const noexcept { return capacity_; }

  // Called after every container write that adds an outgoing reference.
  void setEdgeObserver(std::function<void(NativeRef from, NativeRef to)> observer) {
    edgeObserver_ = std::move(observer);
  }
  // When set, every mutation requires guard() to return true.
  void setMutationGuard(std::function<bool()> guard) { mutationGuard_ = std::move(guard); }

 private:
  struct BlockInfo {
    std::uint64_t start;
    std::uint64_t size;
    bool immortal;
  };
  struct AuxNode {
    std::uint32_t tag;
    std::vector<std::byte> blob;
    std::uint64_t next;
  };
  using RefVec = std::vector<NativeRef>;
  using DictEntries = std::vector<std::pair<NativeRef, NativeRef>>;
  using Payload = std::variant<std::monostate, std::string, RefVec, DictEntries, SliceInfo, ModuleInfo,
                               FunctionInfo, CapsuleInfo, TypeInfo>;

  template <class T>
  T load(std::uint64_t addr) const;
  template <class T>
  void store(std::uint64_t addr, T value);

  void checkMutation(const char* op) const;
  const BlockInfo& block(NativeRef r) const;
  std::uint64_t inlineSize(NativeRef type, NativeKind kind) const;
  void noteEdge(NativeRef from, NativeRef to) const;

  template <class T>
  T& payloadAs(NativeRef r, NativeKind expected);
  template <class T>
  const T& payloadAs(NativeRef r, NativeKind expected) const;
  std::uint64_t auxHead(NativeRef r) const;
  void setAuxHead(NativeRef r, std::uint64_t id);

  void deallocate(NativeRef r, std::vector<NativeRef>& released);
  void releasePayload(NativeRef r, std::vector<NativeRef>& released);
  std::size_t findDictKey(const DictEntries& entries, NativeRef key) const;
  void bootstrap();

  std::vector<std::byte> bytes_;
  std::size_t capacity_;
  std::uint64_t bump_ = layout::kAlign;
  std::map<std::uint64_t, std::vector<std::uint64_t>> freeBySize_;
  std::unordered_map<std::uint64_t, BlockInfo> blocks_;  // keyed by body address
  std::unordered_map<std::uint64_t, Payload> payloads_;
  std::unordered_map<std::uint64_t, AuxNode> aux_;
  std::uint64_t nextAuxId_ = 1;

  std::size_t liveCount_ = 0;
  std::size_t immortalCount_ = 0;
  std::uint64_t allocations_ = 0;
  std::uint64_t frees_ = 0;
  std::uint64_t bytesInUse_ = 0;
  std::uint64_t bytesHighWater_ = 0;

  BuiltinTypes builtins_;
  NativeRef singletons_[kSingletonCount];

  std::function<void(NativeRef, NativeRef)> edgeObserver_;
  std::function<bool()> mutationGuard_;
};

}  // namespace xrt
