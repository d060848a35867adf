#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
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

enum class ManagedKind : std::uint8_t {
  Int,
  Float,
  Str,
  Tuple,
  List,
  Dict,
  Slice,
  Module,
  Function,
  Peer,
  PeerType,
  GcHeadCarrier,
  Singleton,
};

std::string_view managedKindName(ManagedKind kind) noexcept;

// Storage behind a managed List. The default keeps handles locally; the
// bridge swaps in a view over native list memory when a list is mirrored.
class ListBackend {
 public:
  virtual ~ListBackend() = default;
  virtual std::size_t size() const = 0;
  virtual ManagedHandle get(std::size_t index) const = 0;
  virtual void set(std::size_t index, ManagedHandle item) = 0;
  virtual void insert(std::size_t index, ManagedHandle item) = 0;
  virtual void erase(std::size_t index) = 0;
  virtual void append(ManagedHandle item) { insert(size(), item); }
  // Managed handles this backend keeps reachable. Must not call back into
  // the heap; it runs during marking.
  virtual void trace(std::vector<ManagedHandle>& out) const = 0;
  virtual bool isNativeView() const { return false; }
};

class LocalListBackend final : public ListBackend {
 public:
  explicit LocalListBackend(std::vector<ManagedHandle> items = {}) : items_(std::move(items)) {}
  std::size_t size() const override;
  ManagedHandle get(std::size_t index) const override;
  void set(std::size_t index, ManagedHandle item) override;
  void insert(std::size_t index, ManagedHandle item) override;
  void erase(std::size_t index) override;
  void trace(std::vector<ManagedHandle>& out) const override;
  std::vector<ManagedHandle> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ManagedHandle> items_;
};

// Cross-boundary operations for Peer/PeerType objects, installed by the bridge.
class PeerDelegate {
 public:
  virtual ~PeerDelegate() = default;
  virtual std::optional<ManagedHandle> getAttr(ManagedHandle peer, std::string_view name) = 0;
  virtual ManagedHandle call(ManagedHandle callable, std::span<const ManagedHandle> args) = 0;
  virtual std::string repr(ManagedHandle peer) = 0;
  virtual std::string str(ManagedHandle peer) = 0;
};

class ManagedHeap;
using ManagedBody = std::function<ManagedHandle(ManagedHeap&, std::span<const ManagedHandle>)>;

struct ManagedObject {
  struct NativeAddr {
    std::uint64_t addr = 0;
  };
  struct ModuleData {
    std::string name;
  };
  struct FunctionData {
    std::string name;
    ManagedBody body;
  };
  using HandleVec = std::vector<ManagedHandle>;
  using DictItems = std::vector<std::pair<ManagedHandle, ManagedHandle>>;
  using Payload = std::variant<std::monostate, std::int64_t, double, std::string, HandleVec,
                               std::shared_ptr<ListBackend>, DictItems, ModuleData, FunctionData, NativeAddr,
                               SingletonId>;

  ManagedKind kind = ManagedKind::Int;
  std::map<std::string, ManagedHandle, std::less<>> attributes;
  Payload payload;
  // Mirrored native connectivity: the managed stand-ins of the native
  // referents of this object's native counterpart.
  std::vector<ManagedHandle> nativeEdges;
  std::uint64_t edgeGeneration = 0;
  bool finalizable = false;
  bool zombie = false;  // swept, waiting for its finalization record to be released
};

struct CollectReport {
  std::size_t reclaimedCount = 0;
  std::size_t enqueuedFinalizables = 0;
  std::vector<ManagedHandle> enqueued;  // in sweep (ascending id) order
};

// The reference queue: FIFO of swept handles with finalization interest.
// The only structure in the managed runtime that is safe to use without
// the boundary lock.
class FinalizationQueue {
 public:
  void push(std::span<const ManagedHandle> handles);
  std::optional<ManagedHandle> poll();
  std::optional<ManagedHandle> waitPoll(std::chrono::milliseconds timeout);
  std::size_t size() const;
  std::uint64_t totalEnqueued() const;
  std::uint64_t totalPolled() const;
  void wakeAll();

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<ManagedHandle> items_;
  std::uint64_t enqueued_ = 0;
  std::uint64_t polled_ = 0;
};

// The simulated managed runtime: handle-addressed objects, attribute lookup,
// calls, rendering and an explicit mark-sweep collector.
//
// The object table is guarded by an internal leaf mutex; the heap never
// calls out (peer delegate, list backends, root providers) while holding it.
// gcCollect additionally assumes no concurrent managed mutation.
class ManagedHeap {
 public:
  ManagedHeap();
  ManagedHeap(const ManagedHeap&) = delete;
  ManagedHeap& operator=(const ManagedHeap&) = delete;

  // --- construction ---------------------------------------------------------
  ManagedHandle newInt(std::int64_t v);
  ManagedHandle newFloat(double v);
  ManagedHandle newStr(std::string v);
  ManagedHandle newTuple(std::vector<ManagedHandle> items);
  ManagedHandle newList(std::vector<ManagedHandle> items = {});
  ManagedHandle newDict();
  ManagedHandle newSlice(ManagedHandle start, ManagedHandle stop, ManagedHandle step);
  ManagedHandle newModule(std::string name);
  ManagedHandle newFunction(std::string name, ManagedBody body);
  ManagedHandle newPeer(std::uint64_t nativeAddr);
  ManagedHandle newPeerType(std::uint64_t nativeAddr);
  ManagedHandle newGcHead(std::uint64_t nativeAddr);
  ManagedHandle adopt(ManagedObject object);
  // Interned and permanently rooted.
  ManagedHandle singleton(SingletonId id) const { return singletons_[static_cast<std::size_t>(id)]; }

  // Swaps the object stored under h, keeping its mirrored edges, finalization
  // interest and root status. Used to upgrade a GC head into a counterpart.
  void replace(ManagedHandle h, ManagedObject object);
  // Bridge-internal: fills a tuple (or slice) created as a placeholder during linking.
  void setTupleItems(ManagedHandle h, std::vector<ManagedHandle> items);
  void swapListBackend(ManagedHandle h, std::shared_ptr<ListBackend> backend);

  // --- inspection -----------------------------------------------------------
  bool isLive(ManagedHandle h) const;
  bool isZombie(ManagedHandle h) const;
  ManagedKind kind(ManagedHandle h) const;
  std::int64_t intValue(ManagedHandle h) const;
  double floatValue(ManagedHandle h) const;
  std::string strValue(ManagedHandle h) const;
  std::vector<ManagedHandle> tupleItems(ManagedHandle h) const;  // tuple or slice parts
  std::uint64_t nativeAddr(ManagedHandle h) const;               // Peer, PeerType, GcHeadCarrier
  SingletonId singletonId(ManagedHandle h) const;
  std::string moduleName(ManagedHandle h) const;
  std::string functionName(ManagedHandle h) const;
  bool valueEquals(ManagedHandle a, ManagedHandle b) const;

  std::optional<ManagedHandle> getAttrLocal(ManagedHandle h, std::string_view name) const;
  void setAttr(ManagedHandle h, std::string name, ManagedHandle value);
  std::vector<std::pair<std::string, ManagedHandle>> attributes(ManagedHandle h) const;

  std::size_t listSize(ManagedHandle h) const;
  ManagedHandle listGet(ManagedHandle h, std::size_t index) const;
  void listSet(ManagedHandle h, std::size_t index, ManagedHandle item);
  void listInsert(ManagedHandle h, std::size_t index, ManagedHandle item);
  void listErase(ManagedHandle h, std::size_t index);
  void listAppend(ManagedHandle h, ManagedHandle item);
  std::vector<ManagedHandle> listItems(ManagedHandle h) const;
  std::shared_ptr<ListBackend> listBackend(ManagedHandle h) const;

  std::optional<ManagedHandle> dictGet(ManagedHandle h, ManagedHandle key) const;
  void dictSet(ManagedHandle h, ManagedHandle key, ManagedHandle value);
  bool dictDel(ManagedHandle h, ManagedHandle key);
  std::vector<std::pair<ManagedHandle, ManagedHandle>> dictItems(ManagedHandle h) const;

  // --- mirrored connectivity --------------------------------------------------
  std::vector<ManagedHandle> nativeEdges(ManagedHandle h) const;
  void setNativeEdges(ManagedHandle h, std::vector<ManagedHandle> edges, std::uint64_t generation);
  void addNativeEdge(ManagedHandle h, ManagedHandle to);
  std::uint64_t edgeGeneration(ManagedHandle h) const;
  void setFinalizable(ManagedHandle h, bool finalizable);
  bool isFinalizable(ManagedHandle h) const;

  // --- language entry points ----------------------------------------------------
  // Attribute map first, then the kind's built-in methods; Peer objects
  // delegate across the boundary.
  std::optional<ManagedHandle> findAttr(ManagedHandle h, std::string_view name);
  ManagedHandle callObject(ManagedHandle h, ManagedHandle argsTuple);
  ManagedHandle callObject(ManagedHandle h, std::span<const ManagedHandle> args);
  std::string reprOf(ManagedHandle h);
  std::string strOf(ManagedHandle h);

  // --- roots and collection -------------------------------------------------------
  void addRoot(ManagedHandle h);
  void removeRoot(ManagedHandle h);
  bool isRooted(ManagedHandle h) const;
  std::vector<ManagedHandle> roots() const;
  void addRootProvider(std::function<void(std::vector<ManagedHandle>&)> provider);
  void setSweepObserver(std::function<void(std::span<const ManagedHandle>)> observer);

  CollectReport gcCollect();
  std::optional<ManagedHandle> pollFinalizable() { return queue_.poll(); }
  FinalizationQueue& finalizationQueue() noexcept { return queue_; }
  // Drops the record of a swept finalizable object once it was handled.
  void release(ManagedHandle h);

  std::size_t liveCount() const;
  std::vector<ManagedHandle> liveHandles() const;
  // Direct managed referents (attributes, payload, local list items);
  // excludes mirrored native edges.
  std::vector<ManagedHandle> referents(ManagedHandle h) const;

  // --- instrumentation --------------------------------------------------------------
  void setPeerDelegate(PeerDelegate* delegate) noexcept { delegate_ = delegate; }
  // Returns true when the calling thread holds the boundary lock; managed
  // code running under it is counted as a violation.
  void setLockProbe(std::function<bool()> probe) { lockProbe_ = std::move(probe); }
  std::uint64_t entriesUnderLock() const noexcept { return entriesUnderLock_; }

 private:
  ManagedHandle insert(ManagedObject object);
  ManagedObject& objectLocked(ManagedHandle h);
  const ManagedObject& objectLocked(ManagedHandle h) const;
  std::shared_ptr<ListBackend> backendOf(ManagedHandle h) const;
  void checkEntry();
  PeerDelegate& delegate() const;
  std::optional<ManagedHandle> builtinMethod(ManagedHandle h, ManagedKind kind, std::string_view name);
  std::string render(ManagedHandle h, bool repr);
  static void collectReferents(const ManagedObject& obj, std::vector<ManagedHandle>& out);

  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, ManagedObject> objects_;
  std::uint64_t nextId_ = 1;
  std::size_t zombies_ = 0;
  std::unordered_map<std::uint64_t, std::size_t> roots_;  // id -> root count
  ManagedHandle singletons_[kSingletonCount];

  std::vector<std::function<void(std::vector<ManagedHandle>&)>> rootProviders_;
  std::function<void(std::span<const ManagedHandle>)> sweepObserver_;
  FinalizationQueue queue_;

  PeerDelegate* delegate_ = nullptr;
  std::function<bool()> lockProbe_;
  std::atomic<std::uint64_t> entriesUnderLock_{0};
};

}  // namespace xrt
