#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "xrt/handles.hpp"
#include "xrt/managed_heap.hpp"

namespace xrt {

class Runtime;

struct RefreshReport {
  std::size_t edgesAdded = 0;
  std::size_t edgesRemoved = 0;
  std::size_t headsCreated = 0;
  std::size_t scopeSize = 0;  // natives visited, closure included
  std::uint64_t generation = 0;
};

struct DrainReport {
  std::size_t finalized = 0;
  std::size_t nativeFreed = 0;  // drop in arena live-count while draining
};

struct FullCollectReport {
  std::size_t rounds = 0;
  std::size_t managedReclaimed = 0;
  std::size_t finalized = 0;
  std::size_t nativeFreed = 0;
};

struct GcStats {
  std::uint64_t headsCreated = 0;
  std::uint64_t refreshes = 0;
  std::uint64_t collections = 0;
  std::uint64_t managedReclaimed = 0;
  std::uint64_t finalized = 0;
  std::uint64_t nativeFreed = 0;
  std::uint64_t payloadsCleared = 0;
  std::uint64_t externallyRooted = 0;  // in the last collection
  std::uint64_t eagerEdges = 0;
};

// Cross-runtime cycle collection.
//
// Every tracked native has exactly one managed stand-in: its bridged twin
// (header.peer) or a GC head (recorded in the aux list). The stand-in owns
// one reference on the native. Native connectivity is mirrored into the
// stand-ins' edge lists so the managed collector can trace through native
// memory. Edge additions are mirrored at the write site; removals only at
// refresh, so the mirror is always a supergraph of the native graph.
//
// A stand-in is treated as a root while its native has references that no
// mirrored edge explains (held by untracked natives or by native code), so
// only objects unreachable from both runtimes are swept. Natives of swept
// stand-ins have their payloads cleared on finalization, which is what
// breaks cross-boundary cycles.
class GcBridge {
 public:
  static constexpr std::uint32_t kGcTag = 0x4743;  // aux tag of GC heads

  explicit GcBridge(Runtime& rt);
  ~GcBridge();
  GcBridge(const GcBridge&) = delete;
  GcBridge& operator=(const GcBridge&) = delete;

  // Idempotent. Returns the existing twin or permanent handle when there is
  // one; otherwise creates a GC head.
  ManagedHandle ensureGcHead(NativeRef r);
  ManagedHandle standIn(NativeRef r) const;  // null when untracked
  std::optional<ManagedHandle> headOf(NativeRef r) const;
  bool isTracked(NativeRef r) const;
  std::size_t trackedCount() const;
  std::vector<NativeRef> tracked() const;

  // Bridge hooks.
  void onLinked(NativeRef r, ManagedHandle h);
  void onHeadPromoted(NativeRef r);

  RefreshReport refreshConnectivity();
  RefreshReport refreshConnectivity(std::span<const NativeRef> scope);
  CollectReport collect();
  DrainReport drain();
  void onFinalized(ManagedHandle h);
  // refresh + collect + drain until a round reclaims nothing.
  FullCollectReport fullCollect(std::size_t maxRounds = 64);

  // Daemon mode: a thread polls the finalization queue and finalizes.
  void startPoller(std::chrono::milliseconds interval = std::chrono::milliseconds(20));
  void stopPoller();
  bool pollerRunning() const noexcept { return poller_.joinable(); }

  GcStats stats() const;
  std::uint64_t generation() const noexcept { return generation_; }

 private:
  void track(NativeRef r, ManagedHandle h);
  void onNativeEdge(NativeRef from, NativeRef to);
  void provideRoots(std::vector<ManagedHandle>& out);
  void onSwept(std::span<const ManagedHandle> swept);
  std::vector<ManagedHandle> childStandIns(NativeRef r, std::size_t* created);

  Runtime& rt_;
  std::unordered_map<std::uint64_t, ManagedHandle> tracked_;  // native addr -> stand-in
  std::unordered_map<std::uint64_t, NativeRef> byHandle_;     // stand-in id -> native
  std::unordered_set<std::uint64_t> condemned_;
  std::uint64_t generation_ = 0;

  mutable std::mutex statsMutex_;
  GcStats stats_;

  std::thread poller_;
  std::atomic<bool> stopPoller_{false};
};

}  // namespace xrt
