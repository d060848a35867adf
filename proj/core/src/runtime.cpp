#include "xrt/runtime.hpp"

namespace xrt {

Runtime::Runtime(RuntimeConfig config)
    : config_(config),
      lock(config_.traceLock),
      natives(config_.arenaCapacity),
      bridge(*this),
      api(*this),
      gc(*this),
      extensions(*this) {
  if (config_.guardMutations) natives.setMutationGuard([this] { return lock.ownedByCurrentThread(); });
  managed.setLockProbe([this] { return lock.ownedByCurrentThread(); });
  if (config_.loadDemoExtension) extensions.registerExtension(demoExtension());
}

Runtime::~Runtime() { gc.stopPoller(); }

std::map<std::string, std::uint64_t> Runtime::counters() const {
  const auto conv = bridge.stats();
  const auto ls = lock.stats();
  const auto gs = gc.stats();
  return {
      {"conv_to_managed_hit", conv.toManagedHit},
      {"conv_to_managed_init", conv.toManagedInit},
      {"conv_to_native_hit", conv.toNativeHit},
      {"conv_to_native_init", conv.toNativeInit},
      {"delegate_forwards", api.managedForwards()},
      {"ext_invocations", extensions.invocations()},
      {"gc_collections", gs.collections},
      {"gc_finalized", gs.finalized},
      {"gc_heads_created", gs.headsCreated},
      {"gc_managed_reclaimed", gs.managedReclaimed},
      {"gc_native_reclaimed", gs.nativeFreed},
      {"gc_payloads_cleared", gs.payloadsCleared},
      {"gc_refreshes", gs.refreshes},
      {"handle_table", bridge.tableSize()},
      {"lock_acquisitions", ls.acquisitions},
      {"lock_allow_windows", ls.allowWindows},
      {"lock_callbacks", ls.callbacks},
      {"lock_contentions", ls.contentions},
      {"lock_reentries", ls.reentries},
      {"lock_releases", ls.releases},
      {"managed_entries_under_lock", managed.entriesUnderLock()},
      {"managed_live", managed.liveCount()},
      {"native_live", natives.liveCount()},
      {"tracked", gc.trackedCount()},
  };
}

}  // namespace xrt
