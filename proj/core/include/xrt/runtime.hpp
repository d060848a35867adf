#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "xrt/boundary_lock.hpp"
#include "xrt/bridge.hpp"
#include "xrt/extload.hpp"
#include "xrt/gc_bridge.hpp"
#include "xrt/managed_heap.hpp"
#include "xrt/native_api.hpp"
#include "xrt/native_heap.hpp"

namespace xrt {

struct RuntimeConfig {
  std::size_t arenaCapacity = NativeHeap::kDefaultCapacity;
  bool traceLock = false;
  // Native mutations assert that the calling thread owns the boundary lock.
  bool guardMutations = true;
  bool loadDemoExtension = true;
};

// One bridged pair of runtimes with its own boundary lock.
class Runtime {
 public:
  explicit Runtime(RuntimeConfig config = {});
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const RuntimeConfig& config() const noexcept { return config_; }

  // Deterministic counters, key-sorted.
  std::map<std::string, std::uint64_t> counters() const;

 private:
  RuntimeConfig config_;

 public:
  BoundaryLock lock;
  NativeHeap natives;
  ManagedHeap managed;
  Bridge bridge;
  NativeApi api;
  GcBridge gc;
  ExtensionRegistry extensions;
};

}  // namespace xrt
