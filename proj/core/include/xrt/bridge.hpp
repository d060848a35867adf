#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xrt/handles.hpp"
#include "xrt/managed_heap.hpp"
#include "xrt/native_heap.hpp"

namespace xrt {

class Runtime;

// How a native object is represented on the managed side.
//   Delegate  native shell forwarding to the managed twin (dict, slice, module)
//   Mirror    data lives natively and is copied or viewed (int, float, str, tuple, list)
//   Peer      managed wrapper holding the native address (everything without a counterpart)
enum class Strategy : std::uint8_t { Delegate, Mirror, Peer };

std::string_view strategyName(Strategy s) noexcept;
std::uint16_t strategyFlag(Strategy s) noexcept;
Strategy strategyForKind(NativeKind instanceKind) noexcept;

// Statically defined native types, resolved by table instead of by header.
class StaticTypeRegistry {
 public:
  void add(NativeRef type, std::string name, ManagedHandle handle);
  std::optional<ManagedHandle> byRef(NativeRef type) const;
  NativeRef byName(std::string_view name) const;  // null when unknown
  bool contains(NativeRef type) const { return byRef_.contains(type.addr); }
  std::size_t size() const noexcept { return byRef_.size(); }
  std::vector<std::pair<std::string, NativeRef>> entries() const;

 private:
  std::unordered_map<std::uint64_t, ManagedHandle> byRef_;
  std::unordered_map<std::string, NativeRef> byName_;
};

struct ConversionStats {
  std::uint64_t toManagedHit = 0;
  std::uint64_t toManagedInit = 0;
  std::uint64_t toNativeHit = 0;
  std::uint64_t toNativeInit = 0;
};

// Strategy selection, the two conversion functions and peer delegation.
//
// Every bridged pair is linked both ways: header.peer on the native side and
// the handle table on the managed side. The managed twin owns one reference
// (the pin) on its native counterpart until gc-bridge finalizes it.
//
// All entry points take the boundary lock themselves (reentrantly).
class Bridge final : public PeerDelegate {
 public:
  explicit Bridge(Runtime& rt);
  Bridge(const Bridge&) = delete;
  Bridge& operator=(const Bridge&) = delete;

  Strategy strategyFor(NativeRef type) const;

  // Null maps to null. Looks up the counterpart and creates it on a miss.
  ManagedHandle toManaged(NativeRef r);
  // Borrowed result: the reference is owned by the managed counterpart.
  NativeRef toNative(ManagedHandle h);

  std::optional<ManagedHandle> peerGetAttr(ManagedHandle peer, std::string_view name);

  // PeerDelegate
  std::optional<ManagedHandle> getAttr(ManagedHandle peer, std::string_view name) override;
  ManagedHandle call(ManagedHandle callable, std::span<const ManagedHandle> args) override;
  std::string repr(ManagedHandle peer) override;
  std::string str(ManagedHandle peer) override;

  ManagedHandle registerStaticType(NativeRef type);
  const StaticTypeRegistry& staticTypes() const noexcept { return statics_; }

  // Handle table (managed -> native) for twins created by conversion.
  std::optional<NativeRef> lookup(ManagedHandle h) const;
  void forget(ManagedHandle h);
  std::size_t tableSize() const noexcept { return table_.size(); }

  ConversionStats stats() const;

 private:
  ManagedObject counterpartShell(NativeRef r, Strategy s);
  void link(NativeRef r, ManagedHandle h, Strategy s);
  void syncFromNative(NativeRef r, ManagedHandle h);
  NativeRef nativeFromManaged(ManagedHandle h, ManagedKind kind);

  Runtime& rt_;
  StaticTypeRegistry statics_;
  std::unordered_map<std::uint64_t, NativeRef> table_;
  std::atomic<std::uint64_t> toManagedHit_{0};
  std::atomic<std::uint64_t> toManagedInit_{0};
  std::atomic<std::uint64_t> toNativeHit_{0};
  std::atomic<std::uint64_t> toNativeInit_{0};
};

// Managed list storage that reads and writes the native list payload, so
// both sides always see the same element sequence.
class NativeListBackend final : public ListBackend {
 public:
  NativeListBackend(Runtime& rt, NativeRef list) : rt_(rt), list_(list) {}
  std::size_t size() const override;
  ManagedHandle get(std::size_t index) const override;
  void set(std::size_t index, ManagedHandle item) override;
  void insert(std::size_t index, ManagedHandle item) override;
  void erase(std::size_t index) override;
  void trace(std::vector<ManagedHandle>& out) const override;
  bool isNativeView() const override { return true; }
  NativeRef list() const noexcept { return list_; }

 private:
  Runtime& rt_;
  NativeRef list_;
};

}  // namespace xrt
