#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>

namespace xrt {

// Address of a native object body inside the arena. 0 is the null reference.
struct NativeRef {
  std::uint64_t addr = 0;

  constexpr explicit operator bool() const noexcept { return addr != 0; }
  friend constexpr auto operator<=>(NativeRef, NativeRef) = default;
};

// Identity of an object in the managed (traced) runtime. 0 is null; ids are
// never reused for the lifetime of a ManagedHeap.
struct ManagedHandle {
  std::uint64_t id = 0;

  constexpr explicit operator bool() const noexcept { return id != 0; }
  friend constexpr auto operator<=>(ManagedHandle, ManagedHandle) = default;
};

inline constexpr NativeRef kNullRef{};
inline constexpr ManagedHandle kNullHandle{};

enum class SingletonId : std::uint8_t { None, True, False, NotImplemented, Ellipsis };
inline constexpr std::size_t kSingletonCount = 5;

}  // namespace xrt

template <>
struct std::hash<xrt::NativeRef> {
  std::size_t operator()(xrt::NativeRef r) const noexcept { return std::hash<std::uint64_t>{}(r.addr); }
};

template <>
struct std::hash<xrt::ManagedHandle> {
  std::size_t operator()(xrt::ManagedHandle h) const noexcept { return std::hash<std::uint64_t>{}(h.id); }
};
