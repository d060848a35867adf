#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xrt {

enum class LockEventKind : std::uint8_t {
  Acquire,   // ownership obtained (depth 0 -> n)
  Release,   // ownership given up (depth n -> 0)
  Reenter,   // nested enterNative by the owner
  Leave,     // nested exit by the owner
  CallbackBegin,
  CallbackEnd,
  AllowBegin,
  AllowEnd,
};

struct LockEvent {
  std::uint64_t seq = 0;
  std::thread::id thread;
  LockEventKind kind = LockEventKind::Acquire;
  std::size_t depth = 0;  // owner depth after the event
};

struct LockStats {
  std::uint64_t acquisitions = 0;
  std::uint64_t releases = 0;
  std::uint64_t contentions = 0;
  std::uint64_t reentries = 0;
  std::uint64_t callbacks = 0;
  std::uint64_t allowWindows = 0;
};

// The GIL analog: held exactly while a thread runs native-side code.
// Reentrant for the owning thread; fully released around managed callbacks
// and inside allow-threads windows, then restored to the saved depth.
// No fairness guarantee beyond eventual acquisition.
class BoundaryLock {
 public:
  // Scoped ownership. Must be destroyed on the thread that created it.
  class [[nodiscard]] Guard {
   public:
    Guard() = default;
    Guard(Guard&& other) noexcept : lock_(std::exchange(other.lock_, nullptr)) {}
    Guard& operator=(Guard&& other) noexcept;
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;
    ~Guard() { release(); }

    void release();

   private:
    friend class BoundaryLock;
    explicit Guard(BoundaryLock* lock) : lock_(lock) {}
    BoundaryLock* lock_ = nullptr;
  };

  BoundaryLock() = default;
  explicit BoundaryLock(bool tracing) : tracing_(tracing) {}
  BoundaryLock(const BoundaryLock&) = delete;
  BoundaryLock& operator=(const BoundaryLock&) = delete;

  Guard enterNative();

  // Runs f with the lock fully released, then reacquires at the saved depth,
  // also when f throws. The caller must own the lock.
  template <class F>
  decltype(auto) callbackToManaged(F&& f) {
    const std::size_t saved = suspend(LockEventKind::CallbackBegin);
    struct Restore {
      BoundaryLock& lock;
      std::size_t depth;
      ~Restore() { lock.resume(depth, LockEventKind::CallbackEnd); }
    } restore{*this, saved};
    return std::forward<F>(f)();
  }

  // Py_BEGIN_ALLOW_THREADS / Py_END_ALLOW_THREADS. Windows nest per thread.
  void allowThreadsBegin();
  void allowThreadsEnd();

  bool ownedByCurrentThread() const noexcept { return owner_.load(std::memory_order_acquire) == std::this_thread::get_id(); }
  bool isHeld() const noexcept { return owner_.load(std::memory_order_acquire) != std::thread::id{}; }
  // Depth held by the calling thread (0 when it is not the owner).
  std::size_t depth() const;

  LockStats stats() const;
  void setTracing(bool enabled);
  std::vector<LockEvent> trace() const;
  void clearTrace();

 private:
  void exitOne();
  std::size_t suspend(LockEventKind why);
  void resume(std::size_t depth, LockEventKind why);
  void acquireLocked(std::unique_lock<std::mutex>& lk, std::size_t depth);
  void record(LockEventKind kind);

  mutable std::mutex mutex_;
  std::condition_variable freed_;
  std::atomic<std::thread::id> owner_{};
  std::size_t depth_ = 0;
  std::unordered_map<std::thread::id, std::vector<std::size_t>> allowSaved_;
  LockStats stats_;
  bool tracing_ = false;
  std::uint64_t seq_ = 0;
  std::vector<LockEvent> trace_;
};

}  // namespace xrt
