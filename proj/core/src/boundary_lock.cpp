#include "xrt/boundary_lock.hpp"

#include "xrt/error.hpp"

namespace xrt {

BoundaryLock::Guard& BoundaryLock::Guard::operator=(Guard&& other) noexcept {
  if (this != &other) {
    release();
    lock_ = std::exchange(other.lock_, nullptr);
  }
  return *this;
}

void BoundaryLock::Guard::release() {
  if (lock_ != nullptr) std::exchange(lock_, nullptr)->exitOne();
}

void BoundaryLock::record(LockEventKind kind) {
  if (tracing_) trace_.push_back(LockEvent{++seq_, std::this_thread::get_id(), kind, depth_});
}

void BoundaryLock::acquireLocked(std::unique_lock<std::mutex>& lk, std::size_t depth) {
  if (owner_.load(std::memory_order_relaxed) != std::thread::id{}) {
    ++stats_.contentions;
    freed_.wait(lk, [&] { return owner_.load(std::memory_order_relaxed) == std::thread::id{}; });
  }
  owner_.store(std::this_thread::get_id(), std::memory_order_release);
  depth_ = depth;
  ++stats_.acquisitions;
  record(LockEventKind::Acquire);
}

BoundaryLock::Guard BoundaryLock::enterNative() {
  std::unique_lock lk(mutex_);
  if (owner_.load(std::memory_order_relaxed) == std::this_thread::get_id()) {
    ++depth_;
    ++stats_.reentries;
    record(LockEventKind::Reenter);
  } else {
    acquireLocked(lk, 1);
  }
  return Guard(this);
}

void BoundaryLock::exitOne() {
  std::unique_lock lk(mutex_);
  if (owner_.load(std::memory_order_relaxed) != std::this_thread::get_id() || depth_ == 0) {
    // Only reachable through a guard moved across threads.
    throw InvariantViolation("boundary lock released by a thread that does not own it");
  }
  if (--depth_ > 0) {
    record(LockEventKind::Leave);
    return;
  }
  owner_.store(std::thread::id{}, std::memory_order_release);
  ++stats_.releases;
  record(LockEventKind::Release);
  lk.unlock();
  freed_.notify_one();
}

std::size_t BoundaryLock::suspend(LockEventKind why) {
  std::unique_lock lk(mutex_);
  if (owner_.load(std::memory_order_relaxed) != std::this_thread::get_id()) {
    throw InvariantViolation(why == LockEventKind::CallbackBegin
                                 ? "managed callback requested without owning the boundary lock"
                                 : "allow-threads window opened without owning the boundary lock");
  }
  if (why == LockEventKind::CallbackBegin) {
    ++stats_.callbacks;
  } else {
    ++stats_.allowWindows;
  }
  record(why);
  const std::size_t saved = std::exchange(depth_, 0);
  owner_.store(std::thread::id{}, std::memory_order_release);
  ++stats_.releases;
  record(LockEventKind::Release);
  lk.unlock();
  freed_.notify_one();
  return saved;
}

void BoundaryLock::resume(std::size_t depth, LockEventKind why) {
  std::unique_lock lk(mutex_);
  acquireLocked(lk, depth);
  record(why);
}

void BoundaryLock::allowThreadsBegin() {
  const std::size_t saved = suspend(LockEventKind::AllowBegin);
  std::lock_guard lk(mutex_);
  allowSaved_[std::this_thread::get_id()].push_back(saved);
}

void BoundaryLock::allowThreadsEnd() {
  std::size_t saved = 0;
  {
    std::lock_guard lk(mutex_);
    auto it = allowSaved_.find(std::this_thread::get_id());
    if (it == allowSaved_.end() || it->second.empty()) {
      throw InvariantViolation("allowThreadsEnd without a matching allowThreadsBegin on this thread");
    }
    saved = it->second.back();
    it->second.pop_back();
    if (it->second.empty()) allowSaved_.erase(it);
  }
  resume(saved, LockEventKind::AllowEnd);
}

std::size_t BoundaryLock::depth() const {
  std::lock_guard lk(mutex_);
  return owner_.load(std::memory_order_relaxed) == std::this_thread::get_id() ? depth_ : 0;
}

LockStats BoundaryLock::stats() const {
  std::lock_guard lk(mutex_);
  return stats_;
}

void BoundaryLock::setTracing(bool enabled) {
  std::lock_guard lk(mutex_);
  tracing_ = enabled;
}

std::vector<LockEvent> BoundaryLock::trace() const {
  std::lock_guard lk(mutex_);
  return trace_;
}

void BoundaryLock::clearTrace() {
  std::lock_guard lk(mutex_);
  trace_.clear();
}

}  // namespace xrt
