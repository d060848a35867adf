#include <gtest/gtest.h>

#include <atomic>
#include <future>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "xrt/boundary_lock.hpp"
#include "xrt/error.hpp"

using namespace xrt;
using namespace std::chrono_literals;

namespace {

TEST(BoundaryLock, EnterSetsOwnerAndExitClearsIt) {
  BoundaryLock lock;
  {
    auto g = lock.enterNative();
    EXPECT_TRUE(lock.ownedByCurrentThread());
    EXPECT_EQ(lock.depth(), 1u);
  }
  EXPECT_FALSE(lock.isHeld());
}

TEST(BoundaryLock, NestedEntriesNeedMatchingExits) {
  BoundaryLock lock;
  auto outer = lock.enterNative();
  {
    auto inner = lock.enterNative();
    EXPECT_EQ(lock.depth(), 2u);
  }
  EXPECT_TRUE(lock.isHeld());
  outer.release();
  EXPECT_FALSE(lock.isHeld());
  EXPECT_EQ(lock.stats().acquisitions, 1u);
  EXPECT_EQ(lock.stats().reentries, 1u);
}

TEST(BoundaryLock, MutualExclusionAgainstAtomicCounter) {
  BoundaryLock lock;
  std::int64_t plain = 0;  // only touched under the lock
  std::atomic<std::int64_t> reference{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 100; ++i) {
        auto g = lock.enterNative();
        const std::int64_t seen = plain;
        std::this_thread::yield();
        plain = seen + 1;
        reference.fetch_add(1);
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(plain, reference.load());
  EXPECT_EQ(plain, 800);
}

TEST(BoundaryLock, CallbackRunsWithoutTheLock) {
  BoundaryLock lock;
  auto g = lock.enterNative();
  const bool ownedInside = lock.callbackToManaged([&] { return lock.ownedByCurrentThread(); });
  EXPECT_FALSE(ownedInside);
  EXPECT_TRUE(lock.ownedByCurrentThread());
}

TEST(BoundaryLock, OtherThreadEntersDuringCallback) {
  BoundaryLock lock;
  std::promise<void> entered;
  auto g = lock.enterNative();
  lock.callbackToManaged([&] {
    std::thread other([&] {
      auto g2 = lock.enterNative();
      entered.set_value();
    });
    other.join();
  });
  EXPECT_EQ(entered.get_future().wait_for(0s), std::future_status::ready);
  EXPECT_EQ(lock.stats().callbacks, 1u);
}

TEST(BoundaryLock, CallbackRestoresNestedDepth) {
  BoundaryLock lock;
  lock.setTracing(true);
  auto a = lock.enterNative();
  auto b = lock.enterNative();
  const std::size_t before = lock.depth();
  lock.callbackToManaged([&] {
    auto inner = lock.enterNative();  // managed code calling back into native
    lock.callbackToManaged([] {});
  });
  EXPECT_EQ(lock.depth(), before);
  b.release();
  a.release();
  const auto verdict = oracle::replayTrace(lock.trace());
  EXPECT_EQ(verdict.depthMismatches, 0u);
  EXPECT_TRUE(verdict.balanced);
}

TEST(BoundaryLock, CallbackRestoresDepthWhenItThrows) {
  BoundaryLock lock;
  auto a = lock.enterNative();
  auto b = lock.enterNative();
  EXPECT_THROW(lock.callbackToManaged([]() -> int { throw std::runtime_error("boom"); }), std::runtime_error);
  EXPECT_EQ(lock.depth(), 2u);
}

TEST(BoundaryLock, AllowWindowRestoresDepth) {
  BoundaryLock lock;
  auto a = lock.enterNative();
  auto b = lock.enterNative();
  lock.allowThreadsBegin();
  EXPECT_FALSE(lock.isHeld());
  lock.allowThreadsEnd();
  EXPECT_EQ(lock.depth(), 2u);
}

TEST(BoundaryLock, OtherThreadProceedsInsideAllowWindow) {
  BoundaryLock lock;
  auto g = lock.enterNative();
  lock.allowThreadsBegin();
  auto done = std::async(std::launch::async, [&] {
    auto g2 = lock.enterNative();
    return true;
  });
  EXPECT_EQ(done.wait_for(5s), std::future_status::ready);
  lock.allowThreadsEnd();
  EXPECT_TRUE(done.get());
}

TEST(BoundaryLock, UnmatchedAllowEndIsAnInvariantViolation) {
  BoundaryLock lock;
  auto g = lock.enterNative();
  EXPECT_THROW(lock.allowThreadsEnd(), InvariantViolation);
}

TEST(BoundaryLock, CallbackWithoutOwnershipIsAnInvariantViolation) {
  BoundaryLock lock;
  EXPECT_THROW(lock.callbackToManaged([] {}), InvariantViolation);
}

TEST(BoundaryLock, RandomInterleavingsKeepExclusion) {
  BoundaryLock lock;
  lock.setTracing(true);
  std::atomic<int> inside{0};
  std::atomic<int> violations{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937_64 rng(t);
      for (int i = 0; i < 300; ++i) {
        auto g = lock.enterNative();
        if (inside.fetch_add(1) != 0) ++violations;
        const int action = static_cast<int>(rng() % 4);
        if (action == 0) {
          auto nested = lock.enterNative();
        }
        inside.fetch_sub(1);
        if (action == 1) {
          lock.allowThreadsBegin();
          std::this_thread::yield();
          lock.allowThreadsEnd();
        } else if (action == 2) {
          lock.callbackToManaged([] { std::this_thread::yield(); });
        }
        if (inside.fetch_add(1) != 0) ++violations;
        inside.fetch_sub(1);
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(violations.load(), 0);
  const auto verdict = oracle::replayTrace(lock.trace());
  EXPECT_EQ(verdict.overlaps, 0u);
  EXPECT_EQ(verdict.depthMismatches, 0u);
  EXPECT_TRUE(verdict.balanced);
  EXPECT_EQ(verdict.acquisitions, lock.stats().acquisitions);
  EXPECT_EQ(verdict.releases, lock.stats().releases);
}

}  // namespace
