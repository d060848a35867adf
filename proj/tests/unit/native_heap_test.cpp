#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "xrt/error.hpp"
#include "xrt/native_heap.hpp"

using namespace xrt;

namespace {

class NativeHeapTest : public ::testing::Test {
 protected:
  NativeHeap heap{1 << 20};
  const BuiltinTypes& t = heap.builtins();
};

TEST_F(NativeHeapTest, AllocWithoutGcHeadLeavesFlagClear) {
  const NativeRef r = heap.alloc(t.int_, NativeKind::Int, false);
  EXPECT_EQ(heap.flags(r) & hflag::kHasGcHead, 0);
  EXPECT_EQ(heap.asHeader(r).addr, oracle::expectedHeaderAddr(r.addr, false));
  EXPECT_EQ(heap.fromHeader(heap.asHeader(r)), r);
}

TEST_F(NativeHeapTest, AllocWithGcHeadRoundTrips) {
  const NativeRef r = heap.alloc(t.tuple, NativeKind::Tuple, true);
  EXPECT_NE(heap.flags(r) & hflag::kHasGcHead, 0);
  EXPECT_EQ(heap.asHeader(r).addr, oracle::expectedHeaderAddr(r.addr, true));
  EXPECT_EQ(heap.fromHeader(heap.asHeader(r)), r);
}

TEST_F(NativeHeapTest, MixedAllocationsNeverOverlap) {
  std::mt19937_64 rng(11);
  std::vector<NativeRef> refs;
  for (int i = 0; i < 1000; ++i) {
    switch (rng() % 4) {
      case 0: refs.push_back(heap.newInt(static_cast<std::int64_t>(rng()))); break;
      case 1: refs.push_back(heap.newStr(std::string(rng() % 40, 'x'))); break;
      case 2: refs.push_back(heap.newList()); break;
      default: refs.push_back(heap.newTupleUninit(rng() % 5)); break;
    }
  }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> intervals;
  for (const auto& b : heap.blocks()) intervals.emplace_back(b.start, b.size);
  EXPECT_TRUE(oracle::intervalsDisjoint(intervals));
  std::sort(refs.begin(), refs.end());
  EXPECT_EQ(std::adjacent_find(refs.begin(), refs.end()), refs.end());
}

TEST_F(NativeHeapTest, HeaderRoundTripOverRandomAllocations) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    const bool gc = rng() % 2;
    const NativeRef r = heap.alloc(gc ? t.list : t.int_, gc ? NativeKind::List : NativeKind::Int, gc);
    ASSERT_EQ(heap.asHeader(r).addr, oracle::expectedHeaderAddr(r.addr, gc));
    ASSERT_EQ(heap.fromHeader(heap.asHeader(r)), r);
    heap.decref(r);
  }
}

TEST_F(NativeHeapTest, ArenaExhaustionThrowsWithoutPartialLayout) {
  NativeHeap small(4096);
  const auto before = small.stats();
  EXPECT_THROW(
      {
        for (;;) small.newStr(std::string(64, 'a'));
      },
      AllocationError);
  const auto after = small.stats();
  EXPECT_LE(after.bytesInUse, small.capacity());
  EXPECT_GT(after.liveObjects, before.liveObjects);
}

TEST_F(NativeHeapTest, DecrefToZeroFrees) {
  const std::size_t live = heap.liveCount();
  const NativeRef r = heap.newInt(3);
  EXPECT_EQ(heap.liveCount(), live + 1);
  heap.decref(r);
  EXPECT_EQ(heap.liveCount(), live);
  EXPECT_FALSE(heap.isLive(r));
}

TEST_F(NativeHeapTest, TupleReleaseDropsItemReferences) {
  const NativeRef a = heap.newInt(1);
  const NativeRef b = heap.newStr("b");
  const NativeRef items[] = {a, b};
  const NativeRef tup = heap.newTuple(items);
  EXPECT_EQ(heap.refcount(a), 2);
  EXPECT_EQ(heap.refcount(b), 2);
  heap.decref(tup);
  EXPECT_EQ(heap.refcount(a), 1);
  EXPECT_EQ(heap.refcount(b), 1);
}

TEST_F(NativeHeapTest, DecrefOfDeadObjectIsAnInvariantViolation) {
  const NativeRef r = heap.newInt(1);
  heap.decref(r);
  EXPECT_THROW(heap.decref(r), InvariantViolation);
}

TEST_F(NativeHeapTest, RandomTupleDagMatchesReachability) {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 20; ++round) {
    NativeHeap h(1 << 20);
    const std::size_t base = h.liveCount();
    std::vector<NativeRef> nodes;
    std::map<std::uint64_t, std::vector<std::uint64_t>> edges;
    for (int i = 0; i < 40; ++i) {
      std::vector<NativeRef> kids;
      const std::size_t fan = nodes.empty() ? 0 : rng() % 4;
      for (std::size_t k = 0; k < fan; ++k) kids.push_back(nodes[rng() % nodes.size()]);
      const NativeRef tup = h.newTuple(kids);
      for (NativeRef k : kids) edges[tup.addr].push_back(k.addr);
      nodes.push_back(tup);
    }
    // Every node starts with the creator's reference; keep a random subset.
    std::vector<std::uint64_t> kept;
    for (NativeRef n : nodes) {
      if (rng() % 5 == 0) {
        kept.push_back(n.addr);
      } else {
        h.decref(n);
      }
    }
    const auto expected = oracle::reachable(edges, kept);
    EXPECT_EQ(h.liveCount() - base, expected.size());
    for (std::uint64_t addr : expected) EXPECT_TRUE(h.isLive(NativeRef{addr}));
  }
}

TEST_F(NativeHeapTest, VisitRefsOfLeafVisitsNothing) {
  int calls = 0;
  heap.visitRefs(heap.newInt(4), [&](NativeRef) { ++calls; });
  EXPECT_EQ(calls, 0);
}

TEST_F(NativeHeapTest, VisitRefsKeepsMultiplicity) {
  const NativeRef a = heap.newInt(1);
  const NativeRef b = heap.newInt(2);
  const NativeRef items[] = {a, b, a};
  const NativeRef tup = heap.newTuple(items);
  EXPECT_EQ(heap.refsOf(tup), (std::vector<NativeRef>{a, b, a}));
}

TEST_F(NativeHeapTest, VisitRefsMatchesPayloadOfRandomContainers) {
  std::mt19937_64 rng(9);
  std::vector<NativeRef> pool;
  for (int i = 0; i < 10; ++i) pool.push_back(heap.newInt(i));
  for (int round = 0; round < 200; ++round) {
    std::multiset<std::uint64_t> expected;
    NativeRef container;
    if (round % 2 == 0) {
      container = heap.newList();
      for (std::size_t k = rng() % 8; k > 0; --k) {
        const NativeRef x = pool[rng() % pool.size()];
        heap.listAppend(container, x);
        expected.insert(x.addr);
      }
    } else {
      container = heap.newDict();
      for (std::size_t k = rng() % 8; k > 0; --k) {
        const NativeRef key = heap.newStr("k" + std::to_string(rng() % 100));
        const NativeRef v = pool[rng() % pool.size()];
        heap.dictSet(container, key, v);
        heap.decref(key);
      }
      for (auto [k, v] : heap.dictEntries(container)) {
        expected.insert(k.addr);
        expected.insert(v.addr);
      }
    }
    std::multiset<std::uint64_t> seen;
    heap.visitRefs(container, [&](NativeRef x) { seen.insert(x.addr); });
    EXPECT_EQ(seen, expected);
    heap.decref(container);
  }
}

TEST_F(NativeHeapTest, AuxListBehavesLikeAMap) {
  const NativeRef r = heap.newInt(0);
  EXPECT_FALSE(heap.auxGet(r, 7).has_value());
  const std::vector<std::byte> blob{std::byte{1}, std::byte{2}};
  heap.auxSet(r, 7, blob);
  EXPECT_EQ(heap.auxGet(r, 7), blob);

  std::mt19937_64 rng(3);
  for (int obj = 0; obj < 20; ++obj) {
    const NativeRef x = heap.newList();
    std::map<std::uint32_t, std::vector<std::byte>> shadow;
    for (int step = 0; step < 64; ++step) {
      const std::uint32_t tag = static_cast<std::uint32_t>(rng() % 6);
      if (rng() % 3 == 0) {
        EXPECT_EQ(heap.auxGet(x, tag), shadow.contains(tag) ? std::optional(shadow[tag]) : std::nullopt);
      } else if (rng() % 4 == 0) {
        EXPECT_EQ(heap.auxRemove(x, tag), shadow.erase(tag) == 1);
      } else {
        std::vector<std::byte> b(rng() % 5, std::byte{static_cast<unsigned char>(step)});
        heap.auxSet(x, tag, b);
        shadow[tag] = b;
      }
    }
  }
}

TEST_F(NativeHeapTest, FlagsRejectInvalidCombinations) {
  const NativeRef r = heap.newInt(1);
  EXPECT_THROW(heap.setFlags(r, hflag::kInitialized), InvariantViolation);
  EXPECT_THROW(heap.setFlags(r, hflag::kInitialized | hflag::kMirror | hflag::kPeer), InvariantViolation);
  EXPECT_THROW(heap.setFlags(r, hflag::kHasGcHead), InvariantViolation);
  EXPECT_THROW(heap.setFlags(r, 1u << 9), InvariantViolation);
  heap.setFlags(r, hflag::kInitialized | hflag::kMirror);
  EXPECT_EQ(heap.flags(r), hflag::kInitialized | hflag::kMirror);
}

TEST_F(NativeHeapTest, MutationGuardRejectsUnguardedWrites) {
  bool allowed = false;
  heap.setMutationGuard([&] { return allowed; });
  EXPECT_THROW(heap.newInt(1), InvariantViolation);
  allowed = true;
  EXPECT_NO_THROW(heap.decref(heap.newInt(1)));
}

TEST_F(NativeHeapTest, ClearPayloadBreaksCycles) {
  const std::size_t live = heap.liveCount();
  const NativeRef a = heap.newList();
  const NativeRef b = heap.newList();
  heap.listAppend(a, b);
  heap.listAppend(b, a);
  heap.decref(a);
  heap.decref(b);
  EXPECT_EQ(heap.liveCount(), live + 2);
  heap.incref(a);
  heap.clearPayload(a);
  heap.decref(a);
  EXPECT_EQ(heap.liveCount(), live);
}

TEST_F(NativeHeapTest, EdgeObserverSeesContainerWrites) {
  std::vector<std::pair<NativeRef, NativeRef>> seen;
  heap.setEdgeObserver([&](NativeRef from, NativeRef to) { seen.emplace_back(from, to); });
  const NativeRef l = heap.newList();
  const NativeRef x = heap.newInt(5);
  heap.listAppend(l, x);
  const NativeRef d = heap.newDict();
  heap.dictSetString(d, "k", x);
  ASSERT_GE(seen.size(), 2u);
  EXPECT_EQ(seen.front(), std::make_pair(l, x));
  EXPECT_EQ(seen.back().first, d);
}

}  // namespace
