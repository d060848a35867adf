#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "xrt/error.hpp"
#include "xrt/managed_heap.hpp"

using namespace xrt;

namespace {

TEST(ManagedHeap, FindAttrReadsModuleAttributes) {
  ManagedHeap m;
  const ManagedHandle mod = m.newModule("mod");
  const ManagedHandle x = m.newInt(1);
  m.setAttr(mod, "x", x);
  EXPECT_EQ(m.findAttr(mod, "x"), x);
}

TEST(ManagedHeap, FindAttrMissingIsAbsent) {
  ManagedHeap m;
  EXPECT_FALSE(m.findAttr(m.newInt(3), "nonexistent").has_value());
}

TEST(ManagedHeap, CallingAnIntIsATypeError) {
  ManagedHeap m;
  EXPECT_THROW(m.callObject(m.newInt(1), std::span<const ManagedHandle>{}), TypeError);
}

TEST(ManagedHeap, ManagedFunctionsAreCallable) {
  ManagedHeap m;
  const ManagedHandle f = m.newFunction("twice", [](ManagedHeap& heap, std::span<const ManagedHandle> args) {
    return heap.newInt(2 * heap.intValue(args[0]));
  });
  const ManagedHandle arg = m.newInt(21);
  EXPECT_EQ(m.intValue(m.callObject(f, std::span<const ManagedHandle>(&arg, 1))), 42);
}

TEST(ManagedHeap, Rendering) {
  ManagedHeap m;
  EXPECT_EQ(m.strOf(m.newInt(5)), "5");
  EXPECT_EQ(m.reprOf(m.newStr("a")), "'a'");
  EXPECT_EQ(m.strOf(m.newStr("a")), "a");
  EXPECT_EQ(m.reprOf(m.newTuple({m.newInt(1), m.newInt(2)})), "(1, 2)");
  EXPECT_EQ(m.reprOf(m.newTuple({m.newInt(1)})), "(1,)");
  EXPECT_EQ(m.reprOf(m.newList({m.newInt(1), m.newStr("b")})), "[1, 'b']");
  EXPECT_EQ(m.reprOf(m.newFloat(2.5)), "2.5");
  EXPECT_EQ(m.reprOf(m.singleton(SingletonId::None)), "None");
}

TEST(ManagedHeap, SelfContainingListRendersEllipsis) {
  ManagedHeap m;
  const ManagedHandle l = m.newList();
  m.listAppend(l, l);
  EXPECT_EQ(m.reprOf(l), "[[...]]");
}

TEST(ManagedHeap, BuiltinListAndDictMethods) {
  ManagedHeap m;
  const ManagedHandle l = m.newList();
  const auto append = m.findAttr(l, "append");
  ASSERT_TRUE(append.has_value());
  const ManagedHandle v = m.newInt(9);
  m.callObject(*append, std::span<const ManagedHandle>(&v, 1));
  EXPECT_EQ(m.listSize(l), 1u);

  const ManagedHandle d = m.newDict();
  const ManagedHandle k = m.newStr("k");
  m.dictSet(d, k, v);
  const auto get = m.findAttr(d, "get");
  ASSERT_TRUE(get.has_value());
  EXPECT_EQ(m.callObject(*get, std::span<const ManagedHandle>(&k, 1)), v);
}

TEST(ManagedHeap, UnrootedIntIsReclaimed) {
  ManagedHeap m;
  m.newInt(1);
  EXPECT_EQ(m.gcCollect().reclaimedCount, 1u);
}

TEST(ManagedHeap, RootedChainSurvives) {
  ManagedHeap m;
  const ManagedHandle c = m.newList();
  const ManagedHandle b = m.newList({c});
  const ManagedHandle a = m.newList({b});
  m.addRoot(a);
  EXPECT_EQ(m.gcCollect().reclaimedCount, 0u);
  EXPECT_TRUE(m.isLive(c));
}

TEST(ManagedHeap, RandomGraphsReclaimExactlyTheUnreachable) {
  std::mt19937_64 rng(77);
  for (int round = 0; round < 1000; ++round) {
    ManagedHeap m;
    const auto baseline = m.liveHandles();
    std::vector<ManagedHandle> nodes;
    const std::size_t count = 2 + rng() % 30;
    for (std::size_t i = 0; i < count; ++i) nodes.push_back(rng() % 3 == 0 ? m.newModule("m") : m.newList());
    std::map<std::uint64_t, std::vector<std::uint64_t>> edges;
    for (std::size_t e = rng() % (2 * count); e > 0; --e) {
      const ManagedHandle from = nodes[rng() % count];
      const ManagedHandle to = nodes[rng() % count];
      if (m.kind(from) == ManagedKind::List) {
        m.listAppend(from, to);
      } else if (rng() % 2 == 0) {
        m.setAttr(from, "a" + std::to_string(e), to);
      } else {
        m.addNativeEdge(from, to);
      }
      edges[from.id].push_back(to.id);
    }
    std::vector<std::uint64_t> roots;
    for (ManagedHandle h : nodes) {
      if (rng() % 6 == 0) {
        m.addRoot(h);
        roots.push_back(h.id);
      }
    }
    const auto live = oracle::reachable(edges, roots);
    const auto report = m.gcCollect();
    ASSERT_EQ(report.reclaimedCount, count - live.size());
    for (ManagedHandle h : nodes) ASSERT_EQ(m.isLive(h), live.contains(h.id)) << "round " << round;
    for (ManagedHandle h : baseline) ASSERT_TRUE(m.isLive(h));
  }
}

TEST(ManagedHeap, FinalizationQueueIsFifoInSweepOrder) {
  ManagedHeap m;
  EXPECT_FALSE(m.pollFinalizable().has_value());
  const ManagedHandle a = m.newGcHead(100);
  const ManagedHandle b = m.newGcHead(200);
  const auto report = m.gcCollect();
  EXPECT_EQ(report.enqueuedFinalizables, 2u);
  EXPECT_EQ(m.pollFinalizable(), a);
  EXPECT_EQ(m.pollFinalizable(), b);
  EXPECT_FALSE(m.pollFinalizable().has_value());
  EXPECT_TRUE(m.isZombie(a));
  m.release(a);
  EXPECT_FALSE(m.isLive(a));
}

TEST(ManagedHeap, PolledEqualsEnqueuedAcrossCollections) {
  std::mt19937_64 rng(4);
  ManagedHeap m;
  std::uint64_t enqueued = 0;
  std::uint64_t polled = 0;
  for (int round = 0; round < 50; ++round) {
    for (std::size_t i = rng() % 6; i > 0; --i) {
      const ManagedHandle h = m.newGcHead(1 + rng() % 1000);
      if (rng() % 3 == 0) m.addRoot(h);
    }
    enqueued += m.gcCollect().enqueuedFinalizables;
    for (std::size_t i = rng() % 4; i > 0; --i) {
      if (auto h = m.pollFinalizable()) {
        ++polled;
        m.release(*h);
      }
    }
  }
  while (auto h = m.pollFinalizable()) {
    ++polled;
    m.release(*h);
  }
  EXPECT_EQ(polled, enqueued);
  EXPECT_EQ(m.finalizationQueue().totalPolled(), m.finalizationQueue().totalEnqueued());
}

TEST(ManagedHeap, RootProvidersKeepObjectsAlive) {
  ManagedHeap m;
  const ManagedHandle x = m.newInt(1);
  m.addRootProvider([&](std::vector<ManagedHandle>& out) { out.push_back(x); });
  EXPECT_EQ(m.gcCollect().reclaimedCount, 0u);
  EXPECT_TRUE(m.isLive(x));
}

TEST(ManagedHeap, LockProbeCountsEntriesUnderTheLock) {
  ManagedHeap m;
  bool held = false;
  m.setLockProbe([&] { return held; });
  const ManagedHandle i = m.newInt(1);
  m.findAttr(i, "x");
  EXPECT_EQ(m.entriesUnderLock(), 0u);
  held = true;
  m.findAttr(i, "x");
  EXPECT_EQ(m.entriesUnderLock(), 1u);
}

TEST(ManagedHeap, ReplaceKeepsRootAndEdges) {
  ManagedHeap m;
  const ManagedHandle head = m.newGcHead(64);
  const ManagedHandle other = m.newInt(3);
  m.addRoot(head);
  m.addNativeEdge(head, other);
  ManagedObject twin;
  twin.kind = ManagedKind::Peer;
  twin.payload = ManagedObject::NativeAddr{64};
  m.replace(head, std::move(twin));
  EXPECT_EQ(m.kind(head), ManagedKind::Peer);
  EXPECT_TRUE(m.isRooted(head));
  EXPECT_EQ(m.nativeEdges(head), std::vector<ManagedHandle>{other});
}

}  // namespace
