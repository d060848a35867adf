#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "xrt/error.hpp"
#include "xrt/runtime.hpp"

using namespace xrt;

namespace {

class BridgeTest : public ::testing::Test {
 protected:
  Runtime rt;
  NativeHeap& n = rt.natives;
  ManagedHeap& m = rt.managed;

  NativeRef pointType() {
    return rt.bridge.staticTypes().byName("demo.Point");
  }

  // New reference to a demo.Point built natively.
  NativeRef newPoint(std::int64_t x, std::int64_t y) {
    auto g = rt.lock.enterNative();
    const NativeRef xs[] = {n.newInt(x), n.newInt(y)};
    const NativeRef args = n.newTuple(xs);
    n.decref(xs[0]);
    n.decref(xs[1]);
    const NativeRef p = rt.api.call(pointType(), args);
    n.decref(args);
    return p;
  }
};

TEST_F(BridgeTest, StrategyFollowsPayloadKind) {
  const auto& b = n.builtins();
  EXPECT_EQ(rt.bridge.strategyFor(b.dict), Strategy::Delegate);
  EXPECT_EQ(rt.bridge.strategyFor(b.slice), Strategy::Delegate);
  EXPECT_EQ(rt.bridge.strategyFor(b.module), Strategy::Delegate);
  EXPECT_EQ(rt.bridge.strategyFor(b.tuple), Strategy::Mirror);
  EXPECT_EQ(rt.bridge.strategyFor(b.list), Strategy::Mirror);
  EXPECT_EQ(rt.bridge.strategyFor(b.str), Strategy::Mirror);
  EXPECT_EQ(rt.bridge.strategyFor(b.int_), Strategy::Mirror);
  EXPECT_EQ(rt.bridge.strategyFor(b.float_), Strategy::Mirror);
  EXPECT_EQ(rt.bridge.strategyFor(pointType()), Strategy::Peer);
  EXPECT_EQ(rt.bridge.strategyFor(b.cfunction), Strategy::Peer);
}

TEST_F(BridgeTest, NullConvertsToNull) {
  EXPECT_EQ(rt.bridge.toManaged(kNullRef), kNullHandle);
  EXPECT_EQ(rt.bridge.toNative(kNullHandle), kNullRef);
}

TEST_F(BridgeTest, SingletonsAreInterned) {
  const NativeRef none = n.singleton(SingletonId::None);
  EXPECT_EQ(rt.bridge.toManaged(none), rt.bridge.toManaged(none));
  EXPECT_EQ(rt.bridge.toManaged(none), m.singleton(SingletonId::None));
  EXPECT_EQ(rt.bridge.toNative(m.singleton(SingletonId::True)), n.singleton(SingletonId::True));
}

TEST_F(BridgeTest, StaticTypesResolveThroughTheRegistry) {
  const ManagedHandle h = rt.bridge.toManaged(pointType());
  EXPECT_EQ(m.kind(h), ManagedKind::PeerType);
  EXPECT_EQ(rt.bridge.staticTypes().byRef(pointType()), h);
  EXPECT_EQ(rt.bridge.toNative(h), pointType());
}

TEST_F(BridgeTest, TupleElementsConvertBackToEqualNatives) {
  NativeRef tup;
  {
    auto g = rt.lock.enterNative();
    const NativeRef items[] = {n.newInt(1), n.newStr("a")};
    tup = n.newTuple(items);
    n.decref(items[0]);
    n.decref(items[1]);
  }
  const ManagedHandle h = rt.bridge.toManaged(tup);
  ASSERT_EQ(m.kind(h), ManagedKind::Tuple);
  const auto managedItems = m.tupleItems(h);
  ASSERT_EQ(managedItems.size(), 2u);
  auto g = rt.lock.enterNative();
  for (std::size_t i = 0; i < 2; ++i) {
    const NativeRef back = rt.bridge.toNative(managedItems[i]);
    EXPECT_TRUE(oracle::structurallyEqual(n, back, n.items(tup)[i]));
    EXPECT_EQ(back, n.items(tup)[i]);
  }
  n.decref(tup);
}

TEST_F(BridgeTest, LookupRoundTripBothWays) {
  NativeRef r;
  {
    auto g = rt.lock.enterNative();
    r = n.newList();
  }
  const ManagedHandle h = rt.bridge.toManaged(r);
  EXPECT_EQ(rt.bridge.toNative(h), r);
  EXPECT_EQ(rt.bridge.toManaged(r), h);
  EXPECT_NE(n.flags(r) & hflag::kMirror, 0);
  EXPECT_NE(n.flags(r) & hflag::kInitialized, 0);
  auto g = rt.lock.enterNative();
  n.decref(r);
}

TEST_F(BridgeTest, FreshManagedIntBecomesNativeInt) {
  const ManagedHandle h = m.newInt(7);
  const NativeRef r = rt.bridge.toNative(h);
  EXPECT_EQ(n.kind(r), NativeKind::Int);
  EXPECT_EQ(n.intValue(r), 7);
  EXPECT_GE(n.refcount(r), 1);
  EXPECT_EQ(rt.bridge.toManaged(r), h);
}

TEST_F(BridgeTest, FunctionsHaveNoNativeForm) {
  const ManagedHandle f = m.newFunction("f", [](ManagedHeap& heap, std::span<const ManagedHandle>) {
    return heap.singleton(SingletonId::None);
  });
  EXPECT_THROW(rt.bridge.toNative(f), ConversionError);
}

TEST_F(BridgeTest, PeerGetAttrReadsInstanceDict) {
  const NativeRef p = newPoint(1, 2);
  {
    auto g = rt.lock.enterNative();
    const NativeRef v = n.newInt(42);
    rt.api.setAttr(p, "bar", v);
    n.decref(v);
  }
  const ManagedHandle peer = rt.bridge.toManaged(p);
  ASSERT_EQ(m.kind(peer), ManagedKind::Peer);
  const auto bar = m.findAttr(peer, "bar");
  ASSERT_TRUE(bar.has_value());
  EXPECT_EQ(m.intValue(*bar), 42);
  EXPECT_FALSE(rt.bridge.peerGetAttr(peer, "missing").has_value());
  EXPECT_EQ(m.entriesUnderLock(), 0u);
  auto g = rt.lock.enterNative();
  n.decref(p);
}

TEST_F(BridgeTest, GetsetAttributeMatchesDirectGetterCall) {
  const NativeRef p = newPoint(3, 4);
  const ManagedHandle peer = rt.bridge.toManaged(p);
  const auto norm = m.findAttr(peer, "norm");
  ASSERT_TRUE(norm.has_value());
  NativeRef direct;
  {
    auto g = rt.lock.enterNative();
    direct = rt.extensions.invokeGetter("point_norm", p);
  }
  EXPECT_EQ(m.floatValue(*norm), n.floatValue(direct));
  EXPECT_DOUBLE_EQ(m.floatValue(*norm), 5.0);
  auto g = rt.lock.enterNative();
  n.decref(direct);
  n.decref(p);
}

TEST_F(BridgeTest, MembersAndMethodsThroughThePeer) {
  const NativeRef p = newPoint(5, -2);
  const ManagedHandle peer = rt.bridge.toManaged(p);
  EXPECT_EQ(m.intValue(*m.findAttr(peer, "x")), 5);
  EXPECT_EQ(m.intValue(*m.findAttr(peer, "y")), -2);
  const auto moved = m.findAttr(peer, "moved");
  ASSERT_TRUE(moved.has_value());
  const ManagedHandle args[] = {m.newInt(1), m.newInt(1)};
  const ManagedHandle q = m.callObject(*moved, args);
  EXPECT_EQ(m.reprOf(q), "demo.Point(6, -1)");
  EXPECT_EQ(m.strOf(peer), "(5, -2)");
  auto g = rt.lock.enterNative();
  n.decref(p);
}

TEST_F(BridgeTest, ManagedReprOfMirroredTupleMatchesNativeRenderer) {
  NativeRef tup;
  {
    auto g = rt.lock.enterNative();
    const NativeRef items[] = {n.newInt(1), n.newInt(2)};
    tup = n.newTuple(items);
    n.decref(items[0]);
    n.decref(items[1]);
  }
  const ManagedHandle h = rt.bridge.toManaged(tup);
  std::string native;
  {
    auto g = rt.lock.enterNative();
    native = rt.api.repr(tup);
  }
  EXPECT_EQ(m.reprOf(h), native);
  EXPECT_EQ(native, "(1, 2)");
  auto g = rt.lock.enterNative();
  n.decref(tup);
}

TEST_F(BridgeTest, StringsSyncOnce) {
  NativeRef s;
  {
    auto g = rt.lock.enterNative();
    s = n.newStr("ab");
  }
  const ManagedHandle h = rt.bridge.toManaged(s);
  EXPECT_EQ(m.strValue(h), "ab");
  {
    auto g = rt.lock.enterNative();
    n.strSetByte(s, 0, 'z');
  }
  EXPECT_EQ(m.strValue(h), "ab");
  auto g = rt.lock.enterNative();
  n.decref(s);
}

std::vector<std::int64_t> managedInts(ManagedHeap& m, ManagedHandle list) {
  std::vector<std::int64_t> out;
  for (ManagedHandle h : m.listItems(list)) out.push_back(m.intValue(h));
  return out;
}

std::vector<std::int64_t> nativeInts(Runtime& rt, NativeRef list) {
  auto g = rt.lock.enterNative();
  std::vector<std::int64_t> out;
  for (NativeRef r : rt.natives.items(list)) out.push_back(rt.natives.intValue(r));
  return out;
}

TEST_F(BridgeTest, NativeAppendIsVisibleThroughMirroredList) {
  NativeRef l;
  {
    auto g = rt.lock.enterNative();
    l = n.newList();
    for (int i : {1, 2}) {
      const NativeRef x = n.newInt(i);
      n.listAppend(l, x);
      n.decref(x);
    }
  }
  const ManagedHandle h = rt.bridge.toManaged(l);
  {
    auto g = rt.lock.enterNative();
    const NativeRef three = n.newInt(3);
    n.listAppend(l, three);
    n.decref(three);
  }
  EXPECT_EQ(managedInts(m, h), (std::vector<std::int64_t>{1, 2, 3}));
  auto g = rt.lock.enterNative();
  n.decref(l);
}

TEST_F(BridgeTest, ManagedAppendIsVisibleNatively) {
  const ManagedHandle h = m.newList({m.newInt(5)});
  const NativeRef l = rt.bridge.toNative(h);
  EXPECT_EQ(nativeInts(rt, l), (std::vector<std::int64_t>{5}));
  m.listAppend(h, m.newInt(6));
  EXPECT_EQ(nativeInts(rt, l), (std::vector<std::int64_t>{5, 6}));
}

TEST_F(BridgeTest, RandomListOperationsAgreeWithShadowList) {
  std::mt19937_64 rng(12);
  const ManagedHandle h = m.newList();
  m.addRoot(h);
  const NativeRef l = rt.bridge.toNative(h);
  std::vector<std::int64_t> shadow;
  for (int step = 0; step < 500; ++step) {
    const std::int64_t v = static_cast<std::int64_t>(rng() % 100);
    const bool native = rng() % 2;
    const int op = shadow.empty() ? 0 : static_cast<int>(rng() % 4);
    const std::size_t at = shadow.empty() ? 0 : rng() % shadow.size();
    if (native) {
      auto g = rt.lock.enterNative();
      const NativeRef x = n.newInt(v);
      if (op == 0) n.listAppend(l, x);
      if (op == 1) n.listInsert(l, at, x);
      if (op == 2) n.listSet(l, at, x);
      if (op == 3) n.listDelete(l, at);
      n.decref(x);
    } else {
      if (op == 0) m.listAppend(h, m.newInt(v));
      if (op == 1) m.listInsert(h, at, m.newInt(v));
      if (op == 2) m.listSet(h, at, m.newInt(v));
      if (op == 3) m.listErase(h, at);
    }
    if (op == 0) shadow.push_back(v);
    if (op == 1) shadow.insert(shadow.begin() + static_cast<std::ptrdiff_t>(at), v);
    if (op == 2) shadow[at] = v;
    if (op == 3) shadow.erase(shadow.begin() + static_cast<std::ptrdiff_t>(at));
    ASSERT_EQ(managedInts(m, h), shadow);
    ASSERT_EQ(nativeInts(rt, l), shadow);
  }
}

TEST_F(BridgeTest, DelegateDictForwardsToManagedTwin) {
  NativeRef d;
  {
    auto g = rt.lock.enterNative();
    d = n.newDict();
    const NativeRef v = n.newInt(1);
    n.dictSetString(d, "a", v);
    n.decref(v);
  }
  const ManagedHandle h = rt.bridge.toManaged(d);
  EXPECT_EQ(m.kind(h), ManagedKind::Dict);
  EXPECT_NE(n.flags(d) & hflag::kDelegate, 0);
  m.dictSet(h, m.newStr("b"), m.newInt(2));
  auto g = rt.lock.enterNative();
  EXPECT_EQ(rt.api.dictSize(d), 2u);
  const NativeRef b = rt.api.dictGetItemString(d, "b");
  ASSERT_TRUE(b);
  EXPECT_EQ(n.intValue(b), 2);
  EXPECT_GT(rt.api.managedForwards(), 0u);
  n.decref(d);
}

TEST_F(BridgeTest, CallingCFunctionPeers) {
  const ManagedHandle demo = rt.extensions.importModule("demo");
  const auto add = m.findAttr(demo, "add_ints");
  ASSERT_TRUE(add.has_value());
  EXPECT_EQ(m.kind(*add), ManagedKind::Peer);
  const ManagedHandle args[] = {m.newInt(3), m.newInt(4)};
  EXPECT_EQ(m.intValue(m.callObject(*add, args)), 3 + 4);

  const auto identity = m.findAttr(demo, "identity");
  const ManagedHandle x = m.newList();
  const ManagedHandle back = m.callObject(*identity, std::span<const ManagedHandle>(&x, 1));
  EXPECT_EQ(rt.bridge.toNative(back), rt.bridge.toNative(x));
  EXPECT_EQ(back, x);
}

TEST_F(BridgeTest, ConversionCountersSplitHitsAndInits) {
  const auto before = rt.bridge.stats();
  NativeRef r;
  {
    auto g = rt.lock.enterNative();
    r = n.newInt(11);
  }
  const ManagedHandle h = rt.bridge.toManaged(r);
  rt.bridge.toManaged(r);
  rt.bridge.toNative(h);
  const auto after = rt.bridge.stats();
  EXPECT_EQ(after.toManagedInit - before.toManagedInit, 1u);
  EXPECT_EQ(after.toManagedHit - before.toManagedHit, 1u);
  EXPECT_EQ(after.toNativeHit - before.toNativeHit, 1u);
  auto g = rt.lock.enterNative();
  n.decref(r);
}

}  // namespace
