#include <gtest/gtest.h>

#include "xrt/error.hpp"
#include "xrt/extload.hpp"
#include "xrt/runtime.hpp"

using namespace xrt;

namespace {

std::string parseError(std::string_view text) {
  try {
    parseDescriptors(text);
  } catch (const ExtensionError& e) {
    return e.what();
  }
  return {};
}

TEST(Descriptor, ParsesModuleFunctionsAndTypes) {
  const auto defs = parseDescriptors(
      "module m\n"
      "doc  Two words. \n"
      "fn f - identity  # trailing comment\n"
      "type T heap dict member:a@8 method:go:i:counter_bump\n");
  ASSERT_EQ(defs.size(), 1u);
  EXPECT_EQ(defs[0].name, "m");
  EXPECT_EQ(defs[0].doc, "Two words.");
  ASSERT_EQ(defs[0].functions.size(), 1u);
  EXPECT_EQ(defs[0].functions[0].format, "");
  ASSERT_EQ(defs[0].types.size(), 1u);
  EXPECT_TRUE(defs[0].types[0].isHeapType);
  EXPECT_TRUE(defs[0].types[0].dictOffset.has_value());
  EXPECT_EQ(defs[0].types[0].members[0].offset, 8u);
}

TEST(Descriptor, ErrorsNameTheLine) {
  EXPECT_NE(parseError("fn f i identity\n").find("line 1"), std::string::npos);
  EXPECT_NE(parseError("module m\n\nfn f i\n").find("line 3"), std::string::npos);
  EXPECT_NE(parseError("module m\ntype T neither\n").find("line 2"), std::string::npos);
  EXPECT_NE(parseError("module m\ntype T static member:x@z\n").find("line 2"), std::string::npos);
  EXPECT_NE(parseError("module m\nwidget\n").find("unknown record"), std::string::npos);
}

TEST(Descriptor, DemoExtensionShape) {
  const auto demo = demoExtension();
  EXPECT_EQ(demo.name, "demo");
  EXPECT_EQ(demo.functions.size(), 9u);
  ASSERT_EQ(demo.types.size(), 2u);
  EXPECT_FALSE(demo.types[0].isHeapType);
  EXPECT_TRUE(demo.types[1].isHeapType);
}

class ExtensionTest : public ::testing::Test {
 protected:
  Runtime rt;
  ManagedHeap& m = rt.managed;

  ManagedHandle call(ManagedHandle fn, std::vector<ManagedHandle> args) { return m.callObject(fn, args); }
  ManagedHandle attr(ManagedHandle obj, const char* name) {
    const auto a = m.findAttr(obj, name);
    EXPECT_TRUE(a.has_value()) << name;
    return a.value_or(kNullHandle);
  }
};

TEST_F(ExtensionTest, ImportExposesEveryName) {
  const ManagedHandle demo = rt.extensions.importModule("demo");
  for (const auto& fn : demoExtension().functions) EXPECT_TRUE(m.findAttr(demo, fn.name).has_value()) << fn.name;
  EXPECT_EQ(m.strOf(attr(demo, "__name__")), "demo");
  EXPECT_EQ(m.strOf(attr(demo, "__doc__")), demoExtension().doc);
  EXPECT_TRUE(m.findAttr(demo, "Point").has_value());
  EXPECT_TRUE(m.findAttr(demo, "Counter").has_value());
}

TEST_F(ExtensionTest, ImportIsCachedAndRooted) {
  const ManagedHandle a = rt.extensions.importModule("demo");
  const ManagedHandle b = rt.extensions.importModule("demo");
  EXPECT_EQ(a, b);
  EXPECT_TRUE(m.isRooted(a));
  rt.gc.fullCollect();
  EXPECT_TRUE(m.isLive(a));
}

TEST_F(ExtensionTest, StaticTypesResolveByName) {
  const NativeRef point = rt.bridge.staticTypes().byName("demo.Point");
  ASSERT_TRUE(point);
  EXPECT_TRUE(rt.natives.isImmortal(point));
  EXPECT_FALSE(rt.bridge.staticTypes().byName("demo.Counter"));
  EXPECT_FALSE(rt.bridge.staticTypes().byName("demo.Nothing"));
}

TEST_F(ExtensionTest, DuplicateRegistrationIsRejected) {
  EXPECT_THROW(rt.extensions.registerExtension(demoExtension()), ExtensionError);
  EXPECT_THROW(rt.extensions.importModule("absent"), ExtensionError);
}

TEST_F(ExtensionTest, InvalidDefinitionLeavesNoTrace) {
  const std::size_t live = rt.natives.liveCount();
  auto bad = parseDescriptors("module bad\nfn f i no_such_behavior\n").front();
  EXPECT_THROW(rt.extensions.registerExtension(bad), ExtensionError);
  auto badFormat = parseDescriptors("module bad\nfn f i( identity\n").front();
  EXPECT_THROW(rt.extensions.registerExtension(badFormat), ExtensionError);
  auto dup = parseDescriptors("module bad\nfn f O identity\nfn f O identity\n").front();
  EXPECT_THROW(rt.extensions.registerExtension(dup), ExtensionError);
  EXPECT_FALSE(rt.extensions.isRegistered("bad"));
  EXPECT_EQ(rt.natives.liveCount(), live);
}

TEST_F(ExtensionTest, AddIntsReturnsTheSum) {
  const ManagedHandle demo = rt.extensions.importModule("demo");
  const ManagedHandle r = call(attr(demo, "add_ints"), {m.newInt(3), m.newInt(4)});
  EXPECT_EQ(m.intValue(r), 7);
  EXPECT_EQ(rt.extensions.invocations(), 1u);
}

TEST_F(ExtensionTest, IdentityReturnsTheSameObject) {
  const ManagedHandle demo = rt.extensions.importModule("demo");
  const ManagedHandle l = m.newList({m.newInt(1)});
  EXPECT_EQ(call(attr(demo, "identity"), {l}), l);
}

TEST_F(ExtensionTest, IdentityIsRefcountNeutral) {
  auto g = rt.lock.enterNative();
  const NativeRef fn = rt.natives.dictGetString(rt.natives.module(rt.extensions.nativeModule("demo")).dict, "identity");
  const NativeRef x = rt.natives.newList();
  const NativeRef args = rt.natives.newTuple(std::span<const NativeRef>(&x, 1));
  const std::int64_t before = rt.natives.refcount(x);
  const NativeRef out = rt.extensions.invokeCFunction(fn, args);
  EXPECT_EQ(out, x);
  EXPECT_EQ(rt.natives.refcount(x), before + 1);
  rt.natives.decref(out);
  EXPECT_EQ(rt.natives.refcount(x), before);
  rt.natives.decref(args);
  rt.natives.decref(x);
}

TEST_F(ExtensionTest, ArityErrorNamesTheFunction) {
  const ManagedHandle demo = rt.extensions.importModule("demo");
  try {
    call(attr(demo, "add_ints"), {m.newInt(3)});
    FAIL() << "expected ArityError";
  } catch (const ArityError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("add_ints(): ", 0), 0u) << e.what();
  }
  try {
    call(attr(demo, "add_ints"), {m.newInt(3), m.newStr("x")});
    FAIL() << "expected KindError";
  } catch (const KindError& e) {
    EXPECT_EQ(e.unit(), 1u);
    EXPECT_NE(std::string(e.what()).find("add_ints"), std::string::npos);
  }
}

TEST_F(ExtensionTest, PointMembersGetsetsMethodsAndRendering) {
  const ManagedHandle demo = rt.extensions.importModule("demo");
  const ManagedHandle p = call(attr(demo, "Point"), {m.newInt(3), m.newInt(4)});
  EXPECT_EQ(m.intValue(attr(p, "x")), 3);
  EXPECT_EQ(m.intValue(attr(p, "y")), 4);
  EXPECT_DOUBLE_EQ(m.floatValue(attr(p, "norm")), 5.0);
  EXPECT_EQ(m.strOf(p), "(3, 4)");
  EXPECT_EQ(m.reprOf(p), "demo.Point(3, 4)");
  const ManagedHandle q = call(attr(p, "moved"), {m.newInt(1), m.newInt(-1)});
  EXPECT_EQ(m.reprOf(q), "demo.Point(4, 3)");
}

TEST_F(ExtensionTest, HeapTypeInstancesCarryState) {
  const ManagedHandle demo = rt.extensions.importModule("demo");
  const ManagedHandle c = call(attr(demo, "Counter"), {m.newInt(0)});
  call(attr(c, "bump"), {m.newInt(2)});
  call(attr(c, "bump"), {m.newInt(5)});
  EXPECT_EQ(m.intValue(attr(c, "count")), 7);
}

TEST_F(ExtensionTest, CustomDescriptorsRegisterAlongsideDemo) {
  rt.extensions.registerExtension(parseDescriptors("module extra\nfn echo O identity\n").front());
  const ManagedHandle extra = rt.extensions.importModule("extra");
  EXPECT_TRUE(m.singleton(SingletonId::None) == attr(extra, "__doc__"));
  EXPECT_EQ(m.strOf(call(attr(extra, "echo"), {m.newStr("hi")})), "hi");
  EXPECT_EQ(rt.extensions.names(), (std::vector<std::string>{"demo", "extra"}));
}

}  // namespace
