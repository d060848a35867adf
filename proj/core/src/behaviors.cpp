#include <algorithm>
#include <cmath>
#include <thread>

#include "xrt/error.hpp"
#include "xrt/extload.hpp"
#include "xrt/runtime.hpp"

namespace xrt {

namespace {

using valuefmt::Value;
using Values = std::vector<Value>;
using Args = std::span<const Value>;

std::int64_t intArg(Args args, std::size_t i) { return std::get<std::int64_t>(args[i]); }
NativeRef objArg(Args args, std::size_t i) { return std::get<NativeRef>(args[i]); }

// Wrapping add: extension ints are fixed-width.
std::int64_t addWrapping(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}

std::int64_t member(Runtime& rt, NativeRef self, std::string_view name) {
  if (!self) throw CallError("unbound method");
  const auto& info = rt.natives.typeInfo(rt.natives.typeOf(self));
  for (const auto& m : info.members) {
    if (m.name == name) return rt.natives.memberGet(self, m.offset);
  }
  throw CallError(info.qualifiedName() + " has no member '" + std::string(name) + "'");
}

void setMember(Runtime& rt, NativeRef self, std::string_view name, std::int64_t value) {
  const auto& info = rt.natives.typeInfo(rt.natives.typeOf(self));
  for (const auto& m : info.members) {
    if (m.name == name) return rt.natives.memberSet(self, m.offset, value);
  }
  throw CallError(info.qualifiedName() + " has no member '" + std::string(name) + "'");
}

// Instantiates `type` through the generic call path.
NativeRef newPoint(Runtime& rt, NativeRef type, std::int64_t x, std::int64_t y) {
  const Value parts[] = {x, y};
  const NativeRef args = valuefmt::buildValue(rt.natives, valuefmt::parseFormat("(ii)"), parts);
  NativeRef obj;
  try {
    obj = rt.api.call(type, args);
  } catch (...) {
    rt.natives.decref(args);
    throw;
  }
  rt.natives.decref(args);
  return obj;
}

}  // namespace

BehaviorRegistry BehaviorRegistry::builtins() {
  BehaviorRegistry reg;
  reg.add({"identity", "O", [](BehaviorContext& ctx, Args args) -> Values {
             ctx.rt.natives.incref(objArg(args, 0));
             return {objArg(args, 0)};
           }});
  reg.add({"add_ints", "i", [](BehaviorContext&, Args args) -> Values {
             return {addWrapping(intArg(args, 0), intArg(args, 1))};
           }});
  reg.add({"make_point", "O", [](BehaviorContext& ctx, Args args) -> Values {
             const NativeRef type = ctx.rt.bridge.staticTypes().byName("demo.Point");
             if (!type) throw CallError("demo.Point is not registered");
             return {newPoint(ctx.rt, type, intArg(args, 0), intArg(args, 1))};
           }});
  reg.add({"make_capsule", "O", [](BehaviorContext& ctx, Args args) -> Values {
             const auto& text = std::get<std::string>(args[0]);
             std::vector<std::byte> blob(text.size());
             std::transform(text.begin(), text.end(), blob.begin(), [](char c) { return std::byte(c); });
             return {ctx.rt.natives.newCapsule("demo.blob", std::move(blob))};
           }});
  reg.add({"capsule_roundtrip", "s", [](BehaviorContext& ctx, Args args) -> Values {
             const auto& text = std::get<std::string>(args[0]);
             std::vector<std::byte> blob(text.size());
             std::transform(text.begin(), text.end(), blob.begin(), [](char c) { return std::byte(c); });
             auto& n = ctx.rt.natives;
             const NativeRef cap = n.newCapsule("demo.blob", std::move(blob));
             const auto& stored = n.capsule(cap).blob;
             std::string out(stored.size(), '\0');
             std::transform(stored.begin(), stored.end(), out.begin(), [](std::byte b) { return char(b); });
             n.decref(cap);
             return {std::move(out)};
           }});
  reg.add({"wrap", "(O)", [](BehaviorContext& ctx, Args args) -> Values {
             ctx.rt.natives.incref(objArg(args, 0));
             return {objArg(args, 0)};
           }});
  reg.add({"range_list", "O", [](BehaviorContext& ctx, Args args) -> Values {
             auto& n = ctx.rt.natives;
             const NativeRef list = n.newList();
             for (std::int64_t k = 0; k < intArg(args, 0); ++k) {
               const NativeRef item = n.newInt(k);
               n.listAppend(list, item);
               n.decref(item);
             }
             return {list};
           }});
  reg.add({"sum_list", "i", [](BehaviorContext& ctx, Args args) -> Values {
             auto& n = ctx.rt.natives;
             std::int64_t total = 0;
             for (NativeRef item : n.items(objArg(args, 0))) {
               if (n.kind(item) != NativeKind::Int) throw TypeError("sum_list expects a list of ints");
               total = addWrapping(total, n.intValue(item));
             }
             return {total};
           }});
  // Runs n yields with the boundary lock released, like a blocking call
  // bracketed by Py_BEGIN_ALLOW_THREADS / Py_END_ALLOW_THREADS.
  reg.add({"spin_allow", "i", [](BehaviorContext& ctx, Args args) -> Values {
             const std::int64_t n = intArg(args, 0);
             ctx.rt.lock.allowThreadsBegin();
             for (std::int64_t k = 0; k < n; ++k) std::this_thread::yield();
             ctx.rt.lock.allowThreadsEnd();
             return {n};
           }});
  reg.add({"point_norm", "d", [](BehaviorContext& ctx, Args) -> Values {
             const double x = static_cast<double>(member(ctx.rt, ctx.self, "x"));
             const double y = static_cast<double>(member(ctx.rt, ctx.self, "y"));
             return {std::hypot(x, y)};
           }});
  reg.add({"point_repr", "s", [](BehaviorContext& ctx, Args) -> Values {
             const auto& info = ctx.rt.natives.typeInfo(ctx.rt.natives.typeOf(ctx.self));
             return {info.qualifiedName() + "(" + std::to_string(member(ctx.rt, ctx.self, "x")) + ", " +
                     std::to_string(member(ctx.rt, ctx.self, "y")) + ")"};
           }});
  reg.add({"point_str", "s", [](BehaviorContext& ctx, Args) -> Values {
             return {"(" + std::to_string(member(ctx.rt, ctx.self, "x")) + ", " +
                     std::to_string(member(ctx.rt, ctx.self, "y")) + ")"};
           }});
  reg.add({"point_moved", "O", [](BehaviorContext& ctx, Args args) -> Values {
             const std::int64_t x = addWrapping(member(ctx.rt, ctx.self, "x"), intArg(args, 0));
             const std::int64_t y = addWrapping(member(ctx.rt, ctx.self, "y"), intArg(args, 1));
             return {newPoint(ctx.rt, ctx.rt.natives.typeOf(ctx.self), x, y)};
           }});
  reg.add({"counter_bump", "i", [](BehaviorContext& ctx, Args args) -> Values {
             const std::int64_t next = addWrapping(member(ctx.rt, ctx.self, "count"), intArg(args, 0));
             setMember(ctx.rt, ctx.self, "count", next);
             return {next};
           }});
  return reg;
}

void BehaviorRegistry::add(Behavior behavior) {
  valuefmt::parseFormat(behavior.resultFormat);
  std::string name = behavior.name;
  behaviors_.insert_or_assign(std::move(name), std::move(behavior));
}

const Behavior* BehaviorRegistry::find(std::string_view name) const {
  auto it = behaviors_.find(name);
  return it == behaviors_.end() ? nullptr : &it->second;
}

std::vector<std::string> BehaviorRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, b] : behaviors_) out.push_back(name);
  return out;
}

}  // namespace xrt
