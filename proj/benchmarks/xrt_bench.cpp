#include <benchmark/benchmark.h>

#include "xrt/runtime.hpp"
#include "xrt/valuefmt.hpp"

using namespace xrt;

namespace {

// Cached lookup in both directions once the pair exists.
void BM_ConversionHit(benchmark::State& state) {
  Runtime rt;
  const ManagedHandle h = rt.managed.newList();
  rt.managed.addRoot(h);
  const NativeRef r = rt.bridge.toNative(h);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rt.bridge.toManaged(r));
    benchmark::DoNotOptimize(rt.bridge.toNative(h));
  }
}
BENCHMARK(BM_ConversionHit);

// First conversion of a fresh native int: allocation, twin and link.
void BM_ConversionInit(benchmark::State& state) {
  Runtime rt;
  std::int64_t i = 0;
  for (auto _ : state) {
    NativeRef r;
    {
      auto g = rt.lock.enterNative();
      r = rt.natives.newInt(++i);
    }
    benchmark::DoNotOptimize(rt.bridge.toManaged(r));
    auto g = rt.lock.enterNative();
    rt.natives.decref(r);
    if (i % 4096 == 0) {
      state.PauseTiming();
      g.release();
      rt.gc.fullCollect();
      state.ResumeTiming();
    }
  }
}
BENCHMARK(BM_ConversionInit);

void BM_LockEnterExit(benchmark::State& state) {
  BoundaryLock lock;
  for (auto _ : state) {
    auto g = lock.enterNative();
    benchmark::DoNotOptimize(&g);
  }
}
BENCHMARK(BM_LockEnterExit);

void BM_LockCallback(benchmark::State& state) {
  BoundaryLock lock;
  auto g = lock.enterNative();
  for (auto _ : state) lock.callbackToManaged([] {});
}
BENCHMARK(BM_LockCallback);

void BM_PeerGetAttr(benchmark::State& state) {
  Runtime rt;
  const ManagedHandle demo = rt.extensions.importModule("demo");
  const ManagedHandle args[] = {rt.managed.newInt(3), rt.managed.newInt(4)};
  const ManagedHandle p = rt.managed.callObject(*rt.managed.findAttr(demo, "Point"), args);
  rt.managed.addRoot(p);
  for (auto _ : state) benchmark::DoNotOptimize(rt.managed.findAttr(p, "x"));
}
BENCHMARK(BM_PeerGetAttr);

void BM_FormatRoundTrip(benchmark::State& state) {
  NativeHeap heap;
  const auto spec = valuefmt::parseFormat("i(ds)O");
  const NativeRef obj = heap.newList();
  const std::vector<valuefmt::Value> in{std::int64_t{1}, 2.5, std::string("s"), obj};
  for (auto _ : state) {
    const NativeRef built = valuefmt::buildValue(heap, spec, in);
    auto out = valuefmt::parseArgs(heap, spec, built);
    valuefmt::releaseValues(heap, out);
    heap.decref(built);
  }
}
BENCHMARK(BM_FormatRoundTrip);

// One refresh + collect + drain over a chain of natives reachable from a rooted twin.
void BM_GcRound(benchmark::State& state) {
  Runtime rt;
  const auto length = static_cast<std::size_t>(state.range(0));
  NativeRef head;
  {
    auto g = rt.lock.enterNative();
    head = rt.natives.newList();
    NativeRef tail = head;
    for (std::size_t i = 0; i < length; ++i) {
      const NativeRef next = rt.natives.newList();
      rt.natives.listAppend(tail, next);
      rt.natives.decref(next);
      tail = next;
    }
  }
  const ManagedHandle twin = rt.bridge.toManaged(head);
  rt.managed.addRoot(twin);
  {
    auto g = rt.lock.enterNative();
    rt.natives.decref(head);
  }
  for (auto _ : state) {
    rt.gc.refreshConnectivity();
    rt.gc.collect();
    rt.gc.drain();
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GcRound)->Range(16, 4096)->Complexity();

}  // namespace

BENCHMARK_MAIN();
