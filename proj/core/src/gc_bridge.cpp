#include "xrt/gc_bridge.hpp"

#include <algorithm>
#include <cstring>
#include <deque>

#include "xrt/error.hpp"
#include "xrt/runtime.hpp"

namespace xrt {

namespace {

std::vector<std::byte> encodeHandle(ManagedHandle h) {
  std::vector<std::byte> blob(sizeof h.id);
  std::memcpy(blob.data(), &h.id, sizeof h.id);
  return blob;
}

ManagedHandle decodeHandle(const std::vector<std::byte>& blob) {
  ManagedHandle h;
  if (blob.size() == sizeof h.id) std::memcpy(&h.id, blob.data(), sizeof h.id);
  return h;
}

// Number of elements of `a` not matched in `b`, multiplicity kept.
std::size_t multisetMinus(std::vector<ManagedHandle> a, std::vector<ManagedHandle> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<ManagedHandle> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out.size();
}

}  // namespace

GcBridge::GcBridge(Runtime& rt) : rt_(rt) {
  rt_.natives.setEdgeObserver([this](NativeRef from, NativeRef to) { onNativeEdge(from, to); });
  rt_.managed.addRootProvider([this](std::vector<ManagedHandle>& out) { provideRoots(out); });
  rt_.managed.setSweepObserver([this](std::span<const ManagedHandle> swept) { onSwept(swept); });
}

GcBridge::~GcBridge() { stopPoller(); }

ManagedHandle GcBridge::standIn(NativeRef r) const {
  if (auto it = tracked_.find(r.addr); it != tracked_.end()) return it->second;
  return kNullHandle;
}

std::optional<ManagedHandle> GcBridge::headOf(NativeRef r) const {
  if (auto blob = rt_.natives.auxGet(r, kGcTag)) return decodeHandle(*blob);
  return std::nullopt;
}

bool GcBridge::isTracked(NativeRef r) const { return tracked_.contains(r.addr); }

std::size_t GcBridge::trackedCount() const { return tracked_.size(); }

std::vector<NativeRef> GcBridge::tracked() const {
  std::vector<NativeRef> out;
  out.reserve(tracked_.size());
  for (const auto& [addr, h] : tracked_) out.push_back(NativeRef{addr});
  std::sort(out.begin(), out.end());
  return out;
}

void GcBridge::track(NativeRef r, ManagedHandle h) {
  tracked_[r.addr] = h;
  byHandle_[h.id] = r;
}

ManagedHandle GcBridge::ensureGcHead(NativeRef r) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  if (auto it = tracked_.find(r.addr); it != tracked_.end()) return it->second;
  if (n.isImmortal(r)) {
    // Interned objects have permanent, rooted managed handles.
    if (n.kind(r) == NativeKind::Singleton) return rt_.managed.singleton(n.singletonId(r));
    return rt_.bridge.staticTypes().byRef(r).value_or(kNullHandle);
  }
  if (const ManagedHandle p = n.peer(r)) {
    track(r, p);
    return p;
  }
  const ManagedHandle h = rt_.managed.newGcHead(r.addr);
  n.incref(r);
  n.auxSet(r, kGcTag, encodeHandle(h));
  track(r, h);
  std::vector<ManagedHandle> edges;
  n.visitRefs(r, [&](NativeRef c) {
    if (auto it = tracked_.find(c.addr); it != tracked_.end()) edges.push_back(it->second);
  });
  rt_.managed.setNativeEdges(h, std::move(edges), generation_);
  std::lock_guard lk(statsMutex_);
  ++stats_.headsCreated;
  return h;
}

void GcBridge::onLinked(NativeRef r, ManagedHandle h) {
  auto it = tracked_.find(r.addr);
  if (it != tracked_.end()) {
    if (it->second != h) {
      throw InvariantViolation("native@" + std::to_string(r.addr) + " would get a second managed stand-in");
    }
    return;
  }
  track(r, h);
  std::vector<ManagedHandle> edges;
  rt_.natives.visitRefs(r, [&](NativeRef c) {
    if (auto t = tracked_.find(c.addr); t != tracked_.end()) edges.push_back(t->second);
  });
  if (!edges.empty()) rt_.managed.setNativeEdges(h, std::move(edges), generation_);
}

void GcBridge::onHeadPromoted(NativeRef r) { rt_.natives.auxRemove(r, kGcTag); }

// Container write hook: additions are mirrored right away.
void GcBridge::onNativeEdge(NativeRef from, NativeRef to) {
  auto it = tracked_.find(from.addr);
  if (it == tracked_.end()) return;
  const ManagedHandle source = it->second;
  if (rt_.natives.isImmortal(to) || rt_.managed.isZombie(source)) return;
  const ManagedHandle target = ensureGcHead(to);
  if (!target) return;
  rt_.managed.addNativeEdge(source, target);
  std::lock_guard lk(statsMutex_);
  ++stats_.eagerEdges;
}

std::vector<ManagedHandle> GcBridge::childStandIns(NativeRef r, std::size_t* created) {
  auto& n = rt_.natives;
  std::vector<ManagedHandle> out;
  for (NativeRef c : n.refsOf(r)) {
    if (n.isImmortal(c)) continue;
    const bool had = tracked_.contains(c.addr);
    const ManagedHandle h = ensureGcHead(c);
    if (!had && rt_.managed.kind(h) == ManagedKind::GcHeadCarrier) ++*created;
    out.push_back(h);
  }
  return out;
}

RefreshReport GcBridge::refreshConnectivity() {
  auto guard = rt_.lock.enterNative();
  const auto scope = tracked();
  return refreshConnectivity(scope);
}

RefreshReport GcBridge::refreshConnectivity(std::span<const NativeRef> scope) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  auto& m = rt_.managed;
  RefreshReport report;
  report.generation = ++generation_;

  std::deque<NativeRef> work(scope.begin(), scope.end());
  std::unordered_set<std::uint64_t> visited;
  while (!work.empty()) {
    const NativeRef r = work.front();
    work.pop_front();
    if (!n.isLive(r) || n.isImmortal(r) || !visited.insert(r.addr).second) continue;
    const bool had = tracked_.contains(r.addr);
    const ManagedHandle s = ensureGcHead(r);
    if (!had && m.kind(s) == ManagedKind::GcHeadCarrier) ++report.headsCreated;
    if (m.isZombie(s)) continue;  // swept, finalization pending

    auto edges = childStandIns(r, &report.headsCreated);
    n.visitRefs(r, [&](NativeRef c) { work.push_back(c); });
    const auto old = m.nativeEdges(s);
    report.edgesAdded += multisetMinus(edges, old);
    report.edgesRemoved += multisetMinus(old, edges);
    m.setNativeEdges(s, std::move(edges), generation_);
  }
  report.scopeSize = visited.size();
  std::lock_guard lk(statsMutex_);
  ++stats_.refreshes;
  return report;
}

// Roots every stand-in whose native is referenced from somewhere the
// managed tracer cannot see: refcount minus the pin minus the references
// held by tracked natives whose stand-in traces to this one.
void GcBridge::provideRoots(std::vector<ManagedHandle>& out) {
  auto& n = rt_.natives;
  auto& m = rt_.managed;
  std::unordered_map<std::uint64_t, std::int64_t> explained;
  std::unordered_set<std::uint64_t> successors;
  for (const auto& [addr, s] : tracked_) {
    if (m.isZombie(s)) continue;
    successors.clear();
    for (ManagedHandle x : m.nativeEdges(s)) successors.insert(x.id);
    for (ManagedHandle x : m.referents(s)) successors.insert(x.id);
    n.visitRefs(NativeRef{addr}, [&](NativeRef c) {
      if (auto it = tracked_.find(c.addr); it != tracked_.end() && successors.contains(it->second.id)) {
        ++explained[c.addr];
      }
    });
  }
  std::uint64_t rooted = 0;
  for (const auto& [addr, s] : tracked_) {
    if (m.isZombie(s)) continue;
    const std::int64_t external = n.refcount(NativeRef{addr}) - 1 - explained[addr];
    if (external > 0) {
      out.push_back(s);
      ++rooted;
    }
  }
  std::lock_guard lk(statsMutex_);
  stats_.externallyRooted = rooted;
}

void GcBridge::onSwept(std::span<const ManagedHandle> swept) {
  for (ManagedHandle h : swept) {
    if (auto it = byHandle_.find(h.id); it != byHandle_.end()) condemned_.insert(it->second.addr);
  }
}

CollectReport GcBridge::collect() {
  auto guard = rt_.lock.enterNative();
  CollectReport report = rt_.managed.gcCollect();
  std::lock_guard lk(statsMutex_);
  ++stats_.collections;
  stats_.managedReclaimed += report.reclaimedCount;
  return report;
}

void GcBridge::onFinalized(ManagedHandle h) {
  auto guard = rt_.lock.enterNative();
  auto& n = rt_.natives;
  auto it = byHandle_.find(h.id);
  if (it == byHandle_.end()) {
    throw InvariantViolation("managed handle #" + std::to_string(h.id) + " finalized twice or never tracked");
  }
  const NativeRef r = it->second;
  if (n.peer(r) == h) {
    n.setPeer(r, kNullHandle);
    n.setFlags(r, n.flags(r) & hflag::kHasGcHead);
    rt_.bridge.forget(h);
  } else {
    n.auxRemove(r, kGcTag);
  }
  tracked_.erase(r.addr);
  byHandle_.erase(it);
  rt_.managed.release(h);

  const std::size_t before = n.liveCount();
  bool cleared = false;
  if (condemned_.erase(r.addr) > 0) {
    n.clearPayload(r);
    cleared = true;
  }
  n.decref(r);
  const std::size_t freed = before - n.liveCount();

  std::lock_guard lk(statsMutex_);
  ++stats_.finalized;
  stats_.nativeFreed += freed;
  if (cleared) ++stats_.payloadsCleared;
}

DrainReport GcBridge::drain() {
  auto guard = rt_.lock.enterNative();
  DrainReport report;
  const std::size_t before = rt_.natives.liveCount();
  while (auto h = rt_.managed.pollFinalizable()) {
    onFinalized(*h);
    ++report.finalized;
  }
  report.nativeFreed = before - rt_.natives.liveCount();
  return report;
}

FullCollectReport GcBridge::fullCollect(std::size_t maxRounds) {
  FullCollectReport report;
  while (report.rounds < maxRounds) {
    ++report.rounds;
    refreshConnectivity();
    const CollectReport c = collect();
    const DrainReport d = drain();
    report.managedReclaimed += c.reclaimedCount;
    report.finalized += d.finalized;
    report.nativeFreed += d.nativeFreed;
    if (c.reclaimedCount == 0 && d.finalized == 0) break;
  }
  return report;
}

void GcBridge::startPoller(std::chrono::milliseconds interval) {
  if (poller_.joinable()) return;
  stopPoller_ = false;
  poller_ = std::thread([this, interval] {
    while (!stopPoller_.load()) {
      if (auto h = rt_.managed.finalizationQueue().waitPoll(interval)) onFinalized(*h);
    }
  });
}

void GcBridge::stopPoller() {
  if (!poller_.joinable()) return;
  stopPoller_ = true;
  rt_.managed.finalizationQueue().wakeAll();
  poller_.join();
}

GcStats GcBridge::stats() const {
  std::lock_guard lk(statsMutex_);
  return stats_;
}

}  // namespace xrt
