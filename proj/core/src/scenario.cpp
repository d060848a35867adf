#include "xrt/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "xrt/runtime.hpp"

namespace xrt {

namespace scenario {

namespace {

struct Token {
  std::string text;
  bool quoted = false;
};

std::vector<Token> tokenize(std::string_view line, std::size_t lineNo) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '"') {
      Token t{{}, true};
      ++i;
      bool closed = false;
      while (i < line.size()) {
        char d = line[i++];
        if (d == '"') {
          closed = true;
          break;
        }
        if (d == '\\' && i < line.size()) {
          d = line[i++];
          if (d == 'n') d = '\n';
          if (d == 't') d = '\t';
        }
        t.text.push_back(d);
      }
      if (!closed) throw ScenarioError(lineNo, "unterminated string literal");
      out.push_back(std::move(t));
    } else {
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#') ++i;
      out.push_back(Token{std::string(line.substr(start, i - start)), false});
    }
  }
  return out;
}

bool isIdentifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

template <class T>
bool parseNumber(std::string_view s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, std::size_t line, std::set<std::string>& bound)
      : tokens_(std::move(tokens)), line_(line), bound_(bound) {}

  Command parse(bool nested) {
    Command cmd;
    cmd.line = line_;
    cmd.op = word("command");
    const std::string& op = cmd.op;
    if (op == "import") {
      cmd.words.push_back(identifier("module name"));
      cmd.bind = cmd.words[0];
    } else if (op == "new") {
      std::string kind = word("kind");
      if (kind == "native") {
        cmd.words.push_back(kind);
        kind = word("kind");
      }
      static const std::set<std::string> kinds{"int", "float", "str", "tuple", "list", "dict", "slice", "random-list"};
      if (!kinds.contains(kind)) fail("unknown kind '" + kind + "'");
      cmd.words.push_back(kind);
      operandsUntilArrow(cmd);
      if (cmd.bind.empty()) fail("new needs '-> name'");
    } else if (op == "call") {
      Operand callee = reference();
      // "call demo add_ints 3 4" reads like "call demo.add_ints 3 4" as long
      // as the second word is not itself a bound name.
      if (pos_ < tokens_.size()) {
        const Token& t = tokens_[pos_];
        if (!t.quoted && isIdentifier(t.text) && !bound_.contains(t.text) && t.text != "None" && t.text != "True" &&
            t.text != "False") {
          callee.path.push_back(t.text);
          ++pos_;
        }
      }
      cmd.operands.push_back(std::move(callee));
      operandsUntilArrow(cmd);
    } else if (op == "getattr") {
      cmd.operands.push_back(operand());
      cmd.words.push_back(identifier("attribute name"));
      arrow(cmd);
      if (cmd.bind.empty()) fail("getattr needs '-> name'");
    } else if (op == "setattr") {
      cmd.operands.push_back(reference());
      cmd.words.push_back(identifier("attribute name"));
      cmd.operands.push_back(operand());
    } else if (op == "print" || op == "repr") {
      cmd.operands.push_back(operand());
    } else if (op == "list-append") {
      cmd.operands.push_back(reference());
      cmd.operands.push_back(operand());
    } else if (op == "native-mutate") {
      cmd.operands.push_back(reference());
      const std::string what = word("mutation");
      cmd.words.push_back(what);
      if (what == "append") {
        cmd.operands.push_back(operand());
      } else if (what == "insert" || what == "set") {
        cmd.operands.push_back(intOperand());
        cmd.operands.push_back(operand());
      } else if (what == "delete") {
        cmd.operands.push_back(intOperand());
      } else if (what == "setitem") {
        cmd.operands.push_back(strOperand());
        cmd.operands.push_back(operand());
      } else if (what == "setattr") {
        cmd.words.push_back(identifier("attribute name"));
        cmd.operands.push_back(operand());
      } else {
        fail("unknown native mutation '" + what + "'");
      }
    } else if (op == "del") {
      const std::string name = identifier("binding name");
      if (!bound_.contains(name)) fail("'" + name + "' is not bound");
      cmd.words.push_back(name);
    } else if (op == "gc-refresh" || op == "gc-collect" || op == "gc-drain" || op == "gc-full") {
    } else if (op == "fuzz-list") {
      cmd.operands.push_back(reference());
      cmd.operands.push_back(intOperand());
    } else if (op == "assert-eq") {
      cmd.operands.push_back(operand());
      cmd.operands.push_back(operand());
    } else if (op == "threads") {
      if (nested) fail("threads cannot be nested");
      cmd.workers = count("worker count");
      cmd.repeat = count("repetition count");
      std::vector<Token> rest(tokens_.begin() + static_cast<std::ptrdiff_t>(pos_), tokens_.end());
      pos_ = tokens_.size();
      if (rest.empty()) fail("threads needs a command");
      LineParser inner(std::move(rest), line_, bound_);
      auto body = std::make_shared<Command>(inner.parse(true));
      static const std::set<std::string> allowed{"call", "native-mutate", "list-append", "setattr", "assert-eq"};
      if (!allowed.contains(body->op)) fail("'" + body->op + "' cannot run inside threads");
      if (!body->bind.empty()) fail("commands inside threads cannot bind names");
      cmd.body = std::move(body);
    } else {
      fail("unknown command '" + op + "'");
    }
    if (pos_ != tokens_.size()) fail("unexpected '" + tokens_[pos_].text + "'");
    if (!cmd.bind.empty()) bound_.insert(cmd.bind);
    if (op == "del") bound_.erase(cmd.words[0]);
    return cmd;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ScenarioError(line_, what); }

  const Token& next(const char* what) {
    if (pos_ >= tokens_.size()) fail(std::string("missing ") + what);
    return tokens_[pos_++];
  }

  std::string word(const char* what) {
    const Token& t = next(what);
    if (t.quoted) fail(std::string("expected ") + what + ", got a string");
    return t.text;
  }

  std::string identifier(const char* what) {
    std::string w = word(what);
    if (!isIdentifier(w)) fail(std::string("bad ") + what + " '" + w + "'");
    return w;
  }

  std::size_t count(const char* what) {
    const std::string w = word(what);
    std::size_t v = 0;
    if (!parseNumber(w, v) || v == 0) fail(std::string("bad ") + what + " '" + w + "'");
    return v;
  }

  Operand operand() {
    const Token& t = next("operand");
    Operand o;
    if (t.quoted) {
      o.kind = Operand::Kind::Str;
      o.text = t.text;
      return o;
    }
    const std::string& s = t.text;
    if (s == "->") fail("missing operand before '->'");
    if (parseNumber(s, o.i)) {
      o.kind = Operand::Kind::Int;
      return o;
    }
    if (s.find_first_of(".eE") != std::string::npos && !std::isalpha(static_cast<unsigned char>(s[0])) &&
        parseNumber(s, o.f)) {
      o.kind = Operand::Kind::Float;
      return o;
    }
    if (s == "None") o.kind = Operand::Kind::None;
    if (s == "True") o.kind = Operand::Kind::True;
    if (s == "False") o.kind = Operand::Kind::False;
    if (s == "None" || s == "True" || s == "False") return o;

    std::vector<std::string> parts;
    std::string_view rest = s;
    for (;;) {
      const auto dot = rest.find('.');
      parts.emplace_back(rest.substr(0, dot));
      if (!isIdentifier(parts.back())) fail("bad operand '" + s + "'");
      if (dot == std::string_view::npos) break;
      rest.remove_prefix(dot + 1);
    }
    if (!bound_.contains(parts[0])) fail("'" + parts[0] + "' is not bound");
    o.kind = Operand::Kind::Ref;
    o.text = parts[0];
    o.path.assign(parts.begin() + 1, parts.end());
    return o;
  }

  Operand reference() {
    Operand o = operand();
    if (o.kind != Operand::Kind::Ref) fail("expected a binding reference");
    return o;
  }

  Operand intOperand() {
    Operand o = operand();
    if (o.kind != Operand::Kind::Int) fail("expected an integer");
    return o;
  }

  Operand strOperand() {
    Operand o = operand();
    if (o.kind != Operand::Kind::Str) fail("expected a string literal");
    return o;
  }

  void operandsUntilArrow(Command& cmd) {
    while (pos_ < tokens_.size() && !(tokens_[pos_].text == "->" && !tokens_[pos_].quoted)) {
      cmd.operands.push_back(operand());
    }
    arrow(cmd);
  }

  void arrow(Command& cmd) {
    if (pos_ < tokens_.size() && tokens_[pos_].text == "->" && !tokens_[pos_].quoted) {
      ++pos_;
      cmd.bind = identifier("binding name");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t line_;
  std::set<std::string>& bound_;
};

}  // namespace

std::vector<Command> parse(std::string_view text) {
  std::vector<Command> out;
  std::set<std::string> bound;
  std::size_t lineNo = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    ++lineNo;
    auto tokens = tokenize(line, lineNo);
    if (!tokens.empty()) {
      LineParser parser(std::move(tokens), lineNo, bound);
      Command cmd = parser.parse(false);
      const auto first = line.find_first_not_of(" \t");
      const auto last = line.find_last_not_of(" \t\r");
      cmd.source = std::string(line.substr(first, last - first + 1));
      out.push_back(std::move(cmd));
    }
    start = end + 1;
  }
  return out;
}

}  // namespace scenario

using scenario::Command;
using scenario::Operand;

struct ScenarioRunner::Impl {
  explicit Impl(std::uint64_t seed) : rng(seed) {}
  std::mt19937_64 rng;
};

ScenarioRunner::ScenarioRunner(Runtime& rt, ScenarioOptions options)
    : rt_(rt), options_(std::move(options)), impl_(std::make_unique<Impl>(options_.seed)) {}

ScenarioRunner::~ScenarioRunner() { clearBindings(); }

void ScenarioRunner::clearBindings() {
  for (const auto& [name, h] : bindings_) rt_.managed.removeRoot(h);
  bindings_.clear();
}

void ScenarioRunner::run(std::string_view text) { execute(scenario::parse(text)); }

namespace {

class Executor {
 public:
  Executor(Runtime& rt, const std::map<std::string, ManagedHandle>& bindings, std::mt19937_64* rng)
      : rt_(rt), bindings_(bindings), rng_(rng) {}

  ManagedHandle value(const Operand& o) {
    auto& m = rt_.managed;
    switch (o.kind) {
      case Operand::Kind::Int: return m.newInt(o.i);
      case Operand::Kind::Float: return m.newFloat(o.f);
      case Operand::Kind::Str: return m.newStr(o.text);
      case Operand::Kind::None: return m.singleton(SingletonId::None);
      case Operand::Kind::True: return m.singleton(SingletonId::True);
      case Operand::Kind::False: return m.singleton(SingletonId::False);
      case Operand::Kind::Ref: break;
    }
    auto it = bindings_.find(o.text);
    if (it == bindings_.end()) throw Error("'" + o.text + "' is not bound");
    ManagedHandle h = it->second;
    std::string where = o.text;
    for (const auto& attr : o.path) {
      auto found = m.findAttr(h, attr);
      if (!found) throw AttributeError("'" + where + "' has no attribute '" + attr + "'");
      h = *found;
      where += "." + attr;
    }
    return h;
  }

  // Result handle to bind, or null.
  ManagedHandle run(const Command& c, std::vector<std::string>* out) {
    auto& m = rt_.managed;
    const std::string& op = c.op;
    if (op == "new") return construct(c);
    if (op == "call") {
      const ManagedHandle callee = value(c.operands[0]);
      std::vector<ManagedHandle> args;
      for (std::size_t i = 1; i < c.operands.size(); ++i) args.push_back(value(c.operands[i]));
      return m.callObject(callee, args);
    }
    if (op == "getattr") {
      const ManagedHandle target = value(c.operands[0]);
      auto found = m.findAttr(target, c.words[0]);
      if (!found) throw AttributeError("no attribute '" + c.words[0] + "'");
      return *found;
    }
    if (op == "setattr") {
      const ManagedHandle target = value(c.operands[0]);
      const ManagedHandle v = value(c.operands[1]);
      const ManagedKind k = m.kind(target);
      if (k == ManagedKind::Peer || k == ManagedKind::PeerType) {
        auto guard = rt_.lock.enterNative();
        rt_.api.setAttr(rt_.bridge.toNative(target), c.words[0], rt_.bridge.toNative(v));
      } else {
        m.setAttr(target, c.words[0], v);
      }
      return kNullHandle;
    }
    if (op == "print" || op == "repr") {
      const ManagedHandle v = value(c.operands[0]);
      out->push_back(op == "print" ? m.strOf(v) : m.reprOf(v));
      return kNullHandle;
    }
    if (op == "list-append") {
      const ManagedHandle list = value(c.operands[0]);
      if (m.kind(list) != ManagedKind::List) throw TypeError("list-append needs a list");
      m.listAppend(list, value(c.operands[1]));
      return kNullHandle;
    }
    if (op == "native-mutate") {
      nativeMutate(c);
      return kNullHandle;
    }
    if (op == "assert-eq") {
      const std::string a = m.reprOf(value(c.operands[0]));
      const std::string b = m.reprOf(value(c.operands[1]));
      if (a != b) throw Error("assertion failed: " + a + " != " + b);
      return kNullHandle;
    }
    if (op == "fuzz-list") {
      fuzzList(value(c.operands[0]), static_cast<std::size_t>(std::max<std::int64_t>(0, c.operands[1].i)));
      return kNullHandle;
    }
    if (op == "gc-refresh") {
      rt_.gc.refreshConnectivity();
    } else if (op == "gc-collect") {
      rt_.gc.collect();
    } else if (op == "gc-drain") {
      rt_.gc.drain();
    } else if (op == "gc-full") {
      rt_.gc.fullCollect();
    }
    return kNullHandle;
  }

 private:
  ManagedHandle construct(const Command& c) {
    auto& m = rt_.managed;
    const bool native = c.words.size() == 2;
    const std::string& kind = c.words.back();
    std::vector<ManagedHandle> items;
    if (kind == "random-list") {
      if (c.operands.size() != 1 || c.operands[0].kind != Operand::Kind::Int || c.operands[0].i < 0) {
        throw Error("random-list takes one non-negative count");
      }
      std::uniform_int_distribution<std::int64_t> dist(-1000, 1000);
      for (std::int64_t i = 0; i < c.operands[0].i; ++i) items.push_back(m.newInt(dist(*rng_)));
    } else {
      for (const auto& o : c.operands) items.push_back(value(o));
    }
    auto scalar = [&](ManagedKind want) {
      if (items.size() != 1 || m.kind(items[0]) != want) throw Error(kind + " takes exactly one " + kind + " literal");
      return items[0];
    };
    ManagedHandle h;
    if (kind == "int") {
      h = scalar(ManagedKind::Int);
    } else if (kind == "float") {
      if (items.size() == 1 && m.kind(items[0]) == ManagedKind::Int) items[0] = m.newFloat(static_cast<double>(m.intValue(items[0])));
      h = scalar(ManagedKind::Float);
    } else if (kind == "str") {
      h = scalar(ManagedKind::Str);
    } else if (kind == "tuple") {
      h = m.newTuple(items);
    } else if (kind == "list" || kind == "random-list") {
      h = m.newList(items);
    } else if (kind == "dict") {
      if (items.size() % 2 != 0) throw Error("dict takes key/value pairs");
      h = m.newDict();
      for (std::size_t i = 0; i < items.size(); i += 2) m.dictSet(h, items[i], items[i + 1]);
    } else {
      if (items.size() != 3) throw Error("slice takes start, stop and step");
      h = m.newSlice(items[0], items[1], items[2]);
    }
    if (!native) return h;
    // Build the native object first, then let the bridge create its twin.
    auto guard = rt_.lock.enterNative();
    auto& n = rt_.natives;
    std::vector<NativeRef> parts;
    for (ManagedHandle item : items) parts.push_back(rt_.bridge.toNative(item));
    NativeRef r;
    if (kind == "int") {
      r = n.newInt(m.intValue(h));
    } else if (kind == "float") {
      r = n.newFloat(m.floatValue(h));
    } else if (kind == "str") {
      r = n.newStr(m.strValue(h));
    } else if (kind == "tuple") {
      r = n.newTuple(parts);
    } else if (kind == "list" || kind == "random-list") {
      r = n.newList(parts);
    } else if (kind == "dict") {
      r = n.newDict();
      for (std::size_t i = 0; i < parts.size(); i += 2) n.dictSet(r, parts[i], parts[i + 1]);
    } else {
      r = n.newSlice(parts[0], parts[1], parts[2]);
    }
    const ManagedHandle twin = rt_.bridge.toManaged(r);
    n.decref(r);
    return twin;
  }

  void nativeMutate(const Command& c) {
    const ManagedHandle target = value(c.operands[0]);
    std::vector<ManagedHandle> args;
    for (std::size_t i = 1; i < c.operands.size(); ++i) args.push_back(value(c.operands[i]));
    auto guard = rt_.lock.enterNative();
    auto& n = rt_.natives;
    const NativeRef r = rt_.bridge.toNative(target);
    const std::string& what = c.words[0];
    if (what == "setitem") {
      if (n.kind(r) != NativeKind::Dict) throw TypeError("setitem needs a dict");
      rt_.api.dictSetItemString(r, rt_.managed.strValue(args[0]), rt_.bridge.toNative(args[1]));
      return;
    }
    if (what == "setattr") {
      rt_.api.setAttr(r, c.words[1], rt_.bridge.toNative(args[0]));
      return;
    }
    if (n.kind(r) != NativeKind::List) throw TypeError(what + " needs a list");
    const std::size_t size = n.size(r);
    auto index = [&](bool allowEnd) {
      const std::int64_t i = c.operands[1].i;
      if (i < 0 || static_cast<std::size_t>(i) > size || (!allowEnd && static_cast<std::size_t>(i) == size)) {
        throw Error("index " + std::to_string(i) + " out of range");
      }
      return static_cast<std::size_t>(i);
    };
    if (what == "append") {
      n.listAppend(r, rt_.bridge.toNative(args[0]));
    } else if (what == "insert") {
      n.listInsert(r, index(true), rt_.bridge.toNative(args[1]));
    } else if (what == "set") {
      n.listSet(r, index(false), rt_.bridge.toNative(args[1]));
    } else {
      n.listDelete(r, index(false));
    }
  }

  // Random interleaved managed and native mutations, each checked against
  // a shadow sequence on both views.
  void fuzzList(ManagedHandle list, std::size_t steps) {
    auto& m = rt_.managed;
    auto& n = rt_.natives;
    if (m.kind(list) != ManagedKind::List) throw TypeError("fuzz-list needs a list");
    NativeRef r;
    {
      auto guard = rt_.lock.enterNative();
      r = rt_.bridge.toNative(list);
    }
    std::vector<std::int64_t> shadow;
    for (ManagedHandle item : m.listItems(list)) {
      if (m.kind(item) != ManagedKind::Int) throw TypeError("fuzz-list needs a list of ints");
      shadow.push_back(m.intValue(item));
    }
    std::uniform_int_distribution<int> pick(0, 7);
    std::uniform_int_distribution<std::int64_t> val(-1000, 1000);
    for (std::size_t step = 0; step < steps; ++step) {
      const int choice = pick(*rng_);
      const bool nativeSide = choice >= 4;
      int op = choice % 4;
      if (shadow.empty() && op >= 2) op = 0;
      const std::size_t at = shadow.empty() ? 0 : std::uniform_int_distribution<std::size_t>(0, shadow.size() - 1)(*rng_);
      const std::int64_t v = val(*rng_);
      if (nativeSide) {
        auto guard = rt_.lock.enterNative();
        const NativeRef item = op < 3 ? n.newInt(v) : NativeRef{};
        if (op == 0) n.listAppend(r, item);
        if (op == 1) n.listInsert(r, at, item);
        if (op == 2) n.listSet(r, at, item);
        if (op == 3) n.listDelete(r, at);
        if (op < 3) n.decref(item);
      } else {
        if (op == 0) m.listAppend(list, m.newInt(v));
        if (op == 1) m.listInsert(list, at, m.newInt(v));
        if (op == 2) m.listSet(list, at, m.newInt(v));
        if (op == 3) m.listErase(list, at);
      }
      if (op == 0) shadow.push_back(v);
      if (op == 1) shadow.insert(shadow.begin() + static_cast<std::ptrdiff_t>(at), v);
      if (op == 2) shadow[at] = v;
      if (op == 3) shadow.erase(shadow.begin() + static_cast<std::ptrdiff_t>(at));

      std::vector<std::int64_t> managedView;
      for (ManagedHandle item : m.listItems(list)) managedView.push_back(m.intValue(item));
      std::vector<std::int64_t> nativeView;
      {
        auto guard = rt_.lock.enterNative();
        for (NativeRef item : n.items(r)) nativeView.push_back(n.intValue(item));
      }
      if (managedView != shadow || nativeView != shadow) {
        throw InvariantViolation("list views diverged from the shadow sequence at step " + std::to_string(step));
      }
    }
  }

  Runtime& rt_;
  const std::map<std::string, ManagedHandle>& bindings_;
  std::mt19937_64* rng_;
};

}  // namespace

void ScenarioRunner::execute(const std::vector<Command>& commands) {
  for (const Command& c : commands) {
    try {
      if (c.op == "import") {
        const ManagedHandle h = rt_.extensions.importModule(c.words[0]);
        rt_.managed.addRoot(h);
        if (auto it = bindings_.find(c.bind); it != bindings_.end()) rt_.managed.removeRoot(it->second);
        bindings_[c.bind] = h;
        continue;
      }
      if (c.op == "del") {
        auto it = bindings_.find(c.words[0]);
        if (it == bindings_.end()) throw Error("'" + c.words[0] + "' is not bound");
        rt_.managed.removeRoot(it->second);
        bindings_.erase(it);
        continue;
      }
      if (c.op == "threads") {
        std::vector<std::thread> workers;
        std::mutex errMutex;
        std::exception_ptr firstError;
        std::vector<std::mt19937_64> rngs;
        for (std::size_t w = 0; w < c.workers; ++w) rngs.emplace_back(impl_->rng());
        for (std::size_t w = 0; w < c.workers; ++w) {
          workers.emplace_back([&, w] {
            try {
              Executor ex(rt_, bindings_, &rngs[w]);
              for (std::size_t k = 0; k < c.repeat; ++k) ex.run(*c.body, nullptr);
            } catch (...) {
              std::lock_guard lk(errMutex);
              if (!firstError) firstError = std::current_exception();
            }
          });
        }
        for (auto& t : workers) t.join();
        if (firstError) std::rethrow_exception(firstError);
        continue;
      }
      Executor ex(rt_, bindings_, &impl_->rng);
      const ManagedHandle result = ex.run(c, &lines_);
      if (!c.bind.empty()) {
        if (!result) throw Error("command produced no value to bind");
        rt_.managed.addRoot(result);
        if (auto it = bindings_.find(c.bind); it != bindings_.end()) rt_.managed.removeRoot(it->second);
        bindings_[c.bind] = result;
      }
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      throw ScenarioError(c.line, c.source + ": " + e.what());
    }
  }
}

ScenarioReport runScenario(std::string_view text, const ScenarioOptions& options) {
  const auto commands = scenario::parse(text);
  Runtime rt;
  for (const auto& descriptor : options.descriptors) {
    auto guard = rt.lock.enterNative();
    for (auto& def : parseDescriptors(descriptor)) rt.extensions.registerExtension(std::move(def));
  }
  const auto before = rt.counters();
  ScenarioReport report;
  {
    ScenarioRunner runner(rt, options);
    runner.execute(commands);
    report.lines = runner.lines();
    const auto after = rt.counters();
    for (const auto& [key, value] : after) {
      report.stats[key] = static_cast<std::int64_t>(value) - static_cast<std::int64_t>(before.at(key));
    }
  }
  return report;
}

std::string emitStats(const ScenarioReport& report, bool golden) {
  std::ostringstream out;
  for (const auto& [key, value] : report.stats) {
    // Contention depends on thread scheduling.
    if (golden && key == "lock_contentions") continue;
    out << key << '=' << value << '\n';
  }
  return out.str();
}

}  // namespace xrt
