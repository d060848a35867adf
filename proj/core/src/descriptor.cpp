#include <sstream>

#include "xrt/error.hpp"
#include "xrt/extload.hpp"

namespace xrt {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string formatToken(const std::string& token) { return token == "-" ? std::string() : token; }

std::uint64_t parseOffset(const std::string& text) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(text, &used);
  if (used != text.size()) throw std::invalid_argument(text);
  return v;
}

TypeInfo parseType(const std::vector<std::string>& tokens) {
  if (tokens.size() < 3) throw ExtensionError("type record needs a name and static|heap");
  TypeInfo info;
  info.name = tokens[1];
  if (tokens[2] == "heap") {
    info.isHeapType = true;
  } else if (tokens[2] != "static") {
    throw ExtensionError("expected static or heap, got '" + tokens[2] + "'");
  }
  for (std::size_t i = 3; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    const auto colon = tok.find(':');
    const std::string key = tok.substr(0, colon);
    const std::string rest = colon == std::string::npos ? std::string() : tok.substr(colon + 1);
    if (key == "member") {
      const auto at = rest.find('@');
      if (at == std::string::npos || at == 0) throw ExtensionError("malformed member token '" + tok + "'");
      try {
        info.members.push_back(MemberDef{rest.substr(0, at), parseOffset(rest.substr(at + 1))});
      } catch (const std::logic_error&) {
        throw ExtensionError("bad member offset in '" + tok + "'");
      }
    } else if (key == "getset") {
      const auto parts = split(rest, ':');
      if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
        throw ExtensionError("malformed getset token '" + tok + "'");
      }
      info.getsets.push_back(GetSetDef{parts[0], parts[1]});
    } else if (key == "method") {
      const auto parts = split(rest, ':');
      if (parts.size() != 3 || parts[0].empty() || parts[2].empty()) {
        throw ExtensionError("malformed method token '" + tok + "'");
      }
      info.methods.push_back(MethodDef{parts[0], formatToken(parts[1]), parts[2]});
    } else if (key == "dict" && colon == std::string::npos) {
      info.dictOffset = 0;
    } else if (key == "repr" && !rest.empty()) {
      info.reprBehavior = rest;
    } else if (key == "str" && !rest.empty()) {
      info.strBehavior = rest;
    } else {
      throw ExtensionError("unknown type token '" + tok + "'");
    }
  }
  return info;
}

}  // namespace

std::vector<ExtensionModuleDef> parseDescriptors(std::string_view text) {
  std::vector<ExtensionModuleDef> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> tokens;
    for (std::string w; words >> w;) tokens.push_back(w);
    if (tokens.empty()) continue;
    try {
      const std::string& head = tokens[0];
      if (head == "module") {
        if (tokens.size() != 2) throw ExtensionError("module record takes exactly one name");
        out.push_back(ExtensionModuleDef{tokens[1], {}, {}, {}});
        continue;
      }
      if (out.empty()) throw ExtensionError("'" + head + "' record before any module record");
      auto& mod = out.back();
      if (head == "doc") {
        const auto pos = line.find("doc") + 3;
        const auto first = line.find_first_not_of(" \t", pos);
        const auto last = line.find_last_not_of(" \t\r");
        mod.doc = first == std::string::npos ? std::string() : line.substr(first, last - first + 1);
      } else if (head == "fn") {
        if (tokens.size() != 4) throw ExtensionError("fn record is: fn <name> <format|-> <behavior>");
        mod.functions.push_back(FunctionDef{tokens[1], formatToken(tokens[2]), tokens[3]});
      } else if (head == "type") {
        mod.types.push_back(parseType(tokens));
      } else {
        throw ExtensionError("unknown record '" + head + "'");
      }
    } catch (const ExtensionError& e) {
      throw ExtensionError("line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
  return out;
}

ExtensionModuleDef demoExtension() {
  static constexpr std::string_view kDescriptor = R"(
module demo
doc Synthetic extension with functions, a static Point type and a heap Counter type.
fn identity O identity
fn add_ints ii add_ints
fn make_point ii make_point
fn make_capsule s make_capsule
fn capsule_roundtrip s capsule_roundtrip
fn wrap O wrap
fn range_list i range_list
fn sum_list O sum_list
fn spin_allow i spin_allow
type Point static dict member:x@8 member:y@16 getset:norm:point_norm method:moved:ii:point_moved repr:point_repr str:point_str
type Counter heap member:count@8 method:bump:i:counter_bump
)";
  return parseDescriptors(kDescriptor).front();
}

}  // namespace xrt
