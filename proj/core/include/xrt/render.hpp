#pragma once

#include <cstdint>
#include <string>
#include <string_view>

// Value rendering shared by both runtimes so managed and native repr/str of
// equal values are byte-identical.
//
// Grammar (stable, used by golden output):
//   int      decimal, leading '-' when negative
//   float    shortest round-trip digits; fixed notation for exponents in
//            [-4, 16) with at least one fractional digit, otherwise
//            d[.ddd]e(+|-)XX; "nan", "inf", "-inf"
//   str      str(): raw bytes; repr(): quoted, \\ \t \n \r \xhh escapes,
//            single quotes unless the text holds ' but no "
//   tuple    "()", "(a,)", "(a, b)"     list "[a, b]"     dict "{k: v}"
//   None/True/False/NotImplemented/Ellipsis by name
//   module   <module 'name'>            type <type 'mod.Name'>
namespace xrt::render {

std::string formatInt(std::int64_t v);
std::string formatFloat(double v);
std::string quoteBytes(std::string_view bytes);

}  // namespace xrt::render
