#pragma once

// Compact JSON writer whose floating-point output is the shortest decimal
// string that parses back to the same double.

#include <array>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

#include <nlohmann/json.hpp>

#include "motionprog/errors.hpp"

namespace motionprog {

using Json = nlohmann::ordered_json;

inline void append_double(std::string& out, double value) {
  if (!std::isfinite(value)) throw NumericError("cannot serialize non-finite number");
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw NumericError("number formatting failed");
  out.append(buf.data(), end);
}

inline std::string format_double(double value) {
  std::string out;
  append_double(out, value);
  return out;
}

// Parses the whole of `text` as a double; returns false on any leftover input.
inline bool parse_double(std::string_view text, double& value) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

inline void dump_json(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out.push_back(',');
        first = false;
        out += Json(key).dump();
        out.push_back(':');
        dump_json(value, out);
      }
      out.push_back('}');
      break;
    }
    case Json::value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& value : j) {
        if (!first) out.push_back(',');
        first = false;
        dump_json(value, out);
      }
      out.push_back(']');
      break;
    }
    case Json::value_t::number_float:
      append_double(out, j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

inline std::string dump_json(const Json& j) {
  std::string out;
  dump_json(j, out);
  out.push_back('\n');
  return out;
}

inline Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte);
  }
}

// Field access that turns library type errors into StructuralError.
template <class T>
T get_field(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key))
    throw StructuralError(std::string("missing field '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw StructuralError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace motionprog
