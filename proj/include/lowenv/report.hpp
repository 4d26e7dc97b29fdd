#pragma once

// JSON and CSV emission. Floats are written with 17 significant digits.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lowenv {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void dump_json(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(key).dump() + ": ";
        dump_json(value, out, indent + 2);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += ",\n";
        out += pad;
        dump_json(j[i], out, indent + 2);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      // JSON has no non-finite numbers; they are written as strings.
      out += std::isfinite(v) ? format_double(v) : Json(format_double(v)).dump();
      return;
    }
    default: out += j.dump(); return;
  }
}

}  // namespace detail

inline std::string to_json_text(const Json& j) {
  std::string out;
  detail::dump_json(j, out, 0);
  out += "\n";
  return out;
}

/// Number cell for JSON: finite doubles stay numbers, others become strings.
inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(format_double(v)); }

inline Json json_array(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::logic_error("CSV row width does not match the header");
    rows_.push_back(std::move(cells));
  }

  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }

  std::string text() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  std::size_t size() const noexcept { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open output file " + path.string());
  os << text;
  if (!os) throw std::runtime_error("failed writing output file " + path.string());
}

}  // namespace lowenv
