#pragma once

// CSV records and the small text grammars used on the command line:
// angle expressions ("0.2892pi+0.1", "2pi/5"), lists ("a,b,c") and
// inclusive ranges ("start:stop:step").

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qsw/core_model.hpp"
#include "qsw/errors.hpp"

namespace qsw::io {

enum class Kind { RTilde, Rt, St, QHat, Bt };

inline const char* kind_name(Kind k) {
  switch (k) {
  case Kind::RTilde: return "rtilde";
  case Kind::Rt: return "rt";
  case Kind::St: return "st";
  case Kind::QHat: return "qhat";
  case Kind::Bt: return "bt";
  }
  return "?";
}

inline Kind parse_kind(const std::string& s) {
  for (Kind k : {Kind::RTilde, Kind::Rt, Kind::St, Kind::QHat, Kind::Bt})
    if (s == kind_name(k)) return k;
  throw ParameterError("unknown record kind '" + s + "'");
}

inline Model parse_model(const std::string& s) {
  if (s == "balanced") return Model::Balanced;
  if (s == "correlated") return Model::Correlated;
  throw ParameterError("unknown model '" + s + "' (expected balanced or correlated)");
}

struct SweepRecord {
  std::string model;
  double theta = 0.0;
  double p = 0.0;
  std::optional<double> z;
  std::optional<int> n_max;
  std::optional<int> grid_n;
  Kind kind = Kind::RTilde;
  std::optional<int> t;
  double value = 0.0;
  std::string error;
};

inline constexpr const char* sweep_header = "model,theta,p,z,nmax,grid,kind,t,value,error";

/// 12 significant digits; NaN is written as "nan".
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline void write_record(std::ostream& os, const SweepRecord& r) {
  auto opt_num = [](const auto& o) { return o ? format_number(static_cast<double>(*o)) : std::string(); };
  os << r.model << ',' << format_number(r.theta) << ',' << format_number(r.p) << ',' << opt_num(r.z)
     << ',' << opt_num(r.n_max) << ',' << opt_num(r.grid_n) << ',' << kind_name(r.kind) << ','
     << opt_num(r.t) << ',' << format_number(r.value) << ',' << csv_escape(r.error) << '\n';
}

inline void write_csv(std::ostream& os, const std::vector<SweepRecord>& rows) {
  os << sweep_header << '\n';
  for (const auto& r : rows) write_record(os, r);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) throw ParameterError("not a number: '" + s + "'");
  return v;
}

inline std::vector<SweepRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParameterError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != sweep_header) throw ParameterError("unexpected CSV header '" + line + "'");
  std::vector<SweepRecord> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw ParameterError("CSV line " + std::to_string(lineno) + " has " +
                                             std::to_string(f.size()) + " fields, expected 10");
    SweepRecord r;
    r.model = f[0];
    r.theta = parse_double(f[1]);
    r.p = parse_double(f[2]);
    if (!f[3].empty()) r.z = parse_double(f[3]);
    if (!f[4].empty()) r.n_max = static_cast<int>(parse_double(f[4]));
    if (!f[5].empty()) r.grid_n = static_cast<int>(parse_double(f[5]));
    r.kind = parse_kind(f[6]);
    if (!f[7].empty()) r.t = static_cast<int>(parse_double(f[7]));
    r.value = parse_double(f[8]);
    r.error = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace detail {

inline std::string strip(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

// term := [number] ['*'] ['pi'] ['/' number]
inline double parse_term(const std::string& t) {
  if (t.empty()) throw ParameterError("empty term in angle expression");
  std::string s = t;
  double denom = 1.0;
  if (auto slash = s.find('/'); slash != std::string::npos) {
    denom = parse_double(s.substr(slash + 1));
    s = s.substr(0, slash);
    if (denom == 0.0) throw ParameterError("division by zero in '" + t + "'");
  }
  double factor = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    factor = pi;
    s.erase(s.size() - 2);
    if (!s.empty() && s.back() == '*') s.pop_back();
    if (s.empty()) return factor / denom;
  }
  return parse_double(s) * factor / denom;
}

} // namespace detail

/// Sum/difference of terms such as "0.2892pi+0.1", "2pi/5", "pi/4", "0.7".
inline double parse_angle(const std::string& expr) {
  const std::string s = detail::strip(expr);
  if (s.empty()) throw ParameterError("empty angle expression");
  double total = 0.0;
  std::size_t start = 0;
  int sign = 1;
  if (s[0] == '+' || s[0] == '-') {
    sign = s[0] == '-' ? -1 : 1;
    start = 1;
  }
  for (std::size_t i = start; i <= s.size(); ++i) {
    const bool at_end = i == s.size();
    // a sign right after an exponent marker belongs to the number
    const bool is_op = !at_end && (s[i] == '+' || s[i] == '-') && i > start &&
                       s[i - 1] != 'e' && s[i - 1] != 'E';
    if (at_end || is_op) {
      total += sign * detail::parse_term(s.substr(start, i - start));
      if (!at_end) {
        sign = s[i] == '-' ? -1 : 1;
        start = i + 1;
      }
    }
  }
  return total;
}

/// "a,b,c" or "start:stop:step" (inclusive, step count rounded). Elements may
/// be angle expressions.
inline std::vector<double> parse_values(const std::string& spec) {
  const std::string s = detail::strip(spec);
  if (s.empty()) throw ParameterError("empty value list");
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find(':') != std::string::npos) {
      std::vector<std::string> parts;
      std::stringstream is(item);
      std::string part;
      while (std::getline(is, part, ':')) parts.push_back(part);
      if (parts.size() != 3) throw ParameterError("range must be start:stop:step, got '" + item + "'");
      const double a = parse_angle(parts[0]), b = parse_angle(parts[1]), h = parse_angle(parts[2]);
      if (!(h > 0.0) || b < a) throw ParameterError("range needs step > 0 and stop >= start");
      const long count = std::lround((b - a) / h);
      for (long i = 0; i <= count; ++i) out.push_back(i == count ? b : a + i * h);
    } else {
      out.push_back(parse_angle(item));
    }
  }
  return out;
}

inline std::vector<int> parse_int_values(const std::string& spec) {
  std::vector<int> out;
  for (double v : parse_values(spec)) {
    if (v != std::floor(v)) throw ParameterError("expected integers, got " + format_number(v));
    out.push_back(static_cast<int>(v));
  }
  return out;
}

} // namespace qsw::io
