#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "wabd/types.hpp"

namespace wabd {

/// One trace line: `time_ms <TAB> event <TAB> src <TAB> dst <TAB> detail`.
/// `dst` is -1 for events without a destination. `detail` is a sequence of
/// space-separated `key=value` tokens, optionally preceded by a bare word
/// (the message kind for deliveries).
struct TraceRecord {
  Micros time = 0;
  std::string event;
  std::int64_t src = -1;
  std::int64_t dst = -1;
  std::string detail;
};

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed `key=value` fields of a detail string.
class Fields {
 public:
  explicit Fields(std::string_view detail) {
    std::size_t pos = 0;
    while (pos < detail.size()) {
      std::size_t end = detail.find(' ', pos);
      if (end == std::string_view::npos) end = detail.size();
      std::string_view tok = detail.substr(pos, end - pos);
      if (auto eq = tok.find('='); eq != std::string_view::npos) {
        values_.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
      } else if (!tok.empty() && head_.empty()) {
        head_ = std::string(tok);
      }
      pos = end + 1;
    }
  }

  const std::string& head() const noexcept { return head_; }
  bool has(const std::string& key) const { return values_.contains(key); }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw TraceError("missing field '" + key + "'");
    return it->second;
  }

  double num(const std::string& key) const {
    const std::string& s = str(key);
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw TraceError("bad number for '" + key + "': " + s);
      return v;
    } catch (const std::logic_error&) {
      throw TraceError("bad number for '" + key + "': " + s);
    }
  }

  std::int64_t integer(const std::string& key) const {
    const std::string& s = str(key);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw TraceError("bad integer for '" + key + "': " + s);
    return v;
  }

  Micros time(const std::string& key) const { return from_ms(num(key)); }

 private:
  std::string head_;
  std::map<std::string, std::string> values_;
};

class Trace {
 public:
  explicit Trace(bool record_deliveries = true) : record_deliveries_(record_deliveries) {}

  bool records_deliveries() const noexcept { return record_deliveries_; }

  void add(Micros time, std::string event, std::int64_t src, std::int64_t dst, std::string detail) {
    records_.push_back(TraceRecord{time, std::move(event), src, dst, std::move(detail)});
  }

  const std::vector<TraceRecord>& records() const noexcept { return records_; }
  std::vector<TraceRecord>& records() noexcept { return records_; }

  void write(std::ostream& out) const {
    for (const auto& r : records_) out << format_line(r) << '\n';
  }

  std::string to_string() const {
    std::ostringstream out;
    write(out);
    return out.str();
  }

  static std::string format_line(const TraceRecord& r) {
    return fmt::format("{:.3f}\t{}\t{}\t{}\t{}", to_ms(r.time), r.event, r.src, r.dst, r.detail);
  }

  static TraceRecord parse_line(std::string_view line) {
    TraceRecord r;
    std::string_view parts[5];
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
      std::size_t tab = line.find('\t', pos);
      if (tab == std::string_view::npos) throw TraceError("malformed trace line: " + std::string(line));
      parts[i] = line.substr(pos, tab - pos);
      pos = tab + 1;
    }
    parts[4] = line.substr(pos);
    try {
      r.time = from_ms(std::stod(std::string(parts[0])));
      r.src = std::stoll(std::string(parts[2]));
      r.dst = std::stoll(std::string(parts[3]));
    } catch (const std::logic_error&) {
      throw TraceError("malformed trace line: " + std::string(line));
    }
    r.event = std::string(parts[1]);
    r.detail = std::string(parts[4]);
    return r;
  }

  static Trace read(std::istream& in) {
    Trace t;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      t.records_.push_back(parse_line(line));
    }
    return t;
  }

 private:
  bool record_deliveries_ = true;
  std::vector<TraceRecord> records_;
};

}  // namespace wabd
