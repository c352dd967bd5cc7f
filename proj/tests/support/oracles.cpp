#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include <mpfr.h>

namespace flowlatin::testing {

double mpfr_sum(const std::vector<double>& xs) {
  // 2^1024 down to 2^-1074 spans 2098 bits; the rest absorbs carries.
  mpfr_t acc, term;
  mpfr_init2(acc, 2300);
  mpfr_init2(term, 64);
  mpfr_set_zero(acc, 1);
  for (double x : xs) {
    mpfr_set_d(term, x, MPFR_RNDN);
    mpfr_add(acc, acc, term, MPFR_RNDN);
  }
  double out = mpfr_get_d(acc, MPFR_RNDN);
  mpfr_clear(acc);
  mpfr_clear(term);
  return out;
}

std::string wordcount_hashmap(std::string_view text) {
  std::unordered_map<std::string, std::int64_t> counts;
  std::string word;
  auto blank = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  for (char c : text) {
    if (blank(c)) {
      if (!word.empty()) ++counts[word];
      word.clear();
    } else {
      word += c;
    }
  }
  if (!word.empty()) ++counts[word];
  std::vector<std::pair<std::string, std::int64_t>> rows(counts.begin(), counts.end());
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& [w, n] : rows) out += w + "\t" + std::to_string(n) + "\n";
  return out;
}

std::vector<engine::KeyGroup> shuffle_hashmap(const std::vector<engine::KeyValue>& pairs) {
  struct Eq {
    bool operator()(const data::Value& a, const data::Value& b) const { return a == b; }
  };
  std::unordered_map<data::Value, std::vector<data::Value>, data::ValueHash, Eq> groups;
  std::vector<data::Value> first_seen;
  for (const auto& kv : pairs) {
    auto [it, fresh] = groups.try_emplace(kv.key);
    if (fresh) first_seen.push_back(kv.key);
    it->second.push_back(kv.value);
  }
  std::sort(first_seen.begin(), first_seen.end(), data::ValueLess{});
  std::vector<engine::KeyGroup> out;
  for (const auto& k : first_seen) out.emplace_back(k, groups.at(k));
  return out;
}

namespace {

struct Tally {
  std::int64_t count = 0;
};

analysis::TrafficReport finish(std::string name, std::int64_t d,
                               const std::map<std::string, Tally>& tallies) {
  analysis::TrafficReport r;
  r.name = std::move(name);
  r.duration_seconds = d;
  for (const auto& [entity, t] : tallies) {
    r.rows.push_back({entity, static_cast<double>(t.count) / static_cast<double>(d), t.count});
  }
  std::sort(r.rows.begin(), r.rows.end(), [](const auto& a, const auto& b) {
    if (a.flow_per_sec != b.flow_per_sec) return a.flow_per_sec > b.flow_per_sec;
    return a.entity < b.entity;
  });
  return r;
}

}  // namespace

analysis::TrafficReport oracle_report(analysis::Kind kind, const flow::SectionTables& s) {
  const std::int64_t d = s.duration_seconds;
  std::map<std::string, Tally> tallies;
  switch (kind) {
    case analysis::Kind::SrcInterface:
    case analysis::Kind::SrcIp:
      for (const auto& p : s.protocol_flow) {
        for (const auto& src : s.source) {
          if (src.record_id != p.record_id) continue;
          auto key = kind == analysis::Kind::SrcIp ? src.ip : std::to_string(src.interface);
          ++tallies[key].count;
        }
      }
      break;
    case analysis::Kind::Protocol:
      for (const auto& p : s.protocol_flow) ++tallies[p.protocol].count;
      break;
    case analysis::Kind::PerNode:
      for (const auto& src : s.source) {
        for (const auto& dst : s.destination) {
          if (dst.record_id != src.record_id) continue;
          ++tallies[src.ip].count;
          if (dst.ip != src.ip) ++tallies[dst.ip].count;
        }
      }
      break;
  }
  return finish(std::string(analysis::kind_name(kind)), d, tallies);
}

double relative_error(double a, double b) {
  if (a == b) return 0.0;
  return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b));
}

bool reports_match(const analysis::TrafficReport& got, const analysis::TrafficReport& want,
                   double tolerance, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (got.duration_seconds != want.duration_seconds) return fail("duration differs");
  if (got.rows.size() != want.rows.size()) {
    return fail("row count " + std::to_string(got.rows.size()) + " vs " +
                std::to_string(want.rows.size()));
  }
  for (std::size_t i = 0; i < got.rows.size(); ++i) {
    const auto& g = got.rows[i];
    const auto& w = want.rows[i];
    if (g.entity != w.entity || g.record_count != w.record_count) {
      return fail("row " + std::to_string(i) + ": " + g.entity + "/" +
                  std::to_string(g.record_count) + " vs " + w.entity + "/" +
                  std::to_string(w.record_count));
    }
    if (relative_error(g.flow_per_sec, w.flow_per_sec) > tolerance) {
      return fail("row " + std::to_string(i) + " flow " + std::to_string(g.flow_per_sec) +
                  " vs " + std::to_string(w.flow_per_sec));
    }
  }
  return true;
}

bool same_multiset(std::vector<data::Tuple> a, std::vector<data::Tuple> b, std::string* why) {
  std::sort(a.begin(), a.end(), data::TupleLess{});
  std::sort(b.begin(), b.end(), data::TupleLess{});
  if (a.size() != b.size()) {
    if (why) *why = "sizes " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (data::compare(a[i], b[i]) != 0) {
      if (why) *why = "first difference " + data::debug_string(a[i]) + " vs " + data::debug_string(b[i]);
      return false;
    }
  }
  return true;
}

}  // namespace flowlatin::testing
