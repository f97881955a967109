#pragma once

// Market data layer: bar types, CSV ingestion, curb-event detection, the
// five curb indicators, lookback windows, normalization, temporal split.
//
// Price comparisons against the curb always use a tick/2 tolerance; prices
// are tick-quantized at generation time, so half a tick separates "at the
// curb" from "below it" unambiguously while staying robust to decimal
// round-trips.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hgnn/array.hpp"
#include "hgnn/errors.hpp"
#include "hgnn/io.hpp"

namespace hgnn::data {

constexpr int kFeatureCount = 6;  // open, high, low, close, volume, turnover
constexpr int kIndicatorCount = 5;

struct DailyBar {
  std::string stock_id;
  int day = 0;
  double open = 0, high = 0, low = 0, close = 0;
  double volume = 0;
  double float_shares = 0;
};

struct MinuteBar {
  std::string stock_id;
  int day = 0;
  int minute = 0;
  double open = 0, high = 0, low = 0, close = 0;
  double volume = 0;
};

struct CurbEvent {
  std::string stock_id;
  int day = 0;
  double curb_price = 0;
  int touched_minute = 0;
  int label = 0;  // 1: closed at the curb, 0: fell back
};

struct IndicatorVector {
  double moving_average_ratio = 0;
  double rate_of_change = 0;
  double turnover_rate = 0;
  double amplitude = 0;
  double deviation_rate = 0;

  std::array<double, kIndicatorCount> as_array() const {
    return {moving_average_ratio, rate_of_change, turnover_rate, amplitude,
            deviation_rate};
  }
};

inline double round_to_tick(double price, double tick) {
  return static_cast<double>(std::llround(price / tick)) * tick;
}

inline double curb_price_for(double prev_close, double limit_rate, double tick) {
  return round_to_tick(prev_close * (1.0 + limit_rate), tick);
}

// ---- CSV ingestion ----

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline ParseError row_error(const std::string& path, int line_no, const std::string& what) {
  return ParseError(path + ":" + std::to_string(line_no) + ": " + what);
}

inline double parse_double(std::string_view s, const std::string& path, int line_no) {
  double out = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end)
    throw row_error(path, line_no, "bad numeric field '" + std::string(s) + "'");
  return out;
}

inline int parse_int(std::string_view s, const std::string& path, int line_no) {
  int out = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end)
    throw row_error(path, line_no, "bad integer field '" + std::string(s) + "'");
  return out;
}

// Calls fn(line_no, fields) per data row after validating the header.
template <typename Fn>
void for_each_row(const std::string& path, const std::string& expect_header,
                  std::size_t n_fields, Fn&& fn) {
  const std::string text = io::read_file(path);
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string::npos) pos = text.size();
    std::string_view line(text.data() + start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = pos + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != expect_header)
        throw row_error(path, 1, "expected header '" + expect_header + "', got '" +
                                    std::string(line) + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != n_fields)
      throw row_error(path, line_no,
                      "expected " + std::to_string(n_fields) + " fields, got " +
                          std::to_string(fields.size()));
    fn(line_no, fields);
  }
  if (line_no == 0) throw ParseError(path + ": empty file, header missing");
}

inline void check_price_order(const std::string& path, int line_no, double open,
                              double high, double low, double close) {
  const double lo = std::min(open, close);
  const double hi = std::max(open, close);
  if (!(low <= lo && hi <= high))
    throw row_error(path, line_no, "price ordering violated (low <= open/close <= high)");
  if (low <= 0) throw row_error(path, line_no, "non-positive price");
}

}  // namespace detail

inline std::vector<DailyBar> load_daily_csv(const std::string& path) {
  std::vector<DailyBar> bars;
  detail::for_each_row(
      path, "stock_id,day,open,high,low,close,volume,float_shares", 8,
      [&](int line_no, const std::vector<std::string_view>& f) {
        DailyBar b;
        b.stock_id = std::string(f[0]);
        b.day = detail::parse_int(f[1], path, line_no);
        b.open = detail::parse_double(f[2], path, line_no);
        b.high = detail::parse_double(f[3], path, line_no);
        b.low = detail::parse_double(f[4], path, line_no);
        b.close = detail::parse_double(f[5], path, line_no);
        b.volume = detail::parse_double(f[6], path, line_no);
        b.float_shares = detail::parse_double(f[7], path, line_no);
        if (b.stock_id.empty()) throw detail::row_error(path, line_no, "empty stock_id");
        if (b.day < 0) throw detail::row_error(path, line_no, "negative day");
        detail::check_price_order(path, line_no, b.open, b.high, b.low, b.close);
        if (b.volume < 0) throw detail::row_error(path, line_no, "negative volume");
        if (b.float_shares <= 0)
          throw detail::row_error(path, line_no, "float_shares must be positive");
        bars.push_back(std::move(b));
      });
  std::sort(bars.begin(), bars.end(), [](const DailyBar& a, const DailyBar& b) {
    return std::tie(a.stock_id, a.day) < std::tie(b.stock_id, b.day);
  });
  for (std::size_t i = 1; i < bars.size(); ++i)
    if (bars[i].stock_id == bars[i - 1].stock_id && bars[i].day == bars[i - 1].day)
      throw DataError(path + ": duplicate daily bar for " + bars[i].stock_id +
                      " day " + std::to_string(bars[i].day));
  return bars;
}

inline std::vector<MinuteBar> load_minute_csv(const std::string& path) {
  std::vector<MinuteBar> bars;
  detail::for_each_row(
      path, "stock_id,day,minute,open,high,low,close,volume", 8,
      [&](int line_no, const std::vector<std::string_view>& f) {
        MinuteBar b;
        b.stock_id = std::string(f[0]);
        b.day = detail::parse_int(f[1], path, line_no);
        b.minute = detail::parse_int(f[2], path, line_no);
        b.open = detail::parse_double(f[3], path, line_no);
        b.high = detail::parse_double(f[4], path, line_no);
        b.low = detail::parse_double(f[5], path, line_no);
        b.close = detail::parse_double(f[6], path, line_no);
        b.volume = detail::parse_double(f[7], path, line_no);
        if (b.stock_id.empty()) throw detail::row_error(path, line_no, "empty stock_id");
        if (b.day < 0) throw detail::row_error(path, line_no, "negative day");
        if (b.minute < 0) throw detail::row_error(path, line_no, "negative minute");
        detail::check_price_order(path, line_no, b.open, b.high, b.low, b.close);
        if (b.volume < 0) throw detail::row_error(path, line_no, "negative volume");
        bars.push_back(std::move(b));
      });
  std::sort(bars.begin(), bars.end(), [](const MinuteBar& a, const MinuteBar& b) {
    return std::tie(a.stock_id, a.day, a.minute) < std::tie(b.stock_id, b.day, b.minute);
  });
  for (std::size_t i = 1; i < bars.size(); ++i)
    if (bars[i].stock_id == bars[i - 1].stock_id && bars[i].day == bars[i - 1].day &&
        bars[i].minute == bars[i - 1].minute)
      throw DataError(path + ": duplicate minute bar for " + bars[i].stock_id +
                      " day " + std::to_string(bars[i].day) + " minute " +
                      std::to_string(bars[i].minute));
  return bars;
}

inline std::map<std::string, std::string> load_industry_csv(const std::string& path) {
  std::map<std::string, std::string> out;
  detail::for_each_row(path, "stock_id,industry", 2,
                       [&](int line_no, const std::vector<std::string_view>& f) {
                         const std::string sid(f[0]);
                         const std::string ind(f[1]);
                         if (sid.empty() || ind.empty())
                           throw detail::row_error(path, line_no, "empty field");
                         auto [it, inserted] = out.emplace(sid, ind);
                         if (!inserted && it->second != ind)
                           throw detail::row_error(path, line_no,
                                                   "conflicting industry for " + sid);
                       });
  return out;
}

// ---- curb events ----

// Sorted minute bars indexed by (stock, day).
class MinuteIndex {
 public:
  explicit MinuteIndex(const std::vector<MinuteBar>& sorted_bars) : bars_(&sorted_bars) {}

  std::span<const MinuteBar> day_bars(const std::string& stock_id, int day) const {
    const auto lo = std::lower_bound(
        bars_->begin(), bars_->end(), std::tie(stock_id, day),
        [](const MinuteBar& b, const auto& key) {
          return std::tie(b.stock_id, b.day) < key;
        });
    auto hi = lo;
    while (hi != bars_->end() && hi->stock_id == stock_id && hi->day == day) ++hi;
    return {&*lo, static_cast<std::size_t>(hi - lo)};
  }

 private:
  const std::vector<MinuteBar>* bars_;
};

// A day is an event day when its high reaches the curb computed off the
// previous close. The first day of each stock has no curb and never fires.
inline std::vector<CurbEvent> detect_curb_events(const std::vector<DailyBar>& daily,
                                                 const std::vector<MinuteBar>& minute,
                                                 double limit_rate, double tick) {
  const MinuteIndex idx(minute);
  std::vector<CurbEvent> events;
  const double half_tick = tick / 2.0;
  for (std::size_t i = 1; i < daily.size(); ++i) {
    const DailyBar& prev = daily[i - 1];
    const DailyBar& cur = daily[i];
    if (prev.stock_id != cur.stock_id) continue;
    const double curb = curb_price_for(prev.close, limit_rate, tick);
    if (cur.high < curb - half_tick) continue;

    CurbEvent ev;
    ev.stock_id = cur.stock_id;
    ev.day = cur.day;
    ev.curb_price = curb;
    ev.label = std::abs(cur.close - curb) <= half_tick ? 1 : 0;

    const auto mins = idx.day_bars(cur.stock_id, cur.day);
    if (mins.empty())
      throw DataError("curb event without minute data: " + cur.stock_id + " day " +
                      std::to_string(cur.day));
    int touched = -1;
    for (const MinuteBar& m : mins) {
      if (m.high >= curb - half_tick) {
        touched = m.minute;
        break;
      }
    }
    if (touched < 0)
      throw DataError("daily high reaches curb but no minute bar does: " +
                      cur.stock_id + " day " + std::to_string(cur.day));
    ev.touched_minute = touched;
    events.push_back(std::move(ev));
  }
  return events;
}

// ---- indicators ----

// The five technical indicators at the touched minute. Windows near the
// open truncate to the available bars instead of dropping the event.
inline IndicatorVector compute_curb_indicators(std::span<const MinuteBar> day_minutes,
                                               int touched_minute, double prev_close,
                                               double float_shares, int ma_window) {
  if (day_minutes.empty()) throw ContractError("compute_curb_indicators: no minute bars");
  if (ma_window < 1) throw ContractError("compute_curb_indicators: ma_window must be >= 1");
  if (prev_close <= 0) throw DataError("compute_curb_indicators: prev_close must be positive");
  if (float_shares <= 0) throw DataError("compute_curb_indicators: float_shares must be positive");

  // Position of the touched minute in this day's bar list.
  int m = -1;
  for (std::size_t i = 0; i < day_minutes.size(); ++i)
    if (day_minutes[i].minute == touched_minute) {
      m = static_cast<int>(i);
      break;
    }
  if (m < 0)
    throw ContractError("compute_curb_indicators: touched minute " +
                        std::to_string(touched_minute) + " not in day bars");

  const int w_start = std::max(0, m - ma_window + 1);
  double ma = 0;
  for (int i = w_start; i <= m; ++i) ma += day_minutes[i].close;
  ma /= static_cast<double>(m - w_start + 1);
  if (ma <= 0) throw DataError("compute_curb_indicators: nonpositive moving average");

  const double close_m = day_minutes[m].close;
  const int roc_ref = std::max(0, m - ma_window);
  const double close_ref = day_minutes[roc_ref].close;
  if (close_ref <= 0) throw DataError("compute_curb_indicators: nonpositive reference close");

  double vol_sum = 0, hi = day_minutes[0].high, lo = day_minutes[0].low;
  for (int i = 0; i <= m; ++i) {
    vol_sum += day_minutes[i].volume;
    hi = std::max(hi, day_minutes[i].high);
    lo = std::min(lo, day_minutes[i].low);
  }

  IndicatorVector d;
  d.moving_average_ratio = close_m / ma - 1.0;
  d.rate_of_change = (close_m - close_ref) / close_ref;
  d.turnover_rate = vol_sum / float_shares;
  d.amplitude = (hi - lo) / prev_close;
  d.deviation_rate = (close_m - ma) / ma;
  return d;
}

// ---- dataset assembly ----

struct EventSample {
  int node_index = -1;  // row in the day's window matrices / graph
  std::string stock_id;
  double curb_price = 0;
  int touched_minute = 0;
  std::array<double, kIndicatorCount> indicators{};
  int label = 0;
};

// One training unit: every stock's lookback window for a day plus that
// day's curb events. Window step t holds features of day (day - T + t).
struct DayBatch {
  int day = 0;
  std::vector<Array> steps;        // T arrays, each n x F
  std::vector<char> has_history;   // n flags; 0 rows are zero-filled
  std::vector<EventSample> events;
};

struct NormStats {
  std::array<double, kFeatureCount> feat_mean{}, feat_std{};
  std::array<double, kIndicatorCount> ind_mean{}, ind_std{};
};

struct Dataset {
  std::vector<std::string> stock_ids;  // sorted; node index = position
  std::map<std::string, std::string> industry_of;
  int T = 0;
  std::vector<DayBatch> days;  // ascending day, each with >= 1 event
  int skipped_no_history = 0;
  bool normalized = false;
  NormStats stats;  // meaningful iff normalized

  int stock_count() const { return static_cast<int>(stock_ids.size()); }
};

// Every stock that trades must carry an industry label and vice versa, so
// dataset rows and graph nodes stay aligned.
inline void check_universe(const std::vector<DailyBar>& daily,
                           const std::map<std::string, std::string>& industry_of) {
  std::set<std::string> traded;
  for (const auto& b : daily) traded.insert(b.stock_id);
  std::string missing;
  for (const auto& sid : traded)
    if (!industry_of.contains(sid)) missing += (missing.empty() ? "" : ", ") + sid;
  if (!missing.empty())
    throw DataError("stocks missing from industry map: " + missing);
  std::string extra;
  for (const auto& [sid, ind] : industry_of)
    if (!traded.contains(sid)) extra += (extra.empty() ? "" : ", ") + sid;
  if (!extra.empty())
    throw DataError("industry map lists stocks with no price data: " + extra);
}

// Windows cover days t-T .. t-1, strictly before the event day, so no
// feature of the labeled day is visible to the model.
inline Dataset build_windows(const std::vector<DailyBar>& daily,
                             const std::vector<MinuteBar>& minute,
                             const std::vector<CurbEvent>& events,
                             const std::map<std::string, std::string>& industry_of,
                             int T, int ma_window) {
  if (T < 1) throw ContractError("build_windows: T must be >= 1");
  check_universe(daily, industry_of);

  Dataset ds;
  ds.T = T;
  for (const auto& [sid, ind] : industry_of) ds.stock_ids.push_back(sid);
  std::sort(ds.stock_ids.begin(), ds.stock_ids.end());
  ds.industry_of = industry_of;
  const int n = ds.stock_count();

  std::map<std::string, int> node_of;
  for (int i = 0; i < n; ++i) node_of[ds.stock_ids[i]] = i;

  // (stock node, day) -> bar
  std::map<std::pair<int, int>, const DailyBar*> bar_at;
  for (const auto& b : daily) bar_at[{node_of.at(b.stock_id), b.day}] = &b;

  std::map<int, std::vector<const CurbEvent*>> events_by_day;
  for (const auto& ev : events) events_by_day[ev.day].push_back(&ev);

  const MinuteIndex midx(minute);

  for (const auto& [day, day_events] : events_by_day) {
    DayBatch batch;
    batch.day = day;
    batch.has_history.assign(static_cast<std::size_t>(n), 0);
    batch.steps.assign(static_cast<std::size_t>(T), Array(n, kFeatureCount, 0.0));

    for (int s = 0; s < n; ++s) {
      bool complete = true;
      for (int t = 0; t < T && complete; ++t)
        complete = bar_at.contains({s, day - T + t});
      if (!complete) continue;
      batch.has_history[s] = 1;
      for (int t = 0; t < T; ++t) {
        const DailyBar& b = *bar_at.at({s, day - T + t});
        Array& st = batch.steps[t];
        st(s, 0) = b.open;
        st(s, 1) = b.high;
        st(s, 2) = b.low;
        st(s, 3) = b.close;
        st(s, 4) = b.volume;
        st(s, 5) = b.volume / b.float_shares;
      }
    }

    for (const CurbEvent* ev : day_events) {
      const int node = node_of.at(ev->stock_id);
      if (!batch.has_history[node]) {
        ++ds.skipped_no_history;
        continue;
      }
      const auto prev_it = bar_at.find({node, ev->day - 1});
      const auto cur_it = bar_at.find({node, ev->day});
      if (prev_it == bar_at.end() || cur_it == bar_at.end())
        throw DataError("event day bars missing for " + ev->stock_id + " day " +
                        std::to_string(ev->day));
      EventSample s;
      s.node_index = node;
      s.stock_id = ev->stock_id;
      s.curb_price = ev->curb_price;
      s.touched_minute = ev->touched_minute;
      s.label = ev->label;
      s.indicators = compute_curb_indicators(midx.day_bars(ev->stock_id, ev->day),
                                             ev->touched_minute, prev_it->second->close,
                                             cur_it->second->float_shares, ma_window)
                         .as_array();
      batch.events.push_back(std::move(s));
    }
    if (!batch.events.empty()) ds.days.push_back(std::move(batch));
  }
  return ds;
}

// Contiguous split over the dataset's day sequence: earliest train_frac of
// days, then val_frac, then the remainder.
inline std::array<Dataset, 3> temporal_split(const Dataset& ds, double train_frac,
                                             double val_frac) {
  if (train_frac <= 0 || val_frac <= 0 || train_frac + val_frac >= 1)
    throw ConfigError("temporal_split: need 0 < train_frac, 0 < val_frac, sum < 1");
  const int nd = static_cast<int>(ds.days.size());
  const int n_train = static_cast<int>(std::floor(train_frac * nd));
  const int n_val = static_cast<int>(std::floor(val_frac * nd));
  const int n_test = nd - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1)
    throw DataError("temporal_split: a split is empty (" + std::to_string(nd) +
                    " event days total)");
  std::array<Dataset, 3> out;
  for (auto& part : out) {
    part.stock_ids = ds.stock_ids;
    part.industry_of = ds.industry_of;
    part.T = ds.T;
    part.skipped_no_history = ds.skipped_no_history;
    part.normalized = ds.normalized;
    part.stats = ds.stats;
  }
  for (int i = 0; i < nd; ++i) {
    const int which = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
    out[which].days.push_back(ds.days[i]);
  }
  return out;
}

// Per-feature and per-indicator mean/std over the training split. Only
// rows with history enter the feature statistics; population std; a
// near-constant column falls back to std 1.
inline NormStats compute_norm_stats(const Dataset& train) {
  if (train.normalized) throw ContractError("compute_norm_stats: dataset already normalized");
  NormStats st;
  std::array<double, kFeatureCount> sum{}, sumsq{};
  double count = 0;
  for (const auto& batch : train.days)
    for (const auto& step : batch.steps)
      for (int s = 0; s < step.rows; ++s) {
        if (!batch.has_history[s]) continue;
        count += 1;
        for (int f = 0; f < kFeatureCount; ++f) {
          sum[f] += step(s, f);
          sumsq[f] += step(s, f) * step(s, f);
        }
      }
  if (count == 0) throw DataError("compute_norm_stats: no feature rows in train split");
  for (int f = 0; f < kFeatureCount; ++f) {
    st.feat_mean[f] = sum[f] / count;
    const double var = std::max(0.0, sumsq[f] / count - st.feat_mean[f] * st.feat_mean[f]);
    st.feat_std[f] = std::sqrt(var);
    if (st.feat_std[f] < 1e-12) st.feat_std[f] = 1.0;
  }

  std::array<double, kIndicatorCount> isum{}, isumsq{};
  double icount = 0;
  for (const auto& batch : train.days)
    for (const auto& ev : batch.events) {
      icount += 1;
      for (int k = 0; k < kIndicatorCount; ++k) {
        isum[k] += ev.indicators[k];
        isumsq[k] += ev.indicators[k] * ev.indicators[k];
      }
    }
  if (icount == 0) throw DataError("compute_norm_stats: no events in train split");
  for (int k = 0; k < kIndicatorCount; ++k) {
    st.ind_mean[k] = isum[k] / icount;
    const double var = std::max(0.0, isumsq[k] / icount - st.ind_mean[k] * st.ind_mean[k]);
    st.ind_std[k] = std::sqrt(var);
    if (st.ind_std[k] < 1e-12) st.ind_std[k] = 1.0;
  }
  return st;
}

// Z-scores features and indicators in place with the given (train-split)
// statistics. Rows without history stay zero.
inline void normalize(Dataset& ds, const NormStats& st) {
  if (ds.normalized) throw ContractError("normalize: dataset already normalized");
  for (auto& batch : ds.days) {
    for (auto& step : batch.steps)
      for (int s = 0; s < step.rows; ++s) {
        if (!batch.has_history[s]) continue;
        for (int f = 0; f < kFeatureCount; ++f)
          step(s, f) = (step(s, f) - st.feat_mean[f]) / st.feat_std[f];
      }
    for (auto& ev : batch.events)
      for (int k = 0; k < kIndicatorCount; ++k)
        ev.indicators[k] = (ev.indicators[k] - st.ind_mean[k]) / st.ind_std[k];
  }
  ds.normalized = true;
  ds.stats = st;
}

struct SplitDatasets {
  Dataset train, val, test;
};

// Full pipeline from raw tables to normalized splits.
inline SplitDatasets assemble_dataset(const std::vector<DailyBar>& daily,
                                      const std::vector<MinuteBar>& minute,
                                      const std::map<std::string, std::string>& industry_of,
                                      int T, double limit_rate, double tick, int ma_window,
                                      double train_frac, double val_frac) {
  const auto events = detect_curb_events(daily, minute, limit_rate, tick);
  if (events.empty()) throw DataError("no curb events detected in input data");
  Dataset all = build_windows(daily, minute, events, industry_of, T, ma_window);
  if (all.days.empty()) throw DataError("no usable event days after history filtering");
  auto parts = temporal_split(all, train_frac, val_frac);
  const NormStats st = compute_norm_stats(parts[0]);
  for (auto& p : parts) normalize(p, st);
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

// ---- canonical serialization (lookahead audit) ----

// Exact decimal dump of one day's model inputs. Two corpora that differ
// only after day D must serialize day D identically.
inline std::string serialize_day(const Dataset& ds, const DayBatch& batch) {
  std::ostringstream out;
  char buf[64];
  const auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf;
  };
  out << "day " << batch.day << "\n";
  for (int s = 0; s < ds.stock_count(); ++s) {
    if (!batch.has_history[s]) continue;
    out << ds.stock_ids[s];
    for (int t = 0; t < ds.T; ++t)
      for (int f = 0; f < kFeatureCount; ++f) {
        out << ' ';
        put(batch.steps[t](s, f));
      }
    out << "\n";
  }
  for (const auto& ev : batch.events) {
    out << "event " << ev.stock_id << " label " << ev.label << " touched "
        << ev.touched_minute << " curb ";
    put(ev.curb_price);
    for (double d : ev.indicators) {
      out << ' ';
      put(d);
    }
    out << "\n";
  }
  return std::move(out).str();
}

}  // namespace hgnn::data
