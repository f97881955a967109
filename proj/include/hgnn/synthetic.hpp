#pragma once

// Synthetic market generator with a plantable industry-relational signal.
//
// Daily log-returns follow a factor model
//   r_{s,t} = beta_m * m_t + beta_i * f_{k(s),t} + eps_{s,t} - kappa * (ln p_{s,t-1} - ln p_{s,0})
// with AR(1) market and industry factors. A stock touches the curb when its
// candidate close reaches the limit price; conditional on touching, the
// probability of sealing (Type I) rises with the same-day industry factor
// and with the mean same-day return of industry peers. Windows only expose
// days before the event, so models recover the signal through factor
// persistence: yesterday's peer returns reveal f_{k,t-1}, which predicts
// f_{k,t}. That is what makes the relation view's contribution measurable.
//
// Event days get a minute-level path (bridge up to the touch, then pinned
// at the curb or falling back); the daily bar is derived from that path so
// the two resolutions always agree. Non-event days carry no minute data.
// The pre-touch path depends only on label-independent draws, so the curb
// indicators cannot leak the outcome.
//
// All prices are quantized to the tick. Non-event highs stay at least one
// tick under the curb and pre-touch minute bars three ticks under, so
// half-tick comparisons classify every bar unambiguously after the decimal
// round-trip through CSV.

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "hgnn/data.hpp"
#include "hgnn/errors.hpp"
#include "hgnn/rng.hpp"

namespace hgnn::synth {

struct GenConfig {
  int n_stocks = 200;
  int n_industries = 20;
  int n_days = 500;
  double limit_rate = 0.10;
  double tick = 0.01;
  int minutes_per_day = 240;
  std::uint64_t seed = 42;

  double p0_min = 8.0;   // initial prices; a narrow band keeps the
  double p0_max = 12.0;  // cross-sectional level spread from drowning moves

  double sigma_market = 0.010;
  double rho_market = 0.5;
  double sigma_industry = 0.028;
  double rho_industry = 0.90;
  double sigma_idio = 0.045;
  double mean_revert = 0.03;

  // Seal probability: sigmoid(gain_industry * f/sigma_f
  //                           + gain_peer * peer_mean/sigma_f + bias).
  double seal_gain_industry = 2.2;
  double seal_gain_peer = 1.4;
  double seal_bias = -4.0;

  double turnover_base = 0.015;  // mean daily volume / float_shares

  void validate() const {
    if (n_stocks < 2) throw ConfigError("n_stocks must be >= 2");
    if (n_industries < 1) throw ConfigError("n_industries must be >= 1");
    if (n_stocks / n_industries < 2)
      throw ConfigError("need >= 2 stocks per industry, got " +
                        std::to_string(n_stocks) + " stocks / " +
                        std::to_string(n_industries) + " industries");
    if (n_days < 2) throw ConfigError("n_days must be >= 2");
    if (!(limit_rate > 0 && limit_rate <= 0.2))
      throw ConfigError("limit_rate must be in (0, 0.2]");
    if (tick <= 0) throw ConfigError("tick must be positive");
    if (minutes_per_day < 60) throw ConfigError("minutes_per_day must be >= 60");
    if (!(p0_min > 0 && p0_max >= p0_min)) throw ConfigError("bad p0 range");
    if (sigma_idio <= 0 || sigma_industry <= 0 || sigma_market < 0)
      throw ConfigError("volatilities must be positive");
    if (std::abs(rho_industry) >= 1 || std::abs(rho_market) >= 1)
      throw ConfigError("AR(1) coefficients must lie in (-1, 1)");
    if (turnover_base <= 0) throw ConfigError("turnover_base must be positive");
  }
};

struct GenSummary {
  long stock_days = 0;
  long touch_events = 0;
  long sealed_events = 0;
  long event_days = 0;

  double event_rate() const {
    return stock_days ? static_cast<double>(touch_events) / static_cast<double>(stock_days) : 0.0;
  }
  double seal_rate() const {
    return touch_events ? static_cast<double>(sealed_events) / static_cast<double>(touch_events) : 0.0;
  }
};

struct GenOutput {
  std::vector<data::DailyBar> daily;
  std::vector<data::MinuteBar> minute;
  std::map<std::string, std::string> industry_of;
  GenSummary summary;
  // Realized industry factor per [day][industry]; not part of the corpus,
  // kept so tests can condition on the true planted variable.
  std::vector<std::vector<double>> factor_series;
};

namespace detail {

inline std::string stock_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%04d", i);
  return buf;
}

inline std::string industry_name(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "IND%02d", k);
  return buf;
}

// Brownian bridge in log space from `from` to `to` over n steps (returns
// n prices, last one exactly `to`).
inline std::vector<double> log_bridge(double from, double to, int n, double step_sd,
                                      Rng& rng) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = to;
    return out;
  }
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    acc += rng.normal() * step_sd;
    w[i] = acc;
  }
  const double lf = std::log(from), lt = std::log(to);
  for (int i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i + 1) / static_cast<double>(n);
    const double bridge = w[i] - frac * w[n - 1];
    out[i] = std::exp(lf + frac * (lt - lf) + bridge);
  }
  out[n - 1] = to;
  return out;
}

}  // namespace detail

inline GenOutput generate(const GenConfig& cfg) {
  cfg.validate();
  using data::round_to_tick;

  GenOutput out;
  const int n = cfg.n_stocks;
  const double tick = cfg.tick;
  const double half = tick / 2.0;
  const int M = cfg.minutes_per_day;

  std::vector<std::string> names(static_cast<std::size_t>(n));
  std::vector<int> industry_idx(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> members(static_cast<std::size_t>(cfg.n_industries));
  for (int s = 0; s < n; ++s) {
    names[s] = detail::stock_name(s);
    industry_idx[s] = s % cfg.n_industries;
    members[industry_idx[s]].push_back(s);
    out.industry_of[names[s]] = detail::industry_name(industry_idx[s]);
  }

  // Independent streams: one per stock, one per factor. Per-stock draws
  // follow a fixed per-day preamble so each stream is self-contained.
  std::vector<Rng> srng;
  srng.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) srng.emplace_back(mix_seed(cfg.seed, detail::stock_name(s)));
  Rng mrng(mix_seed(cfg.seed, "market"));
  std::vector<Rng> frng;
  frng.reserve(static_cast<std::size_t>(cfg.n_industries));
  for (int k = 0; k < cfg.n_industries; ++k)
    frng.emplace_back(mix_seed(cfg.seed, detail::industry_name(k)));
  Rng urng(mix_seed(cfg.seed, "universe"));

  std::vector<double> p0(static_cast<std::size_t>(n)), prev_close(static_cast<std::size_t>(n));
  std::vector<double> float_shares(static_cast<std::size_t>(n));
  std::vector<double> turnover_mean(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    p0[s] = round_to_tick(urng.uniform(cfg.p0_min, cfg.p0_max), tick);
    prev_close[s] = p0[s];
    float_shares[s] = 1000.0 * static_cast<double>(urng.uniform_int(50'000, 500'000));
    turnover_mean[s] = cfg.turnover_base * std::exp(urng.normal() * 0.3);
  }

  double m_t = 0;
  std::vector<double> f_t(static_cast<std::size_t>(cfg.n_industries), 0.0);
  const double m_innov = cfg.sigma_market * std::sqrt(1.0 - cfg.rho_market * cfg.rho_market);
  const double f_innov =
      cfg.sigma_industry * std::sqrt(1.0 - cfg.rho_industry * cfg.rho_industry);

  std::vector<double> r_raw(static_cast<std::size_t>(n));
  std::vector<double> open_noise(static_cast<std::size_t>(n));
  std::vector<double> wick_hi(static_cast<std::size_t>(n)), wick_lo(static_cast<std::size_t>(n));
  std::vector<double> vol_noise(static_cast<std::size_t>(n));

  for (int day = 0; day < cfg.n_days; ++day) {
    m_t = cfg.rho_market * m_t + m_innov * mrng.normal();
    for (int k = 0; k < cfg.n_industries; ++k)
      f_t[k] = cfg.rho_industry * f_t[k] + f_innov * frng[k].normal();
    out.factor_series.push_back(f_t);

    // pass 1: returns (fixed five-draw preamble per stock per day)
    for (int s = 0; s < n; ++s) {
      const double eps = srng[s].normal() * cfg.sigma_idio;
      open_noise[s] = srng[s].normal() * 0.004;
      wick_hi[s] = std::abs(srng[s].normal()) * 0.004;
      wick_lo[s] = std::abs(srng[s].normal()) * 0.004;
      vol_noise[s] = srng[s].normal() * 0.4;
      r_raw[s] = m_t + f_t[industry_idx[s]] + eps -
                 cfg.mean_revert * (std::log(prev_close[s]) - std::log(p0[s]));
    }

    std::vector<double> ind_sum(static_cast<std::size_t>(cfg.n_industries), 0.0);
    for (int s = 0; s < n; ++s) ind_sum[industry_idx[s]] += r_raw[s];

    // pass 2: bars, events, labels
    bool day_has_event = false;
    for (int s = 0; s < n; ++s) {
      const std::string& sid = names[s];
      const double prev = prev_close[s];
      const double curb = data::curb_price_for(prev, cfg.limit_rate, tick);
      const double curb_m1 = round_to_tick(curb - tick, tick);
      const double curb_m3 = round_to_tick(curb - 3.0 * tick, tick);
      const double floor_px = round_to_tick(prev * (1.0 - cfg.limit_rate), tick);
      const double p_cand = prev * std::exp(r_raw[s]);
      const bool touch = day != 0 && p_cand >= curb - half;
      ++out.summary.stock_days;

      data::DailyBar bar;
      bar.stock_id = sid;
      bar.day = day;
      bar.float_shares = float_shares[s];

      if (!touch) {
        double open = round_to_tick(prev * std::exp(open_noise[s]), tick);
        open = std::clamp(open, floor_px, curb_m1);
        double close = round_to_tick(std::min(p_cand, prev * (1.0 + cfg.limit_rate)), tick);
        close = std::clamp(close, floor_px, curb_m1);
        const double hi_raw = std::max(open, close) * std::exp(wick_hi[s]);
        const double lo_raw = std::min(open, close) * std::exp(-wick_lo[s]);
        double high = std::min(round_to_tick(hi_raw, tick), curb_m1);
        double low = std::max(round_to_tick(lo_raw, tick), round_to_tick(floor_px * 0.99, tick));
        high = std::max(high, std::max(open, close));
        low = std::min(low, std::min(open, close));
        bar.open = open;
        bar.high = high;
        bar.low = low;
        bar.close = close;
        const double move_boost = 1.0 + 4.0 * std::abs(r_raw[s]);
        bar.volume = std::max(
            1.0, std::floor(float_shares[s] * turnover_mean[s] * move_boost *
                            std::exp(vol_noise[s])));
        out.daily.push_back(bar);
        prev_close[s] = close;
        continue;
      }

      // conditional seal probability from the planted relational signal
      const auto& peers = members[industry_idx[s]];
      const double peer_mean =
          (ind_sum[industry_idx[s]] - r_raw[s]) / static_cast<double>(peers.size() - 1);
      const double z_f = f_t[industry_idx[s]] / cfg.sigma_industry;
      const double z_p = peer_mean / cfg.sigma_industry;
      const double p_seal = 1.0 / (1.0 + std::exp(-(cfg.seal_gain_industry * z_f +
                                                    cfg.seal_gain_peer * z_p +
                                                    cfg.seal_bias)));

      // event-day draws, still from this stock's own stream
      const int tau = static_cast<int>(srng[s].uniform_int(8, M - 30));
      const bool sealed = srng[s].bernoulli(p_seal);
      const double pullback = srng[s].uniform(0.005, 0.035);

      double open = round_to_tick(prev * std::exp(open_noise[s]), tick);
      const double open_cap =
          std::max(floor_px, std::min(round_to_tick(curb * 0.98, tick), curb_m3));
      open = std::clamp(open, floor_px, open_cap);
      double close;
      if (sealed) {
        close = curb;
      } else {
        close = round_to_tick(curb * (1.0 - pullback), tick);
        close = std::min(close, curb_m3);
        close = std::max(close, floor_px);
      }

      // minute path: bridge up to the touch, then pinned or falling
      const double pre_target = std::clamp(round_to_tick(curb * 0.996, tick),
                                           round_to_tick(open * 0.9, tick), curb_m3);
      std::vector<double> closes(static_cast<std::size_t>(M), curb);
      {
        auto up = detail::log_bridge(open, pre_target, tau, 0.002, srng[s]);
        for (int i = 0; i < tau; ++i)
          closes[i] = std::clamp(round_to_tick(up[i], tick),
                                 round_to_tick(open * 0.9, tick), curb_m3);
        closes[tau] = curb;  // the touch minute closes at the curb either way
        if (!sealed) {
          const int rest = M - tau - 1;
          auto down = detail::log_bridge(curb, close, rest, 0.002, srng[s]);
          for (int i = 0; i < rest; ++i)
            closes[tau + 1 + i] =
                std::clamp(round_to_tick(down[i], tick), floor_px, curb);
          closes[M - 1] = close;
        }
      }

      const double day_turn = turnover_mean[s] * (1.0 + 4.0 * cfg.limit_rate) *
                              std::exp(vol_noise[s]);
      const double vol_target = std::max(static_cast<double>(M),
                                         std::floor(float_shares[s] * day_turn));

      double vol_sum = 0, low_day = open, high_day = open;
      double prev_min_close = open;
      for (int i = 0; i < M; ++i) {
        data::MinuteBar mb;
        mb.stock_id = sid;
        mb.day = day;
        mb.minute = i;
        mb.open = prev_min_close;
        mb.close = closes[i];
        const double cap = i < tau ? curb_m3 : curb;
        const double wick = std::abs(srng[s].normal()) * 0.0008;
        double mh = round_to_tick(std::max(mb.open, mb.close) * std::exp(wick), tick);
        mh = std::min(mh, cap);
        mh = std::max(mh, std::max(mb.open, mb.close));
        double ml = round_to_tick(std::min(mb.open, mb.close) * std::exp(-wick), tick);
        ml = std::min(ml, std::min(mb.open, mb.close));
        if (i == tau) mh = curb;  // first touch happens here by construction
        if (sealed && i > tau) mh = ml = curb;
        mb.high = mh;
        mb.low = ml;

        const double near_touch = std::exp(-std::abs(i - tau) / 12.0);
        const double w = (0.5 + 3.0 * near_touch) * std::exp(srng[s].normal() * 0.5);
        const double pinned_damp = (sealed && i > tau) ? 0.1 : 1.0;
        mb.volume = std::max(1.0, std::floor(vol_target / M * w * pinned_damp));

        vol_sum += mb.volume;
        low_day = std::min(low_day, ml);
        high_day = std::max(high_day, mh);
        prev_min_close = mb.close;
        out.minute.push_back(std::move(mb));
      }

      bar.open = open;
      bar.high = high_day;  // equals curb: minute tau touches it
      bar.low = low_day;
      bar.close = close;
      bar.volume = vol_sum;
      out.daily.push_back(bar);
      prev_close[s] = close;

      ++out.summary.touch_events;
      if (sealed) ++out.summary.sealed_events;
      day_has_event = true;
    }
    if (day_has_event) ++out.summary.event_days;
  }

  if (out.summary.touch_events == 0 && cfg.n_days >= 100)
    throw DataError(
        "synthetic config produced zero curb events; increase sigma_industry or "
        "sigma_idio relative to limit_rate");

  std::sort(out.daily.begin(), out.daily.end(), [](const auto& a, const auto& b) {
    return std::tie(a.stock_id, a.day) < std::tie(b.stock_id, b.day);
  });
  std::sort(out.minute.begin(), out.minute.end(), [](const auto& a, const auto& b) {
    return std::tie(a.stock_id, a.day, a.minute) < std::tie(b.stock_id, b.day, b.minute);
  });
  return out;
}

// ---- CSV emission ----

namespace detail {

inline int tick_decimals(double tick) {
  for (int d = 2; d <= 6; ++d) {
    const double scaled = tick * std::pow(10.0, d);
    if (std::abs(scaled - std::llround(scaled)) < 1e-9) return d;
  }
  return 6;
}

}  // namespace detail

inline std::string daily_csv(const std::vector<data::DailyBar>& bars, double tick) {
  const int d = detail::tick_decimals(tick);
  std::string out = "stock_id,day,open,high,low,close,volume,float_shares\n";
  char buf[160];
  for (const auto& b : bars) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.*f,%.*f,%.*f,%.*f,%.0f,%.0f\n",
                  b.stock_id.c_str(), b.day, d, b.open, d, b.high, d, b.low, d,
                  b.close, b.volume, b.float_shares);
    out += buf;
  }
  return out;
}

inline std::string minute_csv(const std::vector<data::MinuteBar>& bars, double tick) {
  const int d = detail::tick_decimals(tick);
  std::string out = "stock_id,day,minute,open,high,low,close,volume\n";
  char buf[160];
  for (const auto& b : bars) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.*f,%.*f,%.*f,%.*f,%.0f\n",
                  b.stock_id.c_str(), b.day, b.minute, d, b.open, d, b.high, d,
                  b.low, d, b.close, b.volume);
    out += buf;
  }
  return out;
}

inline std::string industry_csv(const std::map<std::string, std::string>& industry_of) {
  std::string out = "stock_id,industry\n";
  for (const auto& [sid, ind] : industry_of) out += sid + "," + ind + "\n";
  return out;
}

}  // namespace hgnn::synth
