#include "csense/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>

namespace csense::analysis {

namespace {

bool glob_match(std::string_view pat, std::string_view s) {
  std::size_t p = 0, i = 0, star = std::string_view::npos, mark = 0;
  while (i < s.size()) {
    if (p < pat.size() && (pat[p] == '?' || pat[p] == s[i])) {
      ++p;
      ++i;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = i;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      i = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

Window window_for(const ReplayLog& log, const std::optional<Window>& w) {
  return w.value_or(second_half(session_duration(log)));
}

/// Median of the pooled values of the selected groups.
stats::BootstrapCI grouped_median(const std::vector<std::vector<double>>& groups, std::size_t resamples,
                                  std::uint64_t seed) {
  std::vector<double> pool;
  return stats::bootstrap(
      groups.size(),
      [&](std::span<const std::size_t> idx) {
        pool.clear();
        for (auto g : idx) pool.insert(pool.end(), groups[g].begin(), groups[g].end());
        if (pool.empty()) return std::numeric_limits<double>::quiet_NaN();
        return stats::median(pool);
      },
      resamples, seed);
}

/// Drops units without data so resampled medians stay defined.
std::vector<std::vector<double>> nonempty(std::vector<std::vector<double>> groups) {
  std::erase_if(groups, [](const std::vector<double>& g) { return g.empty(); });
  return groups;
}

std::string f6(double v) { return fmt::format("{:.6f}", v); }
std::string fopt(const std::optional<double>& v) { return v ? f6(*v) : "NA"; }

}  // namespace

std::vector<GroupLog> as_groups(std::span<const ReplayLog> logs) {
  std::vector<GroupLog> out;
  for (std::size_t i = 0; i < logs.size(); ++i) out.push_back({std::to_string(i), &logs[i]});
  return out;
}

std::size_t group_size(const ReplayLog& log) {
  const auto& seats = log.header.config.at("seats");
  return static_cast<std::size_t>(std::count_if(
      seats.begin(), seats.end(), [](const nlohmann::json& s) { return !s.value("ghost", false); }));
}

std::size_t session_duration(const ReplayLog& log) {
  return log.header.config.value("duration", static_cast<std::size_t>(log.ticks.size()));
}

std::string condition_of(const ReplayLog& log) {
  const auto& c = log.header.config;
  if (c.contains("scenario")) return "scenario";
  const auto& f = c.at("field");
  const std::string kind = f.at("kind").get<std::string>();
  if (kind == "noisy-blend") return fmt::format("{}:{:g}", kind, f.value("noise_weight", 0.0));
  return kind;
}

Window parse_window(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw AnalysisError(fmt::format("window '{}' is not begin:end", s));
  try {
    return {std::stoul(s.substr(0, colon)), std::stoul(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw AnalysisError(fmt::format("window '{}' is not begin:end", s));
  }
}

// Performance -----------------------------------------------------------------

PerformanceReport mean_performance(std::span<const GroupLog> logs, std::optional<Window> window,
                                   std::size_t resamples, std::uint64_t seed) {
  PerformanceReport rep;
  // (condition, size) -> group means
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> by_size;
  for (const auto& g : logs) {
    const ReplayLog& log = *g.log;
    const Window w = window_for(log, window);
    if (w.length() == 0) throw AnalysisError(fmt::format("empty analysis window for group {}", g.group));
    std::map<int, std::pair<double, std::size_t>> acc;
    for (const auto& rec : log.ticks) {
      if (!w.contains(rec.t)) continue;
      for (const auto& a : rec.agents) {
        auto& [sum, n] = acc[a.id];
        sum += a.wall ? 0.0 : a.r;
        ++n;
      }
    }
    if (acc.empty()) throw AnalysisError(fmt::format("no agent ticks inside the window for group {}", g.group));
    const std::size_t size = group_size(log);
    const std::string cond = condition_of(log);
    double total = 0.0;
    for (const auto& [id, sn] : acc) {
      const double m = sn.first / static_cast<double>(sn.second);
      rep.rows.push_back({g.group, size, cond, id, w, m});
      total += m;
    }
    by_size[{cond, size}].push_back(total / static_cast<double>(acc.size()));
  }
  std::size_t k = 0;
  for (const auto& [key, means] : by_size) {
    SizeSummary s;
    s.condition = key.first;
    s.size = key.second;
    s.groups = means.size();
    s.ci = stats::bootstrap_mean(means, resamples, derive_seed(seed, {k++}));
    rep.sizes.push_back(s);
  }
  return rep;
}

// Speed by reward -------------------------------------------------------------

SpeedReport speed_by_reward(std::span<const GroupLog> logs, std::optional<Window> window, std::size_t resamples,
                            std::uint64_t seed) {
  SpeedReport rep;
  std::vector<double> rew;
  std::vector<double> unrew;
  for (const auto& g : logs) {
    const ReplayLog& log = *g.log;
    const Window w = window.value_or(Window{0, std::numeric_limits<std::size_t>::max()});
    struct Acc {
      double sr = 0, su = 0;
      std::size_t nr = 0, nu = 0;
    };
    std::map<int, Acc> acc;
    for (const auto& rec : log.ticks) {
      if (!w.contains(rec.t)) continue;
      for (const auto& a : rec.agents) {
        auto& x = acc[a.id];
        if (a.wall) {
          ++rep.wall_ticks_excluded;
          continue;
        }
        const double step = a.speed * kTickSeconds;
        if (a.r > 0.0) {
          x.sr += step;
          ++x.nr;
        } else {
          x.su += step;
          ++x.nu;
        }
      }
    }
    for (const auto& [id, x] : acc) {
      SpeedRow row;
      row.group = g.group;
      row.agent = id;
      row.rewarded_ticks = x.nr;
      row.unrewarded_ticks = x.nu;
      if (x.nr) row.rewarded = x.sr / static_cast<double>(x.nr);
      if (x.nu) row.unrewarded = x.su / static_cast<double>(x.nu);
      if (row.rewarded && row.unrewarded) {
        ++rep.paired;
        rew.push_back(*row.rewarded);
        unrew.push_back(*row.unrewarded);
      } else if (!row.rewarded) {
        ++rep.never_rewarded;
      }
      rep.rows.push_back(std::move(row));
    }
  }
  if (rep.paired > 0) {
    rep.rewarded_mean = stats::mean(rew);
    rep.unrewarded_mean = stats::mean(unrew);
    if (rep.unrewarded_mean > 0.0) rep.ratio = rep.rewarded_mean / rep.unrewarded_mean;
    rep.rewarded_ci = stats::bootstrap_mean(rew, resamples, derive_seed(seed, {0}));
    rep.unrewarded_ci = stats::bootstrap_mean(unrew, resamples, derive_seed(seed, {1}));
  }
  return rep;
}

// Click proximity -------------------------------------------------------------

ProximityReport click_proximity(std::span<const GroupLog> logs) {
  ProximityReport rep;
  for (const auto& g : logs) {
    const ReplayLog& log = *g.log;
    const auto& cfg = log.header.config;
    bool social = group_size(log) > 1;
    if (cfg.contains("scenario")) social = cfg.at("scenario").at("script").value("social", social);
    // Scripted bots click too; only the other seats are measured.
    std::vector<bool> scripted;
    for (const auto& s : cfg.at("seats")) scripted.push_back(s.value("strategy", std::string{}).starts_with("bot-"));
    std::string condition = "baseline";
    for (std::size_t i = 0; i < log.ticks.size(); ++i) {
      const auto& rec = log.ticks[i];
      for (const auto& e : rec.events)
        if (e.kind == EventKind::intervention) condition = e.phase == "on" ? e.label : "baseline";
      // Clicks happen at the start of the tick, against the previous poses.
      const TickRecord& seen = log.ticks[i > 0 ? i - 1 : 0];
      for (const auto& e : rec.events) {
        if (e.kind != EventKind::click) continue;
        if (e.agent >= 0 && static_cast<std::size_t>(e.agent) < scripted.size() && scripted[e.agent]) continue;
        ClickRow row;
        row.group = g.group;
        row.social = social;
        row.condition = condition;
        row.agent = e.agent;
        row.t = rec.t;
        row.at = e.at;
        auto measure = [&](const std::vector<AgentRecord>& agents) {
          bool any = false;
          for (const auto& a : agents) {
            if (a.id == e.agent) continue;
            any = true;
            const double d = distance(e.at, {a.x, a.y});
            auto& slot = a.speed == 0.0 ? row.d_exploiting : row.d_other;
            if (!slot || d < *slot) slot = d;
          }
          return any;
        };
        if (!measure(seen.agents)) {
          row.ghosts = measure(seen.ghosts);
          if (!row.ghosts) {
            ++rep.skipped;
            continue;
          }
        }
        rep.rows.push_back(std::move(row));
      }
    }
  }
  return rep;
}

std::vector<ProximitySummary> summarize_proximity(const ProximityReport& report, std::size_t resamples,
                                                  std::uint64_t seed) {
  std::map<std::pair<bool, std::string>, std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>>
      cells;
  for (const auto& r : report.rows) {
    auto& [ex, ot] = cells[{r.social, r.condition}][r.group];
    // Only clicks with both kinds of agent on screen are comparable.
    if (!r.d_exploiting || !r.d_other) continue;
    ex.push_back(*r.d_exploiting);
    ot.push_back(*r.d_other);
  }
  std::vector<ProximitySummary> out;
  std::uint64_t k = 0;
  for (const auto& [key, groups] : cells) {
    ProximitySummary s;
    s.social = key.first;
    s.condition = key.second;
    std::vector<std::vector<double>> ex;
    std::vector<std::vector<double>> ot;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> both;
    for (const auto& [gid, v] : groups) {
      ex.push_back(v.first);
      ot.push_back(v.second);
      both.push_back(v);
      s.n_exploiting += v.first.size();
      s.n_other += v.second.size();
    }
    for (const auto& r : report.rows)
      if (r.social == s.social && r.condition == s.condition) ++s.clicks;
    const auto ex_g = nonempty(ex);
    const auto ot_g = nonempty(ot);
    if (!ex_g.empty()) s.d_exploiting = grouped_median(ex_g, resamples, derive_seed(seed, {k, 0}));
    if (!ot_g.empty()) s.d_other = grouped_median(ot_g, resamples, derive_seed(seed, {k, 1}));
    if (!ex_g.empty() && !ot_g.empty()) {
      // Paired over groups: the same resampled groups feed both medians.
      std::vector<double> pe;
      std::vector<double> po;
      s.gap = stats::bootstrap(
          both.size(),
          [&](std::span<const std::size_t> idx) {
            pe.clear();
            po.clear();
            for (auto g : idx) {
              pe.insert(pe.end(), both[g].first.begin(), both[g].first.end());
              po.insert(po.end(), both[g].second.begin(), both[g].second.end());
            }
            if (pe.empty() || po.empty()) return 0.0;
            return stats::median(po) - stats::median(pe);
          },
          resamples, derive_seed(seed, {k, 2}));
    }
    ++k;
    out.push_back(std::move(s));
  }
  return out;
}

// State metrics ---------------------------------------------------------------

StateReport state_metrics(std::span<const GroupLog> logs, std::span<const std::vector<LabelRecord>> labels,
                          std::size_t bins, std::size_t resamples, std::uint64_t seed) {
  if (bins == 0) throw AnalysisError("need at least one score bin");
  if (!labels.empty() && labels.size() != logs.size())
    throw AnalysisError("one label set per log required");
  struct Counts {
    std::size_t n[3] = {0, 0, 0};
  };
  std::map<std::string, std::vector<Counts>> counts;
  std::map<std::string, std::map<std::string, std::vector<double>>> targets;  // cond -> group -> r_j

  for (std::size_t li = 0; li < logs.size(); ++li) {
    const ReplayLog& log = *logs[li].log;
    std::vector<LabelRecord> own;
    if (labels.empty()) own = classify_log(log);
    const auto& lab = labels.empty() ? own : labels[li];
    const std::string cond = condition_of(log);
    auto& c = counts[cond];
    c.resize(bins);
    auto& tg = targets[cond][logs[li].group];

    std::map<std::size_t, const TickRecord*> by_t;
    for (const auto& rec : log.ticks) by_t[rec.t] = &rec;
    for (const auto& l : lab) {
      const auto it = by_t.find(l.t);
      if (it == by_t.end()) throw AnalysisError(fmt::format("label at tick {} has no log record", l.t));
      const AgentRecord* self = it->second->agent(l.agent);
      if (!self) throw AnalysisError(fmt::format("label for absent agent {} at tick {}", l.agent, l.t));
      const double r = std::clamp(self->r, 0.0, 1.0);
      const auto b = std::min(bins - 1, static_cast<std::size_t>(r * static_cast<double>(bins)));
      ++c[b].n[static_cast<int>(l.label.state)];
      if (l.label.state == State::copying) {
        if (const AgentRecord* j = it->second->agent(l.label.target)) tg.push_back(j->r);
      }
    }
  }

  StateReport rep;
  for (const auto& [cond, cs] : counts) {
    for (std::size_t b = 0; b < cs.size(); ++b) {
      const std::size_t n = cs[b].n[0] + cs[b].n[1] + cs[b].n[2];
      if (n == 0) continue;
      StateBin sb;
      sb.condition = cond;
      sb.bin = b;
      sb.lo = static_cast<double>(b) / static_cast<double>(bins);
      sb.hi = static_cast<double>(b + 1) / static_cast<double>(bins);
      sb.n = n;
      const auto dn = static_cast<double>(n);
      sb.p_exploring = static_cast<double>(cs[b].n[0]) / dn;
      sb.p_exploiting = static_cast<double>(cs[b].n[1]) / dn;
      sb.p_copying = static_cast<double>(cs[b].n[2]) / dn;
      rep.bins.push_back(sb);
    }
  }
  std::uint64_t k = 0;
  for (const auto& [cond, groups] : targets) {
    CopyTargetSummary s;
    s.condition = cond;
    std::vector<std::vector<double>> g;
    for (const auto& [gid, v] : groups) {
      s.n += v.size();
      if (!v.empty()) g.push_back(v);
    }
    if (!g.empty()) {
      std::size_t total = 0;
      double sum = 0.0;
      for (const auto& v : g)
        for (double x : v) {
          sum += x;
          ++total;
        }
      s.mean_target_r = sum / static_cast<double>(total);
      s.ci = stats::bootstrap(
          g.size(),
          [&](std::span<const std::size_t> idx) {
            double sm = 0.0;
            std::size_t cnt = 0;
            for (auto i : idx) {
              for (double x : g[i]) sm += x;
              cnt += g[i].size();
            }
            return sm / static_cast<double>(cnt);
          },
          resamples, derive_seed(seed, {k}));
    }
    ++k;
    rep.copy_targets.push_back(s);
  }
  return rep;
}

// Output ----------------------------------------------------------------------

std::string performance_tsv(const PerformanceReport& r) {
  std::string out = "group\tsize\tcondition\tagent\twindow_begin\twindow_end\tmean_r\n";
  for (const auto& x : r.rows)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", x.group, x.size, x.condition, x.agent, x.window.begin,
                       x.window.end, f6(x.mean_r));
  return out;
}

std::string performance_summary_tsv(const PerformanceReport& r) {
  std::string out = "condition\tsize\tgroups\tmean\tci_lo\tci_hi\tresamples\n";
  for (const auto& s : r.sizes)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", s.condition, s.size, s.groups, f6(s.ci.estimate),
                       f6(s.ci.lo), f6(s.ci.hi), s.ci.resamples);
  return out;
}

std::string speed_tsv(const SpeedReport& r) {
  std::string out = "group\tagent\trewarded_ticks\tunrewarded_ticks\trewarded_px_per_tick\tunrewarded_px_per_tick\n";
  for (const auto& x : r.rows)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", x.group, x.agent, x.rewarded_ticks, x.unrewarded_ticks,
                       fopt(x.rewarded), fopt(x.unrewarded));
  out += fmt::format("# paired={} never_rewarded={} wall_ticks_excluded={} rewarded_mean={} unrewarded_mean={} ratio={}\n",
                     r.paired, r.never_rewarded, r.wall_ticks_excluded, f6(r.rewarded_mean), f6(r.unrewarded_mean),
                     r.ratio ? f6(*r.ratio) : std::string("undefined"));
  return out;
}

std::string proximity_tsv(const ProximityReport& r) {
  std::string out = "group\tsocial\tcondition\tagent\tt\tx\ty\tghosts\td_exploiting\td_other\n";
  for (const auto& x : r.rows)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{:.3f}\t{:.3f}\t{}\t{}\t{}\n", x.group, x.social ? 1 : 0, x.condition,
                       x.agent, x.t, x.at.x, x.at.y, x.ghosts ? 1 : 0, fopt(x.d_exploiting), fopt(x.d_other));
  out += fmt::format("# skipped={}\n", r.skipped);
  return out;
}

std::string proximity_summary_tsv(std::span<const ProximitySummary> s) {
  std::string out =
      "social\tcondition\tclicks\tn_exploiting\tmedian_d_exploiting\tci_lo\tci_hi\tn_other\tmedian_d_other\tci_lo\t"
      "ci_hi\tgap\tgap_lo\tgap_hi\n";
  for (const auto& x : s)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", x.social ? 1 : 0, x.condition,
                       x.clicks, x.n_exploiting, f6(x.d_exploiting.estimate), f6(x.d_exploiting.lo),
                       f6(x.d_exploiting.hi), x.n_other, f6(x.d_other.estimate), f6(x.d_other.lo), f6(x.d_other.hi),
                       f6(x.gap.estimate), f6(x.gap.lo), f6(x.gap.hi));
  return out;
}

std::string states_tsv(const StateReport& r) {
  std::string out = "condition\tbin\tlo\thi\tn\tp_exploring\tp_exploiting\tp_copying\n";
  for (const auto& b : r.bins)
    out += fmt::format("{}\t{}\t{:.3f}\t{:.3f}\t{}\t{}\t{}\t{}\n", b.condition, b.bin, b.lo, b.hi, b.n,
                       f6(b.p_exploring), f6(b.p_exploiting), f6(b.p_copying));
  return out;
}

std::string copy_targets_tsv(const StateReport& r) {
  std::string out = "condition\tn\tmean_target_r\tci_lo\tci_hi\n";
  for (const auto& c : r.copy_targets)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", c.condition, c.n, f6(c.mean_target_r), f6(c.ci.lo), f6(c.ci.hi));
  return out;
}

std::vector<PlotPoint> plot_performance(const PerformanceReport& r) {
  std::vector<PlotPoint> out;
  for (const auto& s : r.sizes)
    out.push_back({s.condition, std::to_string(s.size), s.ci.estimate, s.ci.lo, s.ci.hi});
  return out;
}

std::vector<PlotPoint> plot_speed(const SpeedReport& r) {
  return {{"speed", "rewarded", r.rewarded_mean, r.rewarded_ci.lo, r.rewarded_ci.hi},
          {"speed", "unrewarded", r.unrewarded_mean, r.unrewarded_ci.lo, r.unrewarded_ci.hi}};
}

std::vector<PlotPoint> plot_proximity(std::span<const ProximitySummary> s) {
  std::vector<PlotPoint> out;
  for (const auto& x : s) {
    const std::string series = fmt::format("{}:{}", x.social ? "social" : "nonsocial", x.condition);
    out.push_back({series, "exploiting", x.d_exploiting.estimate, x.d_exploiting.lo, x.d_exploiting.hi});
    out.push_back({series, "other", x.d_other.estimate, x.d_other.lo, x.d_other.hi});
  }
  return out;
}

std::vector<PlotPoint> plot_states(const StateReport& r) {
  std::vector<PlotPoint> out;
  for (const auto& b : r.bins) {
    const std::string x = fmt::format("{:.3f}", (b.lo + b.hi) / 2.0);
    out.push_back({b.condition + ":exploring", x, b.p_exploring, b.p_exploring, b.p_exploring});
    out.push_back({b.condition + ":exploiting", x, b.p_exploiting, b.p_exploiting, b.p_exploiting});
    out.push_back({b.condition + ":copying", x, b.p_copying, b.p_copying, b.p_copying});
  }
  for (const auto& c : r.copy_targets)
    out.push_back({"copy_target_r", c.condition, c.mean_target_r, c.ci.lo, c.ci.hi});
  return out;
}

std::string plot_tsv(std::span<const PlotPoint> points) {
  std::string out = "series\tx\ty\tci_lo\tci_hi\n";
  for (const auto& p : points)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", p.series, p.x, f6(p.y), f6(p.ci_lo), f6(p.ci_hi));
  return out;
}

std::vector<std::string> expand_paths(std::span<const std::string> patterns) {
  namespace fs = std::filesystem;
  std::vector<std::string> out;
  for (const auto& pat : patterns) {
    const fs::path p(pat);
    const std::string name = p.filename().string();
    if (name.find_first_of("*?") == std::string::npos) {
      if (fs::is_directory(p)) {
        std::vector<std::string> found;
        for (const auto& e : fs::directory_iterator(p))
          if (e.is_regular_file() && e.path().extension() == ".jsonl") found.push_back(e.path().string());
        std::sort(found.begin(), found.end());
        out.insert(out.end(), found.begin(), found.end());
      } else {
        out.push_back(pat);
      }
      continue;
    }
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    std::vector<std::string> found;
    if (fs::is_directory(dir))
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && glob_match(name, e.path().filename().string())) found.push_back(e.path().string());
    std::sort(found.begin(), found.end());
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

}  // namespace csense::analysis
