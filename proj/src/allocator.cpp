#include "cps/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include "cps/errors.hpp"

namespace cps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCapTol = 1e-9;   // relative slack on power caps
constexpr double kRateTol = 1e-9;  // relative slack on rate floors / delay budgets
constexpr double kReg = 1e-9;      // tie-break weight on unweighted transmit power
constexpr double kThetaTol = 1e-6;

using Mask = std::uint32_t;

enum Dir { kUl = 0, kDl = 1 };

struct Participants {
  std::vector<int> ul;
  std::vector<int> dl;
  const std::vector<int>& of(int dir) const { return dir == kUl ? ul : dl; }
  bool empty() const { return ul.empty() && dl.empty(); }
};

Participants participants_of(const AllocationProblem& p) {
  Participants out;
  for (int i : p.active_plants) {
    out.ul.push_back(i);
    out.dl.push_back(i);
  }
  for (std::size_t j = 0; j < p.users.rc_floor_ul.size(); ++j) {
    if (p.users.rc_floor_ul[j] > 0.0) out.ul.push_back(p.users.rc_ul_index(static_cast<int>(j)));
  }
  for (std::size_t j = 0; j < p.users.rc_floor_dl.size(); ++j) {
    if (p.users.rc_floor_dl[j] > 0.0) out.dl.push_back(p.users.rc_dl_index(static_cast<int>(j)));
  }
  return out;
}

bool is_plant(const AllocationProblem& p, int user) { return user < p.users.plants; }

double rc_target(const AllocationProblem& p, int dir, int user) {
  const int j = user - p.users.plants;
  const auto& floors = dir == kUl ? p.users.rc_floor_ul : p.users.rc_floor_dl;
  return 2.0 * floors[static_cast<std::size_t>(j)];
}

const Mat& gains_of(const AllocationProblem& p, int dir) {
  return dir == kUl ? p.channel.gains_ul : p.channel.gains_dl;
}

double weight_of(const AllocationProblem& p, int dir) {
  return dir == kUl ? p.weight_a : 1.0 - p.weight_a;
}

double cap_of(const AllocationProblem& p, int dir) {
  return dir == kUl ? p.channel.p_max_user : p.channel.p_max_bs;
}

std::vector<double> masked_gains(const Mat& g, int user, Mask mask) {
  std::vector<double> out;
  for (Eigen::Index l = 0; l < g.cols(); ++l) {
    if (mask & (Mask{1} << l)) out.push_back(g(user, l));
  }
  return out;
}

Mask mask_of(const std::vector<int>& owner, int user) {
  Mask m = 0;
  for (std::size_t l = 0; l < owner.size(); ++l) {
    if (owner[l] == user) m |= Mask{1} << l;
  }
  return m;
}

const std::vector<int>& owners(const Assignment& a, int dir) {
  return dir == kUl ? a.ul_owner : a.dl_owner;
}
std::vector<int>& owners(Assignment& a, int dir) { return dir == kUl ? a.ul_owner : a.dl_owner; }

// Golden-section split over precomputed gains.
DelaySplit split_core(std::span<const double> gu, std::span<const double> gd, double budget,
                      double payload, double a, const ChannelState& ch, int plant) {
  auto fail = [&](const std::string& why) {
    std::ostringstream msg;
    msg << "C11 plant " << plant << ": " << why;
    return Infeasible(msg.str());
  };
  if (gu.empty() || gd.empty()) throw fail("an RTU has no subcarrier");
  if (!(budget > 0.0)) throw fail("non-positive delay budget");

  DelaySplit out;
  if (payload <= 0.0) {
    out.ul.powers = Vec::Zero(static_cast<Eigen::Index>(gu.size()));
    out.dl.powers = Vec::Zero(static_cast<Eigen::Index>(gd.size()));
    return out;
  }
  const double ru_max = max_rate_at_power(gu, ch.w, ch.n0, ch.p_max_user * (1.0 + kCapTol));
  const double rd_max = max_rate_at_power(gd, ch.w, ch.n0, ch.p_max_bs * (1.0 + kCapTol));
  const double lo = 2.0 * payload / (budget * ru_max);
  const double hi = 1.0 - 2.0 * payload / (budget * rd_max);
  if (!(lo <= hi + 1e-12)) throw fail("delay budget unreachable at the power caps");

  auto eval = [&](double theta, DelaySplit* dst) -> double {
    const double ru = 2.0 * payload / (theta * budget);
    const double rd = 2.0 * payload / ((1.0 - theta) * budget);
    WaterfillResult wu, wd;
    try {
      wu = waterfill_min_power(gu, ru, ch.w, ch.n0, ch.p_max_user);
      wd = waterfill_min_power(gd, rd, ch.w, ch.n0, ch.p_max_bs);
    } catch (const Infeasible&) {
      return kInf;
    }
    const double pu = wu.powers.sum();
    const double pd = wd.powers.sum();
    if (dst) {
      dst->theta = theta;
      dst->rate_ul_target = ru;
      dst->rate_dl_target = rd;
      dst->ul = std::move(wu);
      dst->dl = std::move(wd);
    }
    return a * pu + (1.0 - a) * pd + kReg * (pu + pd);
  };

  double best_theta = 0.5 * (lo + hi);
  if (hi - lo > kThetaTol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x_lo = lo, x_hi = hi;
    double x1 = x_hi - inv_phi * (x_hi - x_lo);
    double x2 = x_lo + inv_phi * (x_hi - x_lo);
    double f1 = eval(x1, nullptr);
    double f2 = eval(x2, nullptr);
    while (x_hi - x_lo > kThetaTol) {
      if (f1 <= f2) {
        x_hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = x_hi - inv_phi * (x_hi - x_lo);
        f1 = eval(x1, nullptr);
      } else {
        x_lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = x_lo + inv_phi * (x_hi - x_lo);
        f2 = eval(x2, nullptr);
      }
    }
    best_theta = f1 <= f2 ? x1 : x2;
  }
  if (!std::isfinite(eval(best_theta, &out))) throw fail("no feasible split found");
  return out;
}

struct CostEntry {
  double exact = kInf;  // weighted transmit power
  double key = kInf;    // exact + tie-break term
  double ul = 0.0;
  double dl = 0.0;
  bool feasible = false;
};

// Per-user minimum weighted transmit power as a function of the owned
// subcarrier set. Independent across users except for the shared BS cap.
class CostModel {
 public:
  explicit CostModel(const AllocationProblem& p) : p_(p) {}

  const CostEntry& rc(int dir, int user, Mask mask) {
    auto& table = dir == kUl ? rc_ul_ : rc_dl_;
    const std::uint64_t key = (static_cast<std::uint64_t>(user) << 32) | mask;
    auto it = table.find(key);
    if (it != table.end()) return it->second;
    CostEntry e;
    const auto g = masked_gains(gains_of(p_, dir), user, mask);
    try {
      const auto wf = waterfill_min_power(g, rc_target(p_, dir, user), p_.channel.w, p_.channel.n0,
                                          cap_of(p_, dir));
      const double sum = wf.powers.sum();
      e.exact = weight_of(p_, dir) * sum;
      e.key = e.exact + kReg * sum;
      (dir == kUl ? e.ul : e.dl) = sum;
      e.feasible = true;
    } catch (const Infeasible&) {
    }
    return table.emplace(key, e).first->second;
  }

  const CostEntry& plant(int plant, Mask mu, Mask md) {
    const std::uint64_t key = (static_cast<std::uint64_t>(md) << 32) | mu;
    auto& table = plants_[plant];
    auto it = table.find(key);
    if (it != table.end()) return it->second;
    CostEntry e;
    const auto gu = masked_gains(p_.channel.gains_ul, plant, mu);
    const auto gd = masked_gains(p_.channel.gains_dl, plant, md);
    try {
      const auto s = split_core(gu, gd, p_.delay_budget[static_cast<std::size_t>(plant)],
                                p_.payload_bits, p_.weight_a, p_.channel, plant);
      e.ul = s.ul.powers.sum();
      e.dl = s.dl.powers.sum();
      e.exact = p_.weight_a * e.ul + (1.0 - p_.weight_a) * e.dl;
      e.key = e.exact + kReg * (e.ul + e.dl);
      e.feasible = true;
    } catch (const Infeasible&) {
    }
    return table.emplace(key, e).first->second;
  }

 private:
  const AllocationProblem& p_;
  std::unordered_map<std::uint64_t, CostEntry> rc_ul_;
  std::unordered_map<std::uint64_t, CostEntry> rc_dl_;
  std::unordered_map<int, std::unordered_map<std::uint64_t, CostEntry>> plants_;
};

struct Eval {
  double exact = kInf;
  double key = kInf;
  bool feasible = false;
};

double constant_terms(const AllocationProblem& p) {
  return p.weight_a * uplink_circuit_power(p) + (1.0 - p.weight_a) * p.channel.p_cst_bs;
}

// Sums per-user costs for the given per-user masks.
template <typename MaskFn>
Eval evaluate_masks(const AllocationProblem& p, CostModel& cm, const Participants& parts,
                    MaskFn&& mask) {
  Eval ev;
  double exact = 0.0, key = 0.0, dl = 0.0;
  for (int u : parts.ul) {
    const CostEntry& e =
        is_plant(p, u) ? cm.plant(u, mask(kUl, u), mask(kDl, u)) : cm.rc(kUl, u, mask(kUl, u));
    if (!e.feasible) return ev;
    exact += e.exact;
    key += e.key;
    dl += e.dl;
  }
  for (int u : parts.dl) {
    if (is_plant(p, u)) continue;
    const CostEntry& e = cm.rc(kDl, u, mask(kDl, u));
    if (!e.feasible) return ev;
    exact += e.exact;
    key += e.key;
    dl += e.dl;
  }
  ev.feasible = dl <= p.channel.p_max_bs * (1.0 + kCapTol);
  ev.exact = exact + constant_terms(p);
  ev.key = key + constant_terms(p);
  return ev;
}

Eval evaluate(const AllocationProblem& p, CostModel& cm, const Participants& parts,
              const Assignment& a) {
  return evaluate_masks(p, cm, parts,
                        [&](int dir, int u) { return mask_of(owners(a, dir), u); });
}

// --- assignment at fixed powers -------------------------------------------

struct FixedEval {
  const AllocationProblem& p;
  const FixedPowers& fixed;
  const Participants& parts;
  Mat rate_ul;  // per (user, subcarrier) rate at the fixed power
  Mat rate_dl;

  FixedEval(const AllocationProblem& prob, const FixedPowers& f, const Participants& pa)
      : p(prob), fixed(f), parts(pa) {
    rate_ul = Mat::Zero(f.ul.rows(), f.ul.cols());
    rate_dl = Mat::Zero(f.dl.rows(), f.dl.cols());
    for (Eigen::Index m = 0; m < f.ul.rows(); ++m) {
      for (Eigen::Index l = 0; l < f.ul.cols(); ++l) {
        rate_ul(m, l) = subcarrier_rate(f.ul(m, l), p.channel.gains_ul(m, l), p.channel.w, p.channel.n0);
      }
    }
    for (Eigen::Index n = 0; n < f.dl.rows(); ++n) {
      for (Eigen::Index l = 0; l < f.dl.cols(); ++l) {
        rate_dl(n, l) = subcarrier_rate(f.dl(n, l), p.channel.gains_dl(n, l), p.channel.w, p.channel.n0);
      }
    }
  }

  const Mat& rates(int dir) const { return dir == kUl ? rate_ul : rate_dl; }
  const Mat& powers(int dir) const { return dir == kUl ? fixed.ul : fixed.dl; }

  double operator()(const Assignment& a) const {
    const int m_users = p.users.ul_users();
    const int n_users = p.users.dl_users();
    std::vector<double> r_ul(static_cast<std::size_t>(m_users), 0.0), pw_ul(r_ul.size(), 0.0);
    std::vector<double> r_dl(static_cast<std::size_t>(n_users), 0.0), pw_dl(r_dl.size(), 0.0);
    std::vector<bool> part_ul(r_ul.size(), false), part_dl(r_dl.size(), false);
    for (int u : parts.ul) part_ul[static_cast<std::size_t>(u)] = true;
    for (int u : parts.dl) part_dl[static_cast<std::size_t>(u)] = true;

    double ul_sum = 0.0, dl_sum = 0.0;
    for (std::size_t l = 0; l < a.ul_owner.size(); ++l) {
      const int u = a.ul_owner[l];
      if (u < 0) continue;
      if (is_plant(p, u) && !part_ul[static_cast<std::size_t>(u)]) return kInf;  // RTU asleep
      r_ul[static_cast<std::size_t>(u)] += rate_ul(u, static_cast<Eigen::Index>(l));
      pw_ul[static_cast<std::size_t>(u)] += fixed.ul(u, static_cast<Eigen::Index>(l));
    }
    for (std::size_t l = 0; l < a.dl_owner.size(); ++l) {
      const int u = a.dl_owner[l];
      if (u < 0) continue;
      if (is_plant(p, u) && !part_dl[static_cast<std::size_t>(u)]) return kInf;
      r_dl[static_cast<std::size_t>(u)] += rate_dl(u, static_cast<Eigen::Index>(l));
      pw_dl[static_cast<std::size_t>(u)] += fixed.dl(u, static_cast<Eigen::Index>(l));
    }
    for (double v : pw_ul) {
      if (v > p.channel.p_max_user * (1.0 + kCapTol)) return kInf;
      ul_sum += v;
    }
    for (double v : pw_dl) dl_sum += v;
    if (dl_sum > p.channel.p_max_bs * (1.0 + kCapTol)) return kInf;

    for (int u : parts.ul) {
      if (is_plant(p, u)) continue;
      if (r_ul[static_cast<std::size_t>(u)] < rc_target(p, kUl, u) * (1.0 - kRateTol)) return kInf;
    }
    for (int u : parts.dl) {
      if (is_plant(p, u)) continue;
      if (r_dl[static_cast<std::size_t>(u)] < rc_target(p, kDl, u) * (1.0 - kRateTol)) return kInf;
    }
    for (int i : p.active_plants) {
      const double ru = r_ul[static_cast<std::size_t>(i)];
      const double rd = r_dl[static_cast<std::size_t>(i)];
      if (!(ru > 0.0) || !(rd > 0.0)) return kInf;
      const double delay = 2.0 * p.payload_bits / ru + 2.0 * p.payload_bits / rd;
      if (delay > p.delay_budget[static_cast<std::size_t>(i)] * (1.0 + kRateTol)) return kInf;
    }
    return p.weight_a * ul_sum + (1.0 - p.weight_a) * dl_sum + kReg * (ul_sum + dl_sum);
  }
};

double greedy_target(const AllocationProblem& p, int dir, int user) {
  if (is_plant(p, user)) {
    // Equal delay split: each direction gets half the budget.
    return 4.0 * p.payload_bits / p.delay_budget[static_cast<std::size_t>(user)];
  }
  return rc_target(p, dir, user);
}

Assignment greedy_assign(const AllocationProblem& p, const FixedEval& fe) {
  const int L = p.channel.subcarriers();
  Assignment a = Assignment::empty(L);
  std::vector<double> rate_ul(static_cast<std::size_t>(p.users.ul_users()), 0.0);
  std::vector<double> rate_dl(static_cast<std::size_t>(p.users.dl_users()), 0.0);
  std::vector<double> pow_ul(rate_ul.size(), 0.0);
  double pow_bs = 0.0;

  for (;;) {
    double best = 0.0;
    int best_dir = -1, best_user = -1, best_l = -1;
    for (int dir : {kUl, kDl}) {
      auto& rate = dir == kUl ? rate_ul : rate_dl;
      const auto& own = owners(a, dir);
      for (int u : fe.parts.of(dir)) {
        const double target = greedy_target(p, dir, u);
        const double deficit = target - rate[static_cast<std::size_t>(u)];
        if (deficit <= target * kRateTol) continue;
        for (int l = 0; l < L; ++l) {
          if (own[static_cast<std::size_t>(l)] >= 0) continue;
          const double r = fe.rates(dir)(u, l);
          const double pw = fe.powers(dir)(u, l);
          if (!(r > 0.0) || !(pw > 0.0)) continue;
          if (dir == kUl && pow_ul[static_cast<std::size_t>(u)] + pw > p.channel.p_max_user * (1.0 + kCapTol)) continue;
          if (dir == kDl && pow_bs + pw > p.channel.p_max_bs * (1.0 + kCapTol)) continue;
          const double cost = weight_of(p, dir) * pw + kReg * pw;
          const double score = std::min(r, deficit) / target / cost;
          if (score > best * (1.0 + 1e-12)) {
            best = score;
            best_dir = dir;
            best_user = u;
            best_l = l;
          }
        }
      }
    }
    if (best_dir < 0) break;
    owners(a, best_dir)[static_cast<std::size_t>(best_l)] = best_user;
    const double r = fe.rates(best_dir)(best_user, best_l);
    const double pw = fe.powers(best_dir)(best_user, best_l);
    (best_dir == kUl ? rate_ul : rate_dl)[static_cast<std::size_t>(best_user)] += r;
    if (best_dir == kUl) {
      pow_ul[static_cast<std::size_t>(best_user)] += pw;
    } else {
      pow_bs += pw;
    }
  }

  for (int dir : {kUl, kDl}) {
    const auto& rate = dir == kUl ? rate_ul : rate_dl;
    for (int u : fe.parts.of(dir)) {
      const double target = greedy_target(p, dir, u);
      if (rate[static_cast<std::size_t>(u)] < target * (1.0 - kRateTol)) {
        std::ostringstream msg;
        msg << (is_plant(p, u) ? "C11 plant " : (dir == kUl ? "C9 uplink user " : "C10 downlink user "))
            << u << ": rate floor unreachable at the candidate powers";
        throw Infeasible(msg.str());
      }
    }
  }
  return a;
}

// First-improvement move/swap descent on `score`. Moves may leave a
// subcarrier unassigned when `allow_free` is set.
template <typename Score>
double local_search(const AllocationProblem& p, const Participants& parts, Assignment& a,
                    Score&& score, bool allow_free) {
  const int L = p.channel.subcarriers();
  double cur = score(a);
  if (!std::isfinite(cur)) return cur;
  auto better = [&](double s) { return s < cur - 1e-12 * std::abs(cur); };
  for (int pass = 0; pass < 1000; ++pass) {
    bool improved = false;
    for (int dir : {kUl, kDl}) {
      const auto& users = parts.of(dir);
      if (users.empty()) continue;
      auto& own = owners(a, dir);
      for (int l = 0; l < L; ++l) {
        const int original = own[static_cast<std::size_t>(l)];
        std::vector<int> candidates;
        if (allow_free && original >= 0) candidates.push_back(-1);
        for (int v : users) {
          if (v != original) candidates.push_back(v);
        }
        for (int v : candidates) {
          own[static_cast<std::size_t>(l)] = v;
          const double s = score(a);
          if (better(s)) {
            cur = s;
            improved = true;
            break;
          }
          own[static_cast<std::size_t>(l)] = original;
        }
      }
      for (int l1 = 0; l1 < L; ++l1) {
        for (int l2 = l1 + 1; l2 < L; ++l2) {
          const int o1 = own[static_cast<std::size_t>(l1)];
          const int o2 = own[static_cast<std::size_t>(l2)];
          if (o1 == o2 || o1 < 0 || o2 < 0) continue;
          std::swap(own[static_cast<std::size_t>(l1)], own[static_cast<std::size_t>(l2)]);
          const double s = score(a);
          if (better(s)) {
            cur = s;
            improved = true;
          } else {
            std::swap(own[static_cast<std::size_t>(l1)], own[static_cast<std::size_t>(l2)]);
          }
        }
      }
    }
    if (!improved) break;
  }
  return cur;
}

Assignment exhaustive_assign(const AllocationProblem& p, const FixedEval& fe) {
  const int L = p.channel.subcarriers();
  if (L > 8) throw TooLarge("exhaustive assignment: more than 8 subcarriers");
  std::vector<int> opt_ul{-1}, opt_dl{-1};
  opt_ul.insert(opt_ul.end(), fe.parts.ul.begin(), fe.parts.ul.end());
  opt_dl.insert(opt_dl.end(), fe.parts.dl.begin(), fe.parts.dl.end());
  const double combos = std::pow(static_cast<double>(opt_ul.size()), L) *
                        std::pow(static_cast<double>(opt_dl.size()), L);
  if (combos > static_cast<double>(1 << 24)) throw TooLarge("exhaustive assignment: search space too large");

  std::vector<std::size_t> digit(static_cast<std::size_t>(2 * L), 0);
  Assignment a = Assignment::empty(L);
  Assignment best = a;
  double best_s = kInf;
  for (;;) {
    for (int l = 0; l < L; ++l) {
      a.ul_owner[static_cast<std::size_t>(l)] = opt_ul[digit[static_cast<std::size_t>(l)]];
      a.dl_owner[static_cast<std::size_t>(l)] = opt_dl[digit[static_cast<std::size_t>(L + l)]];
    }
    const double s = fe(a);
    if (s < best_s) {
      best_s = s;
      best = a;
    }
    std::size_t pos = 0;
    for (; pos < digit.size(); ++pos) {
      const std::size_t base = pos < static_cast<std::size_t>(L) ? opt_ul.size() : opt_dl.size();
      if (++digit[pos] < base) break;
      digit[pos] = 0;
    }
    if (pos == digit.size()) break;
  }
  if (!std::isfinite(best_s)) throw Infeasible("exhaustive assignment: no feasible assignment at the candidate powers");
  return best;
}

FixedPowers uniform_powers(const AllocationProblem& p, const Participants& parts, double ul_level,
                           double dl_level) {
  const int L = p.channel.subcarriers();
  FixedPowers f{Mat::Zero(p.users.ul_users(), L), Mat::Zero(p.users.dl_users(), L)};
  for (int u : parts.ul) f.ul.row(u).setConstant(ul_level);
  for (int u : parts.dl) f.dl.row(u).setConstant(dl_level);
  return f;
}

// Extends each user's current water level to every subcarrier.
FixedPowers water_level_powers(const AllocationProblem& p, const Participants& parts,
                               const PowerAllocation& pa) {
  const int L = p.channel.subcarriers();
  FixedPowers f{Mat::Zero(p.users.ul_users(), L), Mat::Zero(p.users.dl_users(), L)};
  for (int u : parts.ul) {
    for (int l = 0; l < L; ++l) {
      f.ul(u, l) = std::max(0.0, pa.water_ul(u) - p.channel.n0 / p.channel.gains_ul(u, l));
    }
  }
  for (int u : parts.dl) {
    for (int l = 0; l < L; ++l) {
      f.dl(u, l) = std::max(0.0, pa.water_dl(u) - p.channel.n0 / p.channel.gains_dl(u, l));
    }
  }
  return f;
}

double search_key(const PowerAllocation& pa) {
  return pa.objective + kReg * (pa.powers_ul.sum() + pa.powers_dl.sum());
}

AllocationSolution build_solution(const AllocationProblem& p, const Assignment& a,
                                  const PowerAllocation& pa) {
  AllocationSolution s;
  s.owners = a;
  s.assignment_ul = a.ul_matrix(p.users.ul_users());
  s.assignment_dl = a.dl_matrix(p.users.dl_users());
  s.powers_ul = pa.powers_ul;
  s.powers_dl = pa.powers_dl;
  s.rates_ul = pa.rates_ul;
  s.rates_dl = pa.rates_dl;
  s.theta = pa.theta;
  s.objective = pa.objective;
  s.p_ul_total = pa.p_ul_total;
  s.p_bs_total = pa.p_bs_total;
  s.max_kkt_residual = pa.max_kkt_residual;
  s.feasible = true;
  return s;
}

}  // namespace

// --- problem --------------------------------------------------------------

void AllocationProblem::validate() const {
  channel.validate();
  users.validate();
  if (channel.gains_ul.rows() != users.ul_users() || channel.gains_dl.rows() != users.dl_users()) {
    throw DimensionMismatch("allocation: gain rows must match the user population");
  }
  if (channel.subcarriers() > 32) throw TooLarge("allocation: at most 32 subcarriers supported");
  if (!(weight_a >= 0.0 && weight_a <= 1.0)) throw SchemaError("allocation: weight a must lie in [0, 1]");
  if (!(payload_bits >= 0.0)) throw SchemaError("allocation: payload must be >= 0");
  if (static_cast<int>(delay_budget.size()) != users.plants) {
    throw DimensionMismatch("allocation: one delay budget per plant required");
  }
  for (std::size_t k = 0; k < active_plants.size(); ++k) {
    const int i = active_plants[k];
    if (i < 0 || i >= users.plants) throw SchemaError("allocation: active plant id out of range");
    if (k > 0 && active_plants[k - 1] >= i) throw SchemaError("allocation: active plants must be sorted and unique");
    if (!(delay_budget[static_cast<std::size_t>(i)] > 0.0)) {
      throw SchemaError("allocation: delay budget must be > 0 for every active plant");
    }
  }
}

Assignment Assignment::empty(int subcarriers) {
  Assignment a;
  a.ul_owner.assign(static_cast<std::size_t>(subcarriers), -1);
  a.dl_owner.assign(static_cast<std::size_t>(subcarriers), -1);
  return a;
}

IntMat Assignment::ul_matrix(int users) const {
  IntMat m = IntMat::Zero(users, static_cast<Eigen::Index>(ul_owner.size()));
  for (std::size_t l = 0; l < ul_owner.size(); ++l) {
    if (ul_owner[l] >= 0) m(ul_owner[l], static_cast<Eigen::Index>(l)) = 1;
  }
  return m;
}

IntMat Assignment::dl_matrix(int users) const {
  IntMat m = IntMat::Zero(users, static_cast<Eigen::Index>(dl_owner.size()));
  for (std::size_t l = 0; l < dl_owner.size(); ++l) {
    if (dl_owner[l] >= 0) m(dl_owner[l], static_cast<Eigen::Index>(l)) = 1;
  }
  return m;
}

double uplink_circuit_power(const AllocationProblem& p) {
  if (p.circuit_mode == CircuitPowerMode::kAlwaysOn) {
    return p.users.ul_users() * p.channel.p_cst_user;
  }
  const auto awake = p.active_plants.size() + p.users.rc_floor_ul.size();
  return static_cast<double>(awake) * p.channel.p_cst_user;
}

double weighted_objective(const AllocationProblem& p, double p_ul_total, double p_bs_total) {
  return p.weight_a * p_ul_total + (1.0 - p.weight_a) * p_bs_total;
}

// --- water-filling --------------------------------------------------------

WaterfillResult waterfill_min_power(std::span<const double> gains, double rate_target, double w,
                                    double n0, double p_cap) {
  if (!(rate_target >= 0.0)) throw SchemaError("waterfill: rate target must be >= 0");
  for (double g : gains) {
    if (!(g > 0.0)) throw SchemaError("waterfill: gains must be > 0");
  }
  const auto n = gains.size();
  WaterfillResult out;
  out.powers = Vec::Zero(static_cast<Eigen::Index>(n));
  if (rate_target == 0.0) return out;
  if (n == 0) throw Infeasible("waterfill: positive rate target with no subcarriers");

  std::vector<double> log_floor(n);
  for (std::size_t l = 0; l < n; ++l) log_floor[l] = std::log(n0 / gains[l]);
  const double need = rate_target * std::numbers::ln2 / w;  // nats per subcarrier bandwidth
  auto rate_excess = [&](double log_mu) {
    double nats = 0.0;
    for (double lf : log_floor) {
      if (lf < log_mu) nats += log_mu - lf;
    }
    return nats - need;
  };

  // Bisection on the log water level; the best subcarrier alone bounds it.
  double lo = *std::min_element(log_floor.begin(), log_floor.end());
  double hi = lo + need;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (rate_excess(mid) >= 0.0 ? hi : lo) = mid;
  }

  // Exact level on the bracketed active set.
  double sum = 0.0;
  std::size_t k = 0;
  for (double lf : log_floor) {
    if (lf < hi) {
      sum += lf;
      ++k;
    }
  }
  double log_mu = (need + sum) / static_cast<double>(k);
  bool consistent = true;
  for (double lf : log_floor) {
    if ((lf < hi) != (lf < log_mu)) consistent = false;
  }
  if (!consistent) log_mu = hi;
  double mu = std::exp(log_mu);

  auto fill = [&]() {
    out.rate = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double p = std::max(0.0, mu - n0 / gains[l]);
      out.powers(static_cast<Eigen::Index>(l)) = p;
      out.rate += subcarrier_rate(p, gains[l], w, n0);
    }
  };
  fill();
  for (int bump = 0; out.rate < rate_target && bump < 60; ++bump) {
    mu *= 1.0 + 1e-15 * std::ldexp(1.0, bump);
    fill();
  }
  out.water_level = mu;

  const double total = out.powers.sum();
  if (total > p_cap * (1.0 + kCapTol)) {
    std::ostringstream msg;
    msg << "waterfill: target " << rate_target << " bit/s needs " << total << " W > cap " << p_cap << " W";
    throw Infeasible(msg.str());
  }
  std::vector<double> pw(out.powers.data(), out.powers.data() + n);
  out.kkt_residual = waterfill_kkt_residual(gains, pw, mu, rate_target, w, n0);
  return out;
}

double max_rate_at_power(std::span<const double> gains, double w, double n0, double p_total) {
  if (gains.empty() || !(p_total > 0.0)) return 0.0;
  std::vector<double> floor_lvl(gains.size());
  for (std::size_t l = 0; l < gains.size(); ++l) floor_lvl[l] = n0 / gains[l];
  std::sort(floor_lvl.begin(), floor_lvl.end());
  double prefix = 0.0;
  for (std::size_t k = 1; k <= floor_lvl.size(); ++k) {
    prefix += floor_lvl[k - 1];
    const double mu = (p_total + prefix) / static_cast<double>(k);
    if (k == floor_lvl.size() || mu <= floor_lvl[k]) {
      double nats = 0.0;
      for (std::size_t i = 0; i < k; ++i) nats += std::log(mu / floor_lvl[i]);
      return w * nats / std::numbers::ln2;
    }
  }
  return 0.0;
}

double waterfill_kkt_residual(std::span<const double> gains, std::span<const double> powers,
                              double water_level, double rate_target, double w, double n0) {
  if (gains.size() != powers.size()) throw DimensionMismatch("kkt: size mismatch");
  if (rate_target <= 0.0) {
    double worst = 0.0;
    for (double p : powers) worst = std::max(worst, std::abs(p));
    return worst;
  }
  double residual = 0.0;
  double rate = 0.0;
  for (std::size_t l = 0; l < gains.size(); ++l) {
    const double expected = std::max(0.0, water_level - n0 / gains[l]);
    residual = std::max(residual, std::abs(powers[l] - expected) / water_level);
    if (powers[l] < 0.0) residual = std::max(residual, -powers[l] / water_level);
    rate += subcarrier_rate(powers[l], gains[l], w, n0);
  }
  // The multiplier is positive, so the rate constraint must be tight.
  residual = std::max(residual, std::abs(rate - rate_target) / rate_target);
  return residual;
}

// --- power allocation ----------------------------------------------------

DelaySplit split_delay_budget(const AllocationProblem& problem, const Assignment& assignment,
                              int plant) {
  if (std::find(problem.active_plants.begin(), problem.active_plants.end(), plant) ==
      problem.active_plants.end()) {
    throw SchemaError("split_delay_budget: plant is not active");
  }
  const auto gu = masked_gains(problem.channel.gains_ul, plant, mask_of(assignment.ul_owner, plant));
  const auto gd = masked_gains(problem.channel.gains_dl, plant, mask_of(assignment.dl_owner, plant));
  return split_core(gu, gd, problem.delay_budget[static_cast<std::size_t>(plant)],
                    problem.payload_bits, problem.weight_a, problem.channel, plant);
}

PowerAllocation allocate_power(const AllocationProblem& problem, const Assignment& assignment) {
  const int L = problem.channel.subcarriers();
  const int M = problem.users.ul_users();
  const int N = problem.users.dl_users();
  if (static_cast<int>(assignment.ul_owner.size()) != L || static_cast<int>(assignment.dl_owner.size()) != L) {
    throw DimensionMismatch("allocate_power: assignment length must equal subcarrier count");
  }
  for (int o : assignment.ul_owner) {
    if (o < -1 || o >= M) throw DimensionMismatch("allocate_power: uplink owner out of range");
  }
  for (int o : assignment.dl_owner) {
    if (o < -1 || o >= N) throw DimensionMismatch("allocate_power: downlink owner out of range");
  }

  const auto& ch = problem.channel;
  PowerAllocation pa;
  pa.powers_ul = Mat::Zero(M, L);
  pa.powers_dl = Mat::Zero(N, L);
  pa.rates_ul = Vec::Zero(M);
  pa.rates_dl = Vec::Zero(N);
  pa.water_ul = Vec::Zero(M);
  pa.water_dl = Vec::Zero(N);
  pa.theta.assign(static_cast<std::size_t>(problem.users.plants), std::numeric_limits<double>::quiet_NaN());

  auto scatter = [&](Mat& dst, int user, const std::vector<int>& own, const Vec& powers) {
    Eigen::Index k = 0;
    for (int l = 0; l < L; ++l) {
      if (own[static_cast<std::size_t>(l)] == user) dst(user, l) = powers(k++);
    }
  };

  for (int j = 0; j < static_cast<int>(problem.users.rc_floor_ul.size()); ++j) {
    const int u = problem.users.rc_ul_index(j);
    const double target = 2.0 * problem.users.rc_floor_ul[static_cast<std::size_t>(j)];
    const auto g = masked_gains(ch.gains_ul, u, mask_of(assignment.ul_owner, u));
    try {
      const auto wf = waterfill_min_power(g, target, ch.w, ch.n0, ch.p_max_user);
      scatter(pa.powers_ul, u, assignment.ul_owner, wf.powers);
      pa.water_ul(u) = wf.water_level;
      pa.max_kkt_residual = std::max(pa.max_kkt_residual, wf.kkt_residual);
    } catch (const Infeasible& e) {
      throw Infeasible("C9 uplink user " + std::to_string(u) + ": " + e.what());
    }
  }
  for (int j = 0; j < static_cast<int>(problem.users.rc_floor_dl.size()); ++j) {
    const int u = problem.users.rc_dl_index(j);
    const double target = 2.0 * problem.users.rc_floor_dl[static_cast<std::size_t>(j)];
    const auto g = masked_gains(ch.gains_dl, u, mask_of(assignment.dl_owner, u));
    try {
      const auto wf = waterfill_min_power(g, target, ch.w, ch.n0, ch.p_max_bs);
      scatter(pa.powers_dl, u, assignment.dl_owner, wf.powers);
      pa.water_dl(u) = wf.water_level;
      pa.max_kkt_residual = std::max(pa.max_kkt_residual, wf.kkt_residual);
    } catch (const Infeasible& e) {
      throw Infeasible("C10 downlink user " + std::to_string(u) + ": " + e.what());
    }
  }
  for (int i : problem.active_plants) {
    const DelaySplit s = split_delay_budget(problem, assignment, i);
    scatter(pa.powers_ul, i, assignment.ul_owner, s.ul.powers);
    scatter(pa.powers_dl, i, assignment.dl_owner, s.dl.powers);
    pa.water_ul(i) = s.ul.water_level;
    pa.water_dl(i) = s.dl.water_level;
    pa.theta[static_cast<std::size_t>(i)] = s.theta;
    pa.max_kkt_residual = std::max({pa.max_kkt_residual, s.ul.kkt_residual, s.dl.kkt_residual});
  }

  for (int m = 0; m < M; ++m) {
    std::vector<double> pw(static_cast<std::size_t>(L)), g(static_cast<std::size_t>(L));
    std::vector<int> own(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      pw[static_cast<std::size_t>(l)] = pa.powers_ul(m, l);
      g[static_cast<std::size_t>(l)] = ch.gains_ul(m, l);
      own[static_cast<std::size_t>(l)] = assignment.ul_owner[static_cast<std::size_t>(l)] == m;
    }
    pa.rates_ul(m) = link_rate(pw, g, own, ch.w, ch.n0);
  }
  for (int n = 0; n < N; ++n) {
    std::vector<double> pw(static_cast<std::size_t>(L)), g(static_cast<std::size_t>(L));
    std::vector<int> own(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      pw[static_cast<std::size_t>(l)] = pa.powers_dl(n, l);
      g[static_cast<std::size_t>(l)] = ch.gains_dl(n, l);
      own[static_cast<std::size_t>(l)] = assignment.dl_owner[static_cast<std::size_t>(l)] == n;
    }
    pa.rates_dl(n) = link_rate(pw, g, own, ch.w, ch.n0);
  }

  const double dl_transmit = pa.powers_dl.sum();
  if (dl_transmit > ch.p_max_bs * (1.0 + kCapTol)) {
    std::ostringstream msg;
    msg << "C8: base station needs " << dl_transmit << " W > cap " << ch.p_max_bs << " W";
    throw Infeasible(msg.str());
  }
  pa.p_ul_total = uplink_circuit_power(problem) + pa.powers_ul.sum();
  pa.p_bs_total = ch.p_cst_bs + dl_transmit;
  pa.objective = weighted_objective(problem, pa.p_ul_total, pa.p_bs_total);
  return pa;
}

// --- assignment ------------------------------------------------------------

double surrogate_objective(const AllocationProblem& problem, const FixedPowers& fixed,
                           const Assignment& assignment) {
  const auto parts = participants_of(problem);
  FixedEval fe(problem, fixed, parts);
  return fe(assignment);
}

Assignment assign_subcarriers(const AllocationProblem& problem, const FixedPowers& fixed,
                              AssignMode mode, const Assignment* warm_start) {
  const int L = problem.channel.subcarriers();
  if (fixed.ul.rows() != problem.users.ul_users() || fixed.ul.cols() != L ||
      fixed.dl.rows() != problem.users.dl_users() || fixed.dl.cols() != L) {
    throw DimensionMismatch("assign_subcarriers: fixed power shape mismatch");
  }
  if ((fixed.ul.size() > 0 && fixed.ul.minCoeff() < 0.0) ||
      (fixed.dl.size() > 0 && fixed.dl.minCoeff() < 0.0)) {
    throw SchemaError("assign_subcarriers: fixed powers must be >= 0");
  }
  const auto parts = participants_of(problem);
  FixedEval fe(problem, fixed, parts);
  if (parts.empty()) return Assignment::empty(L);
  if (mode == AssignMode::kExhaustive) return exhaustive_assign(problem, fe);

  Assignment best = Assignment::empty(L);
  double best_s = kInf;
  std::string failure;
  try {
    Assignment a = greedy_assign(problem, fe);
    const double s = local_search(problem, parts, a, fe, true);
    if (s < best_s) {
      best_s = s;
      best = std::move(a);
    }
  } catch (const Infeasible& e) {
    failure = e.what();
  }
  if (warm_start) {
    Assignment a = *warm_start;
    const double s = local_search(problem, parts, a, fe, true);
    if (s < best_s) {
      best_s = s;
      best = std::move(a);
    }
  }
  if (!std::isfinite(best_s)) {
    throw Infeasible(failure.empty() ? "assignment: no feasible assignment at the candidate powers" : failure);
  }
  return best;
}

// --- solver ----------------------------------------------------------------

AllocationSolution solve_allocation(const AllocationProblem& problem, const SolverOptions& opts) {
  problem.validate();
  const int L = problem.channel.subcarriers();
  const auto parts = participants_of(problem);

  if (parts.empty()) {
    const auto a = Assignment::empty(L);
    auto sol = build_solution(problem, a, allocate_power(problem, a));
    sol.converged = true;
    sol.objective_history.push_back(sol.objective);
    return sol;
  }

  const double ul_uniform = problem.channel.p_max_user / L;
  const double dl_uniform = problem.channel.p_max_bs / L;
  FixedPowers fixed = uniform_powers(problem, parts, ul_uniform, dl_uniform);
  bool tried_caps = false;
  auto cap_level = [&]() {
    const double dl_share = problem.channel.p_max_bs / std::max<std::size_t>(1, parts.dl.size());
    return uniform_powers(problem, parts, problem.channel.p_max_user, dl_share);
  };

  Assignment incumbent;
  PowerAllocation best;
  double best_key = kInf;
  bool have = false;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;

  for (int it = 0; it < opts.max_iters; ++it) {
    Assignment asg;
    PowerAllocation pa;
    try {
      asg = assign_subcarriers(problem, fixed, AssignMode::kHeuristic, have ? &incumbent : nullptr);
      pa = allocate_power(problem, asg);
    } catch (const Infeasible&) {
      if (have) break;
      if (!tried_caps) {
        tried_caps = true;
        fixed = cap_level();
        continue;
      }
      throw;
    }
    iterations = it + 1;
    history.push_back(pa.objective);
    const double key = search_key(pa);
    const double improvement = have ? (best_key - key) / std::abs(best_key) : kInf;
    if (key < best_key) {
      incumbent = asg;
      best = pa;
      best_key = key;
      have = true;
    }
    if (improvement < opts.tol) {
      converged = true;
      break;
    }
    fixed = water_level_powers(problem, parts, best);
  }
  if (!have) throw Infeasible("allocation: no feasible assignment found");

  if (opts.polish) {
    CostModel cm(problem);
    Assignment cur = incumbent;
    auto score = [&](const Assignment& a) {
      const Eval ev = evaluate(problem, cm, parts, a);
      return ev.feasible ? ev.key : kInf;
    };
    const double start = score(cur);
    const double end = local_search(problem, parts, cur, score, false);
    if (end < start) {
      PowerAllocation pa = allocate_power(problem, cur);
      if (search_key(pa) < best_key) {
        incumbent = cur;
        best = pa;
        best_key = search_key(pa);
        history.push_back(pa.objective);
      }
    }
  }

  auto sol = build_solution(problem, incumbent, best);
  sol.iterations = iterations;
  sol.converged = converged;
  sol.objective_history = std::move(history);
  return sol;
}

AllocationSolution brute_force_allocation(const AllocationProblem& problem) {
  problem.validate();
  const int L = problem.channel.subcarriers();
  const auto parts = participants_of(problem);
  if (L > 8) throw TooLarge("brute force: at most 8 subcarriers");
  if (parts.ul.size() > 4 || parts.dl.size() > 4) throw TooLarge("brute force: at most 4 users per direction");
  if (parts.empty()) {
    const auto a = Assignment::empty(L);
    auto sol = build_solution(problem, a, allocate_power(problem, a));
    sol.converged = true;
    sol.objective_history.push_back(sol.objective);
    return sol;
  }

  CostModel cm(problem);
  // Every subcarrier goes to some participant of its direction: adding a
  // subcarrier never raises a user's minimum power, so leaving one idle is
  // dominated.
  std::vector<std::pair<int, int>> slots;
  for (int dir : {kUl, kDl}) {
    if (parts.of(dir).empty()) continue;
    for (int l = 0; l < L; ++l) slots.emplace_back(dir, l);
  }

  const int max_user = std::max(problem.users.ul_users(), problem.users.dl_users());
  std::vector<Mask> held[2] = {std::vector<Mask>(static_cast<std::size_t>(max_user), 0),
                               std::vector<Mask>(static_cast<std::size_t>(max_user), 0)};
  Mask undecided[2] = {0, 0};
  for (const auto& [dir, l] : slots) undecided[dir] |= Mask{1} << l;

  Assignment cur = Assignment::empty(L);
  Assignment best_asg;
  double best = kInf;

  auto bound = [&]() {
    return evaluate_masks(problem, cm, parts, [&](int dir, int u) {
      return held[dir][static_cast<std::size_t>(u)] | undecided[dir];
    });
  };

  auto dfs = [&](auto&& self, std::size_t pos) -> void {
    if (pos == slots.size()) {
      const Eval ev = evaluate_masks(problem, cm, parts, [&](int dir, int u) {
        return held[dir][static_cast<std::size_t>(u)];
      });
      if (ev.feasible && ev.exact < best) {
        best = ev.exact;
        best_asg = cur;
      }
      return;
    }
    const Eval lb = bound();
    // The BS cap is only checked at leaves, so an infeasible bound is
    // conclusive only through the per-user entries.
    if (!std::isfinite(lb.exact) || lb.exact >= best) return;
    const auto [dir, l] = slots[pos];
    const Mask bit = Mask{1} << l;
    undecided[dir] &= ~bit;
    for (int u : parts.of(dir)) {
      held[dir][static_cast<std::size_t>(u)] |= bit;
      owners(cur, dir)[static_cast<std::size_t>(l)] = u;
      self(self, pos + 1);
      held[dir][static_cast<std::size_t>(u)] &= ~bit;
    }
    owners(cur, dir)[static_cast<std::size_t>(l)] = -1;
    undecided[dir] |= bit;
  };
  dfs(dfs, 0);

  if (!std::isfinite(best)) throw Infeasible("brute force: no feasible assignment");
  auto sol = build_solution(problem, best_asg, allocate_power(problem, best_asg));
  sol.converged = true;
  sol.objective_history.push_back(sol.objective);
  return sol;
}

ValidationReport validate_solution(const AllocationProblem& problem,
                                   const AllocationSolution& s, double rel_tol) {
  ValidationReport rep;
  auto fail = [&](const std::string& what) {
    rep.ok = false;
    rep.failures.push_back(what);
  };
  const auto& ch = problem.channel;
  const int L = ch.subcarriers();
  const int M = problem.users.ul_users();
  const int N = problem.users.dl_users();
  if (s.assignment_ul.rows() != M || s.assignment_ul.cols() != L || s.powers_ul.rows() != M ||
      s.powers_ul.cols() != L || s.assignment_dl.rows() != N || s.assignment_dl.cols() != L ||
      s.powers_dl.rows() != N || s.powers_dl.cols() != L) {
    fail("shape");
    return rep;
  }

  for (int l = 0; l < L; ++l) {
    if (s.assignment_ul.col(l).sum() > 1) fail("C3: uplink subcarrier " + std::to_string(l) + " shared");
    if (s.assignment_dl.col(l).sum() > 1) fail("C4: downlink subcarrier " + std::to_string(l) + " shared");
  }
  auto check_matrix = [&](const IntMat& a, const Mat& p, const char* tag) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        if (a(r, c) != 0 && a(r, c) != 1) fail(std::string(tag) + ": non-binary assignment");
        if (p(r, c) < 0.0) fail(std::string(tag) + ": negative power");
        if (a(r, c) == 0 && p(r, c) != 0.0) fail(std::string(tag) + ": power on unassigned subcarrier");
      }
    }
  };
  check_matrix(s.assignment_ul, s.powers_ul, "C5");
  check_matrix(s.assignment_dl, s.powers_dl, "C6");

  auto rate_of = [&](const IntMat& a, const Mat& p, const Mat& g, int user) {
    double r = 0.0;
    for (int l = 0; l < L; ++l) {
      if (a(user, l) == 1) r += ch.w * std::log2(1.0 + p(user, l) * g(user, l) / ch.n0);
    }
    return r;
  };

  for (int m = 0; m < M; ++m) {
    const double used = (s.assignment_ul.row(m).cast<double>().array() * s.powers_ul.row(m).array()).sum();
    if (used > ch.p_max_user * (1.0 + rel_tol)) fail("C7: uplink user " + std::to_string(m) + " over cap");
  }
  const double bs_used = (s.assignment_dl.cast<double>().array() * s.powers_dl.array()).sum();
  if (bs_used > ch.p_max_bs * (1.0 + rel_tol)) fail("C8: base station over cap");

  for (std::size_t j = 0; j < problem.users.rc_floor_ul.size(); ++j) {
    const int u = problem.users.rc_ul_index(static_cast<int>(j));
    const double r = rate_of(s.assignment_ul, s.powers_ul, ch.gains_ul, u);
    if (0.5 * r < problem.users.rc_floor_ul[j] * (1.0 - rel_tol)) fail("C9: uplink user " + std::to_string(u));
  }
  for (std::size_t j = 0; j < problem.users.rc_floor_dl.size(); ++j) {
    const int u = problem.users.rc_dl_index(static_cast<int>(j));
    const double r = rate_of(s.assignment_dl, s.powers_dl, ch.gains_dl, u);
    if (0.5 * r < problem.users.rc_floor_dl[j] * (1.0 - rel_tol)) fail("C10: downlink user " + std::to_string(u));
  }
  for (int i = 0; i < problem.users.plants; ++i) {
    const bool active = std::binary_search(problem.active_plants.begin(), problem.active_plants.end(), i);
    if (!active) {
      if (s.assignment_ul.row(i).sum() + s.assignment_dl.row(i).sum() > 0) {
        fail("plant " + std::to_string(i) + ": sleeping RTU holds subcarriers");
      }
      continue;
    }
    const double ru = rate_of(s.assignment_ul, s.powers_ul, ch.gains_ul, i);
    const double rd = rate_of(s.assignment_dl, s.powers_dl, ch.gains_dl, i);
    if (!(ru > 0.0) || !(rd > 0.0)) {
      fail("C11: plant " + std::to_string(i) + " has a dead link");
      continue;
    }
    const double delay = problem.payload_bits / (0.5 * ru) + problem.payload_bits / (0.5 * rd);
    if (delay > problem.delay_budget[static_cast<std::size_t>(i)] * (1.0 + rel_tol)) {
      fail("C11: plant " + std::to_string(i) + " misses its delay budget");
    }
  }

  const double expected = problem.weight_a * (uplink_circuit_power(problem) + s.powers_ul.sum()) +
                          (1.0 - problem.weight_a) * (ch.p_cst_bs + s.powers_dl.sum());
  if (std::abs(expected - s.objective) > rel_tol * std::max(1.0, std::abs(expected))) {
    fail("objective does not match the recomputed powers");
  }
  return rep;
}

AllocationProblem random_allocation_instance(std::uint64_t seed, const InstanceOptions& opts) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto integer = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  AllocationProblem p;
  const int L = integer(2, std::max(2, opts.max_subcarriers));
  const int cap = std::max(1, opts.max_users_per_direction);
  const int plants = integer(0, std::min(2, cap));
  const int rc_ul = integer(plants == 0 ? 1 : 0, cap - plants);
  const int rc_dl = integer(0, cap - plants);
  p.users.plants = plants;
  for (int j = 0; j < rc_ul; ++j) p.users.rc_floor_ul.push_back(uniform(20e3, 150e3));
  for (int j = 0; j < rc_dl; ++j) p.users.rc_floor_dl.push_back(uniform(20e3, 150e3));

  p.channel.w = 180e3;
  p.channel.n0 = dbm_to_watt(-62.24);
  p.channel.p_max_user = dbm_to_watt(23.0);
  p.channel.p_max_bs = dbm_to_watt(43.0);
  p.channel.p_cst_user = dbm_to_watt(0.1);
  p.channel.p_cst_bs = dbm_to_watt(20.0);
  std::exponential_distribution<double> fading(1.0);
  auto draw = [&](int users) {
    Mat g(users, L);
    for (int u = 0; u < users; ++u) {
      const double d = uniform(10.0, 50.0);
      for (int l = 0; l < L; ++l) g(u, l) = channel_gain(d, 0.09) * std::max(0.05, fading(rng));
    }
    return g;
  };
  p.channel.gains_ul = draw(p.users.ul_users());
  p.channel.gains_dl = draw(p.users.dl_users());

  p.payload_bits = 70.0;
  p.delay_budget.assign(static_cast<std::size_t>(plants), 0.0);
  for (int i = 0; i < plants; ++i) {
    p.delay_budget[static_cast<std::size_t>(i)] = uniform(1e-3, 5e-3);
    p.active_plants.push_back(i);
  }
  p.weight_a = uniform(0.0, 1.0);
  return p;
}

}  // namespace cps
