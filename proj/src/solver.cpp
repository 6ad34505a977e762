#include "ostb/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ostb {

namespace {

/// Landing superstate of an action taken in (tau, flag); tasks or resets that
/// run exactly to the interval boundary wrap to (0, 0).
SuperState landing_superstate(const DeviceParams& p, int tau, int flag,
                              Action a) {
  switch (a) {
    case Action::sleep:
      return tau == p.subintervals - 1 ? SuperState{0, 0}
                                       : SuperState{tau + 1, flag};
    case Action::sense:
      return tau + p.sensing_steps == p.subintervals
                 ? SuperState{0, 0}
                 : SuperState{tau + p.sensing_steps, 1};
    case Action::transmit:
      return tau + p.transmit_steps == p.subintervals
                 ? SuperState{0, 0}
                 : SuperState{tau + p.transmit_steps, 2};
  }
  throw std::logic_error("unknown action");
}

const Matrix& micro_of(const MdpModel& m, Action a) {
  switch (a) {
    case Action::sleep: return m.micro.sleep;
    case Action::sense: return m.micro.sense;
    case Action::transmit: return m.micro.transmit;
  }
  throw std::logic_error("unknown action");
}

/// Absorption data for runs of forced (single-action) superstates: the first
/// decidable superstate reached, the number of forced sleep epochs on the
/// way, and the level kernel accumulated over them.
struct ForcedRuns {
  std::vector<int> target_super;  // decidable superstate eventually reached
  std::vector<int> steps;
  std::vector<Matrix> level_map;  // N_v x N_v
};

bool super_decidable(const DeviceParams& p, const SuperState& g) {
  if (g.flag == 0 && g.tau <= p.sensing_deadline) return true;
  if (p.has_transmit_task() && g.flag == 1 && g.tau >= p.sensing_steps &&
      g.tau <= p.subintervals - p.transmit_steps)
    return true;
  return false;
}

ForcedRuns compute_forced_runs(const MdpModel& model) {
  const auto& sp = model.space;
  const DeviceParams& p = model.params;
  const int nv = p.grid_levels;
  const int ns = sp.num_superstates();
  ForcedRuns fr;
  fr.target_super.assign(ns, -1);
  fr.steps.assign(ns, 0);
  fr.level_map.assign(ns, Matrix());

  // Forced chains only move forward in tau (or wrap to the decidable (0,0)),
  // so one descending-tau pass per flag resolves everything.
  for (int f = 2; f >= 0; --f) {
    for (int tau = p.subintervals - 1; tau >= 0; --tau) {
      const int g = sp.superstate_index(tau, f);
      if (g < 0) continue;
      if (super_decidable(p, sp.superstates[g])) {
        fr.target_super[g] = g;
        fr.steps[g] = 0;
        fr.level_map[g] = Matrix::identity(nv);
        continue;
      }
      const SuperState next = landing_superstate(p, tau, f, Action::sleep);
      const int gn = sp.superstate_index(next.tau, next.flag);
      fr.target_super[g] = fr.target_super[gn];
      fr.steps[g] = 1 + fr.steps[gn];
      fr.level_map[g] = model.micro.sleep.multiply(fr.level_map[gn]);
    }
  }
  return fr;
}

}  // namespace

OccupationMeasure solve_occupation_lp(const MdpModel& model,
                                      const LpOptions& lp_options) {
  const auto& sp = model.space;
  const DeviceParams& p = model.params;
  const int nv = p.grid_levels;

  std::vector<int> decidable;
  for (int s = 0; s < model.num_states(); ++s)
    if (model.decidable(s)) decidable.push_back(s);
  const int nd = static_cast<int>(decidable.size());
  if (nd == 0) throw std::runtime_error("model has no decidable states");
  std::vector<int> pos(model.num_states(), -1);
  for (int i = 0; i < nd; ++i) pos[decidable[i]] = i;

  const ForcedRuns fr = compute_forced_runs(model);

  // Rows: 0 = normalization (weighted by expected epochs per embedded step);
  // 1..nd-1 = flow balance of all decidable states but the last, whose
  // equation is implied by the others.
  LpProblem lp;
  lp.num_rows = nd;
  lp.rhs.assign(nd, 0.0);
  lp.rhs[0] = 1.0;

  std::vector<int> crash;  // sleeping columns form a feasible start basis
  std::vector<double> dense_col(nd, 0.0);
  std::vector<double> landed(nv, 0.0);

  struct ColRef {
    int state, entry;
  };
  std::vector<ColRef> col_ref;

  for (int di = 0; di < nd; ++di) {
    const int s = decidable[di];
    const State st = sp.states[s];
    for (size_t ei = 0; ei < model.kernel[s].size(); ++ei) {
      const ActionEntry& e = model.kernel[s][ei];
      const SuperState land = landing_superstate(p, st.tau, st.flag, e.action);
      const int g = sp.superstate_index(land.tau, land.flag);
      const int target = fr.target_super[g];
      const Matrix& map = fr.level_map[g];
      const Matrix& micro = micro_of(model, e.action);
      // Distribution over levels of the absorbing decidable superstate.
      std::fill(landed.begin(), landed.end(), 0.0);
      for (int j = 0; j < nv; ++j) {
        const double pr = micro.at(st.level, j);
        if (pr == 0) continue;
        for (int k = 0; k < nv; ++k) landed[k] += pr * map.at(j, k);
      }
      std::fill(dense_col.begin(), dense_col.end(), 0.0);
      dense_col[di] += 1.0;  // outflow
      const int base = sp.super_first_state[target];
      for (int k = 0; k < nv; ++k) {
        if (landed[k] == 0) continue;
        dense_col[pos[base + k]] -= landed[k];
      }
      SparseVec col;
      const double epochs = 1.0 + fr.steps[g];
      col.add(0, epochs);  // normalization row
      for (int r = 1; r < nd; ++r)
        if (dense_col[r - 1] != 0) col.add(r, dense_col[r - 1]);
      if (e.action == Action::sleep) crash.push_back((int)lp.cols.size());
      lp.cols.push_back(std::move(col));
      lp.objective.push_back(e.reward);
      col_ref.push_back({s, static_cast<int>(ei)});
    }
  }

  LpResult res = lp_maximize(lp, lp_options, crash);
  if (res.status != LpStatus::optimal)
    throw std::runtime_error(std::string("occupation LP failed: ") +
                             (res.status == LpStatus::infeasible ? "infeasible"
                              : res.status == LpStatus::unbounded
                                  ? "unbounded"
                                  : "iteration limit") +
                             " " + res.message);

  OccupationMeasure occ;
  occ.lp_iterations = res.iterations;
  occ.x.resize(model.num_states());
  for (int s = 0; s < model.num_states(); ++s)
    occ.x[s].assign(model.kernel[s].size(), 0.0);
  for (size_t j = 0; j < col_ref.size(); ++j)
    occ.x[col_ref[j].state][col_ref[j].entry] = res.x[j];

  // Expand through the forced runs: mass landing in a single-action
  // superstate sleeps its way to the next decidable one.
  const int nsup = sp.num_superstates();
  std::vector<std::vector<double>> entering(nsup);
  for (int di = 0; di < nd; ++di) {
    const int s = decidable[di];
    const State st = sp.states[s];
    for (size_t ei = 0; ei < model.kernel[s].size(); ++ei) {
      const double mass = occ.x[s][ei];
      if (mass <= 0) continue;
      const ActionEntry& e = model.kernel[s][ei];
      const SuperState land = landing_superstate(p, st.tau, st.flag, e.action);
      const int g = sp.superstate_index(land.tau, land.flag);
      if (super_decidable(p, sp.superstates[g])) continue;
      auto& acc = entering[g];
      if (acc.empty()) acc.assign(nv, 0.0);
      const Matrix& micro = micro_of(model, e.action);
      for (int j = 0; j < nv; ++j) acc[j] += mass * micro.at(st.level, j);
    }
  }
  for (int g = 0; g < nsup; ++g) {
    if (entering[g].empty() || super_decidable(p, sp.superstates[g])) continue;
    const int base = sp.super_first_state[g];
    for (int j = 0; j < nv; ++j) occ.x[base + j][0] += entering[g][j];
    const SuperState next = landing_superstate(p, sp.superstates[g].tau,
                                               sp.superstates[g].flag,
                                               Action::sleep);
    const int gn = sp.superstate_index(next.tau, next.flag);
    if (!super_decidable(p, sp.superstates[gn])) {
      auto& acc = entering[gn];
      if (acc.empty()) acc.assign(nv, 0.0);
      for (int j = 0; j < nv; ++j) {
        const double mass = entering[g][j];
        if (mass == 0) continue;
        for (int k = 0; k < nv; ++k)
          acc[k] += mass * model.micro.sleep.at(j, k);
      }
    }
  }

  // Diagnostics: total mass, flow residuals and the objective on the full
  // measure, which must reproduce the reduced LP objective.
  double total = 0, obj = 0;
  std::vector<double> inflow(model.num_states(), 0.0);
  std::vector<double> outflow(model.num_states(), 0.0);
  for (int s = 0; s < model.num_states(); ++s) {
    for (size_t ei = 0; ei < model.kernel[s].size(); ++ei) {
      const double mass = occ.x[s][ei];
      total += mass;
      obj += mass * model.kernel[s][ei].reward;
      if (mass == 0) continue;
      outflow[s] += mass;
      const SparseRow& row = model.kernel[s][ei].next;
      for (size_t k = 0; k < row.idx.size(); ++k)
        inflow[row.idx[k]] += mass * row.val[k];
    }
  }
  occ.total_mass = total;
  occ.objective = obj;
  for (int s = 0; s < model.num_states(); ++s)
    occ.max_flow_residual =
        std::max(occ.max_flow_residual, std::abs(inflow[s] - outflow[s]));
  return occ;
}

RviResult relative_value_iteration(const MdpModel& model, double tol,
                                   long max_iters) {
  const int n = model.num_states();
  std::vector<double> h(n, 0.0), w(n, 0.0);
  RviResult out;
  bool converged = false;
  for (long iter = 1; iter <= max_iters; ++iter) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& e : model.kernel[s]) {
        double q = e.reward + 0.5 * h[s];
        const SparseRow& row = e.next;
        double acc = 0;
        for (size_t k = 0; k < row.idx.size(); ++k)
          acc += row.val[k] * h[row.idx[k]];
        q += 0.5 * acc;
        if (q > best) best = q;
      }
      w[s] = best;
      const double d = best - h[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    out.iterations = iter;
    out.span = hi - lo;
    out.gain = 0.5 * (hi + lo);
    if (out.span < tol) {
      converged = true;
      break;
    }
    const double wref = w[0];
    for (int s = 0; s < n; ++s) h[s] = w[s] - wref;
  }
  if (!converged)
    throw std::runtime_error(
        "relative value iteration did not converge: span " +
        std::to_string(out.span) + " after " + std::to_string(out.iterations) +
        " iterations");

  // Bias on the original-chain scale: the half-lazy transform doubles
  // relative values.
  out.bias.resize(n);
  for (int s = 0; s < n; ++s) out.bias[s] = 0.5 * (h[s] - h[0]);

  out.greedy.assign(n, Action::sleep);
  for (int s = 0; s < n; ++s) {
    if (!model.decidable(s)) continue;
    out.greedy[s] = advantage(model, out.bias, s) >= 0
                        ? model.kernel[s][1].action
                        : Action::sleep;
  }
  return out;
}

double advantage(const MdpModel& model, const std::vector<double>& bias,
                 int state) {
  const auto& entries = model.kernel[state];
  if (entries.size() < 2)
    throw std::invalid_argument(
        "advantage: state has a singleton action set");
  auto value = [&](const ActionEntry& e) {
    double acc = e.reward;
    for (size_t k = 0; k < e.next.idx.size(); ++k)
      acc += e.next.val[k] * bias[e.next.idx[k]];
    return acc;
  };
  return value(entries[1]) - value(entries[0]);
}

std::vector<Action> extract_policy(const MdpModel& model,
                                   const OccupationMeasure& occupation,
                                   const RviResult& rvi, double tol) {
  const int n = model.num_states();
  std::vector<Action> policy(n, Action::sleep);
  for (int s = 0; s < n; ++s) {
    const auto& entries = model.kernel[s];
    if (entries.size() == 1) {
      policy[s] = entries[0].action;
      continue;
    }
    const double sleep_mass = occupation.x[s][0];
    const double task_mass = occupation.x[s][1];
    if (task_mass > tol) {
      policy[s] = entries[1].action;  // task preferred on split mass
    } else if (sleep_mass > tol) {
      policy[s] = Action::sleep;
    } else {
      policy[s] = advantage(model, rvi.bias, s) >= 0 ? entries[1].action
                                                     : Action::sleep;
    }
  }
  return policy;
}

ThresholdTables extract_thresholds(const MdpModel& model,
                                   const std::vector<Action>& policy) {
  const auto& sp = model.space;
  const DeviceParams& p = model.params;
  const int nv = p.grid_levels;
  ThresholdTables out;

  auto scan = [&](int tau, int flag) -> std::optional<int> {
    const int sup = sp.superstate_index(tau, flag);
    const int base = sp.super_first_state[sup];
    std::optional<int> first_task;
    std::string pattern(nv, '.');
    bool step = true;
    for (int j = 0; j < nv; ++j) {
      const bool task = policy[base + j] != Action::sleep;
      pattern[j] = task ? 'x' : '.';
      if (task && !first_task) first_task = j;
      if (!task && first_task) step = false;
    }
    if (!step)
      throw ThresholdStructureError(
          "policy is not a step function of the voltage level in superstate "
          "(tau=" + std::to_string(tau) + ", f=" + std::to_string(flag) +
              "): " + pattern,
          tau, flag, pattern);
    return first_task;
  };

  for (int tau = 0; tau <= p.sensing_deadline; ++tau)
    out.sense.push_back(scan(tau, 0));
  if (p.has_transmit_task())
    for (int tau = p.sensing_steps; tau <= p.subintervals - p.transmit_steps;
         ++tau)
      out.transmit.push_back(scan(tau, 1));
  return out;
}

std::vector<SparseRow> induced_chain(const MdpModel& model,
                                     const std::vector<Action>& policy) {
  const int n = model.num_states();
  std::vector<SparseRow> chain(n);
  for (int s = 0; s < n; ++s) {
    const ActionEntry* e = model.entry(s, policy[s]);
    if (!e)
      throw std::invalid_argument("policy chooses a disallowed action in state " +
                                  std::to_string(s));
    chain[s] = e->next;
  }
  return chain;
}

UnichainReport verify_unichain(const MdpModel& model,
                               const std::vector<Action>& policy) {
  const auto chain = induced_chain(model, policy);
  const auto classes = classify_chain(chain);
  UnichainReport out;
  out.closed_classes = classes.num_closed;
  out.state_recurrent = classes.state_recurrent;
  std::vector<int> sizes(classes.num_components, 0);
  for (int s = 0; s < model.num_states(); ++s) {
    if (classes.state_recurrent[s])
      ++out.recurrent_states;
    else
      ++out.transient_states;
    ++sizes[classes.component_of[s]];
  }
  for (int c = 0; c < classes.num_components; ++c)
    if (classes.component_closed[c]) out.closed_class_sizes.push_back(sizes[c]);

  const int reset_super = model.space.superstate_index(0, 0);
  const int base = model.space.super_first_state[reset_super];
  for (int j = 0; j < model.params.grid_levels; ++j)
    if (classes.state_recurrent[base + j]) {
      out.reset_superstate_recurrent = true;
      break;
    }
  return out;
}

GainReport make_gain_report(const MdpModel& model,
                            const std::vector<Action>& policy) {
  const auto chain = induced_chain(model, policy);
  const auto classes = classify_chain(chain);
  if (classes.num_closed != 1)
    throw std::runtime_error("induced chain has " +
                             std::to_string(classes.num_closed) +
                             " closed recurrent classes; expected exactly 1");
  std::vector<int> members;
  for (int s = 0; s < model.num_states(); ++s)
    if (classes.state_recurrent[s]) members.push_back(s);
  const auto mu = stationary_distribution(chain, members);

  GainReport out;
  out.stationary.assign(model.num_states(), 0.0);
  for (size_t i = 0; i < members.size(); ++i)
    out.stationary[members[i]] = mu[i];

  const auto& sp = model.space;
  const int reset_super = sp.superstate_index(0, 0);
  for (size_t i = 0; i < members.size(); ++i) {
    const int s = members[i];
    const Action a = policy[s];
    out.gain_per_epoch += mu[i] * model.reward_value(s, a);
    if (a == Action::sense)
      out.expected_tasks_per_interval +=
          mu[i] * model.safe_sense[sp.states[s].level];
    else if (a == Action::transmit)
      out.expected_tasks_per_interval +=
          mu[i] * model.safe_transmit[sp.states[s].level];
    if (sp.super_of_state[s] == reset_super)
      out.reset_visit_probability += mu[i];
  }
  if (out.reset_visit_probability > 0) {
    out.expected_tasks_per_interval /= out.reset_visit_probability;
    out.expected_reward_per_interval =
        out.gain_per_epoch / out.reset_visit_probability;
  }
  return out;
}

}  // namespace ostb
