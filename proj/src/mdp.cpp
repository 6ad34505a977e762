#include "ostb/mdp.hpp"

#include <cmath>
#include <stdexcept>

namespace ostb {

int StateSpace::state_index(int level, int tau, int flag) const {
  const int sup = superstate_index(tau, flag);
  if (sup < 0 || level < 0 || level >= params.grid_levels) return -1;
  return super_first_state[sup] + level;
}

int StateSpace::superstate_index(int tau, int flag) const {
  if (flag < 0 || flag > 2) return -1;
  if (tau < 0 || tau >= static_cast<int>(super_by_flag_tau[flag].size()))
    return -1;
  return super_by_flag_tau[flag][tau];
}

StateSpace build_state_space(const DeviceParams& params) {
  params.validate();
  StateSpace sp;
  sp.params = params;
  const int m = params.subintervals;
  const int nv = params.grid_levels;
  for (int f = 0; f < 3; ++f) sp.super_by_flag_tau[f].assign(m, -1);

  auto tau_first = [&](int flag) {
    switch (flag) {
      case 0: return 0;
      case 1: return params.sensing_steps;
      default: return params.sensing_steps + params.transmit_steps;
    }
  };
  const int max_flag = params.has_transmit_task() ? 2 : 1;
  for (int f = 0; f <= max_flag; ++f) {
    for (int tau = tau_first(f); tau < m; ++tau) {
      const int sup = sp.num_superstates();
      sp.superstates.push_back({tau, f});
      sp.super_by_flag_tau[f][tau] = sup;
      sp.super_first_state.push_back(sp.num_states());
      for (int level = 0; level < nv; ++level) {
        sp.states.push_back({level, tau, f});
        sp.super_of_state.push_back(sup);
      }
    }
  }
  return sp;
}

std::vector<Action> allowed_actions(const DeviceParams& params,
                                    const State& s) {
  std::vector<Action> out{Action::sleep};
  if (s.flag == 0 && s.tau <= params.sensing_deadline)
    out.push_back(Action::sense);
  if (params.has_transmit_task() && s.flag == 1 &&
      s.tau >= params.sensing_steps &&
      s.tau <= params.subintervals - params.transmit_steps)
    out.push_back(Action::transmit);
  return out;
}

namespace {

void smooth_rows(Matrix& m, double eps) {
  if (eps <= 0) return;
  for (int i = 0; i < m.rows; ++i) {
    double total = 0;
    for (int j = 0; j < m.cols; ++j) {
      m.at(i, j) += eps;
      total += m.at(i, j);
    }
    for (int j = 0; j < m.cols; ++j) m.at(i, j) /= total;
  }
}

}  // namespace

MicroBuild build_micro_matrices(const DeviceParams& params,
                                const HarvestModel& harvest,
                                const VoltageGrid& grid, int current_bins,
                                LevelRounding rounding, int fine_cells,
                                double smoothing_epsilon) {
  params.validate();
  harvest.validate();
  const int nv = grid.size();
  std::vector<double> av, ap;
  harvest.atoms(current_bins, av, ap);

  MicroBuild out;
  out.matrices.sleep = Matrix(nv, nv);
  out.matrices.sense = Matrix(nv, nv);
  out.safe_sense.resize(nv);
  if (params.has_transmit_task()) {
    out.matrices.transmit = Matrix(nv, nv);
    out.safe_transmit.resize(nv);
  }

  auto fill = [&](Mode mode, int steps, Matrix& dst, std::vector<double>* safe) {
    for (int i = 0; i < nv; ++i) {
      const auto pmf = detail::propagate_voltage(mode, grid.levels[i], steps,
                                                 av, ap, params, fine_cells);
      const auto row = detail::map_to_grid(pmf, grid, rounding);
      for (int j = 0; j < nv; ++j) dst.at(i, j) = row[j];
      if (safe) (*safe)[i] = pmf.tail_at_least(params.v_out);
    }
  };
  fill(Mode::sleep, 1, out.matrices.sleep, nullptr);
  fill(Mode::sense, params.sensing_steps, out.matrices.sense, &out.safe_sense);
  if (params.has_transmit_task())
    fill(Mode::transmit, params.transmit_steps, out.matrices.transmit,
         &out.safe_transmit);

  smooth_rows(out.matrices.sleep, smoothing_epsilon);
  smooth_rows(out.matrices.sense, smoothing_epsilon);
  if (params.has_transmit_task())
    smooth_rows(out.matrices.transmit, smoothing_epsilon);
  return out;
}

std::vector<std::vector<ActionEntry>> assemble_transition_kernel(
    const StateSpace& space, const MicroMatrices& micro) {
  const DeviceParams& p = space.params;
  const int nv = p.grid_levels;
  const int m = p.subintervals;
  if (micro.sleep.rows != nv || micro.sense.rows != nv ||
      (p.has_transmit_task() && micro.transmit.rows != nv))
    throw std::invalid_argument("micro matrices inconsistent with grid size");

  std::vector<std::vector<ActionEntry>> kernel(space.num_states());

  auto make_row = [&](const Matrix& mat, int from_level, int tau,
                      int flag) -> SparseRow {
    SparseRow row;
    const int sup = space.superstate_index(tau, flag);
    if (sup < 0)
      throw std::logic_error("transition lands on inadmissible superstate");
    const int base = space.super_first_state[sup];
    for (int j = 0; j < nv; ++j) {
      const double pr = mat.at(from_level, j);
      if (pr > 0) row.add(base + j, pr);
    }
    return row;
  };

  for (int s = 0; s < space.num_states(); ++s) {
    const State st = space.states[s];
    auto& entries = kernel[s];
    for (Action a : allowed_actions(p, st)) {
      ActionEntry e;
      e.action = a;
      switch (a) {
        case Action::sleep: {
          const bool reset = st.tau == m - 1;
          e.next = make_row(micro.sleep, st.level, reset ? 0 : st.tau + 1,
                            reset ? 0 : st.flag);
          break;
        }
        case Action::sense: {
          const int land = st.tau + p.sensing_steps;
          // A task ending exactly at the interval boundary wraps like the
          // interval reset does.
          if (land == m)
            e.next = make_row(micro.sense, st.level, 0, 0);
          else
            e.next = make_row(micro.sense, st.level, land, 1);
          break;
        }
        case Action::transmit: {
          const int land = st.tau + p.transmit_steps;
          if (land == m)
            e.next = make_row(micro.transmit, st.level, 0, 0);
          else
            e.next = make_row(micro.transmit, st.level, land, 2);
          break;
        }
      }
      entries.push_back(std::move(e));
    }
  }
  return kernel;
}

double sigmoid_reward(double p_safe, double p_safe_at_vmax, double beta,
                      double theta) {
  const double num = 1.0 + std::exp(-beta * (p_safe_at_vmax - theta));
  const double den = 1.0 + std::exp(-beta * (p_safe - theta));
  return num / den;
}

void apply_rewards(const StateSpace& space, const RewardSpec& reward,
                   const std::vector<double>& safe_sense,
                   const std::vector<double>& safe_transmit,
                   std::vector<std::vector<ActionEntry>>& kernel) {
  const int nv = space.params.grid_levels;
  auto task_reward = [&](const std::vector<double>& safe, int level) {
    if (reward.kind == RewardSpec::Kind::basic) return safe[level];
    return sigmoid_reward(safe[level], safe[nv - 1], reward.beta, reward.theta);
  };
  for (int s = 0; s < space.num_states(); ++s) {
    const State st = space.states[s];
    for (auto& e : kernel[s]) {
      switch (e.action) {
        case Action::sleep: e.reward = 0.0; break;
        case Action::sense: e.reward = task_reward(safe_sense, st.level); break;
        case Action::transmit:
          e.reward = task_reward(safe_transmit, st.level);
          break;
      }
    }
  }
}

const ActionEntry* MdpModel::entry(int state, Action a) const {
  for (const auto& e : kernel[state])
    if (e.action == a) return &e;
  return nullptr;
}

double MdpModel::reward_value(int state, Action a) const {
  const ActionEntry* e = entry(state, a);
  if (!e)
    throw std::invalid_argument(std::string("action ") + to_string(a) +
                                " not allowed in state " +
                                std::to_string(state));
  return e->reward;
}

MdpModel build_mdp(const DeviceParams& params, const HarvestModel& harvest,
                   const RewardSpec& reward, const MdpBuildOptions& opt) {
  MdpModel model;
  model.params = params;
  model.harvest = harvest;
  model.grid = VoltageGrid::make(params);
  model.reward = reward;
  model.rounding = opt.rounding;
  model.current_bins = opt.current_bins;
  model.fine_cells = opt.fine_cells;
  model.smoothing_epsilon = opt.smoothing_epsilon;
  model.space = build_state_space(params);
  auto micro =
      build_micro_matrices(params, harvest, model.grid, opt.current_bins,
                           opt.rounding, opt.fine_cells, opt.smoothing_epsilon);
  model.micro = std::move(micro.matrices);
  model.safe_sense = std::move(micro.safe_sense);
  model.safe_transmit = std::move(micro.safe_transmit);
  model.kernel = assemble_transition_kernel(model.space, model.micro);
  apply_rewards(model.space, reward, model.safe_sense, model.safe_transmit,
                model.kernel);
  return model;
}

}  // namespace ostb
