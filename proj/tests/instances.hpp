#pragma once

#include "measure_mdp/mdp.hpp"

namespace mmdp::testing {

// Dissipative two-state instance: action 0 jumps to state 0, action 1 jumps
// to state 1, and only state 1 costs. The optimal loop absorbs at state 0,
// rho* = dirac(0).
inline FiniteMdp make_dissipative_two_state() {
  FiniteMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.gamma = 0.9;
  Matrix go0(2, 2), go1(2, 2);
  go0 << 1, 0, 1, 0;
  go1 << 0, 1, 0, 1;
  mdp.transition = {go0, go1};
  mdp.cost_table.resize(2, 2);
  mdp.cost_table << 0, 0,
                    1, 1;
  return mdp;
}

// Anti-dissipative two-state instance: staying costs 1, swapping is free, so
// the optimal loop is the two-cycle around rho* = [1/2, 1/2]. Summing the
// second dissipation inequality over the two vertices forces alpha <= 0, so
// no storage functional exists.
inline FiniteMdp make_anti_dissipative_two_state() {
  FiniteMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.gamma = 0.9;
  Matrix stay(2, 2), swap(2, 2);
  stay << 1, 0, 0, 1;
  swap << 0, 1, 1, 0;
  mdp.transition = {stay, swap};
  mdp.cost_table.resize(2, 2);
  mdp.cost_table << 1, 0,
                    1, 0;
  return mdp;
}

}  // namespace mmdp::testing
