/*
 * Copyright 2026 The ITD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace itd::transport::detail {

// Primal network simplex for the uncapacitated transportation problem
//
//   min sum_ij c_ij f_ij   s.t.  sum_j f_ij = a_i,  sum_i f_ij = b_j,  f >= 0.
//
// Sources are nodes [0, m), sinks [m, m + n), plus an artificial root joined
// to every node. The spanning-tree basis is stored with parent / thread /
// reverse-thread / subtree-size arrays so each pivot costs O(cycle + moved
// subtree). Pricing is block search over the arc list.
//
// One instance is reusable; buffers are kept across solves.
class NetworkSimplex {
 public:
  enum class Status { kOptimal, kIterationLimit };

  Status solve(std::span<const double> cost, std::size_t m, std::size_t n,
               std::span<const double> supply, std::span<const double> demand,
               std::uint64_t max_pivots);

  // Optimal objective, summed with compensation over the real arcs.
  double objective() const;
  // Largest flow left on an artificial arc; zero for a feasible basis.
  double artificial_flow() const;
  double flow(std::size_t i, std::size_t j) const noexcept { return flow_[i * n_ + j]; }
  std::uint64_t pivots() const noexcept { return pivots_; }

 private:
  void init(std::span<const double> cost, std::span<const double> supply,
            std::span<const double> demand);
  bool find_entering_arc();
  void find_join_node();
  bool find_leaving_arc();
  void change_flow();
  void update_tree_structure();
  void update_potential();

  std::size_t m_ = 0;
  std::size_t n_ = 0;
  int node_num_ = 0;
  int arc_num_ = 0;  // real arcs; artificial arc of node u is arc_num_ + u
  int root_ = 0;

  std::vector<int> source_;
  std::vector<int> target_;
  std::vector<double> cost_;
  std::vector<double> flow_;
  std::vector<signed char> state_;  // 1 = at lower bound, 0 = in tree

  std::vector<double> pi_;
  std::vector<int> parent_;
  std::vector<int> pred_;
  std::vector<int> thread_;
  std::vector<int> rev_thread_;
  std::vector<int> succ_num_;
  std::vector<int> last_succ_;
  std::vector<signed char> pred_dir_;  // +1: pred arc points up to parent
  std::vector<int> dirty_revs_;

  int block_size_ = 0;
  int next_arc_ = 0;
  double pricing_tolerance_ = 0.0;

  int in_arc_ = 0;
  int join_ = 0;
  int u_in_ = 0;
  int v_in_ = 0;
  int u_out_ = 0;
  int v_out_ = 0;
  double delta_ = 0.0;

  std::uint64_t pivots_ = 0;
};

}  // namespace itd::transport::detail
