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

#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "itd/summation.hpp"

namespace itd::transport::detail {

namespace {
constexpr signed char kStateTree = 0;
constexpr signed char kStateLower = 1;
constexpr signed char kDirUp = 1;
constexpr signed char kDirDown = -1;
}  // namespace

NetworkSimplex::Status NetworkSimplex::solve(std::span<const double> cost, std::size_t m,
                                             std::size_t n, std::span<const double> supply,
                                             std::span<const double> demand,
                                             std::uint64_t max_pivots) {
  m_ = m;
  n_ = n;
  init(cost, supply, demand);
  pivots_ = 0;
  while (find_entering_arc()) {
    if (pivots_ >= max_pivots) return Status::kIterationLimit;
    find_join_node();
    // Every cycle contains an arc whose flow decreases: real arcs only run
    // source -> sink, so the residual graph has no forward-directed cycle.
    find_leaving_arc();
    change_flow();
    update_tree_structure();
    update_potential();
    ++pivots_;
  }
  return Status::kOptimal;
}

void NetworkSimplex::init(std::span<const double> cost, std::span<const double> supply,
                          std::span<const double> demand) {
  node_num_ = static_cast<int>(m_ + n_);
  arc_num_ = static_cast<int>(m_ * n_);
  root_ = node_num_;
  const int all_arcs = arc_num_ + node_num_;
  const int all_nodes = node_num_ + 1;

  source_.resize(all_arcs);
  target_.resize(all_arcs);
  cost_.resize(all_arcs);
  flow_.assign(all_arcs, 0.0);
  state_.resize(all_arcs);
  pi_.resize(all_nodes);
  parent_.resize(all_nodes);
  pred_.resize(all_nodes);
  thread_.resize(all_nodes);
  rev_thread_.resize(all_nodes);
  succ_num_.resize(all_nodes);
  last_succ_.resize(all_nodes);
  pred_dir_.resize(all_nodes);

  double max_cost = 0.0;
  int e = 0;
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = 0; j < n_; ++j, ++e) {
      source_[e] = static_cast<int>(i);
      target_[e] = static_cast<int>(m_ + j);
      cost_[e] = cost[e];
      state_[e] = kStateLower;
      max_cost = std::max(max_cost, cost[e]);
    }
  }
  const double art_cost = (max_cost + 1.0) * static_cast<double>(node_num_);
  pricing_tolerance_ = 16.0 * std::numeric_limits<double>::epsilon() * art_cost;

  parent_[root_] = -1;
  pred_[root_] = -1;
  thread_[root_] = 0;
  rev_thread_[0] = root_;
  succ_num_[root_] = node_num_ + 1;
  last_succ_[root_] = root_ - 1;
  pi_[root_] = 0.0;
  pred_dir_[root_] = 0;

  for (int u = 0; u < node_num_; ++u) {
    const int a = arc_num_ + u;
    parent_[u] = root_;
    pred_[u] = a;
    thread_[u] = u + 1;
    rev_thread_[u + 1] = u;
    succ_num_[u] = 1;
    last_succ_[u] = u;
    state_[a] = kStateTree;
    const double s = u < static_cast<int>(m_) ? supply[u] : -demand[u - m_];
    if (s >= 0.0) {
      pred_dir_[u] = kDirUp;
      pi_[u] = 0.0;
      source_[a] = u;
      target_[a] = root_;
      flow_[a] = s;
      cost_[a] = 0.0;
    } else {
      pred_dir_[u] = kDirDown;
      pi_[u] = art_cost;
      source_[a] = root_;
      target_[a] = u;
      flow_[a] = -s;
      cost_[a] = art_cost;
    }
  }

  block_size_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(arc_num_))));
  block_size_ = std::min(block_size_, arc_num_);
  next_arc_ = 0;
}

bool NetworkSimplex::find_entering_arc() {
  double best = -pricing_tolerance_;
  bool found = false;
  int cnt = block_size_;
  auto scan = [&](int e) {
    const double c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (c < best) {
      best = c;
      in_arc_ = e;
      found = true;
    }
    if (--cnt == 0) {
      if (found) return true;
      cnt = block_size_;
    }
    return false;
  };
  for (int e = next_arc_; e < arc_num_; ++e) {
    if (scan(e)) {
      next_arc_ = e + 1 == arc_num_ ? 0 : e + 1;
      return true;
    }
  }
  for (int e = 0; e < next_arc_; ++e) {
    if (scan(e)) {
      next_arc_ = e + 1;
      return true;
    }
  }
  return found;
}

void NetworkSimplex::find_join_node() {
  int u = source_[in_arc_];
  int v = target_[in_arc_];
  while (u != v) {
    if (succ_num_[u] < succ_num_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  join_ = u;
}

bool NetworkSimplex::find_leaving_arc() {
  // The entering arc is at its lower bound, so flow is pushed from its
  // source to its target around the cycle.
  const int first = source_[in_arc_];
  const int second = target_[in_arc_];
  delta_ = std::numeric_limits<double>::infinity();
  int result = 0;
  for (int u = first; u != join_; u = parent_[u]) {
    if (pred_dir_[u] == kDirUp) {
      const double d = flow_[pred_[u]];
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
  }
  for (int u = second; u != join_; u = parent_[u]) {
    if (pred_dir_[u] == kDirDown) {
      const double d = flow_[pred_[u]];
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
  }
  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
  return result != 0;
}

void NetworkSimplex::change_flow() {
  if (delta_ > 0.0) {
    const double val = delta_;
    flow_[in_arc_] += val;
    for (int u = source_[in_arc_]; u != join_; u = parent_[u]) {
      flow_[pred_[u]] -= pred_dir_[u] * val;
    }
    for (int u = target_[in_arc_]; u != join_; u = parent_[u]) {
      flow_[pred_[u]] += pred_dir_[u] * val;
    }
  }
  state_[in_arc_] = kStateTree;
  const int leaving = pred_[u_out_];
  flow_[leaving] = 0.0;
  state_[leaving] = kStateLower;
}

void NetworkSimplex::update_tree_structure() {
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  v_out_ = parent_[u_out_];

  if (u_in_ == u_out_) {
    parent_[u_in_] = v_in_;
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kDirUp : kDirDown;

    if (thread_[v_in_] != u_out_) {
      int after = thread_[old_last_succ];
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
      after = thread_[v_in_];
      thread_[v_in_] = u_out_;
      rev_thread_[u_out_] = v_in_;
      thread_[old_last_succ] = after;
      rev_thread_[after] = old_last_succ;
    }
  } else {
    // When old_rev_thread == v_in, join and v_out coincide.
    const int thread_continue =
        old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

    // Re-hang the stem nodes between u_in and u_out.
    int stem = u_in_;
    int par_stem = v_in_;
    int last = last_succ_[u_in_];
    int after = thread_[last];
    thread_[v_in_] = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    while (stem != u_out_) {
      const int next_stem = parent_[stem];
      thread_[last] = next_stem;
      dirty_revs_.push_back(last);

      const int before = rev_thread_[stem];
      thread_[before] = after;
      rev_thread_[after] = before;

      parent_[stem] = par_stem;
      par_stem = stem;
      stem = next_stem;

      last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
      after = thread_[last];
    }
    parent_[u_out_] = par_stem;
    thread_[last] = thread_continue;
    rev_thread_[thread_continue] = last;
    last_succ_[u_out_] = last;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
    }

    for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

    // Reverse pred / pred_dir along the stem and fix subtree sizes.
    int tmp_sc = 0;
    const int tmp_ls = last_succ_[u_out_];
    for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
      pred_[u] = pred_[p];
      pred_dir_[u] = static_cast<signed char>(-pred_dir_[p]);
      tmp_sc += succ_num_[u] - succ_num_[p];
      succ_num_[u] = tmp_sc;
      last_succ_[p] = tmp_ls;
    }
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kDirUp : kDirDown;
    succ_num_[u_in_] = old_succ_num;
  }

  const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
  const int last_succ_out = last_succ_[u_out_];
  for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) {
    last_succ_[u] = last_succ_out;
  }

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = old_rev_thread;
    }
  } else if (last_succ_out != old_last_succ) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = last_succ_out;
    }
  }

  for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void NetworkSimplex::update_potential() {
  const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost_[in_arc_];
  const int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

double NetworkSimplex::objective() const {
  CompensatedSum acc;
  for (int e = 0; e < arc_num_; ++e) {
    if (flow_[e] != 0.0) acc.add(cost_[e] * flow_[e]);
  }
  return acc.value();
}

double NetworkSimplex::artificial_flow() const {
  double worst = 0.0;
  for (int u = 0; u < node_num_; ++u) worst = std::max(worst, std::abs(flow_[arc_num_ + u]));
  return worst;
}

}  // namespace itd::transport::detail
