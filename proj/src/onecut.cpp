#include "tileplan/onecut.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>

#include "tileplan/assign.hpp"
#include "tileplan/cost.hpp"
#include "tileplan/error.hpp"

namespace tileplan {

namespace {

// index of every op touching each tensor, in op order
std::map<std::string, std::vector<std::size_t>> incidence(const DataflowGraph& g) {
  std::map<std::string, std::vector<std::size_t>> inc;
  for (std::size_t i = 0; i < g.ops.size(); ++i) {
    std::set<std::string> seen;
    for (const auto& t : g.ops[i].inputs)
      if (seen.insert(t).second) inc[t].push_back(i);
    if (seen.insert(g.ops[i].output).second) inc[g.ops[i].output].push_back(i);
  }
  return inc;
}

}  // namespace

LevelPlan bfs_levels(const DataflowGraph& g) {
  const std::size_t n = g.ops.size();
  auto inc = incidence(g);

  // op-op adjacency through shared tensors
  std::vector<std::set<std::size_t>> adj(n);
  for (const auto& [tid, ops] : inc) {
    (void)tid;
    for (std::size_t a : ops)
      for (std::size_t b : ops)
        if (a != b) adj[a].insert(b);
  }

  // connected components, ordered by their smallest op id
  std::vector<int> comp(n, -1);
  std::vector<std::pair<std::string, std::vector<std::size_t>>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    if (comp[i] >= 0) continue;
    std::vector<std::size_t> members;
    std::vector<std::size_t> stack{i};
    comp[i] = static_cast<int>(comps.size());
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      members.push_back(v);
      for (std::size_t w : adj[v])
        if (comp[w] < 0) {
          comp[w] = comp[i];
          stack.push_back(w);
        }
    }
    std::string min_id = g.ops[members[0]].id;
    for (std::size_t m : members) min_id = std::min(min_id, g.ops[m].id);
    comps.emplace_back(min_id, std::move(members));
  }
  std::sort(comps.begin(), comps.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  LevelPlan lp;
  for (const auto& [min_id, members] : comps) {
    (void)min_id;
    // seeds: ops fed entirely by graph inputs (a DAG always has one)
    std::vector<std::size_t> seeds;
    for (std::size_t m : members) {
      bool all_source = true;
      for (const auto& t : g.ops[m].inputs)
        if (!g.is_graph_input(t)) all_source = false;
      if (all_source) seeds.push_back(m);
    }
    if (seeds.empty()) {
      std::size_t best = members[0];
      for (std::size_t m : members)
        if (g.ops[m].id < g.ops[best].id) best = m;
      seeds.push_back(best);
    }

    std::map<std::size_t, int> dist;
    std::vector<std::size_t> frontier = seeds;
    for (std::size_t s : seeds) dist[s] = 0;
    int d = 0;
    while (!frontier.empty()) {
      std::vector<std::size_t> next;
      for (std::size_t v : frontier)
        for (std::size_t w : adj[v])
          if (!dist.count(w)) {
            dist[w] = d + 1;
            next.push_back(w);
          }
      frontier = std::move(next);
      ++d;
    }
    std::vector<std::vector<std::string>> local(static_cast<std::size_t>(d));
    for (const auto& [op, dd] : dist)
      local[static_cast<std::size_t>(dd)].push_back(g.ops[op].id);
    for (auto& lv : local) {
      std::sort(lv.begin(), lv.end());
      lp.levels.push_back(std::move(lv));
    }
  }

  // frontier after level l: tensors spanning the cut between <=l and >l
  std::map<std::string, std::size_t> level_of;
  for (std::size_t l = 0; l < lp.levels.size(); ++l)
    for (const auto& id : lp.levels[l]) level_of[id] = l;
  std::map<std::string, std::pair<std::size_t, std::size_t>> span;  // min,max level
  for (const auto& [tid, ops] : inc) {
    std::size_t lo = lp.levels.size(), hi = 0;
    for (std::size_t o : ops) {
      std::size_t l = level_of.at(g.ops[o].id);
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    span[tid] = {lo, hi};
  }
  lp.frontiers.assign(lp.levels.size(), {});
  for (const auto& [tid, se] : span)
    for (std::size_t l = se.first; l < se.second; ++l)
      lp.frontiers[l].push_back(tid);
  for (auto& f : lp.frontiers) std::sort(f.begin(), f.end());
  return lp;
}

namespace {

struct OpTable {
  std::size_t op_index = 0;
  std::vector<std::string> operands;       // unique, first-appearance order
  std::vector<std::size_t> strides;        // row-major over operand candidates
  std::vector<std::int64_t> cost;          // -1 where no feasible form exists
};

struct Entry {
  std::vector<std::uint8_t> key;      // candidate index per frontier tensor
  std::int64_t cost = 0;
  std::size_t parent = 0;             // entry index in previous level
  std::vector<std::uint8_t> decided;  // picks for tensors first seen here
};

}  // namespace

OnecutResult onecut(const DataflowGraph& g) {
  LevelPlan lp = bfs_levels(g);
  std::map<std::string, std::vector<Tiling>> cands;
  for (const auto& [id, t] : g.tensors) {
    (void)t;
    cands[id] = candidate_tilings_for(g, id, 1);
    if (cands[id].empty()) fail("no candidate tiling for tensor " + id);
  }

  auto inc = incidence(g);
  std::map<std::string, std::size_t> op_index;
  for (std::size_t i = 0; i < g.ops.size(); ++i) op_index[g.ops[i].id] = i;

  // per-op cost tables over operand candidate indices
  std::map<std::string, OpTable> tables;
  for (const auto& op : g.ops) {
    OpTable t;
    t.op_index = op_index.at(op.id);
    for (const auto& tid : op.inputs)
      if (std::find(t.operands.begin(), t.operands.end(), tid) == t.operands.end())
        t.operands.push_back(tid);
    if (std::find(t.operands.begin(), t.operands.end(), op.output) == t.operands.end())
      t.operands.push_back(op.output);
    std::size_t total = 1;
    t.strides.assign(t.operands.size(), 0);
    for (std::size_t j = t.operands.size(); j-- > 0;) {
      t.strides[j] = total;
      total *= cands.at(t.operands[j]).size();
    }
    t.cost.assign(total, -1);
    std::vector<std::size_t> pick(t.operands.size(), 0);
    for (std::size_t e = 0; e < total; ++e) {
      TilingAssignment a;
      a.k = 1;
      for (std::size_t j = 0; j < t.operands.size(); ++j)
        a.tilings[t.operands[j]] = cands.at(t.operands[j])[pick[j]];
      t.cost[e] = op_comm_cost(g, op, a).elements;
      for (std::size_t j = t.operands.size(); j-- > 0;) {
        if (++pick[j] < cands.at(t.operands[j]).size()) break;
        pick[j] = 0;
      }
    }
    tables[op.id] = std::move(t);
  }

  // tensors decided at each level: first incidence wins
  std::vector<std::vector<std::string>> decided_at(lp.levels.size());
  std::set<std::string> seen;
  for (std::size_t l = 0; l < lp.levels.size(); ++l) {
    std::set<std::string> scope;
    for (const auto& oid : lp.levels[l]) {
      const auto& op = g.ops[op_index.at(oid)];
      for (const auto& tid : op.inputs) scope.insert(tid);
      scope.insert(op.output);
    }
    for (const auto& tid : scope)
      if (seen.insert(tid).second) decided_at[l].push_back(tid);
  }

  std::vector<std::vector<Entry>> dp(lp.levels.size() + 1);
  dp[0].push_back(Entry{});
  std::size_t max_states = 1;

  for (std::size_t l = 0; l < lp.levels.size(); ++l) {
    const auto& prev_frontier = l == 0 ? std::vector<std::string>{} : lp.frontiers[l - 1];
    const auto& next_frontier = lp.frontiers[l];
    const auto& fresh = decided_at[l];

    std::map<std::string, std::size_t> prev_pos, fresh_pos;
    for (std::size_t i = 0; i < prev_frontier.size(); ++i) prev_pos[prev_frontier[i]] = i;
    for (std::size_t i = 0; i < fresh.size(); ++i) fresh_pos[fresh[i]] = i;

    std::map<std::vector<std::uint8_t>, std::size_t> best;  // key -> entry index
    std::vector<Entry>& out = dp[l + 1];

    for (std::size_t pe = 0; pe < dp[l].size(); ++pe) {
      const Entry& prev = dp[l][pe];
      std::vector<std::uint8_t> combo(fresh.size(), 0);
      while (true) {
        auto pick_of = [&](const std::string& tid) -> std::uint8_t {
          auto it = fresh_pos.find(tid);
          if (it != fresh_pos.end()) return combo[it->second];
          return prev.key[prev_pos.at(tid)];
        };
        std::int64_t level_cost = 0;
        bool feasible = true;
        for (const auto& oid : lp.levels[l]) {
          const OpTable& t = tables.at(oid);
          std::size_t e = 0;
          for (std::size_t j = 0; j < t.operands.size(); ++j)
            e += t.strides[j] * pick_of(t.operands[j]);
          if (t.cost[e] < 0) {
            feasible = false;
            break;
          }
          level_cost += t.cost[e];
        }
        if (feasible) {
          Entry cand;
          cand.cost = prev.cost + level_cost;
          cand.parent = pe;
          cand.decided = combo;
          cand.key.resize(next_frontier.size());
          for (std::size_t i = 0; i < next_frontier.size(); ++i)
            cand.key[i] = pick_of(next_frontier[i]);
          auto it = best.find(cand.key);
          if (it == best.end()) {
            best[cand.key] = out.size();
            out.push_back(std::move(cand));
          } else if (cand.cost < out[it->second].cost) {
            out[it->second] = std::move(cand);
          }
        }
        // odometer, rightmost fastest: lexicographic over the fresh tensors
        bool wrapped = true;
        for (std::size_t j = fresh.size(); j-- > 0;) {
          if (++combo[j] < cands.at(fresh[j]).size()) {
            wrapped = false;
            break;
          }
          combo[j] = 0;
        }
        if (wrapped) break;
      }
    }
    if (out.empty()) fail("no feasible tiling at level " + std::to_string(l));
    max_states = std::max(max_states, out.size());
  }

  OnecutResult r;
  r.assignment.k = 1;
  r.max_states = max_states;

  if (lp.levels.empty()) {
    for (const auto& [id, cs] : cands) r.assignment.tilings[id] = cs[0];
    return r;
  }

  // final frontier is empty, so the last level holds exactly one entry
  std::size_t cur = 0;
  std::int64_t best_cost = dp.back()[0].cost;
  for (std::size_t i = 1; i < dp.back().size(); ++i)
    if (dp.back()[i].cost < best_cost) {
      best_cost = dp.back()[i].cost;
      cur = i;
    }
  r.cost = best_cost;
  for (std::size_t l = lp.levels.size(); l-- > 0;) {
    const Entry& e = dp[l + 1][cur];
    for (std::size_t i = 0; i < decided_at[l].size(); ++i)
      r.assignment.tilings[decided_at[l][i]] = cands.at(decided_at[l][i])[e.decided[i]];
    cur = e.parent;
  }
  for (const auto& [id, cs] : cands)
    if (!r.assignment.tilings.count(id)) r.assignment.tilings[id] = cs[0];
  return r;
}

}  // namespace tileplan
