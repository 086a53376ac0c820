#include "equicompose/equivalence.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace eqc {

namespace {

using CfgId = Executor::CfgId;

// tau-closure of a set of configuration ids, sorted and deduplicated
std::vector<CfgId> tauClose(Executor& ex, std::vector<CfgId> set) {
  std::set<CfgId> seen;
  std::deque<CfgId> work;
  for (CfgId c : set)
    if (seen.insert(c).second) work.push_back(c);
  while (!work.empty()) {
    CfgId c = work.front();
    work.pop_front();
    for (CfgId n : ex.stepsMatchingId(c, Label{})) // Tau label
      if (seen.insert(n).second) work.push_back(n);
  }
  return {seen.begin(), seen.end()};
}

}  // namespace

EquivResult traceIncluded(Executor& exA, const Config& a, Executor& exB,
                          const Config& b) {
  const World& w = exA.theory().world();
  EquivResult res;
  std::map<std::pair<CfgId, CfgId>, StaticEquivResult> frameMemo;
  auto framePair = [&](CfgId ai, CfgId bi) -> const StaticEquivResult& {
    auto key = std::make_pair(ai, bi);
    auto it = frameMemo.find(key);
    if (it != frameMemo.end()) return it->second;
    StaticEquivResult r =
        staticEquiv(exA.theory(), exA.cfg(ai).frameValues(),
                    exB.cfg(bi).frameValues(), exA.publics(),
                    exA.bounds().recipes);
    return frameMemo.emplace(key, std::move(r)).first->second;
  };

  // B-sets are interned too: visited states and set transitions become
  // integer pairs instead of repeated vector work.
  std::map<std::vector<CfgId>, int> setIds;
  std::vector<const std::vector<CfgId>*> setById;
  auto internSet = [&](std::vector<CfgId> s) -> int {
    auto [it, fresh] = setIds.emplace(std::move(s), (int)setById.size());
    if (fresh) setById.push_back(&it->first);
    return it->second;
  };
  // (set, label) -> successor set, -1 when no B trace matches
  std::map<std::pair<int, std::array<uint64_t, 4>>, int> setTrans;

  struct Node {
    std::vector<Label> labels;
    CfgId aId;
    int bSet; // interned set id
  };

  auto frameMatched = [&](const Node& n) -> bool {
    // some matched B configuration must be statically equivalent
    const StaticEquivResult* last = nullptr;
    for (CfgId bi : *setById[n.bSet]) {
      const StaticEquivResult& r = framePair(n.aId, bi);
      if (r.verdict == Verdict::Holds) return true;
      last = &r;
    }
    TraceWitness wit;
    wit.labels = n.labels;
    wit.reason = "frames-distinguished";
    if (last) {
      wit.recipeM = last->recipeM;
      wit.recipeN = last->recipeN;
    }
    res.verdict = Verdict::Refuted;
    res.witness = std::move(wit);
    return false;
  };

  std::deque<Node> queue;
  std::map<std::pair<CfgId, int>, int> visited;
  auto cfgHasDiff = [&w](const Config& c) {
    for (ProcP p : c.procs)
      if (procHasDiff(w, p)) return true;
    for (Term v : c.frameValues())
      if (containsDiff(w, v)) return true;
    return false;
  };
  Node start{{}, exA.intern(a),
             internSet(tauClose(exB, {exB.intern(b)}))};
  bool hasDiff = cfgHasDiff(exA.cfg(start.aId));
  for (CfgId bi : *setById[start.bSet])
    hasDiff = hasDiff || cfgHasDiff(exB.cfg(bi));
  if (hasDiff) {
    res.verdict = Verdict::Unknown;
    res.note = "diff processes are not supported by trace inclusion";
    return res;
  }
  if (!frameMatched(start)) return res;
  visited[{start.aId, start.bSet}] = 0;
  queue.push_back(std::move(start));

  while (!queue.empty()) {
    Node node = std::move(queue.front());
    queue.pop_front();
    ++res.statesExplored;
    if ((int)node.labels.size() >= exA.bounds().actions) continue;
    for (const Executor::StepI& s : exA.stepsId(node.aId)) {
      Node next;
      next.labels = node.labels;
      next.labels.push_back(s.label);
      next.aId = s.config;
      if (s.label.k == Label::Tau) {
        next.bSet = node.bSet; // silent moves need no match
      } else {
        auto tk = std::make_pair(node.bSet, Executor::labelKey(s.label));
        auto tit = setTrans.find(tk);
        if (tit != setTrans.end()) {
          next.bSet = tit->second;
        } else {
          std::vector<CfgId> matched;
          for (CfgId bi : *setById[node.bSet])
            for (CfgId n : exB.stepsMatchingId(bi, s.label))
              matched.push_back(n);
          std::vector<CfgId> closed = tauClose(exB, std::move(matched));
          next.bSet = closed.empty() ? -1 : internSet(std::move(closed));
          setTrans.emplace(tk, next.bSet);
        }
        if (next.bSet < 0) {
          TraceWitness wit;
          wit.labels = next.labels;
          wit.reason = "no-matching-trace";
          res.verdict = Verdict::Refuted;
          res.witness = std::move(wit);
          return res;
        }
      }
      int d = (int)next.labels.size();
      auto key = std::make_pair(next.aId, next.bSet);
      auto it = visited.find(key);
      if (it != visited.end() && it->second <= d) continue;
      // visited nodes were already frame-checked on first insertion
      if (!frameMatched(next)) return res;
      visited[key] = d;
      queue.push_back(std::move(next));
    }
  }
  res.verdict = Verdict::Holds;
  return res;
}

EquivResult traceEquiv(Executor& exA, const Config& a, Executor& exB,
                       const Config& b) {
  EquivResult r1 = traceIncluded(exA, a, exB, b);
  if (r1.verdict != Verdict::Holds) {
    r1.note = r1.note.empty() ? "inclusion of first in second fails" : r1.note;
    return r1;
  }
  EquivResult r2 = traceIncluded(exB, b, exA, a);
  r2.statesExplored += r1.statesExplored;
  if (r2.verdict != Verdict::Holds)
    r2.note = r2.note.empty() ? "inclusion of second in first fails" : r2.note;
  return r2;
}

EquivResult diffEquiv(Executor& ex, const Config& start) {
  const World& w = ex.theory().world();
  EquivResult res;
  std::map<std::string, StaticEquivResult> frameMemo;

  auto checkCfg = [&](const Config& c,
                      const std::vector<Label>& labels) -> bool {
    if (c.diverged) {
      TraceWitness wit;
      wit.labels = labels;
      wit.reason = "divergence";
      wit.divergence = c.diverged;
      res.verdict = Verdict::Refuted;
      res.witness = std::move(wit);
      return false;
    }
    std::vector<Term> f1, f2;
    for (Term v : c.frameValues()) {
      f1.push_back(fstT(ex.theory().world(), v));
      f2.push_back(sndT(ex.theory().world(), v));
    }
    std::string key;
    for (Term v : c.frameValues()) {
      uint64_t id = v->id;
      key.append(reinterpret_cast<const char*>(&id), sizeof id);
    }
    auto it = frameMemo.find(key);
    if (it == frameMemo.end())
      it = frameMemo
               .emplace(key, staticEquiv(ex.theory(), f1, f2, ex.publics(),
                                         ex.bounds().recipes))
               .first;
    if (it->second.verdict != Verdict::Holds) {
      TraceWitness wit;
      wit.labels = labels;
      wit.reason = "frames-distinguished";
      wit.recipeM = it->second.recipeM;
      wit.recipeN = it->second.recipeN;
      res.verdict =
          it->second.verdict == Verdict::Unknown ? Verdict::Unknown
                                                 : Verdict::Refuted;
      res.witness = std::move(wit);
      return false;
    }
    return true;
  };

  struct Node {
    std::vector<Label> labels;
    CfgId id;
  };
  std::deque<Node> queue;
  std::map<CfgId, int> visited;
  CfgId s0 = ex.intern(start);
  if (!checkCfg(ex.cfg(s0), {})) return res;
  visited[s0] = 0;
  queue.push_back({{}, s0});
  while (!queue.empty()) {
    Node node = std::move(queue.front());
    queue.pop_front();
    ++res.statesExplored;
    if ((int)node.labels.size() >= ex.bounds().actions) continue;
    for (const Executor::StepI& s : ex.stepsId(node.id)) {
      std::vector<Label> labels = node.labels;
      labels.push_back(s.label);
      int d = (int)labels.size();
      auto it = visited.find(s.config);
      if (it != visited.end() && it->second <= d) continue;
      if (!checkCfg(ex.cfg(s.config), labels)) return res;
      visited[s.config] = d;
      queue.push_back({std::move(labels), s.config});
    }
  }
  res.verdict = Verdict::Holds;
  return res;
}

}  // namespace eqc
