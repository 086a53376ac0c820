#include "equicompose/semantics.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace eqc {

std::string Label::show(const World& w) const {
  switch (k) {
    case Out:
      return "out(" + w.show(chan) + ",w" + std::to_string(windex) + ")";
    case In:
      return "in(" + w.show(chan) + "," + w.show(recipe) + ")";
    case Tau:
      return "tau";
  }
  return "tau";
}

std::vector<Term> Config::frameValues() const {
  std::vector<Term> out;
  out.reserve(frame.size());
  for (const FrameEntry& e : frame) out.push_back(e.value);
  return out;
}

// Compact binary key over interned ids: terms are hash-consed (TermNode::id)
// and processes are hash-consed (Proc::serial), so equal keys mean equal
// configurations. Parallel components are order-insensitive.
const std::string& Config::key(const World& w) const {
  (void)w;
  if (!key_.empty()) return key_;
  std::string s;
  auto put = [&s](uint64_t v) {
    s.append(reinterpret_cast<const char*>(&v), sizeof v);
  };
  std::vector<uint64_t> ids;
  for (Term n : restricted) ids.push_back(n->id);
  std::sort(ids.begin(), ids.end());
  for (uint64_t v : ids) put(v);
  s += "|";
  ids.clear();
  for (ProcP p : procs) ids.push_back(p->serial);
  std::sort(ids.begin(), ids.end());
  for (uint64_t v : ids) put(v);
  s += "|";
  for (const FrameEntry& e : frame) {
    put(e.value->id);
    put((uint64_t)e.color);
  }
  s += "|";
  for (auto& [v, e] : sigma) {
    put(v);
    put(e.value->id);
  }
  if (diverged) s += "|DIV";
  key_ = std::move(s);
  return key_;
}

Executor::Executor(const Theory& th, ProcFactory& f, std::vector<Term> publics,
                   Bounds bounds)
    : th_(th), f_(f), publics_(std::move(publics)), bounds_(bounds) {}

bool Executor::isPublicChannel(const Config& c, Term chan) const {
  if (!isName(chan) || chan->sort != SortK::Channel) return false;
  return std::find(c.restricted.begin(), c.restricted.end(), chan) ==
         c.restricted.end();
}

// Normalizes a possibly diff-carrying closed term.
static Term evalTerm(const Theory& th, Term t) {
  World& w = th.world();
  if (!containsDiff(w, t)) return th.normalize(t);
  Term l = th.normalize(fstT(w, t));
  Term r = th.normalize(sndT(w, t));
  return w.diffT(l, r);
}

static bool conjHolds(const Theory& th,
                      const std::vector<std::pair<Term, Term>>& eqs,
                      bool sndSide) {
  World& w = th.world();
  for (auto& [l, r] : eqs) {
    Term lv = sndSide ? sndT(w, l) : fstT(w, l);
    Term rv = sndSide ? sndT(w, r) : fstT(w, r);
    try {
      if (th.normalize(lv) != th.normalize(rv)) return false;
    } catch (const Error&) {
      return false; // ill-sorted comparison cannot hold
    }
  }
  return true;
}

void Executor::normalizeTau(Config& c) {
  std::vector<ProcP> out;
  std::deque<ProcP> work(c.procs.begin(), c.procs.end());
  c.procs.clear();
  while (!work.empty()) {
    ProcP p = work.front();
    work.pop_front();
    if (!p) continue;
    switch (p->k) {
      case Proc::Nil:
        break;
      case Proc::Hole:
        fail("UnfilledHole", "cannot execute a context with holes");
      case Proc::Par:
        work.push_front(p->b);
        work.push_front(p->a);
        break;
      case Proc::Repl:
        // eager bounded expansion, copies renamed with spawn indices
        for (int j = bounds_.unfold; j >= 1; --j)
          work.push_front(renameForSpawn(f_, p->a, j));
        break;
      case Proc::New:
        if (std::find(c.restricted.begin(), c.restricted.end(), p->name) !=
            c.restricted.end())
          fail("DuplicateBinder",
               "name " + f_.world().show(p->name) + " restricted twice");
        c.restricted.push_back(p->name);
        work.push_front(p->a);
        break;
      case Proc::Assign: {
        Term v = evalTerm(th_, p->term);
        if (c.sigma.count(p->var))
          fail("DuplicateBinder",
               "variable " + f_.world().str(p->var) + " bound twice");
        c.sigma[p->var] = {v, p->color, true};
        Subst s;
        s.m[p->var] = v;
        work.push_front(procSubst(f_, s, p->a));
        break;
      }
      case Proc::If: {
        bool b1 = conjHolds(th_, p->phi.eqs, false);
        bool b2 =
            conjHolds(th_, p->phi.isDiff ? p->phi.eqsR : p->phi.eqs, true);
        if (b1 != b2) {
          c.diverged = Divergence{p->phi, b1};
          out.push_back(p);
          break;
        }
        work.push_front(b1 ? p->a : p->b);
        break;
      }
      case Proc::In:
      case Proc::Out:
        out.push_back(p);
        break;
    }
    if (c.diverged) break;
  }
  for (ProcP p : work) out.push_back(p); // unprocessed tail after divergence
  c.procs = std::move(out);
}

Config Executor::init(ProcP p) { return init(p, {}, {}); }

Config Executor::init(ProcP p, const std::vector<Term>& restricted,
                      const std::vector<Term>& frame) {
  Config c;
  c.restricted = restricted;
  for (Term v : frame) c.frame.push_back({evalTerm(th_, v), 0});
  c.procs.push_back(p);
  normalizeTau(c);
  return c;
}

const KB& Executor::knowledge(const Config& c) {
  World& w = th_.world();
  std::string key;
  for (const FrameEntry& e : c.frame) {
    uint64_t id = fstT(w, e.value)->id;
    key.append(reinterpret_cast<const char*>(&id), sizeof id);
  }
  auto it = kbMemo_.find(key);
  if (it != kbMemo_.end()) return it->second;
  std::vector<Term> vals;
  for (const FrameEntry& e : c.frame)
    vals.push_back(th_.normalize(fstT(w, e.value)));
  KB kb = saturate(th_, vals, publics_, bounds_.recipes);
  return kbMemo_.emplace(std::move(key), std::move(kb)).first->second;
}

std::optional<Config> Executor::applyOut(const Config& c, size_t i) {
  ProcP p = c.procs[i];
  Config fresh;
  fresh.restricted = c.restricted;
  fresh.frame = c.frame;
  fresh.sigma = c.sigma;
  fresh.procs = c.procs;
  fresh.frame.push_back({evalTerm(th_, p->term), p->color});
  fresh.procs[i] = p->a;
  normalizeTau(fresh);
  return fresh;
}

Term Executor::bindValue(Term recipe, const Config& c) {
  World& w = th_.world();
  std::vector<Term> f1, f2;
  bool biframe = false;
  for (const FrameEntry& e : c.frame) {
    f1.push_back(fstT(w, e.value));
    f2.push_back(sndT(w, e.value));
    biframe |= f1.back() != f2.back();
  }
  Term v1 = evalRecipe(th_, recipe, f1);
  if (!biframe) return v1;
  Term v2 = evalRecipe(th_, recipe, f2);
  return w.diffT(v1, v2);
}

std::optional<Config> Executor::applyIn(const Config& c, size_t i,
                                        Term recipe) {
  ProcP p = c.procs[i];
  Term v;
  try {
    v = bindValue(recipe, c);
  } catch (const Error&) {
    return std::nullopt; // ill-sorted on this frame
  }
  Config fresh;
  fresh.restricted = c.restricted;
  fresh.frame = c.frame;
  fresh.sigma = c.sigma;
  fresh.procs = c.procs;
  if (fresh.sigma.count(p->var))
    fail("DuplicateBinder",
         "variable " + f_.world().str(p->var) + " bound twice");
  fresh.sigma[p->var] = {v, p->color, false};
  Subst s;
  s.m[p->var] = v;
  try {
    fresh.procs[i] = procSubst(f_, s, p->a);
  } catch (const Error&) {
    return std::nullopt; // value ill-sorted in the continuation
  }
  normalizeTau(fresh);
  return fresh;
}

Executor::CfgId Executor::intern(Config c) {
  const std::string& k = c.key(th_.world());
  auto it = idByKey_.find(k);
  if (it != idByKey_.end()) return it->second;
  CfgId id = (CfgId)pool_.size();
  idByKey_.emplace(k, id);
  pool_.push_back(std::move(c));
  return id;
}

const std::vector<Executor::StepI>& Executor::stepsId(CfgId id) {
  if (id < stepsIdMemo_.size() && stepsIdMemo_[id]) return *stepsIdMemo_[id];
  std::vector<Step> raw = stepsRaw(cfg(id));
  auto v = std::make_unique<std::vector<StepI>>();
  v->reserve(raw.size());
  for (Step& s : raw) v->push_back({s.label, intern(std::move(s.config))});
  if (id >= stepsIdMemo_.size()) stepsIdMemo_.resize(id + 1);
  stepsIdMemo_[id] = std::move(v);
  return *stepsIdMemo_[id];
}

const std::vector<Executor::CfgId>& Executor::stepsMatchingId(CfgId id,
                                                              const Label& l) {
  std::array<uint64_t, 4> lk = labelKey(l);
  if (id >= matchIdMemo_.size()) matchIdMemo_.resize(id + 1);
  if (!matchIdMemo_[id])
    matchIdMemo_[id] = std::make_unique<std::vector<MatchEntry>>();
  std::vector<MatchEntry>& entries = *matchIdMemo_[id];
  for (const MatchEntry& e : entries)
    if (e.label == lk) return e.succ;
  std::vector<Config> raw = stepsMatchingRaw(cfg(id), l);
  std::vector<CfgId> out;
  out.reserve(raw.size());
  for (Config& c : raw) out.push_back(intern(std::move(c)));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  entries.push_back({lk, std::move(out)});
  return entries.back().succ;
}

std::vector<Executor::Step> Executor::steps(const Config& c) {
  std::vector<Step> out;
  for (const StepI& s : stepsId(intern(c))) out.push_back({s.label, cfg(s.config)});
  return out;
}

std::vector<Config> Executor::stepsMatching(const Config& c, const Label& l) {
  std::vector<Config> out;
  for (CfgId n : stepsMatchingId(intern(c), l)) out.push_back(cfg(n));
  return out;
}

std::vector<Executor::Step> Executor::stepsRaw(const Config& c) {
  std::vector<Step> out;
  if (c.diverged) return out;
  World& w = th_.world();
  for (size_t i = 0; i < c.procs.size(); ++i) {
    ProcP p = c.procs[i];
    if (p->k == Proc::Out && isPublicChannel(c, p->chan)) {
      if (auto n = applyOut(c, i)) {
        Label l;
        l.k = Label::Out;
        l.chan = p->chan;
        l.windex = (int)c.frame.size() + 1;
        out.push_back({l, std::move(*n)});
      }
    } else if (p->k == Proc::In && isPublicChannel(c, p->chan)) {
      const KB& kb = knowledge(c);
      for (const KBEntry& e : kb.entries) {
        if (isName(e.value) && e.value->sort == SortK::Channel)
          continue; // channel values never flow into base terms
        if (auto n = applyIn(c, i, e.recipe)) {
          Label l;
          l.k = Label::In;
          l.chan = p->chan;
          l.recipe = e.recipe;
          out.push_back({l, std::move(*n)});
        }
      }
    }
  }
  // internal communication on any channel
  for (Config& n : commSteps(c)) {
    Label l;
    l.k = Label::Tau;
    out.push_back({l, std::move(n)});
  }
  return out;
}

std::vector<Config> Executor::commSteps(const Config& c) {
  World& w = th_.world();
  std::vector<Config> out;
  for (size_t i = 0; i < c.procs.size(); ++i) {
    ProcP po = c.procs[i];
    if (po->k != Proc::Out) continue;
    for (size_t j = 0; j < c.procs.size(); ++j) {
      if (i == j) continue;
      ProcP pi = c.procs[j];
      if (pi->k != Proc::In || pi->chan != po->chan) continue;
      Config fresh;
      fresh.restricted = c.restricted;
      fresh.frame = c.frame;
      fresh.sigma = c.sigma;
      fresh.procs = c.procs;
      Term v = evalTerm(th_, po->term);
      if (fresh.sigma.count(pi->var))
        fail("DuplicateBinder",
             "variable " + w.str(pi->var) + " bound twice");
      fresh.sigma[pi->var] = {v, pi->color, false};
      Subst s;
      s.m[pi->var] = v;
      try {
        fresh.procs[j] = procSubst(f_, s, pi->a);
      } catch (const Error&) {
        continue;
      }
      fresh.procs[i] = po->a;
      normalizeTau(fresh);
      out.push_back(std::move(fresh));
    }
  }
  return out;
}

std::vector<Config> Executor::stepsMatchingRaw(const Config& c,
                                               const Label& l) {
  std::vector<Config> out;
  if (c.diverged) return out;
  if (l.k == Label::Tau) return commSteps(c);
  for (size_t i = 0; i < c.procs.size(); ++i) {
    ProcP p = c.procs[i];
    if (l.k == Label::Out && p->k == Proc::Out && p->chan == l.chan &&
        isPublicChannel(c, p->chan) &&
        (int)c.frame.size() + 1 == l.windex) {
      if (auto n = applyOut(c, i)) out.push_back(std::move(*n));
    } else if (l.k == Label::In && p->k == Proc::In && p->chan == l.chan &&
               isPublicChannel(c, p->chan)) {
      if (auto n = applyIn(c, i, l.recipe)) out.push_back(std::move(*n));
    }
  }
  return out;
}

ProcP unfoldReplication(ProcFactory& f, ProcP p, int n) {
  if (!p) return p;
  switch (p->k) {
    case Proc::Repl: {
      // outer copies are renamed first so nested indices match the
      // executor's expansion order
      if (n <= 0) return f.nil();
      ProcP acc = unfoldReplication(f, renameForSpawn(f, p->a, 1), n);
      for (int j = 2; j <= n; ++j)
        acc = f.par(acc, unfoldReplication(f, renameForSpawn(f, p->a, j), n));
      return acc;
    }
    case Proc::Par:
      return f.par(unfoldReplication(f, p->a, n),
                   unfoldReplication(f, p->b, n));
    case Proc::New:
      return f.newn(p->name, unfoldReplication(f, p->a, n));
    case Proc::Assign:
      return f.assign(p->var, p->term, unfoldReplication(f, p->a, n),
                      p->color);
    case Proc::If:
      return f.ifte(p->phi, unfoldReplication(f, p->a, n),
                    unfoldReplication(f, p->b, n), p->color);
    case Proc::In:
      return f.in(p->chan, p->var, unfoldReplication(f, p->a, n), p->color);
    case Proc::Out:
      return f.out(p->chan, p->term, unfoldReplication(f, p->a, n), p->color);
    default:
      return p;
  }
}

ProcP shareViaAssignments(ProcFactory& f, ProcP p,
                          const std::vector<std::pair<Term, Term>>& keyToVar,
                          const std::function<bool(int)>& inBeta) {
  World& w = f.world();
  std::function<Term(Term)> sub = [&](Term t) -> Term {
    for (auto& [k, z] : keyToVar) t = renameName(w, t, k, z);
    return t;
  };
  std::function<ProcP(ProcP)> rec = [&](ProcP q) -> ProcP {
    if (!q) return q;
    bool hit = inBeta(q->color);
    auto m = [&](Term t) { return t && hit ? sub(t) : t; };
    switch (q->k) {
      case Proc::Nil:
      case Proc::Hole:
        return q;
      case Proc::Par:
        return f.par(rec(q->a), rec(q->b));
      case Proc::Repl:
        return f.repl(rec(q->a));
      case Proc::New:
        return f.newn(q->name, rec(q->a));
      case Proc::Assign:
        return f.assign(q->var, m(q->term), rec(q->a), q->color);
      case Proc::If: {
        Formula phi = q->phi;
        if (hit) {
          for (auto& [l, r] : phi.eqs) {
            l = sub(l);
            r = sub(r);
          }
          for (auto& [l, r] : phi.eqsR) {
            l = sub(l);
            r = sub(r);
          }
        }
        return f.ifte(std::move(phi), rec(q->a), rec(q->b), q->color);
      }
      case Proc::In:
        return f.in(q->chan, q->var, rec(q->a), q->color);
      case Proc::Out:
        return f.out(q->chan, m(q->term), rec(q->a), q->color);
    }
    return q;
  };
  ProcP body = rec(p);
  for (size_t i = keyToVar.size(); i-- > 0;)
    body = f.assign(keyToVar[i].second->ident, keyToVar[i].first, body, 0);
  return body;
}

std::vector<TraceNode> explore(Executor& ex, const Config& start) {
  std::vector<TraceNode> out;
  struct QN {
    std::vector<Label> labels;
    Executor::CfgId id;
  };
  std::deque<QN> queue;
  std::map<Executor::CfgId, int> visited; // id -> shortest depth seen
  Executor::CfgId s0 = ex.intern(start);
  queue.push_back({{}, s0});
  visited[s0] = 0;
  out.push_back({{}, ex.cfg(s0)});
  while (!queue.empty()) {
    QN node = std::move(queue.front());
    queue.pop_front();
    if ((int)node.labels.size() >= ex.bounds().actions) continue;
    for (const Executor::StepI& s : ex.stepsId(node.id)) {
      int d = (int)node.labels.size() + 1;
      auto it = visited.find(s.config);
      if (it != visited.end() && it->second <= d) continue;
      visited[s.config] = d;
      std::vector<Label> labels = node.labels;
      labels.push_back(s.label);
      out.push_back({labels, ex.cfg(s.config)});
      queue.push_back({std::move(labels), s.config});
    }
  }
  return out;
}

}  // namespace eqc
