#include "equicompose/composition.hpp"

#include <algorithm>
#include <functional>

namespace eqc {

namespace {

bool inClass(const Partition& part, int g, int theory) {
  return g == 0 ? part.inAlpha(theory) : part.inBeta(theory);
}

void collectSyms(Term t, std::vector<int>& out) {
  if (!isApp(t)) return;
  out.push_back(t->sym);
  for (Term a : t->args) collectSyms(a, out);
}

// innermost assignment variable whose scope contains the hole
uint32_t holeAssignVar(ProcP p, uint32_t current = 0) {
  if (!p) return 0;
  if (p->k == Proc::Hole) return current;
  uint32_t next = p->k == Proc::Assign ? p->var : current;
  if (uint32_t r = holeAssignVar(p->a, next)) return r;
  return holeAssignVar(p->b, next);
}

bool holeUnderBang(ProcP p) {
  if (!p) return false;
  if (p->k == Proc::Repl && p->a && p->a->k == Proc::Hole) return true;
  return holeUnderBang(p->a) || holeUnderBang(p->b);
}

ProcP stripBangAtHole(ProcFactory& f, ProcP p) {
  if (!p) return p;
  if (p->k == Proc::Repl && p->a && p->a->k == Proc::Hole) return p->a;
  Proc q = *p;
  ProcP a = stripBangAtHole(f, p->a);
  ProcP b = stripBangAtHole(f, p->b);
  if (a == p->a && b == p->b) return p;
  switch (p->k) {
    case Proc::Par:
      return f.par(a, b);
    case Proc::Repl:
      return f.repl(a);
    case Proc::New:
      return f.newn(p->name, a);
    case Proc::Assign:
      return f.assign(p->var, p->term, a, p->color);
    case Proc::If:
      return f.ifte(p->phi, a, b, p->color);
    case Proc::In:
      return f.in(p->chan, p->var, a, p->color);
    case Proc::Out:
      return f.out(p->chan, p->term, a, p->color);
    default:
      return p;
  }
}

// applies tf(term, color) to every term position of the process
ProcP mapProcTerms(ProcFactory& f, ProcP p,
                   const std::function<Term(Term, int)>& tf) {
  if (!p) return p;
  switch (p->k) {
    case Proc::Nil:
    case Proc::Hole:
      return p;
    case Proc::Par:
      return f.par(mapProcTerms(f, p->a, tf), mapProcTerms(f, p->b, tf));
    case Proc::Repl:
      return f.repl(mapProcTerms(f, p->a, tf));
    case Proc::New:
      return f.newn(p->name, mapProcTerms(f, p->a, tf));
    case Proc::Assign:
      return f.assign(p->var, tf(p->term, p->color),
                      mapProcTerms(f, p->a, tf), p->color);
    case Proc::If: {
      Formula phi = p->phi;
      for (auto& [l, r] : phi.eqs) {
        l = tf(l, p->color);
        r = tf(r, p->color);
      }
      for (auto& [l, r] : phi.eqsR) {
        l = tf(l, p->color);
        r = tf(r, p->color);
      }
      return f.ifte(std::move(phi), mapProcTerms(f, p->a, tf),
                    mapProcTerms(f, p->b, tf), p->color);
    }
    case Proc::In:
      return f.in(p->chan, p->var, mapProcTerms(f, p->a, tf), p->color);
    case Proc::Out:
      return f.out(p->chan, tf(p->term, p->color), mapProcTerms(f, p->a, tf),
                   p->color);
  }
  return p;
}

Term keyBase(Term key, const World& w) {
  if (isName(key)) return key;
  if (isApp(key) && (key->sym == w.S_pk || key->sym == w.S_vk) &&
      key->args.size() == 1 && isName(key->args[0]))
    return key->args[0];
  fail("KeyNotInContext",
       "key must be a name or pk/vk of a name, got " + w.show(key));
}

}  // namespace

Term genName(World& w, const std::string& base, SortK sort) {
  return w.name("#gen/" + base, sort);
}

const HypothesisResult* CompositionReport::find(const std::string& n) const {
  for (const HypothesisResult& h : hypotheses)
    if (h.name == n) return &h;
  return nullptr;
}

void CompositionReport::conclude(const std::string& claimText) {
  conclusion = Verdict::Holds;
  for (const HypothesisResult& h : hypotheses) {
    if (h.verdict == Verdict::Refuted) {
      conclusion = Verdict::Refuted;
      break;
    }
    if (h.verdict == Verdict::Unknown) conclusion = Verdict::Unknown;
  }
  claim = conclusion == Verdict::Holds ? claimText : "";
}

// A listener in(c, x). if x = key then out(c, s) on a fresh public channel
// emits s exactly when the attacker can produce the key, so revelation
// reduces to deducibility of the key at some reached configuration. Keys
// bound under a replication are matched against their spawn renamings.
RevealResult reveals(const Theory& th, ProcFactory& f, const Triple& a,
                     Term key, const std::vector<Term>& publics,
                     const Bounds& bounds) {
  World& w = th.world();
  Term n = keyBase(key, w);
  std::vector<Term> bn;
  procBoundNames(a.ctx, bn);
  if (std::find(bn.begin(), bn.end(), n) == bn.end())
    fail("KeyNotInContext",
         "name " + w.show(n) + " is not bound by the composition context");
  auto wrap = [&](Term cand) {
    return isApp(key) ? w.app(key->sym, {cand}) : cand;
  };

  RevealResult res;
  res.verdict = Verdict::Holds;
  ProcP proc = fillContext(f, a.ctx, a.fillings);
  Executor ex(th, f, publics, bounds);
  Config c0 = ex.init(proc, a.e0, a.frame);
  for (const TraceNode& node : explore(ex, c0)) {
    ++res.statesExplored;
    const KB& kb = ex.knowledge(node.config);
    for (Term cand : node.config.restricted) {
      if (!isName(cand) || cand->ident != n->ident) continue;
      if (deduce(th, kb, th.normalize(wrap(cand)))) {
        res.verdict = Verdict::Refuted;
        res.trace = node.labels;
        return res;
      }
    }
  }
  return res;
}

CompositionReport checkComposability(const Theory& th, ProcFactory& f,
                                     const Partition& part,
                                     const std::vector<ProcP>& ps,
                                     const std::vector<Term>& phi,
                                     const std::vector<ProcP>& qs,
                                     const std::vector<Term>& psi,
                                     const std::vector<Term>& e0, ProcP ctx,
                                     const std::vector<Term>& publics,
                                     const Bounds& bounds) {
  World& w = th.world();
  CompositionReport rep;

  auto sideOk = [&](const std::vector<ProcP>& procs,
                    const std::vector<Term>& frame, int g,
                    std::string& why) -> bool {
    for (ProcP p : procs) {
      std::vector<int> syms;
      procSymbols(p, syms);
      for (int sid : syms) {
        const Symbol& sy = w.sym(sid);
        bool user = sy.origin == Origin::User || sy.origin == Origin::Tag;
        if (user && !inClass(part, g, sy.theory)) {
          why = "symbol " + sy.name + " outside the declared class";
          return false;
        }
      }
      std::string tagWhy;
      if (!isTaggedProcessColored(w, p, &tagWhy)) {
        why = "process is not tagged: " + tagWhy;
        return false;
      }
    }
    for (Term t : frame) {
      std::vector<int> syms;
      collectSyms(t, syms);
      for (int sid : syms) {
        const Symbol& sy = w.sym(sid);
        if (sy.origin == Origin::Common) {
          if (sid != w.S_pk && sid != w.S_vk && sid != w.S_pair) {
            why = "frame uses common symbol " + sy.name;
            return false;
          }
        } else if (sy.origin != Origin::Diff &&
                   !inClass(part, g, sy.theory)) {
          why = "frame symbol " + sy.name + " outside the declared class";
          return false;
        }
      }
    }
    return true;
  };

  {
    HypothesisResult h{"signature-separation", Verdict::Holds, "", bounds};
    std::string why;
    if (!sideOk(ps, phi, 0, why)) {
      h.verdict = Verdict::Refuted;
      h.witness = "first protocol: " + why;
    } else if (!sideOk(qs, psi, 1, why)) {
      h.verdict = Verdict::Refuted;
      h.witness = "second protocol: " + why;
    }
    rep.hypotheses.push_back(std::move(h));
  }

  {
    HypothesisResult h{"closed-processes", Verdict::Holds, "", bounds};
    for (const std::vector<ProcP>* side : {&ps, &qs})
      for (ProcP p : *side) {
        std::vector<uint32_t> fv;
        procFreeVars(p, fv);
        if (!fv.empty()) {
          h.verdict = Verdict::Refuted;
          h.witness = "free variable " + w.str(fv[0]);
        }
      }
    if (h.verdict == Verdict::Holds)
      h.witness = "frame domains disjoint by handle renumbering";
    rep.hypotheses.push_back(std::move(h));
  }

  auto fnSide = [&](const std::vector<ProcP>& fills,
                    const std::vector<Term>& frame) {
    std::vector<Term> out;
    ProcP filled = fillContext(f, ctx, fills);
    procFreeNames(filled, out);
    for (Term t : frame) collectNames(t, out);
    return out;
  };

  {
    HypothesisResult h{"e0-sharing", Verdict::Holds, "", bounds};
    std::vector<Term> fnP = fnSide(ps, phi);
    std::vector<Term> fnQ = fnSide(qs, psi);
    for (Term n : e0)
      if (std::find(fnP.begin(), fnP.end(), n) != fnP.end() &&
          std::find(fnQ.begin(), fnQ.end(), n) != fnQ.end()) {
        h.verdict = Verdict::Refuted;
        h.witness = "name " + w.show(n) + " of E0 shared by both protocols";
        break;
      }
    rep.hypotheses.push_back(std::move(h));
  }

  {
    HypothesisResult h{"key-non-revelation", Verdict::Holds, "", bounds};
    std::vector<Term> fnP, fnQ, bnC;
    for (ProcP p : ps) procFreeNames(p, fnP);
    for (ProcP q : qs) procFreeNames(q, fnQ);
    procBoundNames(ctx, bnC);
    std::vector<Term> shared;
    for (Term n : bnC)
      if (std::find(fnP.begin(), fnP.end(), n) != fnP.end() &&
          std::find(fnQ.begin(), fnQ.end(), n) != fnQ.end())
        shared.push_back(n);
    try {
      for (Term n : shared) {
        std::vector<Term> keys = {n};
        keys.push_back(w.app(w.S_pk, {n}));
        keys.push_back(w.app(w.S_vk, {n}));
        for (Term key : keys) {
          for (int side = 0; side < 2; ++side) {
            const std::vector<ProcP>& fills = side == 0 ? ps : qs;
            const std::vector<Term>& frame = side == 0 ? phi : psi;
            RevealResult r =
                reveals(th, f, {e0, ctx, fills, frame}, key, publics, bounds);
            if (r.verdict == Verdict::Refuted) {
              h.verdict = Verdict::Refuted;
              h.witness = std::string(side == 0 ? "first" : "second") +
                          " protocol reveals " + w.show(key);
            }
          }
          if (h.verdict != Verdict::Holds) break;
        }
        if (h.verdict != Verdict::Holds) break;
      }
    } catch (const Error& e) {
      h.verdict = Verdict::Unknown;
      h.witness = e.what();
    }
    rep.hypotheses.push_back(std::move(h));
  }

  rep.conclude("composable");
  return rep;
}

namespace {

struct PGoodParts {
  std::vector<Term> news;  // bad, d (+ r1, r2)
  ProcP body;
  Term bad;
};

PGoodParts pGoodParts(ProcFactory& f, ProcP ctx, ProcP p1, ProcP p2,
                      bool bang, Term pubChan) {
  World& w = f.world();
  bool ctxBang = holeUnderBang(ctx);
  if (ctxBang != bang)
    fail("VariantMismatch",
         bang ? "bang variant requested for a context not ending in !_"
              : "plain variant requested for a context ending in !_");
  uint32_t x1 = holeAssignVar(p1);
  uint32_t x2 = holeAssignVar(p2);
  if (!x1 || !x2)
    fail("HoleNotUnderAssignment",
         "each role's hole must lie under a key assignment");
  Term bad = genName(w, "bad");
  Term d = genName(w, "d", SortK::Channel);
  Term id = genName(w, "id");
  Term r1 = genName(w, "r1");
  Term r2 = genName(w, "r2");
  Term v1 = w.var(w.str(x1));
  Term v2 = w.var(w.str(x2));

  Term pay1 = bang ? w.pairT(v1, w.pairT(id, r1)) : w.pairT(v1, id);
  Term pay2 = bang ? w.pairT(v2, w.pairT(id, r2)) : w.pairT(v2, id);
  ProcP p1f = fillContext(f, p1, {f.out(d, pay1, f.nil())});
  ProcP p2f = fillContext(f, p2, {f.out(d, pay2, f.nil())});
  ProcP joined = f.par(p1f, p2f);
  if (bang) joined = f.repl(joined);
  ProcP inner = f.newn(id, joined);
  ProcP filled =
      fillContext(f, bang ? stripBangAtHole(f, ctx) : ctx, {inner});

  auto key = [&](Term u) { return w.app(w.S_proj1, {u}); };
  auto idOf = [&](Term u) {
    Term rest = bang ? (Term)w.app(w.S_proj2, {u}) : u;
    return bang ? w.app(w.S_proj1, {rest}) : w.app(w.S_proj2, {u});
  };
  auto roleOf = [&](Term u) {
    return w.app(w.S_proj2, {w.app(w.S_proj2, {u})});
  };
  auto eq = [&](Term l, Term r) {
    Formula phi;
    phi.eqs.push_back({l, r});
    return phi;
  };
  ProcP emitBad = f.out(pubChan, bad, f.nil());

  // same id joined to different keys, or same key under different ids
  Term x1v = w.var("#gen/x1"), y1v = w.var("#gen/y1");
  ProcP comp1 =
      f.in(d, x1v->ident,
           f.in(d, y1v->ident,
                f.ifte(eq(key(x1v), key(y1v)),
                       f.ifte(eq(idOf(x1v), idOf(y1v)), f.nil(), emitBad),
                       f.nil())));
  Term x2v = w.var("#gen/x2"), y2v = w.var("#gen/y2");
  ProcP comp2;
  if (bang) {
    // two instances of one role agreeing on the key
    Formula phi;
    phi.eqs.push_back({key(x2v), key(y2v)});
    phi.eqs.push_back({roleOf(x2v), roleOf(y2v)});
    comp2 = f.in(d, x2v->ident,
                 f.in(d, y2v->ident, f.ifte(phi, emitBad, f.nil())));
  } else {
    comp2 = f.in(d, x2v->ident,
                 f.in(d, y2v->ident,
                      f.ifte(eq(key(x2v), key(y2v)), f.nil(),
                             f.ifte(eq(idOf(x2v), idOf(y2v)), emitBad,
                                    f.nil()))));
  }
  // key revelation probe
  Term x3v = w.var("#gen/x3"), z3v = w.var("#gen/z3");
  ProcP comp3 =
      f.in(d, x3v->ident,
           f.in(pubChan, z3v->ident,
                f.ifte(eq(z3v, key(x3v)), emitBad,
                       f.ifte(eq(z3v, w.app(w.S_pk, {key(x3v)})), emitBad,
                              f.ifte(eq(z3v, w.app(w.S_vk, {key(x3v)})),
                                     emitBad, f.nil())))));

  PGoodParts parts;
  parts.bad = bad;
  parts.news = {bad, d};
  if (bang) {
    parts.news.push_back(r1);
    parts.news.push_back(r2);
  }
  parts.body = f.par(f.par(filled, comp1), f.par(comp2, comp3));
  return parts;
}

}  // namespace

ProcP buildPGood(ProcFactory& f, ProcP ctx, ProcP p1, ProcP p2, bool bang,
                 Term pubChan) {
  PGoodParts parts = pGoodParts(f, ctx, p1, p2, bang, pubChan);
  ProcP p = parts.body;
  for (size_t i = parts.news.size(); i-- > 0;) p = f.newn(parts.news[i], p);
  return p;
}

GoodKEResult checkGoodKE(const Theory& th, ProcFactory& f,
                         const std::vector<Term>& e0, ProcP ctx, ProcP p1,
                         ProcP p2, const std::vector<Term>& frame,
                         const std::vector<Term>& publics,
                         const Bounds& bounds) {
  World& w = th.world();
  Term cg = genName(w, "cg", SortK::Channel);
  bool bang = holeUnderBang(ctx);
  PGoodParts parts = pGoodParts(f, ctx, p1, p2, bang, cg);
  ProcP ctx2 = f.hole(1);
  for (size_t i = parts.news.size(); i-- > 0;)
    ctx2 = f.newn(parts.news[i], ctx2);
  RevealResult r =
      reveals(th, f, {e0, ctx2, {parts.body}, frame}, parts.bad, publics,
              bounds);
  GoodKEResult out;
  out.verdict = r.verdict == Verdict::Refuted ? Verdict::Refuted
                                              : Verdict::Holds;
  out.trace = std::move(r.trace);
  return out;
}

AbstractabilityResult checkAbstractability(Executor& ex, const Config& start) {
  const Theory& th = ex.theory();
  World& w = th.world();
  AbstractabilityResult res;
  res.verdict = Verdict::Holds;
  for (const TraceNode& node : explore(ex, start)) {
    for (auto& [v, e] : node.config.sigma) {
      if (!e.isAssign) continue;
      for (Term side : {fstT(w, e.value), sndT(w, e.value)}) {
        Term nv = th.normalize(side);
        if (isApp(nv) && (nv->sym == w.S_pair || nv->sym == w.S_pk ||
                          nv->sym == w.S_vk)) {
          res.verdict = Verdict::Refuted;
          res.offending = w.str(v) + " = " + w.show(nv);
          return res;
        }
      }
    }
  }
  return res;
}

Term deltaTerm(const Theory& th, const Partition& part, Term u, int g,
               const AbstractionPair& rho) {
  World& w = th.world();
  int tr = th.tagroot(u);
  bool outsideClass =
      tr == TAGROOT_BOT || (tr != 0 && !inClass(part, g, tr));
  if (outsideClass) {
    Term un = th.normalize(u);
    if (isVar(un)) {
      auto it = rho.rho[g].find(un->ident);
      if (it != rho.rho[g].end()) return it->second;
    }
    auto it = rho.valueMap[g].find(un);
    if (it != rho.valueMap[g].end()) return it->second;
  }
  if (!isApp(u)) return u;
  int cls = g;
  if (tr != TAGROOT_BOT && tr != 0) cls = inClass(part, 0, tr) ? 0 : 1;
  std::vector<Term> args;
  args.reserve(u->args.size());
  for (Term a : u->args) args.push_back(deltaTerm(th, part, a, cls, rho));
  return w.app(u->sym, std::move(args));
}

Config deltaConfig(const Theory& th, const Partition& part, ProcFactory& f,
                   const Config& c, const AbstractionPair& rho) {
  World& w = th.world();
  auto classOfColor = [&](int color) {
    return color == 0 ? 0 : part.classOf(color);
  };
  auto mapVal = [&](Term t, int color) -> Term {
    int g = classOfColor(color);
    if (!containsDiff(w, t))
      return deltaTerm(th, part, th.normalize(t), g, rho);
    Term l = deltaTerm(th, part, th.normalize(fstT(w, t)), g, rho);
    Term r = deltaTerm(th, part, th.normalize(sndT(w, t)), g, rho);
    return l == r ? l : w.diffT(l, r);
  };
  Config d;
  d.restricted = c.restricted;
  d.diverged = c.diverged;
  for (ProcP p : c.procs)
    d.procs.push_back(mapProcTerms(f, p, [&](Term t, int color) {
      int g = classOfColor(color);
      return deltaTerm(th, part, t, g, rho);
    }));
  for (const FrameEntry& e : c.frame)
    d.frame.push_back({mapVal(e.value, e.color), e.color});
  for (auto& [v, e] : c.sigma)
    d.sigma[v] = {mapVal(e.value, e.color), e.color, e.isAssign};
  return d;
}

CompatibleResult checkCompatible(const Theory& th, const Partition& part,
                                 const Config& c, const AbstractionPair& rho) {
  World& w = th.world();
  CompatibleResult res;
  res.verdict = Verdict::Holds;
  for (int g = 0; g < 2; ++g) {
    std::vector<std::pair<uint32_t, Term>> bound;
    for (auto& [z, nm] : rho.rho[g]) {
      auto it = c.sigma.find(z);
      if (it == c.sigma.end()) continue;
      bound.push_back({z, th.normalize(fstT(w, it->second.value))});
    }
    for (auto& [z, val] : bound) {
      int tr = th.tagroot(val);
      if (tr == 0 || (tr != TAGROOT_BOT && inClass(part, g, tr))) {
        res.verdict = Verdict::Refuted;
        res.why = "assigned value of " + w.str(z) +
                  " is rooted in the abstracting class";
        return res;
      }
    }
    for (size_t i = 0; i < bound.size(); ++i)
      for (size_t j = i + 1; j < bound.size(); ++j) {
        bool valEq = bound[i].second == bound[j].second;
        bool absEq = rho.rho[g].at(bound[i].first) ==
                     rho.rho[g].at(bound[j].first);
        if (valEq != absEq) {
          res.verdict = Verdict::Refuted;
          res.why = "abstraction disagrees with the values of " +
                    w.str(bound[i].first) + " and " + w.str(bound[j].first);
          return res;
        }
      }
  }
  return res;
}

RevealResult checkNoAssignmentRevelation(Executor& ex, const Config& start,
                                         const AbstractionPair& rho,
                                         const Partition& part) {
  const Theory& th = ex.theory();
  World& w = th.world();
  RevealResult res;
  res.verdict = Verdict::Holds;
  for (const TraceNode& node : explore(ex, start)) {
    ++res.statesExplored;
    if (checkCompatible(th, part, node.config, rho).verdict != Verdict::Holds)
      continue;
    const KB& kb = ex.knowledge(node.config);
    for (int g = 0; g < 2; ++g)
      for (auto& [z, nm] : rho.rho[g]) {
        auto it = node.config.sigma.find(z);
        if (it == node.config.sigma.end()) continue;
        std::vector<Term> bases = {
            th.normalize(fstT(w, it->second.value)), nm};
        for (Term base : bases) {
          std::vector<Term> targets = {base};
          try {
            targets.push_back(w.app(w.S_pk, {base}));
            targets.push_back(w.app(w.S_vk, {base}));
          } catch (const Error&) {
            // value not of key sort; plain deducibility still checked
          }
          for (Term t : targets)
            if (deduce(th, kb, th.normalize(t))) {
              res.verdict = Verdict::Refuted;
              res.trace = node.labels;
              return res;
            }
        }
      }
  }
  return res;
}

namespace {

struct ComposeInputs {
  ProcP ctx;
  std::vector<ProcP> ps, qs;
  std::vector<Term> phiVals, psiVals;
  std::vector<Term> e0P, e0Q, e0All;  // e0 plus frame-restricted names
};

std::vector<Term> frameOf(const ProtocolSpec& spec, const std::string& name,
                          std::vector<Term>& restricted) {
  if (name.empty()) return {};
  const FrameDef* fd = spec.frame(name);
  if (!fd) fail("UnknownFrame", "frame " + name + " is not declared");
  for (Term n : fd->restricted) restricted.push_back(n);
  return fd->entries;
}

void addUnique(std::vector<Term>& v, const std::vector<Term>& add) {
  for (Term t : add)
    if (std::find(v.begin(), v.end(), t) == v.end()) v.push_back(t);
}

ComposeInputs gatherInputs(ProtocolSpec& spec, const ComposeDef& def) {
  ComposeInputs in;
  const ProcDef* cd = spec.context(def.context);
  if (!cd) fail("UnknownContext", "context " + def.context);
  in.ctx = cd->body;
  for (const std::string& n : def.p) {
    const ProcDef* pd = spec.process(n);
    if (!pd) fail("UnknownProcess", n);
    in.ps.push_back(pd->body);
  }
  for (const std::string& n : def.q) {
    const ProcDef* qd = spec.process(n);
    if (!qd) fail("UnknownProcess", n);
    in.qs.push_back(qd->body);
  }
  std::vector<Term> rPhi, rPsi;
  in.phiVals = frameOf(spec, def.phi, rPhi);
  in.psiVals = frameOf(spec, def.psi, rPsi);
  in.e0P = def.e0;
  addUnique(in.e0P, rPhi);
  in.e0Q = def.e0;
  addUnique(in.e0Q, rPsi);
  in.e0All = def.e0;
  addUnique(in.e0All, rPhi);
  addUnique(in.e0All, rPsi);
  return in;
}

// roles, comparator-ready P side and idealized shared-key Q side of a
// sequential composition
struct SeqParts {
  ProcP p1, p2, q1, q2, pPlain, qShared;
  uint32_t x1 = 0, x2 = 0;
  Term k = nullptr;
  int bcol = 0;
};

SeqParts seqParts(ProtocolSpec& spec, const ComposeDef& def,
                  const ComposeInputs& in) {
  World& w = *spec.w;
  ProcFactory& f = *spec.f;
  if (countHoles(in.ctx) != 1)
    fail("HoleArityMismatch",
         "sequential composition needs a single-hole context");
  if (in.ps.size() != 2 || in.qs.size() != 2)
    fail("RoleArityMismatch",
         "sequential composition takes two roles on each side");
  SeqParts sp;
  sp.p1 = in.ps[0];
  sp.p2 = in.ps[1];
  sp.x1 = holeAssignVar(sp.p1);
  sp.x2 = holeAssignVar(sp.p2);
  if (!sp.x1 || !sp.x2)
    fail("HoleNotUnderAssignment",
         "each role's hole must lie under a key assignment");

  // a role takes its own key variable, or both (agreement-style tests)
  auto qBody = [&](size_t i, uint32_t own) -> ProcP {
    const ProcDef* qd = spec.process(def.q[i]);
    if (!qd) fail("UnknownProcess", def.q[i]);
    if (qd->params.empty()) return qd->body;
    if (qd->params.size() == 1)
      return spec.instantiate(def.q[i], {w.var(w.str(own))});
    if (qd->params.size() == 2)
      return spec.instantiate(def.q[i],
                              {w.var(w.str(sp.x1)), w.var(w.str(sp.x2))});
    fail("RoleArityMismatch",
         "role " + def.q[i] + " takes at most the two key variables");
  };
  sp.q1 = qBody(0, sp.x1);
  sp.q2 = qBody(1, sp.x2);
  sp.pPlain = f.par(fillContext(f, sp.p1, {f.nil()}),
                    fillContext(f, sp.p2, {f.nil()}));
  sp.k = genName(w, "k");
  sp.bcol = spec.part.beta.empty() ? 0 : spec.part.beta.front();
  sp.qShared = f.newn(
      sp.k, f.assign(sp.x1, sp.k,
                     f.assign(sp.x2, sp.k, f.par(sp.q1, sp.q2), sp.bcol),
                     sp.bcol));
  return sp;
}

std::vector<Term> catFrames(const std::vector<Term>& a,
                            const std::vector<Term>& b) {
  std::vector<Term> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

HypothesisResult runHyp(const std::string& name, const Bounds& bounds,
                        const std::function<void(HypothesisResult&)>& body) {
  HypothesisResult h{name, Verdict::Unknown, "", bounds};
  try {
    body(h);
  } catch (const Error& e) {
    h.verdict = Verdict::Unknown;
    h.witness = e.what();
  }
  return h;
}

// not-revealed check over both projections of a possibly diff filling
void revealBothSides(const Theory& th, ProcFactory& f, Triple triple,
                     Term key, const std::vector<Term>& publics,
                     const Bounds& bounds, HypothesisResult& h) {
  World& w = th.world();
  bool hasDiff = false;
  for (ProcP p : triple.fillings) hasDiff |= procHasDiff(w, p);
  for (Term t : triple.frame) hasDiff |= containsDiff(w, t);
  int sides = hasDiff ? 2 : 1;
  h.verdict = Verdict::Holds;
  for (int s = 0; s < sides; ++s) {
    Triple proj = triple;
    if (hasDiff) {
      for (ProcP& p : proj.fillings)
        p = s == 0 ? procFst(f, p) : procSnd(f, p);
      for (Term& t : proj.frame)
        t = s == 0 ? fstT(w, t) : sndT(w, t);
    }
    RevealResult r = reveals(th, f, proj, key, publics, bounds);
    if (r.verdict == Verdict::Refuted) {
      h.verdict = Verdict::Refuted;
      std::string tr;
      for (const Label& l : r.trace) tr += l.show(w) + " ";
      h.witness = "reveals " + w.show(key) + " via " + tr;
      return;
    }
  }
}

}  // namespace

CompositionReport composeParallel(ProtocolSpec& spec, const ComposeDef& def,
                                  const Bounds& bounds, bool audit) {
  const Theory& th = *spec.th;
  ProcFactory& f = *spec.f;
  World& w = *spec.w;
  std::vector<Term> publics = spec.publics();
  ComposeInputs in = gatherInputs(spec, def);
  int holes = countHoles(in.ctx);
  if ((int)in.ps.size() != holes || (int)in.qs.size() != holes)
    fail("HoleArityMismatch",
         "context has " + std::to_string(holes) + " holes but " +
             std::to_string(in.ps.size()) + "/" +
             std::to_string(in.qs.size()) + " fillings were given");

  CompositionReport rep =
      checkComposability(th, f, spec.part, in.ps, in.phiVals, in.qs,
                         in.psiVals, in.e0All, in.ctx, publics, bounds);

  std::vector<ProcP> composed;
  for (int i = 0; i < holes; ++i)
    composed.push_back(f.par(in.ps[i], in.qs[i]));
  std::vector<Term> frameAll = catFrames(in.phiVals, in.psiVals);

  std::string claimText;
  if (def.kind == "secrecy") {
    Term s = def.secret;
    if (!s) fail("MissingSecret", "secrecy composition needs a secret");
    rep.hypotheses.push_back(
        runHyp("first-protocol-secrecy", bounds, [&](HypothesisResult& h) {
          revealBothSides(th, f, {in.e0P, in.ctx, in.ps, in.phiVals}, s,
                          publics, bounds, h);
        }));
    rep.hypotheses.push_back(
        runHyp("second-protocol-secrecy", bounds, [&](HypothesisResult& h) {
          revealBothSides(th, f, {in.e0Q, in.ctx, in.qs, in.psiVals}, s,
                          publics, bounds, h);
        }));
    claimText = "the composed system does not reveal " + w.show(s);
    if (audit) {
      rep.audit = runHyp("audit-composed-secrecy", bounds,
                         [&](HypothesisResult& h) {
                           revealBothSides(th, f,
                                           {in.e0All, in.ctx, composed,
                                            frameAll},
                                           s, publics, bounds, h);
                         });
    }
  } else {
    bool diffKind = def.kind == "diff";
    auto equivOf = [&](const std::vector<ProcP>& fills,
                       const std::vector<Term>& e0,
                       const std::vector<Term>& frame) {
      ProcP proc = fillContext(f, in.ctx, fills);
      Executor ex(th, f, publics, bounds);
      if (diffKind) return diffEquiv(ex, ex.init(proc, e0, frame));
      Executor ex2(th, f, publics, bounds);
      std::vector<Term> f1, f2;
      for (Term t : frame) {
        f1.push_back(fstT(w, t));
        f2.push_back(sndT(w, t));
      }
      return traceEquiv(ex, ex.init(procFst(f, proc), e0, f1), ex2,
                        ex2.init(procSnd(f, proc), e0, f2));
    };
    auto record = [&](HypothesisResult& h, const EquivResult& r) {
      h.verdict = r.verdict;
      if (r.witness) {
        h.witness = r.witness->reason;
        for (const Label& l : r.witness->labels)
          h.witness += " " + l.show(w);
      } else if (!r.note.empty()) {
        h.witness = r.note;
      }
    };
    rep.hypotheses.push_back(runHyp("first-protocol-equivalence", bounds,
                                    [&](HypothesisResult& h) {
                                      record(h, equivOf(in.ps, in.e0P,
                                                        in.phiVals));
                                    }));
    rep.hypotheses.push_back(runHyp("second-protocol-equivalence", bounds,
                                    [&](HypothesisResult& h) {
                                      record(h, equivOf(in.qs, in.e0Q,
                                                        in.psiVals));
                                    }));
    claimText = std::string("the composed system satisfies ") +
                (diffKind ? "diff-equivalence" : "trace equivalence");
    if (audit) {
      rep.audit = runHyp("audit-composed-equivalence", bounds,
                         [&](HypothesisResult& h) {
                           record(h, equivOf(composed, in.e0All, frameAll));
                         });
    }
  }
  rep.conclude(claimText);
  return rep;
}

CompositionReport composeSequential(ProtocolSpec& spec, const ComposeDef& def,
                                    const Bounds& bounds, bool audit,
                                    bool traceOnly) {
  const Theory& th = *spec.th;
  ProcFactory& f = *spec.f;
  World& w = *spec.w;
  std::vector<Term> publics = spec.publics();
  ComposeInputs in = gatherInputs(spec, def);
  SeqParts sp = seqParts(spec, def, in);
  ProcP p1 = sp.p1, p2 = sp.p2, q1 = sp.q1, q2 = sp.q2;
  ProcP pPlain = sp.pPlain, qShared = sp.qShared;
  uint32_t x1 = sp.x1, x2 = sp.x2;
  Term k = sp.k;
  int bcol = sp.bcol;

  CompositionReport rep = checkComposability(
      th, f, spec.part, {pPlain}, in.phiVals, {qShared}, in.psiVals,
      in.e0All, in.ctx, publics, bounds);

  rep.hypotheses.push_back(
      runHyp("shared-key-non-revelation", bounds, [&](HypothesisResult& h) {
        ProcP ctx2 = fillContext(f, in.ctx, {f.newn(k, f.hole(1))});
        ProcP filling =
            f.assign(x1, k, f.assign(x2, k, f.par(q1, q2), bcol), bcol);
        h.verdict = Verdict::Holds;
        for (Term key :
             {k, (Term)w.app(w.S_pk, {k}), (Term)w.app(w.S_vk, {k})}) {
          HypothesisResult sub = h;
          revealBothSides(th, f, {in.e0Q, ctx2, {filling}, in.psiVals}, key,
                          publics, bounds, sub);
          if (sub.verdict != Verdict::Holds) {
            h = sub;
            return;
          }
        }
      }));

  rep.hypotheses.push_back(
      runHyp("abstractability", bounds, [&](HypothesisResult& h) {
        ProcP proc = fillContext(f, in.ctx, {pPlain});
        Executor ex(th, f, publics, bounds);
        AbstractabilityResult r =
            checkAbstractability(ex, ex.init(proc, in.e0P, in.phiVals));
        h.verdict = r.verdict;
        h.witness = r.offending;
      }));

  rep.hypotheses.push_back(
      runHyp("good-key-exchange", bounds, [&](HypothesisResult& h) {
        bool hasDiff = procHasDiff(w, p1) || procHasDiff(w, p2);
        h.verdict = Verdict::Holds;
        for (int s = 0; s < (hasDiff ? 2 : 1); ++s) {
          ProcP a = hasDiff ? (s == 0 ? procFst(f, p1) : procSnd(f, p1)) : p1;
          ProcP b = hasDiff ? (s == 0 ? procFst(f, p2) : procSnd(f, p2)) : p2;
          GoodKEResult r = checkGoodKE(th, f, in.e0P, in.ctx, a, b,
                                       in.phiVals, publics, bounds);
          if (r.verdict == Verdict::Refuted) {
            h.verdict = Verdict::Refuted;
            std::string tr;
            for (const Label& l : r.trace) tr += l.show(w) + " ";
            h.witness = "bad is emitted: " + tr;
            return;
          }
        }
      }));

  ProcP composedFill =
      f.par(fillContext(f, p1, {q1}), fillContext(f, p2, {q2}));
  std::vector<Term> frameAll = catFrames(in.phiVals, in.psiVals);

  std::string claimText;
  if (def.kind == "secrecy") {
    Term s = def.secret;
    if (!s) fail("MissingSecret", "secrecy composition needs a secret");
    rep.hypotheses.push_back(
        runHyp("first-protocol-secrecy", bounds, [&](HypothesisResult& h) {
          revealBothSides(th, f, {in.e0P, in.ctx, {pPlain}, in.phiVals}, s,
                          publics, bounds, h);
        }));
    rep.hypotheses.push_back(
        runHyp("second-protocol-secrecy", bounds, [&](HypothesisResult& h) {
          revealBothSides(th, f, {in.e0Q, in.ctx, {qShared}, in.psiVals}, s,
                          publics, bounds, h);
        }));
    claimText = "the composed system does not reveal " + w.show(s);
    if (audit) {
      rep.audit = runHyp(
          "audit-composed-secrecy", bounds, [&](HypothesisResult& h) {
            revealBothSides(th, f, {in.e0All, in.ctx, {composedFill},
                                    frameAll},
                            s, publics, bounds, h);
          });
    }
  } else {
    auto record = [&](HypothesisResult& h, const EquivResult& r) {
      h.verdict = r.verdict;
      if (r.witness) {
        h.witness = r.witness->reason;
        for (const Label& l : r.witness->labels)
          h.witness += " " + l.show(w);
      } else if (!r.note.empty()) {
        h.witness = r.note;
      }
    };
    if (!traceOnly) {
      rep.hypotheses.push_back(
          runHyp("p-plus-diff-equivalence", bounds, [&](HypothesisResult& h) {
            Term d = genName(w, "d", SortK::Channel);
            Term xv = w.var(w.str(x1));
            Term yv = w.var(w.str(x2));
            Term cx = w.var("#gen/x");
            Term cy = w.var("#gen/y");
            Formula same;
            same.eqs.push_back({cx, cy});
            ProcP comparator =
                f.in(d, cx->ident,
                     f.in(d, cy->ident,
                          f.ifte(same, f.nil(), f.nil())));
            ProcP pPlus = f.par(
                f.par(fillContext(f, p1, {f.out(d, xv, f.nil())}),
                      fillContext(f, p2, {f.out(d, yv, f.nil())})),
                comparator);
            ProcP sys = f.newn(d, fillContext(f, in.ctx, {pPlus}));
            Executor ex(th, f, publics, bounds);
            record(h, diffEquiv(ex, ex.init(sys, in.e0P, in.phiVals)));
          }));
    }
    rep.hypotheses.push_back(
        runHyp("second-protocol-equivalence", bounds,
               [&](HypothesisResult& h) {
                 ProcP proc = fillContext(f, in.ctx, {qShared});
                 Executor ex(th, f, publics, bounds);
                 record(h, diffEquiv(ex, ex.init(proc, in.e0Q,
                                                 in.psiVals)));
               }));
    claimText = "the composed system satisfies diff-equivalence";
    if (audit) {
      rep.audit = runHyp("audit-composed-equivalence", bounds,
                         [&](HypothesisResult& h) {
                           ProcP proc =
                               fillContext(f, in.ctx, {composedFill});
                           Executor ex(th, f, publics, bounds);
                           record(h, diffEquiv(ex, ex.init(proc, in.e0All,
                                                           frameAll)));
                         });
    }
  }
  rep.conclude(claimText);
  return rep;
}

CompositionReport composabilityFor(ProtocolSpec& spec, const ComposeDef& def,
                                   const Bounds& bounds) {
  const Theory& th = *spec.th;
  ProcFactory& f = *spec.f;
  std::vector<Term> publics = spec.publics();
  ComposeInputs in = gatherInputs(spec, def);
  CompositionReport rep;
  if (def.sequential) {
    SeqParts sp = seqParts(spec, def, in);
    rep = checkComposability(th, f, spec.part, {sp.pPlain}, in.phiVals,
                             {sp.qShared}, in.psiVals, in.e0All, in.ctx,
                             publics, bounds);
  } else {
    rep = checkComposability(th, f, spec.part, in.ps, in.phiVals, in.qs,
                             in.psiVals, in.e0All, in.ctx, publics, bounds);
  }
  rep.conclude("composable");
  return rep;
}

CompositionReport goodKEFor(ProtocolSpec& spec, const ComposeDef& def,
                            const Bounds& bounds) {
  const Theory& th = *spec.th;
  ProcFactory& f = *spec.f;
  World& w = *spec.w;
  std::vector<Term> publics = spec.publics();
  ComposeInputs in = gatherInputs(spec, def);
  if (!def.sequential)
    fail("KindMismatch", "good key-exchange applies to sequential blocks");
  SeqParts sp = seqParts(spec, def, in);
  CompositionReport rep;
  rep.hypotheses.push_back(
      runHyp("good-key-exchange", bounds, [&](HypothesisResult& h) {
        bool hasDiff = procHasDiff(w, sp.p1) || procHasDiff(w, sp.p2);
        h.verdict = Verdict::Holds;
        for (int s = 0; s < (hasDiff ? 2 : 1); ++s) {
          ProcP a =
              hasDiff ? (s == 0 ? procFst(f, sp.p1) : procSnd(f, sp.p1))
                      : sp.p1;
          ProcP b =
              hasDiff ? (s == 0 ? procFst(f, sp.p2) : procSnd(f, sp.p2))
                      : sp.p2;
          GoodKEResult r = checkGoodKE(th, f, in.e0P, in.ctx, a, b,
                                       in.phiVals, publics, bounds);
          if (r.verdict == Verdict::Refuted) {
            h.verdict = Verdict::Refuted;
            std::string tr;
            for (const Label& l : r.trace) tr += l.show(w) + " ";
            h.witness = "bad is emitted: " + tr;
            return;
          }
        }
      }));
  rep.conclude("the key exchange is good");
  return rep;
}

CompositionReport abstractabilityFor(ProtocolSpec& spec,
                                     const ComposeDef& def,
                                     const Bounds& bounds) {
  const Theory& th = *spec.th;
  ProcFactory& f = *spec.f;
  std::vector<Term> publics = spec.publics();
  ComposeInputs in = gatherInputs(spec, def);
  CompositionReport rep;
  rep.hypotheses.push_back(
      runHyp("abstractability", bounds, [&](HypothesisResult& h) {
        ProcP proc;
        if (def.sequential) {
          SeqParts sp = seqParts(spec, def, in);
          proc = fillContext(f, in.ctx, {sp.pPlain});
        } else {
          proc = fillContext(f, in.ctx, in.ps);
        }
        Executor ex(th, f, publics, bounds);
        AbstractabilityResult r =
            checkAbstractability(ex, ex.init(proc, in.e0P, in.phiVals));
        h.verdict = r.verdict;
        h.witness = r.offending;
      }));
  rep.conclude("assignment values are abstractable");
  return rep;
}

}  // namespace eqc
