#include "equicompose/process.hpp"

#include <algorithm>
#include <functional>

namespace eqc {

static size_t mix(size_t h, size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

ProcP ProcFactory::make(Proc p) {
  size_t h = mix(0, (size_t)p.k);
  if (p.a) h = mix(h, p.a->hash);
  if (p.b) h = mix(h, p.b->hash);
  if (p.name) h = mix(h, p.name->hash);
  h = mix(h, (size_t)p.var);
  if (p.term) h = mix(h, p.term->hash);
  if (p.chan) h = mix(h, p.chan->hash);
  h = mix(h, (size_t)p.phi.isDiff);
  for (auto& [l, r] : p.phi.eqs) {
    h = mix(h, l->hash);
    h = mix(h, r->hash);
  }
  for (auto& [l, r] : p.phi.eqsR) {
    h = mix(h, l->hash);
    h = mix(h, r->hash);
  }
  h = mix(h, (size_t)p.holeIndex);
  h = mix(h, (size_t)p.color);
  p.hash = h;
  // hash-consing: structurally identical nodes share one pointer, so the
  // serial doubles as a deterministic structural identity
  for (const ProcP& q : interned_[h]) {
    if (q->k == p.k && q->a == p.a && q->b == p.b && q->name == p.name &&
        q->var == p.var && q->term == p.term && q->chan == p.chan &&
        q->phi == p.phi && q->color == p.color &&
        q->holeIndex == p.holeIndex)
      return q;
  }
  p.serial = serial_++;
  ProcP r = std::make_shared<const Proc>(std::move(p));
  interned_[r->hash].push_back(r);
  return r;
}

ProcP ProcFactory::nil() {
  Proc p;
  p.k = Proc::Nil;
  return make(std::move(p));
}

ProcP ProcFactory::hole(int index) {
  Proc p;
  p.k = Proc::Hole;
  p.holeIndex = index;
  return make(std::move(p));
}

ProcP ProcFactory::par(ProcP a, ProcP b) {
  Proc p;
  p.k = Proc::Par;
  p.a = std::move(a);
  p.b = std::move(b);
  return make(std::move(p));
}

ProcP ProcFactory::repl(ProcP body) {
  Proc p;
  p.k = Proc::Repl;
  p.a = std::move(body);
  return make(std::move(p));
}

ProcP ProcFactory::newn(Term n, ProcP body) {
  if (!isName(n)) fail("SortMismatch", "new binder must be a name");
  Proc p;
  p.k = Proc::New;
  p.name = n;
  p.a = std::move(body);
  return make(std::move(p));
}

ProcP ProcFactory::assign(uint32_t var, Term v, ProcP body, int color) {
  Proc p;
  p.k = Proc::Assign;
  p.var = var;
  p.term = v;
  p.a = std::move(body);
  p.color = color;
  return make(std::move(p));
}

ProcP ProcFactory::ifte(Formula phi, ProcP thn, ProcP els, int color) {
  Proc p;
  p.k = Proc::If;
  p.phi = std::move(phi);
  p.a = std::move(thn);
  p.b = std::move(els);
  p.color = color;
  return make(std::move(p));
}

ProcP ProcFactory::in(Term chan, uint32_t var, ProcP body, int color) {
  if (isApp(chan) && chan->sym != w_.S_diff)
    fail("SortMismatch", "channel must be a name or variable");
  Proc p;
  p.k = Proc::In;
  p.chan = chan;
  p.var = var;
  p.a = std::move(body);
  p.color = color;
  return make(std::move(p));
}

ProcP ProcFactory::out(Term chan, Term v, ProcP body, int color) {
  if (isApp(chan) && chan->sym != w_.S_diff)
    fail("SortMismatch", "channel must be a name or variable");
  Proc p;
  p.k = Proc::Out;
  p.chan = chan;
  p.term = v;
  p.a = std::move(body);
  p.color = color;
  return make(std::move(p));
}

static bool procEq(const Proc* a, const Proc* b, bool colors) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->k != b->k || a->name != b->name || a->var != b->var ||
      a->term != b->term || a->chan != b->chan || a->holeIndex != b->holeIndex)
    return false;
  if (colors && a->color != b->color) return false;
  if (!(a->phi == b->phi)) return false;
  return procEq(a->a.get(), b->a.get(), colors) &&
         procEq(a->b.get(), b->b.get(), colors);
}

bool procEqual(ProcP a, ProcP b) { return procEq(a.get(), b.get(), false); }
bool procEqualColored(ProcP a, ProcP b) {
  return procEq(a.get(), b.get(), true);
}

namespace {
struct AlphaCtx {
  std::vector<std::pair<Term, Term>> names;
  std::vector<std::pair<uint32_t, uint32_t>> vars;
};

bool alphaTerm(const AlphaCtx& c, Term a, Term b) {
  if (isName(a) && isName(b)) {
    for (auto it = c.names.rbegin(); it != c.names.rend(); ++it) {
      if (it->first == a) return it->second == b;
      if (it->second == b) return false;
    }
    return a == b;
  }
  if (isVar(a) && isVar(b)) {
    for (auto it = c.vars.rbegin(); it != c.vars.rend(); ++it) {
      if (it->first == a->ident) return it->second == b->ident;
      if (it->second == b->ident) return false;
    }
    return a->ident == b->ident;
  }
  if (!isApp(a) || !isApp(b) || a->sym != b->sym) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!alphaTerm(c, a->args[i], b->args[i])) return false;
  return true;
}

bool alphaFormula(const AlphaCtx& c, const Formula& a, const Formula& b) {
  if (a.isDiff != b.isDiff || a.eqs.size() != b.eqs.size() ||
      a.eqsR.size() != b.eqsR.size())
    return false;
  for (size_t i = 0; i < a.eqs.size(); ++i)
    if (!alphaTerm(c, a.eqs[i].first, b.eqs[i].first) ||
        !alphaTerm(c, a.eqs[i].second, b.eqs[i].second))
      return false;
  for (size_t i = 0; i < a.eqsR.size(); ++i)
    if (!alphaTerm(c, a.eqsR[i].first, b.eqsR[i].first) ||
        !alphaTerm(c, a.eqsR[i].second, b.eqsR[i].second))
      return false;
  return true;
}

bool alphaProc(AlphaCtx& c, const Proc* a, const Proc* b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->k != b->k || a->holeIndex != b->holeIndex) return false;
  switch (a->k) {
    case Proc::Nil:
    case Proc::Hole:
      return true;
    case Proc::Par:
    case Proc::Repl:
      return alphaProc(c, a->a.get(), b->a.get()) &&
             alphaProc(c, a->b.get(), b->b.get());
    case Proc::New: {
      c.names.push_back({a->name, b->name});
      bool ok = alphaProc(c, a->a.get(), b->a.get());
      c.names.pop_back();
      return ok;
    }
    case Proc::Assign: {
      if (!alphaTerm(c, a->term, b->term)) return false;
      c.vars.push_back({a->var, b->var});
      bool ok = alphaProc(c, a->a.get(), b->a.get());
      c.vars.pop_back();
      return ok;
    }
    case Proc::If:
      return alphaFormula(c, a->phi, b->phi) &&
             alphaProc(c, a->a.get(), b->a.get()) &&
             alphaProc(c, a->b.get(), b->b.get());
    case Proc::In: {
      if (!alphaTerm(c, a->chan, b->chan)) return false;
      c.vars.push_back({a->var, b->var});
      bool ok = alphaProc(c, a->a.get(), b->a.get());
      c.vars.pop_back();
      return ok;
    }
    case Proc::Out:
      return alphaTerm(c, a->chan, b->chan) && alphaTerm(c, a->term, b->term) &&
             alphaProc(c, a->a.get(), b->a.get());
  }
  return false;
}
}  // namespace

bool procAlphaEqual(World&, ProcP a, ProcP b) {
  AlphaCtx c;
  return alphaProc(c, a.get(), b.get());
}

static std::string showFormula(const World& w, const Formula& phi) {
  auto conj = [&](const std::vector<std::pair<Term, Term>>& eqs) {
    if (eqs.empty()) return std::string("true");
    std::string s;
    for (size_t i = 0; i < eqs.size(); ++i) {
      if (i) s += " && ";
      s += w.show(eqs[i].first) + " = " + w.show(eqs[i].second);
    }
    return s;
  };
  if (phi.isDiff) return "diff[" + conj(phi.eqs) + "; " + conj(phi.eqsR) + "]";
  return conj(phi.eqs);
}

std::string showProc(const World& w, ProcP p, int indent) {
  std::string pad(indent * 2, ' ');
  if (!p) return pad + "0";
  switch (p->k) {
    case Proc::Nil:
      return pad + "0";
    case Proc::Hole:
      return pad + "_" + std::to_string(p->holeIndex);
    case Proc::Par:
      return pad + "(\n" + showProc(w, p->a, indent + 1) + "\n" + pad + "|\n" +
             showProc(w, p->b, indent + 1) + "\n" + pad + ")";
    case Proc::Repl:
      return pad + "!\n" + showProc(w, p->a, indent + 1);
    case Proc::New: {
      std::string sort =
          p->name->sort == SortK::Channel ? " : channel" : "";
      return pad + "new " + w.show(p->name) + sort + ".\n" +
             showProc(w, p->a, indent);
    }
    case Proc::Assign:
      return pad + "[" + w.str(p->var) + " := " + w.show(p->term) + "]" +
             (p->color ? "@" + std::to_string(p->color) : "") + ".\n" +
             showProc(w, p->a, indent);
    case Proc::If:
      return pad + "if" + (p->color ? "@" + std::to_string(p->color) : "") +
             " " + showFormula(w, p->phi) + " then\n" +
             showProc(w, p->a, indent + 1) + "\n" + pad + "else\n" +
             showProc(w, p->b, indent + 1);
    case Proc::In:
      return pad + "in(" + w.show(p->chan) + "," + w.str(p->var) + ")" +
             (p->color ? "@" + std::to_string(p->color) : "") + ".\n" +
             showProc(w, p->a, indent);
    case Proc::Out:
      return pad + "out(" + w.show(p->chan) + "," + w.show(p->term) + ")" +
             (p->color ? "@" + std::to_string(p->color) : "") + ".\n" +
             showProc(w, p->a, indent);
  }
  return pad + "0";
}

static void walkTerms(ProcP p, const std::function<void(Term)>& fn) {
  if (!p) return;
  if (p->name) fn(p->name);
  if (p->term) fn(p->term);
  if (p->chan) fn(p->chan);
  for (auto& [l, r] : p->phi.eqs) {
    fn(l);
    fn(r);
  }
  for (auto& [l, r] : p->phi.eqsR) {
    fn(l);
    fn(r);
  }
  walkTerms(p->a, fn);
  walkTerms(p->b, fn);
}

void procBoundNames(ProcP p, std::vector<Term>& out) {
  if (!p) return;
  if (p->k == Proc::New &&
      std::find(out.begin(), out.end(), p->name) == out.end())
    out.push_back(p->name);
  procBoundNames(p->a, out);
  procBoundNames(p->b, out);
}

void procFreeNames(ProcP p, std::vector<Term>& out) {
  std::vector<Term> bound;
  procBoundNames(p, bound);
  walkTerms(p, [&](Term t) {
    std::vector<Term> ns;
    collectNames(t, ns);
    for (Term n : ns)
      if (std::find(bound.begin(), bound.end(), n) == bound.end() &&
          std::find(out.begin(), out.end(), n) == out.end())
        out.push_back(n);
  });
}

static void boundVars(ProcP p, std::vector<uint32_t>& out) {
  if (!p) return;
  if ((p->k == Proc::Assign || p->k == Proc::In) &&
      std::find(out.begin(), out.end(), p->var) == out.end())
    out.push_back(p->var);
  boundVars(p->a, out);
  boundVars(p->b, out);
}

void procFreeVars(ProcP p, std::vector<uint32_t>& out) {
  std::vector<uint32_t> bound;
  boundVars(p, bound);
  walkTerms(p, [&](Term t) {
    std::vector<uint32_t> vs;
    collectVars(t, vs);
    for (uint32_t v : vs)
      if (std::find(bound.begin(), bound.end(), v) == bound.end() &&
          std::find(out.begin(), out.end(), v) == out.end())
        out.push_back(v);
  });
}

static void collectSyms(Term t, std::vector<int>& out) {
  if (!isApp(t)) return;
  if (std::find(out.begin(), out.end(), t->sym) == out.end())
    out.push_back(t->sym);
  for (Term a : t->args) collectSyms(a, out);
}

void procSymbols(ProcP p, std::vector<int>& out) {
  walkTerms(p, [&](Term t) { collectSyms(t, out); });
}

bool procHasRepl(ProcP p) {
  if (!p) return false;
  if (p->k == Proc::Repl) return true;
  return procHasRepl(p->a) || procHasRepl(p->b);
}

bool procHasDiff(const World& w, ProcP p) {
  bool found = false;
  walkTerms(p, [&](Term t) { found = found || containsDiff(w, t); });
  if (found) return true;
  // formula-level diff
  std::function<bool(ProcP)> rec = [&](ProcP q) -> bool {
    if (!q) return false;
    if (q->phi.isDiff) return true;
    return rec(q->a) || rec(q->b);
  };
  return rec(p);
}

int countHoles(ProcP p) {
  if (!p) return 0;
  return (p->k == Proc::Hole ? 1 : 0) + countHoles(p->a) + countHoles(p->b);
}

static ProcP mapTerms(ProcFactory& f, ProcP p,
                      const std::function<Term(Term)>& fn) {
  if (!p) return p;
  Proc q = *p;
  q.a = mapTerms(f, p->a, fn);
  q.b = mapTerms(f, p->b, fn);
  if (q.term) q.term = fn(q.term);
  if (q.chan) q.chan = fn(q.chan);
  for (auto& [l, r] : q.phi.eqs) {
    l = fn(l);
    r = fn(r);
  }
  for (auto& [l, r] : q.phi.eqsR) {
    l = fn(l);
    r = fn(r);
  }
  switch (q.k) {
    case Proc::Nil:
      return f.nil();
    case Proc::Hole:
      return f.hole(q.holeIndex);
    case Proc::Par:
      return f.par(q.a, q.b);
    case Proc::Repl:
      return f.repl(q.a);
    case Proc::New:
      return f.newn(q.name, q.a);
    case Proc::Assign:
      return f.assign(q.var, q.term, q.a, q.color);
    case Proc::If:
      return f.ifte(q.phi, q.a, q.b, q.color);
    case Proc::In:
      return f.in(q.chan, q.var, q.a, q.color);
    case Proc::Out:
      return f.out(q.chan, q.term, q.a, q.color);
  }
  return p;
}

ProcP procFst(ProcFactory& f, ProcP p) {
  World& w = f.world();
  ProcP r = mapTerms(f, p, [&](Term t) { return fstT(w, t); });
  // collapse formula diffs to their left side
  std::function<ProcP(ProcP)> rec = [&](ProcP q) -> ProcP {
    if (!q) return q;
    Proc n = *q;
    n.a = rec(q->a);
    n.b = rec(q->b);
    if (n.phi.isDiff) {
      n.phi.isDiff = false;
      n.phi.eqsR.clear();
    }
    if (q->k == Proc::If) return f.ifte(n.phi, n.a, n.b, n.color);
    if (n.a == q->a && n.b == q->b) return q;
    switch (n.k) {
      case Proc::Par:
        return f.par(n.a, n.b);
      case Proc::Repl:
        return f.repl(n.a);
      case Proc::New:
        return f.newn(n.name, n.a);
      case Proc::Assign:
        return f.assign(n.var, n.term, n.a, n.color);
      case Proc::In:
        return f.in(n.chan, n.var, n.a, n.color);
      case Proc::Out:
        return f.out(n.chan, n.term, n.a, n.color);
      default:
        return q;
    }
  };
  return rec(r);
}

ProcP procSnd(ProcFactory& f, ProcP p) {
  World& w = f.world();
  ProcP r = mapTerms(f, p, [&](Term t) { return sndT(w, t); });
  std::function<ProcP(ProcP)> rec = [&](ProcP q) -> ProcP {
    if (!q) return q;
    Proc n = *q;
    n.a = rec(q->a);
    n.b = rec(q->b);
    if (n.phi.isDiff) {
      n.phi.isDiff = false;
      n.phi.eqs = n.phi.eqsR;
      n.phi.eqsR.clear();
    }
    if (q->k == Proc::If) return f.ifte(n.phi, n.a, n.b, n.color);
    if (n.a == q->a && n.b == q->b) return q;
    switch (n.k) {
      case Proc::Par:
        return f.par(n.a, n.b);
      case Proc::Repl:
        return f.repl(n.a);
      case Proc::New:
        return f.newn(n.name, n.a);
      case Proc::Assign:
        return f.assign(n.var, n.term, n.a, n.color);
      case Proc::In:
        return f.in(n.chan, n.var, n.a, n.color);
      case Proc::Out:
        return f.out(n.chan, n.term, n.a, n.color);
      default:
        return q;
    }
  };
  return rec(r);
}

ProcP procSubst(ProcFactory& f, const Subst& s, ProcP p) {
  if (s.empty()) return p;
  World& w = f.world();
  return mapTerms(f, p, [&](Term t) { return applySubst(w, s, t); });
}

ProcP procRenameName(ProcFactory& f, ProcP p, Term from, Term to) {
  World& w = f.world();
  return mapTerms(f, p, [&](Term t) { return renameName(w, t, from, to); });
}

ProcP fillContext(ProcFactory& f, ProcP ctx, const std::vector<ProcP>& ps) {
  int holes = countHoles(ctx);
  if (holes != (int)ps.size())
    fail("ArityMismatch", "context has " + std::to_string(holes) +
                              " holes, got " + std::to_string(ps.size()) +
                              " fillings");
  std::function<ProcP(ProcP)> rec = [&](ProcP q) -> ProcP {
    if (!q) return q;
    if (q->k == Proc::Hole) {
      if (q->holeIndex < 1 || q->holeIndex > (int)ps.size())
        fail("ArityMismatch", "hole index out of range");
      return ps[q->holeIndex - 1];
    }
    Proc n = *q;
    n.a = rec(q->a);
    n.b = rec(q->b);
    if (n.a == q->a && n.b == q->b) return q;
    switch (n.k) {
      case Proc::Par:
        return f.par(n.a, n.b);
      case Proc::Repl:
        return f.repl(n.a);
      case Proc::New:
        return f.newn(n.name, n.a);
      case Proc::Assign:
        return f.assign(n.var, n.term, n.a, n.color);
      case Proc::If:
        return f.ifte(n.phi, n.a, n.b, n.color);
      case Proc::In:
        return f.in(n.chan, n.var, n.a, n.color);
      case Proc::Out:
        return f.out(n.chan, n.term, n.a, n.color);
      default:
        return q;
    }
  };
  return rec(ctx);
}

ProcP renameForSpawn(ProcFactory& f, ProcP body, int j) {
  World& w = f.world();
  std::function<ProcP(ProcP, Subst&, std::vector<std::pair<Term, Term>>&)>
      rec = [&](ProcP p, Subst& vs,
                std::vector<std::pair<Term, Term>>& ns) -> ProcP {
    if (!p) return p;
    auto ren = [&](Term t) {
      t = applySubst(w, vs, t);
      for (auto& [from, to] : ns) t = renameName(w, t, from, to);
      return t;
    };
    switch (p->k) {
      case Proc::Nil:
        return f.nil();
      case Proc::Hole:
        return f.hole(p->holeIndex);
      case Proc::Par:
        return f.par(rec(p->a, vs, ns), rec(p->b, vs, ns));
      case Proc::Repl:
        return f.repl(rec(p->a, vs, ns));
      case Proc::New: {
        std::vector<int> idx = p->name->index;
        idx.push_back(j);
        Term fresh = w.name(w.str(p->name->ident), p->name->sort, idx);
        ns.push_back({p->name, fresh});
        ProcP bodyR = rec(p->a, vs, ns);
        ns.pop_back();
        return f.newn(fresh, bodyR);
      }
      case Proc::Assign: {
        Term v = ren(p->term);
        uint32_t nv =
            w.intern(w.str(p->var) + "@" + std::to_string(j))
                ;
        Subst vs2 = vs;
        vs2.m[p->var] = w.var(w.str(nv));
        return f.assign(nv, v, rec(p->a, vs2, ns), p->color);
      }
      case Proc::If: {
        Formula phi = p->phi;
        for (auto& [l, r] : phi.eqs) {
          l = ren(l);
          r = ren(r);
        }
        for (auto& [l, r] : phi.eqsR) {
          l = ren(l);
          r = ren(r);
        }
        return f.ifte(std::move(phi), rec(p->a, vs, ns), rec(p->b, vs, ns),
                      p->color);
      }
      case Proc::In: {
        Term c = ren(p->chan);
        uint32_t nv = w.intern(w.str(p->var) + "@" + std::to_string(j));
        Subst vs2 = vs;
        vs2.m[p->var] = w.var(w.str(nv));
        return f.in(c, nv, rec(p->a, vs2, ns), p->color);
      }
      case Proc::Out:
        return f.out(ren(p->chan), ren(p->term), rec(p->a, vs, ns), p->color);
    }
    return p;
  };
  Subst vs;
  std::vector<std::pair<Term, Term>> ns;
  return rec(body, vs, ns);
}

}  // namespace eqc
