#include "equicompose/tagging.hpp"

#include <algorithm>
#include <functional>

namespace eqc {

static bool isTaggedCtor(const World& w, int s) {
  return s == w.S_senc || s == w.S_aenc || s == w.S_sign;
}
static bool isTaggedDtor(const World& w, int s) {
  return s == w.S_sdec || s == w.S_adec || s == w.S_check;
}

Term tagTerm(World& w, int theory, Term t) {
  if (!isApp(t)) return t;
  int tg = w.tagSym(theory);
  int ut = w.untagSym(theory);
  std::vector<Term> args;
  args.reserve(t->args.size());
  for (Term a : t->args) args.push_back(tagTerm(w, theory, a));
  if (isTaggedCtor(w, t->sym))
    return w.app(t->sym, {w.app(tg, {args[0]}), args[1]});
  if (t->sym == w.S_h) return w.app(w.S_h, {w.app(tg, {args[0]})});
  if (isTaggedDtor(w, t->sym)) return w.app(ut, {w.app(t->sym, args)});
  return w.app(t->sym, std::move(args));
}

Term untagTerm(World& w, int theory, Term t) {
  if (!isApp(t)) return t;
  int tg = w.tagSym(theory);
  int ut = w.untagSym(theory);
  if (t->sym == ut && t->args.size() == 1 && isApp(t->args[0]) &&
      isTaggedDtor(w, t->args[0]->sym)) {
    Term d = t->args[0];
    return w.app(d->sym, {untagTerm(w, theory, d->args[0]),
                          untagTerm(w, theory, d->args[1])});
  }
  std::vector<Term> args;
  for (Term a : t->args) args.push_back(untagTerm(w, theory, a));
  if (isTaggedCtor(w, t->sym) && isApp(args[0]) && args[0]->sym == tg)
    return w.app(t->sym, {args[0]->args[0], args[1]});
  if (t->sym == w.S_h && isApp(args[0]) && args[0]->sym == tg)
    return w.app(w.S_h, {args[0]->args[0]});
  return w.app(t->sym, std::move(args));
}

void testTagInto(World& w, int theory, Term t, Formula& out) {
  if (!isApp(t)) return;
  int tg = w.tagSym(theory);
  int ut = w.untagSym(theory);
  auto add = [&](Term l, Term r) {
    for (auto& [a, b] : out.eqs)
      if (a == l && b == r) return;
    out.eqs.push_back({l, r});
  };
  if (t->sym == ut) {
    // plaintext recovered by a destructor must carry the tag
    add(w.app(tg, {t}), t->args[0]);
  } else if (t->sym == w.S_proj1 || t->sym == w.S_proj2) {
    Term u = t->args[0];
    add(u, w.pairT(w.app(w.S_proj1, {u}), w.app(w.S_proj2, {u})));
  }
  for (Term a : t->args) testTagInto(w, theory, a, out);
}

Formula testTag(World& w, int theory, Term t) {
  Formula phi;
  testTagInto(w, theory, t, phi);
  return phi;
}

ProcP tagProcess(ProcFactory& f, int theory, ProcP p) {
  if (!p) return p;
  World& w = f.world();
  auto color = [&](int c) { return c ? c : theory; };
  auto guard = [&](Formula phi, ProcP body, int c) {
    if (phi.eqs.empty()) return body;
    return f.ifte(std::move(phi), body, f.nil(), c);
  };
  switch (p->k) {
    case Proc::Nil:
      return f.nil();
    case Proc::Hole:
      return f.hole(p->holeIndex);
    case Proc::Par:
      return f.par(tagProcess(f, theory, p->a), tagProcess(f, theory, p->b));
    case Proc::Repl:
      return f.repl(tagProcess(f, theory, p->a));
    case Proc::New:
      return f.newn(p->name, tagProcess(f, theory, p->a));
    case Proc::Assign: {
      Term v = tagTerm(w, theory, p->term);
      int c = color(p->color);
      ProcP body = f.assign(p->var, v, tagProcess(f, theory, p->a), c);
      return guard(testTag(w, theory, v), body, c);
    }
    case Proc::In:
      return f.in(p->chan, p->var, tagProcess(f, theory, p->a),
                  color(p->color));
    case Proc::Out: {
      Term v = tagTerm(w, theory, p->term);
      int c = color(p->color);
      ProcP body = f.out(p->chan, v, tagProcess(f, theory, p->a), c);
      return guard(testTag(w, theory, v), body, c);
    }
    case Proc::If: {
      int c = color(p->color);
      Formula phi;
      phi.isDiff = p->phi.isDiff;
      Formula tests;
      for (auto& [l, r] : p->phi.eqs) {
        Term lt = tagTerm(w, theory, l);
        Term rt = tagTerm(w, theory, r);
        phi.eqs.push_back({lt, rt});
        testTagInto(w, theory, lt, tests);
        testTagInto(w, theory, rt, tests);
      }
      for (auto& [l, r] : p->phi.eqsR) {
        Term lt = tagTerm(w, theory, l);
        Term rt = tagTerm(w, theory, r);
        phi.eqsR.push_back({lt, rt});
        testTagInto(w, theory, lt, tests);
        testTagInto(w, theory, rt, tests);
      }
      ProcP inner = f.ifte(std::move(phi), tagProcess(f, theory, p->a),
                           tagProcess(f, theory, p->b), c);
      return guard(std::move(tests), inner, c);
    }
  }
  return p;
}

bool isTaggedTerm(World& w, int theory, Term t, std::string* why) {
  if (!isApp(t)) return true;
  int tg = w.tagSym(theory);
  int ut = w.untagSym(theory);
  auto bad = [&](const std::string& msg) {
    if (why) *why = msg + " in " + w.show(t);
    return false;
  };
  if (t->sym == ut) {
    Term d = t->args[0];
    if (!isApp(d) || !isTaggedDtor(w, d->sym))
      return bad("untag applied to a non-destructor");
    return isTaggedTerm(w, theory, d->args[0], why) &&
           isTaggedTerm(w, theory, d->args[1], why);
  }
  if (t->sym == tg) {
    // TestTag guards compare tag_i(untag_i(d)) with d
    if (isApp(t->args[0]) && t->args[0]->sym == ut)
      return isTaggedTerm(w, theory, t->args[0], why);
    return bad("stray tag application");
  }
  if (w.isTagSym(t->sym) || w.isUntagSym(t->sym))
    return bad("tag symbol of a foreign theory");
  if (isTaggedDtor(w, t->sym)) return bad("bare destructor without untag");
  if (isTaggedCtor(w, t->sym)) {
    Term u = t->args[0];
    if (!isApp(u) || u->sym != tg) return bad("untagged plaintext");
    return isTaggedTerm(w, theory, u->args[0], why) &&
           isTaggedTerm(w, theory, t->args[1], why);
  }
  if (t->sym == w.S_h) {
    Term u = t->args[0];
    if (!isApp(u) || u->sym != tg) return bad("untagged hash argument");
    return isTaggedTerm(w, theory, u->args[0], why);
  }
  const Symbol& sym = w.sym(t->sym);
  if (sym.origin == Origin::User && sym.theory != theory)
    return bad("symbol of a foreign theory");
  for (Term a : t->args)
    if (!isTaggedTerm(w, theory, a, why)) return false;
  return true;
}

// TestTag equations tag_i(untag_i(d)) = d expose the bare destructor on
// the right; accept exactly that shape.
static bool taggedEq(World& w, int theory, Term l, Term r, std::string* why) {
  int tg = w.tagSym(theory);
  int ut = w.untagSym(theory);
  if (isApp(l) && l->sym == tg && isApp(l->args[0]) && l->args[0]->sym == ut &&
      l->args[0]->args[0] == r && isApp(r) && isTaggedDtor(w, r->sym))
    return isTaggedTerm(w, theory, r->args[0], why) &&
           isTaggedTerm(w, theory, r->args[1], why);
  return isTaggedTerm(w, theory, l, why) && isTaggedTerm(w, theory, r, why);
}

// terms built from names, variables, pairs, projections and key
// constructors are tagged under every theory
static bool isNeutralTerm(const World& w, Term t, std::string* why) {
  if (!isApp(t)) return true;
  bool ok = t->sym == w.S_pair || t->sym == w.S_proj1 ||
            t->sym == w.S_proj2 || t->sym == w.S_pk || t->sym == w.S_vk ||
            t->sym == w.S_diff;
  if (!ok) {
    if (why)
      *why = "uncolored action uses " + w.sym(t->sym).name + " in " +
             w.show(t);
    return false;
  }
  for (Term a : t->args)
    if (!isNeutralTerm(w, a, why)) return false;
  return true;
}

static bool taggedActions(World& w, ProcP p, int fixedTheory,
                          std::string* why) {
  if (!p) return true;
  int theory = fixedTheory ? fixedTheory : p->color;
  auto terms = [&](Term t) {
    if (!t) return true;
    if (!theory) return isNeutralTerm(w, t, why);
    return isTaggedTerm(w, theory, t, why);
  };
  if (!theory) {
    for (auto& [l, r] : p->phi.eqs)
      if (!terms(l) || !terms(r)) return false;
    for (auto& [l, r] : p->phi.eqsR)
      if (!terms(l) || !terms(r)) return false;
    return terms(p->term) && taggedActions(w, p->a, fixedTheory, why) &&
           taggedActions(w, p->b, fixedTheory, why);
  }
  if (p->term && !terms(p->term)) return false;
  for (auto& [l, r] : p->phi.eqs)
    if (!taggedEq(w, theory, l, r, why)) return false;
  for (auto& [l, r] : p->phi.eqsR)
    if (!taggedEq(w, theory, l, r, why)) return false;
  return taggedActions(w, p->a, fixedTheory, why) &&
         taggedActions(w, p->b, fixedTheory, why);
}

bool isTaggedProcess(World& w, int theory, ProcP p, std::string* why) {
  return taggedActions(w, p, theory, why);
}

bool isTaggedProcessColored(World& w, ProcP p, std::string* why) {
  return taggedActions(w, p, 0, why);
}

}  // namespace eqc
