#include "equicompose/theory.hpp"

#include <algorithm>
#include <set>

namespace eqc {

static size_t termSize(Term t) {
  if (!isApp(t)) return 1;
  size_t s = 1;
  for (Term a : t->args) s += termSize(a);
  return s;
}

Theory::Theory(World& w) : w_(w) {
  Term x = w.var("#rx");
  Term y = w.var("#ry");
  Term x1 = w.var("#rx1");
  Term x2 = w.var("#rx2");
  rules_.push_back({w.app(w.S_sdec, {w.app(w.S_senc, {x, y}), y}), x, 0});
  rules_.push_back(
      {w.app(w.S_adec, {w.app(w.S_aenc, {x, w.app(w.S_pk, {y})}), y}), x, 0});
  rules_.push_back(
      {w.app(w.S_check, {w.app(w.S_sign, {x, y}), w.app(w.S_vk, {y})}), x, 0});
  rules_.push_back({w.app(w.S_proj1, {w.pairT(x1, x2)}), x1, 0});
  rules_.push_back({w.app(w.S_proj2, {w.pairT(x1, x2)}), x2, 0});
}

void Theory::ensureTagTheory(int theory) {
  int tg = w_.tagSym(theory);
  int ug = w_.untagSym(theory);
  Term x = w_.var("#rx");
  Term lhs = w_.app(ug, {w_.app(tg, {x})});
  for (const Rule& r : rules_)
    if (r.lhs == lhs) return;
  rules_.push_back({lhs, x, theory});
  convMemo_.clear();
  canonMemo_.clear();
}

void Theory::addRule(Term lhs, Term rhs, int theory) {
  if (!isApp(lhs)) fail("IllFormedRule", "rule left-hand side must be an application");
  std::vector<uint32_t> lv, rv;
  collectVars(lhs, lv);
  collectVars(rhs, rv);
  for (uint32_t v : rv)
    if (std::find(lv.begin(), lv.end(), v) == lv.end())
      fail("IllFormedRule", "rule right-hand side introduces a variable");
  if (termSize(rhs) >= termSize(lhs))
    fail("IllFormedRule",
         "convergent rules must be size-decreasing; declare the equation "
         "permutative instead");
  rules_.push_back({lhs, rhs, theory});
  convMemo_.clear();
  canonMemo_.clear();
}

void Theory::addPermutative(Term lhs, Term rhs, int theory) {
  if (!isApp(lhs) || !isApp(rhs))
    fail("IllFormedRule", "permutative equation sides must be applications");
  std::vector<uint32_t> lv, rv;
  collectVars(lhs, lv);
  collectVars(rhs, rv);
  std::sort(lv.begin(), lv.end());
  std::sort(rv.begin(), rv.end());
  if (lv != rv || termSize(lhs) != termSize(rhs))
    fail("IllFormedRule", "permutative equation must preserve variables and size");
  perms_.push_back({lhs, rhs, theory});
  permSym_.assign(w_.numSymbols(), false);
  for (const Rule& p : perms_) {
    permSym_[p.lhs->sym] = true;
    permSym_[p.rhs->sym] = true;
  }
  convMemo_.clear();
  canonMemo_.clear();
}

int Theory::componentOf(int sym) const {
  const Symbol& s = w_.sym(sym);
  if (s.origin == Origin::Common || s.origin == Origin::Diff) return 0;
  return s.theory;
}

bool Theory::isDestructor(int sym) const {
  for (const Rule& r : rules_)
    if (r.lhs->sym == sym) return true;
  return false;
}

bool matchPat(Term pat, Term t, Subst& bind) {
  if (isVar(pat)) {
    Term b = bind.get(pat->ident);
    if (b) return b == t;
    bind.m[pat->ident] = t;
    return true;
  }
  if (isName(pat)) return pat == t;
  if (!isApp(t) || t->sym != pat->sym) return false;
  for (size_t i = 0; i < pat->args.size(); ++i)
    if (!matchPat(pat->args[i], t->args[i], bind)) return false;
  return true;
}

Term Theory::rewriteRoot(Term t, long& budget) const {
  if (!isApp(t)) return t;
  for (const Rule& r : rules_) {
    if (r.lhs->sym != t->sym) continue;
    Subst bind;
    if (matchPat(r.lhs, t, bind)) {
      if (--budget < 0)
        fail("NonTermination", "rewrite-step budget exceeded");
      return convNorm(applySubst(w_, bind, r.rhs), budget);
    }
  }
  return t;
}

Term Theory::convNorm(Term t, long& budget) const {
  if (!isApp(t)) return t;
  auto it = convMemo_.find(t);
  if (it != convMemo_.end()) return it->second;
  std::vector<Term> args;
  args.reserve(t->args.size());
  bool changed = false;
  for (Term a : t->args) {
    Term r = convNorm(a, budget);
    changed |= (r != a);
    args.push_back(r);
  }
  Term cur = changed ? w_.app(t->sym, std::move(args)) : t;
  Term red = rewriteRoot(cur, budget);
  convMemo_[t] = red;
  if (cur != t) convMemo_[cur] = red;
  return red;
}

bool Theory::hasPermSymbol(Term t) const {
  if (!isApp(t)) return false;
  if (t->sym < (int)permSym_.size() && permSym_[t->sym]) return true;
  for (Term a : t->args)
    if (hasPermSymbol(a)) return true;
  return false;
}

// One-step permutative rewrites (both orientations) at every position.
static void permNeighbors(World& w, const std::vector<Rule>& perms, Term t,
                          std::vector<Term>& out) {
  if (!isApp(t)) return;
  for (const Rule& p : perms) {
    for (int dir = 0; dir < 2; ++dir) {
      Term l = dir ? p.rhs : p.lhs;
      Term r = dir ? p.lhs : p.rhs;
      Subst bind;
      if (matchPat(l, t, bind)) out.push_back(applySubst(w, bind, r));
    }
  }
  for (size_t i = 0; i < t->args.size(); ++i) {
    std::vector<Term> sub;
    permNeighbors(w, perms, t->args[i], sub);
    for (Term s : sub) {
      std::vector<Term> args = t->args;
      args[i] = s;
      out.push_back(w.app(t->sym, std::move(args)));
    }
  }
}

Term Theory::permCanon(Term t, long& budget) const {
  if (perms_.empty() || !hasPermSymbol(t)) return t;
  auto it = canonMemo_.find(t);
  if (it != canonMemo_.end()) return it->second;
  // Explore the whole permutative orbit (interleaved with convergent
  // normalization) and keep the least element under the term order.
  std::set<Term> visited{t};
  std::vector<Term> frontier{t};
  Term best = t;
  const size_t orbitCap = 4096;
  while (!frontier.empty()) {
    Term cur = frontier.back();
    frontier.pop_back();
    std::vector<Term> nbs;
    permNeighbors(w_, perms_, cur, nbs);
    for (Term nb : nbs) {
      if (--budget < 0) fail("NonTermination", "rewrite-step budget exceeded");
      Term n = convNorm(nb, budget);
      if (!visited.insert(n).second) continue;
      if (visited.size() > orbitCap)
        fail("NonTermination", "permutative orbit exceeds budget");
      if (w_.compare(n, best) < 0) best = n;
      frontier.push_back(n);
    }
  }
  for (Term v : visited) canonMemo_[v] = best;
  return best;
}

Term Theory::normalize(Term t) const {
  long budget = stepBudget;
  Term c = convNorm(t, budget);
  return permCanon(c, budget);
}

std::vector<Term> Theory::factors(Term t) const {
  std::vector<Term> out;
  if (!isApp(t)) return out;
  int comp = componentOf(t->sym);
  // Maximal subterms alien to the root's component; names and variables
  // are alien leaves.
  auto walk = [&](auto&& self, Term u) -> void {
    for (Term a : u->args) {
      if (!isApp(a) || componentOf(a->sym) != comp) {
        if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
      } else {
        self(self, a);
      }
    }
  };
  walk(walk, t);
  return out;
}

int Theory::tagroot(Term t) const {
  if (!isApp(t)) return TAGROOT_BOT;
  const Symbol& s = w_.sym(t->sym);
  if (s.origin == Origin::User || s.origin == Origin::Tag) return s.theory;
  if (t->sym == w_.S_senc || t->sym == w_.S_aenc || t->sym == w_.S_sign ||
      t->sym == w_.S_h) {
    Term a = t->args[0];
    if (isApp(a) && w_.sym(a->sym).origin == Origin::Tag && w_.isTagSym(a->sym))
      return w_.sym(a->sym).theory;
  }
  return 0;
}

}  // namespace eqc
