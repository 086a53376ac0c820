#include "equicompose/knowledge.hpp"

#include <algorithm>

namespace eqc {

Term handleVar(World& w, int i) {
  return w.var("w" + std::to_string(i));
}

Term evalRecipe(const Theory& th, Term recipe,
                const std::vector<Term>& frame) {
  World& w = th.world();
  Subst s;
  for (size_t i = 0; i < frame.size(); ++i)
    s.m[handleVar(w, (int)i + 1)->ident] = frame[i];
  return th.normalize(applySubst(w, s, recipe));
}

// Symbols the attacker may apply: everything except diff.
static std::vector<int> attackerSymbols(const World& w) {
  std::vector<int> out;
  for (int s = 0; s < w.numSymbols(); ++s)
    if (s != w.S_diff) out.push_back(s);
  return out;
}

KB saturate(const Theory& th, const std::vector<Term>& frame,
            const std::vector<Term>& publics, int depth, size_t maxEntries) {
  World& w = th.world();
  KB kb;
  auto add = [&](Term v, Term r, int d) {
    if (kb.byValue.count(v)) return false;
    kb.byValue[v] = r;
    kb.entries.push_back({v, r, d});
    return true;
  };
  for (Term p : publics) add(th.normalize(p), p, 1);
  for (size_t i = 0; i < frame.size(); ++i)
    add(th.normalize(frame[i]), handleVar(w, (int)i + 1), 1);

  std::vector<int> syms = attackerSymbols(w);
  // worklist closure: destructor steps always, constructors up to depth
  size_t next = 0;
  while (next < kb.entries.size() && kb.entries.size() < maxEntries) {
    size_t frontier = kb.entries.size();
    for (int sy : syms) {
      const Symbol& sym = w.sym(sy);
      if (sym.arity < 1 || sym.arity > 2) continue;
      if (sym.arity == 1) {
        for (size_t i = 0; i < frontier; ++i) {
          if (kb.entries.size() >= maxEntries) break;
          if (i < next) continue;
          const KBEntry e = kb.entries[i];
          Term t;
          try {
            t = w.app(sy, {e.value});
          } catch (const Error&) {
            continue; // sort or seed violation
          }
          Term v = th.normalize(t);
          bool fired = v != t;
          int d = e.depth + 1;
          if (fired || d <= depth) {
            try {
              add(v, w.app(sy, {e.recipe}), fired ? 1 : d);
            } catch (const Error&) {
            }
          }
        }
      } else {
        for (size_t i = 0; i < frontier; ++i) {
          for (size_t j = 0; j < frontier; ++j) {
            if (kb.entries.size() >= maxEntries) break;
            if (i < next && j < next) continue; // both args already combined
            const KBEntry a = kb.entries[i];
            const KBEntry b = kb.entries[j];
            Term t;
            try {
              t = w.app(sy, {a.value, b.value});
            } catch (const Error&) {
              continue; // sort violation
            }
            Term v = th.normalize(t);
            bool fired = v != t;
            int d = std::max(a.depth, b.depth) + 1;
            if (fired || d <= depth) {
              try {
                add(v, w.app(sy, {a.recipe, b.recipe}), fired ? 1 : d);
              } catch (const Error&) {
              }
            }
          }
        }
      }
    }
    next = frontier;
  }
  return kb;
}

static std::optional<Term> deduceRec(const Theory& th, const KB& kb, Term v,
                                     int fuel) {
  if (Term r = kb.recipe(v)) return r;
  if (fuel <= 0) return std::nullopt;
  World& w = th.world();
  if (!isApp(v) || v->sym == w.S_diff) return std::nullopt;
  std::vector<Term> args;
  for (Term a : v->args) {
    auto r = deduceRec(th, kb, th.normalize(a), fuel - 1);
    if (!r) return std::nullopt;
    args.push_back(*r);
  }
  // construction must reproduce the value (v is a normal form)
  Term t = w.app(v->sym, v->args);
  if (th.normalize(t) != v) return std::nullopt;
  return w.app(v->sym, std::move(args));
}

std::optional<Term> deduce(const Theory& th, const KB& kb, Term target) {
  return deduceRec(th, kb, th.normalize(target), 64);
}

StaticEquivResult staticEquiv(const Theory& th, const std::vector<Term>& f1,
                              const std::vector<Term>& f2,
                              const std::vector<Term>& publics, int depth,
                              size_t maxRecipes) {
  StaticEquivResult res;
  if (f1.size() != f2.size()) {
    res.verdict = Verdict::Refuted;
    res.note = "frames have different arity";
    return res;
  }
  World& w = th.world();
  struct Entry {
    Term v1, v2, recipe;
    int depth;
  };
  std::vector<Entry> entries; // deduplicated by value pair
  std::map<std::pair<Term, Term>, Term> seen;
  // group consistency maps: value on one side -> value on the other
  std::map<Term, size_t> rep1, rep2; // value -> index of first entry
  auto add = [&](Term v1, Term v2, Term recipe, int d) -> bool {
    auto key = std::make_pair(v1, v2);
    if (seen.count(key)) return true;
    seen[key] = recipe;
    auto i1 = rep1.find(v1);
    if (i1 != rep1.end()) {
      // equal on frame1 but the pair is new, so frame2 differs
      res.verdict = Verdict::Refuted;
      res.recipeM = entries[i1->second].recipe;
      res.recipeN = recipe;
      res.failsOnSecond = true;
      return false;
    }
    auto i2 = rep2.find(v2);
    if (i2 != rep2.end()) {
      res.verdict = Verdict::Refuted;
      res.recipeM = entries[i2->second].recipe;
      res.recipeN = recipe;
      res.failsOnSecond = false;
      return false;
    }
    rep1[v1] = entries.size();
    rep2[v2] = entries.size();
    entries.push_back({v1, v2, recipe, d});
    return true;
  };

  for (Term p : publics)
    if (!add(th.normalize(p), th.normalize(p), p, 1)) return res;
  for (size_t i = 0; i < f1.size(); ++i) {
    Term h = handleVar(w, (int)i + 1);
    if (!add(th.normalize(f1[i]), th.normalize(f2[i]), h, 1)) return res;
  }

  std::vector<int> syms = attackerSymbols(w);
  size_t next = 0;
  for (int layer = 2; layer <= depth; ++layer) {
    size_t frontier = entries.size();
    for (int sy : syms) {
      const Symbol& sym = w.sym(sy);
      if (sym.arity < 1 || sym.arity > 2) continue;
      if (sym.arity == 1) {
        for (size_t i = 0; i < frontier; ++i) {
          if (i < next) continue;
          if (entries.size() >= maxRecipes) goto capped;
          const Entry e = entries[i];
          Term t1, t2, rc;
          try {
            t1 = w.app(sy, {e.v1});
            t2 = w.app(sy, {e.v2});
            rc = w.app(sy, {e.recipe});
          } catch (const Error&) {
            continue;
          }
          if (!add(th.normalize(t1), th.normalize(t2), rc, layer))
            return res;
          ++res.recipesExplored;
        }
      } else {
        for (size_t i = 0; i < frontier; ++i) {
          for (size_t j = 0; j < frontier; ++j) {
            if (i < next && j < next) continue;
            if (entries.size() >= maxRecipes) goto capped;
            const Entry a = entries[i];
            const Entry b = entries[j];
            Term t1, t2, rc;
            try {
              t1 = w.app(sy, {a.v1, b.v1});
              t2 = w.app(sy, {a.v2, b.v2});
              rc = w.app(sy, {a.recipe, b.recipe});
            } catch (const Error&) {
              continue;
            }
            if (!add(th.normalize(t1), th.normalize(t2), rc, layer))
              return res;
            ++res.recipesExplored;
          }
        }
      }
    }
    next = frontier;
  }
  res.verdict = Verdict::Holds;
  res.recipesExplored += entries.size();
  return res;

capped:
  res.verdict = Verdict::Unknown;
  res.note = "recipe cap reached";
  res.recipesExplored = entries.size();
  return res;
}

}  // namespace eqc
