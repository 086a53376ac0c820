#include "equicompose/term.hpp"

#include <algorithm>

namespace eqc {

static size_t mix(size_t h, size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

World::World() {
  auto add = [&](const char* n, int ar, int seedArg = -1) {
    return addSymbol(n, ar, Origin::Common, 0, seedArg);
  };
  S_sdec = add("sdec", 2);
  S_senc = add("senc", 2);
  S_adec = add("adec", 2);
  S_aenc = add("aenc", 2);
  S_pk = add("pk", 1, 0);
  S_vk = add("vk", 1, 0);
  S_pair = add("pair", 2);
  S_proj1 = add("proj1", 1);
  S_proj2 = add("proj2", 1);
  S_sign = add("sign", 2, 1);
  S_check = add("check", 2);
  S_h = add("h", 1);
  S_diff = addSymbol("diff", 2, Origin::Diff, 0);
}

uint32_t World::intern(std::string_view s) {
  auto it = stringIds_.find(std::string(s));
  if (it != stringIds_.end()) return it->second;
  uint32_t id = (uint32_t)strings_.size();
  strings_.emplace_back(s);
  stringIds_.emplace(strings_.back(), id);
  return id;
}

int World::addSymbol(std::string name, int arity, Origin o, int theory,
                     int seedArg) {
  auto it = symbolIds_.find(name);
  if (it != symbolIds_.end()) {
    const Symbol& s = symbols_[it->second];
    if (s.arity != arity || s.origin != o || s.theory != theory)
      fail("DuplicateSymbol", "conflicting redeclaration of " + name);
    return it->second;
  }
  int id = (int)symbols_.size();
  symbols_.push_back(Symbol{name, arity, o, theory, seedArg});
  symbolIds_.emplace(std::move(name), id);
  return id;
}

int World::symbolByName(std::string_view n) const {
  auto it = symbolIds_.find(std::string(n));
  return it == symbolIds_.end() ? -1 : it->second;
}

int World::tagSym(int theory) {
  auto it = tagSyms_.find(theory);
  if (it != tagSyms_.end()) return it->second.first;
  int t = addSymbol("tag" + std::to_string(theory), 1, Origin::Tag, theory);
  int u = addSymbol("untag" + std::to_string(theory), 1, Origin::Tag, theory);
  tagSyms_[theory] = {t, u};
  return t;
}

int World::untagSym(int theory) {
  tagSym(theory);
  return tagSyms_[theory].second;
}

bool World::isTagSym(int s) const {
  auto it = tagSyms_.find(symbols_[s].theory);
  return it != tagSyms_.end() && it->second.first == s;
}

bool World::isUntagSym(int s) const {
  auto it = tagSyms_.find(symbols_[s].theory);
  return it != tagSyms_.end() && it->second.second == s;
}

int World::tagTheoryOf(int s) const { return symbols_[s].theory; }

Term World::internNode(TermNode n) {
  size_t h = mix(0, (size_t)n.k);
  if (n.k == TermNode::App) {
    h = mix(h, (size_t)n.sym);
    for (Term a : n.args) h = mix(h, a->hash);
  } else {
    h = mix(h, (size_t)n.ident);
    h = mix(h, (size_t)n.sort);
    for (int i : n.index) h = mix(h, (size_t)(i + 1));
  }
  n.hash = h;
  auto& bucket = arena_[h];
  for (auto& cand : bucket) {
    if (cand->k != n.k) continue;
    if (n.k == TermNode::App) {
      if (cand->sym == n.sym && cand->args == n.args) return cand.get();
    } else {
      if (cand->ident == n.ident && cand->sort == n.sort &&
          cand->index == n.index)
        return cand.get();
    }
  }
  n.id = nextTermId_++;
  bucket.push_back(std::make_unique<TermNode>(std::move(n)));
  return bucket.back().get();
}

Term World::name(std::string_view n, SortK s, std::vector<int> idx) {
  TermNode t;
  t.k = TermNode::Name;
  t.ident = intern(n);
  t.sort = s;
  t.index = std::move(idx);
  return internNode(std::move(t));
}

Term World::var(std::string_view n) {
  TermNode t;
  t.k = TermNode::Var;
  t.ident = intern(n);
  return internNode(std::move(t));
}

Term World::app(int sym, std::vector<Term> args) {
  const Symbol& s = symbols_[sym];
  if ((int)args.size() != s.arity)
    fail("ArityMismatch", s.name + " expects " + std::to_string(s.arity) +
                              " arguments, got " +
                              std::to_string(args.size()));
  if (s.seedArg >= 0) {
    Term a = args[s.seedArg];
    // Seed positions may hold names, variables, or terms that can still
    // evaluate to a name (destructor- or tag-rooted); constructor
    // applications can never be seeds.
    if (isApp(a)) {
      const Symbol& as = symbols_[a->sym];
      bool destructorish =
          a->sym == S_sdec || a->sym == S_adec || a->sym == S_check ||
          a->sym == S_proj1 || a->sym == S_proj2 || as.origin == Origin::Tag ||
          a->sym == S_diff;
      if (!destructorish)
        fail("SortMismatch",
             s.name + " requires a seed-sorted argument, got " + show(a));
    }
  }
  for (Term a : args)
    if (a->sort == SortK::Channel && sym != S_diff)
      fail("SortMismatch", "channel-sorted term used under " + s.name);
  TermNode t;
  t.k = TermNode::App;
  t.sym = sym;
  t.args = std::move(args);
  return internNode(std::move(t));
}

Term World::diffT(Term a, Term b) {
  if (a == b) return a;
  if (isApp(a) && a->sym == S_diff) fail("SortMismatch", "nested diff");
  if (isApp(b) && b->sym == S_diff) fail("SortMismatch", "nested diff");
  TermNode t;
  t.k = TermNode::App;
  t.sym = S_diff;
  t.args = {a, b};
  if (a->sort == SortK::Channel || b->sort == SortK::Channel)
    t.sort = SortK::Channel;
  return internNode(std::move(t));
}

int World::compare(Term a, Term b) const {
  if (a == b) return 0;
  if (a->k != b->k) return a->k < b->k ? -1 : 1;
  if (a->k == TermNode::App) {
    const std::string& an = symbols_[a->sym].name;
    const std::string& bn = symbols_[b->sym].name;
    if (int c = an.compare(bn)) return c < 0 ? -1 : 1;
    if (a->args.size() != b->args.size())
      return a->args.size() < b->args.size() ? -1 : 1;
    for (size_t i = 0; i < a->args.size(); ++i)
      if (int c = compare(a->args[i], b->args[i])) return c;
    return 0;
  }
  const std::string& an = strings_[a->ident];
  const std::string& bn = strings_[b->ident];
  if (int c = an.compare(bn)) return c < 0 ? -1 : 1;
  if (a->index != b->index) return a->index < b->index ? -1 : 1;
  if (a->sort != b->sort) return a->sort < b->sort ? -1 : 1;
  return 0;
}

std::string World::show(Term t) const {
  if (isName(t) || isVar(t)) {
    std::string s = strings_[t->ident];
    if (!t->index.empty()) {
      s += "[";
      for (size_t i = 0; i < t->index.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(t->index[i]);
      }
      s += "]";
    }
    return s;
  }
  if (t->sym == S_pair)
    return "<" + show(t->args[0]) + "," + show(t->args[1]) + ">";
  if (t->sym == S_diff)
    return "diff[" + show(t->args[0]) + "," + show(t->args[1]) + "]";
  std::string s = symbols_[t->sym].name;
  if (t->args.empty()) return s;
  s += "(";
  for (size_t i = 0; i < t->args.size(); ++i) {
    if (i) s += ",";
    s += show(t->args[i]);
  }
  s += ")";
  return s;
}

Term applySubst(World& w, const Subst& s, Term t) {
  if (s.empty()) return t;
  if (isName(t)) return t;
  if (isVar(t)) {
    Term r = s.get(t->ident);
    return r ? r : t;
  }
  std::vector<Term> args;
  args.reserve(t->args.size());
  bool changed = false;
  for (Term a : t->args) {
    Term r = applySubst(w, s, a);
    changed |= (r != a);
    args.push_back(r);
  }
  return changed ? w.app(t->sym, std::move(args)) : t;
}

void collectNames(Term t, std::vector<Term>& out) {
  if (isName(t)) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    return;
  }
  if (isApp(t))
    for (Term a : t->args) collectNames(a, out);
}

void collectVars(Term t, std::vector<uint32_t>& out) {
  if (isVar(t)) {
    if (std::find(out.begin(), out.end(), t->ident) == out.end())
      out.push_back(t->ident);
    return;
  }
  if (isApp(t))
    for (Term a : t->args) collectVars(a, out);
}

bool containsDiff(const World& w, Term t) {
  if (!isApp(t)) return false;
  if (t->sym == w.S_diff) return true;
  for (Term a : t->args)
    if (containsDiff(w, a)) return true;
  return false;
}

bool containsVar(Term t, uint32_t v) {
  if (isVar(t)) return t->ident == v;
  if (isApp(t))
    for (Term a : t->args)
      if (containsVar(a, v)) return true;
  return false;
}

bool containsName(Term t, Term n) {
  if (t == n) return true;
  if (isApp(t))
    for (Term a : t->args)
      if (containsName(a, n)) return true;
  return false;
}

Term fstT(World& w, Term t) {
  if (!isApp(t)) return t;
  if (t->sym == w.S_diff) return fstT(w, t->args[0]);
  std::vector<Term> args;
  args.reserve(t->args.size());
  bool changed = false;
  for (Term a : t->args) {
    Term r = fstT(w, a);
    changed |= (r != a);
    args.push_back(r);
  }
  return changed ? w.app(t->sym, std::move(args)) : t;
}

Term sndT(World& w, Term t) {
  if (!isApp(t)) return t;
  if (t->sym == w.S_diff) return sndT(w, t->args[1]);
  std::vector<Term> args;
  args.reserve(t->args.size());
  bool changed = false;
  for (Term a : t->args) {
    Term r = sndT(w, a);
    changed |= (r != a);
    args.push_back(r);
  }
  return changed ? w.app(t->sym, std::move(args)) : t;
}

Term renameName(World& w, Term t, Term from, Term to) {
  if (t == from) return to;
  if (!isApp(t)) return t;
  std::vector<Term> args;
  args.reserve(t->args.size());
  bool changed = false;
  for (Term a : t->args) {
    Term r = renameName(w, a, from, to);
    changed |= (r != a);
    args.push_back(r);
  }
  return changed ? w.app(t->sym, std::move(args)) : t;
}

Term renameVar(World& w, Term t, uint32_t from, Term to) {
  if (isVar(t) && t->ident == from) return to;
  if (!isApp(t)) return t;
  std::vector<Term> args;
  args.reserve(t->args.size());
  bool changed = false;
  for (Term a : t->args) {
    Term r = renameVar(w, a, from, to);
    changed |= (r != a);
    args.push_back(r);
  }
  return changed ? w.app(t->sym, std::move(args)) : t;
}

size_t termDepth(Term t) {
  if (!isApp(t) || t->args.empty()) return 1;
  size_t d = 0;
  for (Term a : t->args) d = std::max(d, termDepth(a));
  return d + 1;
}

}  // namespace eqc
