#pragma once

#include "equicompose/theory.hpp"

#include <memory>
#include <optional>

namespace eqc {

struct Formula {
  // Conjunction of equalities; a biprocess conditional carries separate
  // left/right conjunctions (diff at the top of the formula).
  bool isDiff = false;
  std::vector<std::pair<Term, Term>> eqs;
  std::vector<std::pair<Term, Term>> eqsR; // used only when isDiff
  bool operator==(const Formula&) const = default;
};

struct Proc;
using ProcP = std::shared_ptr<const Proc>;

struct Proc {
  enum K : uint8_t { Nil, Hole, Par, Repl, New, Assign, If, In, Out } k = Nil;
  ProcP a, b;        // Par: a|b; If: then=a, else=b; other prefixes: a = cont
  Term name = nullptr;   // New binder (Name node)
  uint32_t var = 0;      // Assign / In binder (variable ident)
  Term term = nullptr;   // Assign value / Out payload
  Term chan = nullptr;   // In / Out channel
  Formula phi;           // If
  int color = 0;         // 0 = uncolored, i = theory index
  int holeIndex = 0;     // Hole
  uint64_t serial = 0;   // deterministic creation id
  size_t hash = 0;       // structural hash
};

class ProcFactory {
 public:
  explicit ProcFactory(World& w) : w_(w) {}
  ProcP nil();
  ProcP hole(int index);
  ProcP par(ProcP a, ProcP b);
  ProcP repl(ProcP body);
  ProcP newn(Term n, ProcP body);
  ProcP assign(uint32_t var, Term v, ProcP body, int color = 0);
  ProcP ifte(Formula phi, ProcP thn, ProcP els, int color = 0);
  ProcP in(Term chan, uint32_t var, ProcP body, int color = 0);
  ProcP out(Term chan, Term v, ProcP body, int color = 0);
  World& world() const { return w_; }
  uint64_t freshId() { return ++fresh_; }

 private:
  ProcP make(Proc p);
  World& w_;
  uint64_t serial_ = 0;
  uint64_t fresh_ = 0;
  std::unordered_map<size_t, std::vector<ProcP>> interned_;
};

bool procEqual(ProcP a, ProcP b);        // structural, ignores serials
bool procEqualColored(ProcP a, ProcP b); // also compares colors
// Structural equality modulo renaming of bound names and variables.
bool procAlphaEqual(World& w, ProcP a, ProcP b);

std::string showProc(const World& w, ProcP p, int indent = 0);

void procFreeNames(ProcP p, std::vector<Term>& out);
void procBoundNames(ProcP p, std::vector<Term>& out);
void procFreeVars(ProcP p, std::vector<uint32_t>& out);
void procSymbols(ProcP p, std::vector<int>& out);
bool procHasRepl(ProcP p);
bool procHasDiff(const World& w, ProcP p);
int countHoles(ProcP p);

ProcP procFst(ProcFactory& f, ProcP p);
ProcP procSnd(ProcFactory& f, ProcP p);
// Applies a substitution to every term of the process (free variables only;
// binders are left untouched, so the substitution domain must not collide
// with bound variables).
ProcP procSubst(ProcFactory& f, const Subst& s, ProcP p);
ProcP procRenameName(ProcFactory& f, ProcP p, Term from, Term to);

// Replaces hole i by ps[i-1]; binders of the context scope over the
// fillings (intentional capture, matching C[P] in the paper).
ProcP fillContext(ProcFactory& f, ProcP ctx, const std::vector<ProcP>& ps);

// Appends index j to every bound name's index vector and suffixes every
// bound variable, for replication spawns and unfolding (App. F convention).
ProcP renameForSpawn(ProcFactory& f, ProcP body, int j);

}  // namespace eqc
