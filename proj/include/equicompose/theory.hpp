#pragma once

#include "equicompose/term.hpp"

namespace eqc {

constexpr int TAGROOT_BOT = -1;

// Declared partition of user theory indices into the two classes.
struct Partition {
  std::vector<int> alpha, beta;
  bool inAlpha(int i) const {
    for (int a : alpha)
      if (a == i) return true;
    return false;
  }
  bool inBeta(int i) const {
    for (int b : beta)
      if (b == i) return true;
    return false;
  }
  // 0 = alpha, 1 = beta
  int classOf(int i) const {
    if (inAlpha(i)) return 0;
    if (inBeta(i)) return 1;
    fail("UnknownTheory", "theory index " + std::to_string(i) +
                              " not in the declared partition");
  }
};

struct Rule {
  Term lhs;
  Term rhs;
  int theory = 0;
};

// Convergent rules plus permutative ordered equations. E0 and the E_tag_i
// rules are installed automatically; user rules come from theory blocks.
class Theory {
 public:
  explicit Theory(World& w);

  void addRule(Term lhs, Term rhs, int theory);
  void addPermutative(Term lhs, Term rhs, int theory);
  void ensureTagTheory(int theory); // installs untag_i(tag_i(x)) = x

  // Canonical normal form: convergent rules to fixpoint, then permutative
  // redexes resolved toward the least arrangement under the term order.
  Term normalize(Term t) const;
  bool equalMod(Term a, Term b) const { return normalize(a) == normalize(b); }

  std::vector<Term> factors(Term t) const;
  // TAGROOT_BOT for names/variables, 0 for untagged common symbols,
  // i for Sigma_i / Sigma_tag_i roots or tagged common constructors.
  int tagroot(Term t) const;

  int componentOf(int sym) const; // theory index of a symbol
  bool isDestructor(int sym) const;
  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<Rule>& permutatives() const { return perms_; }

  World& world() const { return w_; }
  long stepBudget = 10000;

 private:
  Term convNorm(Term t, long& budget) const;
  Term rewriteRoot(Term t, long& budget) const;
  Term permCanon(Term t, long& budget) const;
  bool hasPermSymbol(Term t) const;

  World& w_;
  std::vector<Rule> rules_;
  std::vector<Rule> perms_;
  std::vector<bool> permSym_; // indexed by symbol id
  mutable std::unordered_map<Term, Term> convMemo_;
  mutable std::unordered_map<Term, Term> canonMemo_;
};

// Syntactic matching of a pattern (with Var leaves) against a term.
bool matchPat(Term pat, Term t, Subst& bind);

}  // namespace eqc
