#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eqc {

struct Error : std::runtime_error {
  std::string kind;
  Error(std::string k, const std::string& msg)
      : std::runtime_error(k + ": " + msg), kind(std::move(k)) {}
};

[[noreturn]] inline void fail(const char* kind, const std::string& msg) {
  throw Error(kind, msg);
}

enum class SortK : uint8_t { Base, Channel };

enum class Origin : uint8_t { Common, User, Tag, Diff };

struct Symbol {
  std::string name;
  int arity = 0;
  Origin origin = Origin::User;
  int theory = 0;   // 0 for Sigma0, i for user theory i / tag_i
  int seedArg = -1; // argument position restricted to seed sort, -1 if none
};

struct TermNode;
using Term = const TermNode*;

struct TermNode {
  enum K : uint8_t { Name, Var, App } k = Name;
  SortK sort = SortK::Base;
  uint32_t ident = 0; // string id (Name / Var)
  int sym = -1;       // symbol id (App)
  std::vector<int> index;
  std::vector<Term> args;
  size_t hash = 0;
  uint32_t id = 0; // creation order, deterministic
};

// A World owns the string table, the signature, and the hash-consed term
// arena. Terms from different worlds must never be mixed.
class World {
 public:
  World();
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  uint32_t intern(std::string_view s);
  const std::string& str(uint32_t id) const { return strings_[id]; }

  int addSymbol(std::string name, int arity, Origin o, int theory,
                int seedArg = -1);
  int symbolByName(std::string_view n) const;
  const Symbol& sym(int id) const { return symbols_[id]; }
  int numSymbols() const { return (int)symbols_.size(); }
  int tagSym(int theory);
  int untagSym(int theory);
  bool isTagSym(int s) const;
  bool isUntagSym(int s) const;
  int tagTheoryOf(int s) const; // theory index of a tag_i/untag_i symbol

  // Sigma0 symbol ids, fixed at construction.
  int S_sdec, S_senc, S_adec, S_aenc, S_pk, S_vk, S_pair, S_proj1, S_proj2,
      S_sign, S_check, S_h, S_diff;

  Term name(std::string_view n, SortK s = SortK::Base,
            std::vector<int> idx = {});
  Term var(std::string_view n);
  Term app(int sym, std::vector<Term> args);
  Term pairT(Term a, Term b) { return app(S_pair, {a, b}); }
  Term diffT(Term a, Term b);

  // Fixed total term order: kind, then ident/symbol name lexicographic,
  // then arity, then index vector / arguments left to right.
  int compare(Term a, Term b) const;

  std::string show(Term t) const;

 private:
  Term internNode(TermNode n);
  std::vector<std::string> strings_;
  std::unordered_map<std::string, uint32_t> stringIds_;
  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, int> symbolIds_;
  std::map<int, std::pair<int, int>> tagSyms_; // theory -> (tag, untag)
  std::unordered_map<size_t, std::vector<std::unique_ptr<TermNode>>> arena_;
  uint32_t nextTermId_ = 0;
};

inline bool isName(Term t) { return t->k == TermNode::Name; }
inline bool isVar(Term t) { return t->k == TermNode::Var; }
inline bool isApp(Term t) { return t->k == TermNode::App; }

struct Subst {
  std::map<uint32_t, Term> m;
  Term get(uint32_t v) const {
    auto it = m.find(v);
    return it == m.end() ? nullptr : it->second;
  }
  bool empty() const { return m.empty(); }
};

Term applySubst(World& w, const Subst& s, Term t);

void collectNames(Term t, std::vector<Term>& out);
void collectVars(Term t, std::vector<uint32_t>& out);
bool containsDiff(const World& w, Term t);
bool containsVar(Term t, uint32_t v);
bool containsName(Term t, Term n);
Term fstT(World& w, Term t);
Term sndT(World& w, Term t);
// Replaces every occurrence of name `from` (exact ident+index) by `to`.
Term renameName(World& w, Term t, Term from, Term to);
Term renameVar(World& w, Term t, uint32_t from, Term to);

size_t termDepth(Term t);

}  // namespace eqc
