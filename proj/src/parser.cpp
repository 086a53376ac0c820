#include "equicompose/parser.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace eqc {

namespace {

struct Token {
  enum K { Ident, Num, Punct, End } k = End;
  std::string text;
  long num = 0;
  int line = 1, col = 1;
};

const char* kKeywords[] = {"new",  "in",   "out",  "if",   "then", "else",
                           "let",  "diff", "true", "theory", "free", "channel",
                           "private",
                           "process", "context", "frame", "system", "compose",
                           "query", "fun", "eq", "permutative", "alpha",
                           "beta", "with", "colored"};

bool isKeyword(const std::string& s) {
  for (const char* k : kKeywords)
    if (s == k) return true;
  return false;
}

struct Lexer {
  std::string src;
  size_t pos = 0;
  int line = 1, col = 1;
  std::vector<Token> toks;

  [[noreturn]] void err(const std::string& msg) {
    fail("SyntaxError", "line " + std::to_string(line) + " col " +
                            std::to_string(col) + ": " + msg);
  }

  void run() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '\n') {
        ++line;
        col = 1;
        ++pos;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        ++col;
        ++pos;
        continue;
      }
      if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
        while (pos < src.size() && src[pos] != '\n') ++pos;
        continue;
      }
      if (c == '#')
        err("'#' is reserved for internally generated names");
      Token t;
      t.line = line;
      t.col = col;
      if (isalpha((unsigned char)c) || c == '_') {
        size_t s = pos;
        // '-' joins identifiers like static-equiv but never eats '->'
        while (pos < src.size() &&
               (isalnum((unsigned char)src[pos]) || src[pos] == '_' ||
                src[pos] == '\'' ||
                (src[pos] == '-' && pos + 1 < src.size() &&
                 isalpha((unsigned char)src[pos + 1]))))
          ++pos;
        t.k = Token::Ident;
        t.text = src.substr(s, pos - s);
        col += (int)(pos - s);
      } else if (isdigit((unsigned char)c)) {
        size_t s = pos;
        while (pos < src.size() && isdigit((unsigned char)src[pos])) ++pos;
        t.k = Token::Num;
        t.text = src.substr(s, pos - s);
        t.num = std::stol(t.text);
        col += (int)(pos - s);
      } else {
        t.k = Token::Punct;
        auto two = src.substr(pos, 2);
        if (two == ":=" || two == "!=" || two == "&&" || two == "->") {
          t.text = two;
          pos += 2;
          col += 2;
        } else if (std::string("{}()[]<>,.;:|!@=/").find(c) !=
                   std::string::npos) {
          t.text = std::string(1, c);
          ++pos;
          ++col;
        } else {
          err(std::string("unexpected character '") + c + "'");
        }
      }
      toks.push_back(std::move(t));
    }
    Token end;
    end.k = Token::End;
    end.line = line;
    end.col = col;
    toks.push_back(end);
  }
};

struct Env {
  // identifier -> term (names, bound variables, parameters)
  std::vector<std::pair<std::string, Term>> stack;
  Term lookup(const std::string& s) const {
    for (auto it = stack.rbegin(); it != stack.rend(); ++it)
      if (it->first == s) return it->second;
    return nullptr;
  }
};

struct Parser {
  ProtocolSpec spec;
  std::vector<Token> toks;
  size_t ti = 0;
  bool autoNames = false; // undeclared idents become fresh names

  World& w() { return *spec.w; }
  Theory& th() { return *spec.th; }
  ProcFactory& f() { return *spec.f; }

  const Token& cur() const { return toks[ti]; }
  const Token& next() { return toks[ti++]; }

  [[noreturn]] void err(const std::string& msg) {
    fail("SyntaxError", "line " + std::to_string(cur().line) + " col " +
                            std::to_string(cur().col) + ": " + msg);
  }

  bool peekP(const char* p) const {
    return cur().k == Token::Punct && cur().text == p;
  }
  bool peekI(const char* s) const {
    return cur().k == Token::Ident && cur().text == s;
  }
  bool eatP(const char* p) {
    if (!peekP(p)) return false;
    ++ti;
    return true;
  }
  bool eatI(const char* s) {
    if (!peekI(s)) return false;
    ++ti;
    return true;
  }
  void expectP(const char* p) {
    if (!eatP(p)) err(std::string("expected '") + p + "'");
  }
  void expectI(const char* s) {
    if (!eatI(s)) err(std::string("expected '") + s + "'");
  }
  std::string ident() {
    if (cur().k != Token::Ident) err("expected identifier");
    std::string s = next().text;
    return s;
  }
  std::string freshIdent() {
    std::string s = ident();
    if (isKeyword(s)) err("'" + s + "' is a keyword");
    return s;
  }
  long number() {
    if (cur().k != Token::Num) err("expected number");
    return next().num;
  }

  // ---------- terms ----------

  Term termAtom(Env& env, bool ruleVars) {
    if (eatI("diff")) {
      expectP("[");
      Term a = term(env, ruleVars);
      expectP(",");
      Term b = term(env, ruleVars);
      expectP("]");
      return w().diffT(a, b);
    }
    if (eatP("<")) {
      std::vector<Term> parts;
      parts.push_back(term(env, ruleVars));
      while (eatP(",")) parts.push_back(term(env, ruleVars));
      expectP(">");
      if (parts.size() < 2) err("pair needs at least two components");
      Term t = parts.back();
      for (size_t i = parts.size() - 1; i-- > 0;)
        t = w().pairT(parts[i], t);
      return t;
    }
    if (cur().k != Token::Ident) err("expected term");
    std::string id = freshIdent();
    if (eatP("(")) {
      // proj3 sugar over right-nested pairs
      bool proj3 = (id == "proj3");
      int sym = proj3 ? w().S_proj2 : w().symbolByName(id);
      if (sym < 0) err("unknown function symbol '" + id + "'");
      std::vector<Term> args;
      if (!peekP(")")) {
        args.push_back(term(env, ruleVars));
        while (eatP(",")) args.push_back(term(env, ruleVars));
      }
      expectP(")");
      if (proj3) {
        if (args.size() != 1) err("proj3 expects one argument");
        return w().app(w().S_proj2, {w().app(w().S_proj2, {args[0]})});
      }
      return w().app(sym, std::move(args));
    }
    if (peekP("[")) {
      // indexed name literal n[1,2]
      Term base = env.lookup(id);
      ++ti;
      std::vector<int> idx;
      idx.push_back((int)number());
      while (eatP(",")) idx.push_back((int)number());
      expectP("]");
      SortK sk = base && isName(base) ? base->sort : SortK::Base;
      return w().name(id, sk, std::move(idx));
    }
    Term t = env.lookup(id);
    if (t) return t;
    if (ruleVars) return w().var(id);
    if (autoNames) {
      t = w().name(id);
      env.stack.push_back({id, t});
      return t;
    }
    err("unknown identifier '" + id + "'");
  }

  Term term(Env& env, bool ruleVars) { return termAtom(env, ruleVars); }

  // ---------- theory blocks ----------

  void parseTheory() {
    std::string name = freshIdent();
    if (spec.theoryIndex.count(name)) err("duplicate theory '" + name + "'");
    int idx = (int)spec.theoryOrder.size() + 1;
    spec.theoryIndex[name] = idx;
    spec.theoryOrder.push_back(name);
    expectP("{");
    while (!eatP("}")) {
      if (eatI("fun")) {
        std::string fn = freshIdent();
        expectP("/");
        int ar = (int)number();
        w().addSymbol(fn, ar, Origin::User, idx);
        expectP(".");
      } else if (eatI("eq") || peekI("permutative")) {
        bool perm = eatI("permutative");
        Env env;
        Term l = term(env, true);
        expectP("=");
        Term r = term(env, true);
        expectP(".");
        if (perm)
          th().addPermutative(l, r, idx);
        else
          th().addRule(l, r, idx);
      } else {
        err("expected 'fun', 'eq' or 'permutative'");
      }
    }
    th().ensureTagTheory(idx);
  }

  // ---------- processes ----------

  struct PCtx {
    Env env;
    std::vector<std::string> used; // binder idents in this declaration
    bool allowHoles = false;
    bool isContext = false;
  };

  std::string uniqueBinder(PCtx& c, const std::string& base) {
    auto taken = [&](const std::string& s) {
      if (std::find(c.used.begin(), c.used.end(), s) != c.used.end())
        return true;
      for (Term n : spec.freeNames)
        if (w().str(n->ident) == s) return true;
      for (Term n : spec.channels)
        if (w().str(n->ident) == s) return true;
      // anything already resolvable (params, context binders) is taken
      return c.env.lookup(s) != nullptr;
    };
    std::string s = base;
    int k = 1;
    while (taken(s)) s = base + "'" + std::to_string(++k);
    c.used.push_back(s);
    return s;
  }

  int parseColor() {
    if (!eatP("@")) return 0;
    if (cur().k == Token::Num) return (int)number();
    std::string n = freshIdent();
    auto it = spec.theoryIndex.find(n);
    if (it == spec.theoryIndex.end()) err("unknown theory '" + n + "'");
    return it->second;
  }

  struct Atom {
    enum K { Pos, Neg, Member } k = Pos;
    Term l = nullptr, r = nullptr;
    std::vector<Term> set;
  };

  // A '.' continues a prefix only when a process follows; otherwise it
  // terminates the enclosing declaration.
  bool contFollows() const {
    if (!peekP(".")) return false;
    const Token& t = toks[ti + 1];
    if (t.k == Token::Num && t.num == 0) return true;
    if (t.k == Token::Punct)
      return t.text == "(" || t.text == "!" || t.text == "[";
    if (t.k != Token::Ident) return false;
    if (t.text == "new" || t.text == "in" || t.text == "out" ||
        t.text == "if" || t.text == "let")
      return true;
    return !isKeyword(t.text); // process reference or hole
  }
  ProcP parseCont(PCtx& c) {
    if (!contFollows()) return f().nil();
    ++ti;
    return parseProcSeq(c);
  }

  std::vector<Atom> parseConj(PCtx& c) {
    std::vector<Atom> atoms;
    do {
      if (eatI("true")) continue;
      Atom a;
      a.l = term(c.env, false);
      if (eatP("=")) {
        a.k = Atom::Pos;
        a.r = term(c.env, false);
      } else if (eatP("!=")) {
        a.k = Atom::Neg;
        a.r = term(c.env, false);
      } else if (eatI("in")) {
        a.k = Atom::Member;
        expectP("{");
        a.set.push_back(term(c.env, false));
        while (eatP(",")) a.set.push_back(term(c.env, false));
        expectP("}");
      } else {
        err("expected '=', '!=' or 'in' in formula");
      }
      atoms.push_back(std::move(a));
    } while (eatP("&&"));
    return atoms;
  }

  // Nested-conditional desugaring of negative and membership atoms.
  ProcP buildIf(const std::vector<Atom>& atoms, size_t i, ProcP thn, ProcP els,
                int color) {
    // all-positive tail kept as one conjunction
    bool allPos = true;
    for (size_t j = i; j < atoms.size(); ++j) allPos &= atoms[j].k == Atom::Pos;
    if (allPos) {
      Formula phi;
      for (size_t j = i; j < atoms.size(); ++j)
        phi.eqs.push_back({atoms[j].l, atoms[j].r});
      if (phi.eqs.empty()) return thn;
      return f().ifte(std::move(phi), thn, els, color);
    }
    const Atom& a = atoms[i];
    ProcP rest = buildIf(atoms, i + 1, thn, els, color);
    if (a.k == Atom::Pos) {
      Formula phi;
      phi.eqs.push_back({a.l, a.r});
      return f().ifte(std::move(phi), rest, els, color);
    }
    if (a.k == Atom::Neg) {
      Formula phi;
      phi.eqs.push_back({a.l, a.r});
      return f().ifte(std::move(phi), els, rest, color);
    }
    ProcP chain = els;
    for (size_t j = a.set.size(); j-- > 0;) {
      Formula phi;
      phi.eqs.push_back({a.l, a.set[j]});
      chain = f().ifte(std::move(phi), rest, chain, color);
    }
    return chain;
  }

  ProcP parseProcPar(PCtx& c) {
    ProcP p = parseProcSeq(c);
    while (eatP("|")) p = f().par(p, parseProcSeq(c));
    return p;
  }

  ProcP parseProcSeq(PCtx& c) {
    if (cur().k == Token::Num && cur().num == 0) {
      ++ti;
      return f().nil();
    }
    if (eatP("(")) {
      ProcP p = parseProcPar(c);
      expectP(")");
      return p;
    }
    if (eatP("!")) return f().repl(parseProcSeq(c));
    if (eatI("new")) {
      std::string base = freshIdent();
      for (Term n : spec.freeNames)
        if (w().str(n->ident) == base)
          fail("DuplicateBinder",
               "'" + base + "' shadows a declared free name");
      for (Term n : spec.channels)
        if (w().str(n->ident) == base)
          fail("DuplicateBinder",
               "'" + base + "' shadows a declared channel");
      for (Term n : spec.privateNames)
        if (w().str(n->ident) == base)
          fail("DuplicateBinder",
               "'" + base + "' shadows a declared private name");
      SortK sk = SortK::Base;
      if (eatP(":")) {
        expectI("channel");
        sk = SortK::Channel;
      }
      std::string uniq = uniqueBinder(c, base);
      Term n = w().name(uniq, sk);
      c.env.stack.push_back({base, n});
      expectP(".");
      ProcP body = parseProcSeq(c);
      c.env.stack.pop_back();
      return f().newn(n, body);
    }
    if (eatP("[")) {
      std::string base = freshIdent();
      expectP(":=");
      Term v = term(c.env, false);
      expectP("]");
      int color = parseColor();
      std::string uniq = uniqueBinder(c, base);
      Term xv = w().var(uniq);
      c.env.stack.push_back({base, xv});
      ProcP body = parseCont(c);
      c.env.stack.pop_back();
      return f().assign(xv->ident, v, body, color);
    }
    if (eatI("in")) {
      expectP("(");
      Term ch = term(c.env, false);
      expectP(",");
      std::string base = freshIdent();
      expectP(")");
      int color = parseColor();
      std::string uniq = uniqueBinder(c, base);
      Term xv = w().var(uniq);
      c.env.stack.push_back({base, xv});
      ProcP body = parseCont(c);
      c.env.stack.pop_back();
      return f().in(ch, xv->ident, body, color);
    }
    if (eatI("out")) {
      expectP("(");
      Term ch = term(c.env, false);
      expectP(",");
      Term v = term(c.env, false);
      expectP(")");
      int color = parseColor();
      return f().out(ch, v, parseCont(c), color);
    }
    if (eatI("if")) {
      int color = parseColor();
      if (eatI("diff")) {
        expectP("[");
        auto l = parseConj(c);
        expectP(";");
        auto r = parseConj(c);
        expectP("]");
        expectI("then");
        ProcP thn = parseProcSeq(c);
        ProcP els = eatI("else") ? parseProcSeq(c) : f().nil();
        Formula phi;
        phi.isDiff = true;
        for (auto& a : l) {
          if (a.k != Atom::Pos) err("diff formulas must be conjunctions of equalities");
          phi.eqs.push_back({a.l, a.r});
        }
        for (auto& a : r) {
          if (a.k != Atom::Pos) err("diff formulas must be conjunctions of equalities");
          phi.eqsR.push_back({a.l, a.r});
        }
        return f().ifte(std::move(phi), thn, els, color);
      }
      auto atoms = parseConj(c);
      expectI("then");
      ProcP thn = parseProcSeq(c);
      ProcP els = eatI("else") ? parseProcSeq(c) : f().nil();
      return buildIf(atoms, 0, thn, els, color);
    }
    if (eatI("let")) {
      std::string base = freshIdent();
      expectP("=");
      Term m = term(c.env, false);
      expectI("in");
      std::string uniq = uniqueBinder(c, base);
      Term xv = w().var(uniq);
      c.env.stack.push_back({base, xv});
      ProcP body = parseProcSeq(c);
      c.env.stack.pop_back();
      Subst s;
      s.m[xv->ident] = m;
      return procSubst(f(), s, body);
    }
    if (cur().k == Token::Ident && cur().text[0] == '_') {
      std::string h = next().text;
      if (!c.allowHoles) err("holes are only allowed in contexts");
      int idx = h.size() == 1 ? 1 : std::atoi(h.c_str() + 1);
      return f().hole(idx);
    }
    if (cur().k == Token::Ident && !isKeyword(cur().text)) {
      std::string name = next().text;
      // context application C[P1, P2]
      if (peekP("[") && spec.context(name)) {
        ++ti;
        std::vector<ProcP> fills;
        if (!peekP("]")) {
          fills.push_back(parseProcPar(c));
          while (eatP(",")) fills.push_back(parseProcPar(c));
        }
        expectP("]");
        const ProcDef* cd = spec.context(name);
        return fillContext(f(), cd->body, fills);
      }
      std::vector<Term> args;
      if (eatP("(")) {
        if (!peekP(")")) {
          args.push_back(term(c.env, false));
          while (eatP(",")) args.push_back(term(c.env, false));
        }
        expectP(")");
      }
      if (!spec.process(name)) err("unknown process '" + name + "'");
      return spec.instantiate(name, args);
    }
    err("expected a process");
  }

  // Contexts use the restricted grammar: hole | new n.C | !C | C1|C2 | 0.
  void validateContext(ProcP p) {
    if (!p) return;
    switch (p->k) {
      case Proc::Nil:
      case Proc::Hole:
        return;
      case Proc::Par:
      case Proc::Repl:
      case Proc::New:
        validateContext(p->a);
        validateContext(p->b);
        return;
      default:
        fail("SyntaxError",
             "composition contexts may only use new, !, | and holes");
    }
  }

  void checkColorDiscipline(ProcP p) {
    std::function<void(ProcP)> rec = [&](ProcP q) {
      if (!q) return;
      if (q->color > 0) {
        std::vector<int> syms;
        ProcP tmp = q;
        // only this action's own terms
        Proc shallow = *q;
        shallow.a = nullptr;
        shallow.b = nullptr;
        auto sp = std::make_shared<const Proc>(std::move(shallow));
        procSymbols(sp, syms);
        for (int s : syms) {
          const Symbol& sym = w().sym(s);
          bool ok = sym.origin == Origin::Common ||
                    (sym.origin == Origin::User && sym.theory == q->color) ||
                    (sym.origin == Origin::Tag && sym.theory == q->color);
          if (!ok)
            fail("ForeignSymbol", "action colored " +
                                      std::to_string(q->color) +
                                      " uses symbol " + sym.name);
        }
      }
      rec(q->a);
      rec(q->b);
    };
    rec(p);
  }

  // ---------- declarations ----------

  void parseFree(bool channel, bool priv = false) {
    do {
      std::string n = freshIdent();
      Term t = w().name(n, channel ? SortK::Channel : SortK::Base);
      auto& vec = priv ? spec.privateNames
                       : channel ? spec.channels : spec.freeNames;
      if (std::find(vec.begin(), vec.end(), t) == vec.end()) vec.push_back(t);
    } while (eatP(","));
    expectP(".");
  }

  void parseClass(bool alpha) {
    expectP("=");
    expectP("{");
    if (!peekP("}")) {
      do {
        std::string n = freshIdent();
        auto it = spec.theoryIndex.find(n);
        if (it == spec.theoryIndex.end()) err("unknown theory '" + n + "'");
        (alpha ? spec.part.alpha : spec.part.beta).push_back(it->second);
      } while (eatP(","));
    }
    expectP("}");
    expectP(".");
  }

  std::vector<Term> parseNameSet(Env& env, bool bind) {
    std::vector<Term> out;
    expectP("{");
    if (!peekP("}")) {
      do {
        std::string n = freshIdent();
        Term t = env.lookup(n);
        if (!t) {
          t = w().name(n);
          if (bind) env.stack.push_back({n, t});
        }
        out.push_back(t);
      } while (eatP(","));
    }
    expectP("}");
    return out;
  }

  Env baseEnv() {
    Env env;
    for (Term n : spec.freeNames) env.stack.push_back({w().str(n->ident), n});
    for (Term n : spec.privateNames)
      env.stack.push_back({w().str(n->ident), n});
    for (Term n : spec.channels) env.stack.push_back({w().str(n->ident), n});
    return env;
  }

  void parseProcessDecl(bool isContext) {
    std::string name = freshIdent();
    ProcDef def;
    def.name = name;
    PCtx c;
    c.env = baseEnv();
    // processes may carry holes too: composition roles P1[_], P2[_]
    c.allowHoles = true;
    c.isContext = isContext;
    if (!isContext) {
      // names bound by earlier contexts are visible, so fillings can share
      // keys the composition context restricts (capture is the point)
      for (const ProcDef& d : spec.contexts) {
        std::vector<Term> bn;
        procBoundNames(d.body, bn);
        for (Term n : bn) c.env.stack.push_back({w().str(n->ident), n});
      }
    }
    if (!isContext && eatP("(")) {
      if (!peekP(")")) {
        do {
          std::string p = freshIdent();
          Term v = w().var(uniqueBinder(c, p));
          def.params.push_back(v->ident);
          c.env.stack.push_back({p, v});
        } while (eatP(","));
      }
      expectP(")");
    }
    expectP("=");
    def.body = parseProcPar(c);
    expectP(".");
    if (isContext) {
      validateContext(def.body);
      if (spec.context(name)) err("duplicate context '" + name + "'");
      spec.contexts.push_back(std::move(def));
    } else {
      checkColorDiscipline(def.body);
      std::function<bool(ProcP)> anyColor = [&](ProcP q) -> bool {
        if (!q) return false;
        return q->color > 0 || anyColor(q->a) || anyColor(q->b);
      };
      def.colored = anyColor(def.body);
      if (spec.process(name)) err("duplicate process '" + name + "'");
      spec.processes.push_back(std::move(def));
    }
  }

  void parseFrame() {
    FrameDef def;
    def.name = freshIdent();
    expectP("=");
    Env env = baseEnv();
    if (eatI("new")) def.restricted = parseNameSet(env, true);
    expectP("{");
    int idx = 1;
    if (!peekP("}")) {
      do {
        std::string h = freshIdent();
        if (h != "w" + std::to_string(idx))
          err("frame handles must be w1, w2, ... in order");
        expectP("->");
        def.entries.push_back(term(env, false));
        ++idx;
      } while (eatP(","));
    }
    expectP("}");
    expectP(".");
    if (spec.frame(def.name)) err("duplicate frame '" + def.name + "'");
    spec.frames.push_back(std::move(def));
  }

  void parseSystem() {
    SystemDef def;
    def.name = freshIdent();
    expectP("=");
    PCtx c;
    c.env = baseEnv();
    if (eatI("new")) {
      def.restricted = parseNameSet(c.env, true);
      for (Term n : def.restricted) c.used.push_back(w().str(n->ident));
    }
    def.proc = parseProcPar(c);
    if (eatI("with")) def.frame = freshIdent();
    expectP(".");
    if (!def.frame.empty() && !spec.frame(def.frame))
      err("unknown frame '" + def.frame + "'");
    if (spec.system(def.name)) err("duplicate system '" + def.name + "'");
    spec.systems.push_back(std::move(def));
  }

  void parseCompose() {
    ComposeDef def;
    if (eatI("sequential"))
      def.sequential = true;
    else if (eatI("parallel"))
      def.sequential = false;
    else
      err("expected 'sequential' or 'parallel'");
    if (cur().k == Token::Ident && !peekP("{")) def.name = freshIdent();
    expectP("{");
    Env env = baseEnv();
    while (!eatP("}")) {
      std::string key = ident();
      expectP(":");
      if (key == "context") {
        def.context = freshIdent();
      } else if (key == "e0") {
        def.e0 = parseNameSet(env, true);
      } else if (key == "secret") {
        autoNames = true;
        def.secret = term(env, false);
        autoNames = false;
      } else if (key == "p" || key == "q") {
        auto& vec = key == "p" ? def.p : def.q;
        do vec.push_back(freshIdent());
        while (eatP(","));
      } else if (key == "phi") {
        def.phi = freshIdent();
      } else if (key == "psi") {
        def.psi = freshIdent();
      } else if (key == "kind") {
        def.kind = freshIdent();
        if (def.kind != "secrecy" && def.kind != "diff" && def.kind != "trace")
          err("kind must be secrecy, diff or trace");
      } else {
        err("unknown compose field '" + key + "'");
      }
      expectP(";");
    }
    spec.composes.push_back(std::move(def));
  }

  void parseQuery() {
    Query q;
    q.kind = freshIdent();
    if (q.kind == "deduce" || q.kind == "secrecy") {
      q.args.push_back(freshIdent());
      Env env = baseEnv();
      // resolve against the named frame/system's restricted names too
      if (const FrameDef* fd = spec.frame(q.args[0]))
        for (Term n : fd->restricted)
          env.stack.push_back({w().str(n->ident), n});
      if (const SystemDef* sd = spec.system(q.args[0]))
        for (Term n : sd->restricted)
          env.stack.push_back({w().str(n->ident), n});
      q.term = term(env, false);
    } else if (q.kind == "normalize") {
      Env env = baseEnv();
      q.term = term(env, false);
    } else if (q.kind == "static-equiv" || q.kind == "trace-equiv") {
      q.args.push_back(freshIdent());
      q.args.push_back(freshIdent());
    } else if (q.kind == "diff-equiv" || q.kind == "parse") {
      q.args.push_back(freshIdent());
    } else {
      err("unknown query kind '" + q.kind + "'");
    }
    expectP(".");
    spec.queries.push_back(std::move(q));
  }

  void run() {
    while (cur().k != Token::End) {
      if (eatI("theory"))
        parseTheory();
      else if (eatI("free"))
        parseFree(false);
      else if (eatI("channel"))
        parseFree(true);
      else if (eatI("private"))
        parseFree(false, true);
      else if (eatI("alpha"))
        parseClass(true);
      else if (eatI("beta"))
        parseClass(false);
      else if (eatI("process"))
        parseProcessDecl(false);
      else if (eatI("context"))
        parseProcessDecl(true);
      else if (eatI("frame"))
        parseFrame();
      else if (eatI("system"))
        parseSystem();
      else if (eatI("compose"))
        parseCompose();
      else if (eatI("query"))
        parseQuery();
      else
        err("expected a declaration");
    }
    // default partition: all theories alpha unless declared otherwise
    if (spec.part.alpha.empty() && spec.part.beta.empty())
      for (size_t i = 0; i < spec.theoryOrder.size(); ++i)
        spec.part.alpha.push_back((int)i + 1);
  }
};

}  // namespace

const ProcDef* ProtocolSpec::process(const std::string& n) const {
  for (auto& d : processes)
    if (d.name == n) return &d;
  return nullptr;
}
const ProcDef* ProtocolSpec::context(const std::string& n) const {
  for (auto& d : contexts)
    if (d.name == n) return &d;
  return nullptr;
}
const FrameDef* ProtocolSpec::frame(const std::string& n) const {
  for (auto& d : frames)
    if (d.name == n) return &d;
  return nullptr;
}
const SystemDef* ProtocolSpec::system(const std::string& n) const {
  for (auto& d : systems)
    if (d.name == n) return &d;
  return nullptr;
}

std::vector<Term> ProtocolSpec::publics() const {
  std::vector<Term> out = freeNames;
  out.insert(out.end(), channels.begin(), channels.end());
  return out;
}

ProcP ProtocolSpec::instantiate(const std::string& name,
                                const std::vector<Term>& args) const {
  const ProcDef* d = process(name);
  if (!d) fail("UnknownProcess", name);
  if (args.size() != d->params.size())
    fail("ArityMismatch", "process " + name + " expects " +
                              std::to_string(d->params.size()) +
                              " arguments, got " +
                              std::to_string(args.size()));
  // freshen binders so that several instances never collide
  uint64_t id = f->freshId();
  std::string suffix = "'" + std::to_string(id);
  World& ww = *w;
  ProcFactory& ff = *f;
  std::function<ProcP(ProcP, Env&)> rec = [&](ProcP p, Env& env) -> ProcP {
    if (!p) return p;
    switch (p->k) {
      case Proc::Nil:
        return ff.nil();
      case Proc::Hole:
        return ff.hole(p->holeIndex);
      case Proc::Par:
        return ff.par(rec(p->a, env), rec(p->b, env));
      case Proc::Repl:
        return ff.repl(rec(p->a, env));
      case Proc::New: {
        Term fresh =
            ww.name(ww.str(p->name->ident) + suffix, p->name->sort);
        ProcP body = rec(procRenameName(ff, p->a, p->name, fresh), env);
        return ff.newn(fresh, body);
      }
      case Proc::Assign: {
        Term fresh = ww.var(ww.str(p->var) + suffix);
        Subst s;
        s.m[p->var] = fresh;
        return ff.assign(fresh->ident, p->term, rec(procSubst(ff, s, p->a), env),
                         p->color);
      }
      case Proc::If:
        return ff.ifte(p->phi, rec(p->a, env), rec(p->b, env), p->color);
      case Proc::In: {
        Term fresh = ww.var(ww.str(p->var) + suffix);
        Subst s;
        s.m[p->var] = fresh;
        return ff.in(p->chan, fresh->ident, rec(procSubst(ff, s, p->a), env),
                     p->color);
      }
      case Proc::Out:
        return ff.out(p->chan, p->term, rec(p->a, env), p->color);
    }
    return p;
  };
  Env env;
  ProcP body = rec(d->body, env);
  Subst s;
  for (size_t i = 0; i < args.size(); ++i) s.m[d->params[i]] = args[i];
  return procSubst(*f, s, body);
}

ProtocolSpec parseSpec(const std::string& text) {
  Parser p;
  p.spec.w = std::make_unique<World>();
  p.spec.th = std::make_unique<Theory>(*p.spec.w);
  p.spec.f = std::make_unique<ProcFactory>(*p.spec.w);
  Lexer lex;
  lex.src = text;
  lex.run();
  p.toks = std::move(lex.toks);
  p.run();
  return std::move(p.spec);
}

ProtocolSpec parseSpecFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("IoError", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parseSpec(ss.str());
}

Term parseTermIn(ProtocolSpec& spec, const std::string& text,
                 const std::vector<Term>& extraNames) {
  Parser p;
  ProtocolSpec tmp;
  Lexer lex;
  lex.src = text;
  lex.run();
  p.toks = std::move(lex.toks);
  // borrow the spec's world
  p.spec.w.reset(spec.w.get());
  p.spec.th.reset(spec.th.get());
  p.spec.f.reset(spec.f.get());
  p.spec.freeNames = spec.freeNames;
  p.spec.channels = spec.channels;
  p.spec.theoryIndex = spec.theoryIndex;
  Env env = p.baseEnv();
  for (Term n : extraNames)
    env.stack.push_back({spec.w->str(n->ident), n});
  Term t = nullptr;
  try {
    t = p.term(env, false);
    if (p.cur().k != Token::End) p.err("trailing input after term");
  } catch (...) {
    p.spec.w.release();
    p.spec.th.release();
    p.spec.f.release();
    throw;
  }
  p.spec.w.release();
  p.spec.th.release();
  p.spec.f.release();
  return t;
}

std::string printSpec(const ProtocolSpec& spec) {
  const World& w = *spec.w;
  std::string out;
  for (size_t i = 0; i < spec.theoryOrder.size(); ++i) {
    int idx = (int)i + 1;
    out += "theory " + spec.theoryOrder[i] + " {\n";
    for (int s = 0; s < w.numSymbols(); ++s) {
      const Symbol& sym = w.sym(s);
      if (sym.origin == Origin::User && sym.theory == idx)
        out += "  fun " + sym.name + "/" + std::to_string(sym.arity) + ".\n";
    }
    for (const Rule& r : spec.th->rules())
      if (r.theory == idx && !(isApp(r.lhs) && w.sym(r.lhs->sym).origin ==
                                                   Origin::Tag))
        out += "  eq " + w.show(r.lhs) + " = " + w.show(r.rhs) + ".\n";
    for (const Rule& r : spec.th->permutatives())
      if (r.theory == idx)
        out += "  permutative " + w.show(r.lhs) + " = " + w.show(r.rhs) +
               ".\n";
    out += "}\n";
  }
  auto nameList = [&](const std::vector<Term>& ns) {
    std::string s;
    for (size_t i = 0; i < ns.size(); ++i) {
      if (i) s += ", ";
      s += w.show(ns[i]);
    }
    return s;
  };
  if (!spec.freeNames.empty()) out += "free " + nameList(spec.freeNames) + ".\n";
  if (!spec.privateNames.empty())
    out += "private " + nameList(spec.privateNames) + ".\n";
  if (!spec.channels.empty())
    out += "channel " + nameList(spec.channels) + ".\n";
  auto className = [&](const std::vector<int>& cls) {
    std::string s;
    for (size_t i = 0; i < cls.size(); ++i) {
      if (i) s += ", ";
      s += spec.theoryOrder[cls[i] - 1];
    }
    return s;
  };
  if (!spec.theoryOrder.empty()) {
    out += "alpha = { " + className(spec.part.alpha) + " }.\n";
    out += "beta = { " + className(spec.part.beta) + " }.\n";
  }
  for (const auto& d : spec.contexts)
    out += "context " + d.name + " =\n" + showProc(w, d.body, 1) + ".\n";
  for (const auto& d : spec.processes) {
    out += "process " + d.name;
    if (!d.params.empty()) {
      out += "(";
      for (size_t i = 0; i < d.params.size(); ++i) {
        if (i) out += ", ";
        out += w.str(d.params[i]);
      }
      out += ")";
    }
    out += " =\n" + showProc(w, d.body, 1) + ".\n";
  }
  for (const auto& d : spec.frames) {
    out += "frame " + d.name + " = ";
    if (!d.restricted.empty()) out += "new {" + nameList(d.restricted) + "} ";
    out += "{ ";
    for (size_t i = 0; i < d.entries.size(); ++i) {
      if (i) out += ", ";
      out += "w" + std::to_string(i + 1) + " -> " + w.show(d.entries[i]);
    }
    out += " }.\n";
  }
  for (const auto& d : spec.systems) {
    out += "system " + d.name + " = ";
    if (!d.restricted.empty()) out += "new {" + nameList(d.restricted) + "}\n";
    out += showProc(w, d.proc, 1);
    if (!d.frame.empty()) out += "\nwith " + d.frame;
    out += ".\n";
  }
  return out;
}

}  // namespace eqc
