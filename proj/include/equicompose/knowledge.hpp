#pragma once

#include "equicompose/theory.hpp"

#include <optional>

namespace eqc {

enum class Verdict : uint8_t { Holds, Refuted, Unknown };

// Attacker knowledge saturated from a frame. Values are normal forms;
// recipes are terms over handle variables w1.. and public names.
struct KBEntry {
  Term value;
  Term recipe;
  int depth; // recipe depth, atoms count 1
};

struct KB {
  std::vector<KBEntry> entries; // deterministic insertion order
  std::map<Term, Term> byValue; // value -> first (minimal-depth) recipe
  bool has(Term v) const { return byValue.count(v) != 0; }
  Term recipe(Term v) const {
    auto it = byValue.find(v);
    return it == byValue.end() ? nullptr : it->second;
  }
};

// Handle variable for frame position i (1-based): variable "w<i>".
Term handleVar(World& w, int i);

// Substitutes handles by the frame's entries and normalizes.
Term evalRecipe(const Theory& th, Term recipe, const std::vector<Term>& frame);

// Atoms (publics and handles), destructor steps whenever a rewrite fires,
// and constructor applications up to the recipe depth bound. `maxEntries`
// caps saturation; hitting the cap is reported via KB size.
KB saturate(const Theory& th, const std::vector<Term>& frame,
            const std::vector<Term>& publics, int depth,
            size_t maxEntries = 20000);

// Recipe for the target if derivable: KB hit or construction from derivable
// arguments.
std::optional<Term> deduce(const Theory& th, const KB& kb, Term target);

struct StaticEquivResult {
  Verdict verdict = Verdict::Holds;
  // On refutation: MPhi1 = NPhi1 but MPhi2 != NPhi2 (or swapped).
  Term recipeM = nullptr, recipeN = nullptr;
  bool failsOnSecond = true; // true: equality holds on frame1 only
  std::string note;
  size_t recipesExplored = 0;
};

// Kernel comparison of the two frames over all recipes up to `depth`,
// deduplicated by value pair. Frames must have equal arity.
StaticEquivResult staticEquiv(const Theory& th, const std::vector<Term>& f1,
                              const std::vector<Term>& f2,
                              const std::vector<Term>& publics, int depth,
                              size_t maxRecipes = 500000);

}  // namespace eqc
