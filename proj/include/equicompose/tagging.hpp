#pragma once

#include "equicompose/process.hpp"

namespace eqc {

// Tagging transformation for theory i: encryptions, signatures and hashes
// tag their payload, the matching destructors strip the tag again.
Term tagTerm(World& w, int theory, Term t);

// Left inverse of tagTerm on its image; on other terms it strips tags
// structurally where the expected shape is present.
Term untagTerm(World& w, int theory, Term t);

// Conjunction asserting that every destructor application inside the given
// tagged term yielded a properly tagged plaintext and every projection was
// applied to a genuine pair.
Formula testTag(World& w, int theory, Term taggedTerm);
void testTagInto(World& w, int theory, Term taggedTerm, Formula& out);

// Tags every term of the process and guards outputs, assignments and
// conditionals with the corresponding TestTag conjunction (folded away when
// empty). Uncolored actions receive color `theory`.
ProcP tagProcess(ProcFactory& f, int theory, ProcP p);

// Structural inversion: true iff the term/process is in the image of the
// tagging transformation. On failure `why` describes the offending subterm.
bool isTaggedTerm(World& w, int theory, Term t, std::string* why = nullptr);
bool isTaggedProcess(World& w, int theory, ProcP p, std::string* why = nullptr);

// Color-aware variant: every action is checked against its own color;
// uncolored actions carrying composed terms are rejected.
bool isTaggedProcessColored(World& w, ProcP p, std::string* why = nullptr);

}  // namespace eqc
