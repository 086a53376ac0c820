#pragma once

#include "equicompose/process.hpp"

#include <map>

namespace eqc {

struct ProcDef {
  std::string name;
  std::vector<uint32_t> params;
  ProcP body;
  bool colored = false;
};

struct FrameDef {
  std::string name;
  std::vector<Term> restricted;
  std::vector<Term> entries; // w1.. in order
};

struct SystemDef {
  std::string name;
  std::vector<Term> restricted;
  ProcP proc;
  std::string frame; // empty = no frame
};

struct ComposeDef {
  bool sequential = false;
  std::string name;
  std::string context;
  std::vector<Term> e0;
  Term secret = nullptr;
  std::vector<std::string> p, q;
  std::string phi, psi;  // frame names, may be empty
  std::string kind = "secrecy"; // secrecy | diff | trace
};

struct Query {
  std::string kind;
  std::vector<std::string> args;
  Term term = nullptr;
};

struct ProtocolSpec {
  std::unique_ptr<World> w;
  std::unique_ptr<Theory> th;
  std::unique_ptr<ProcFactory> f;
  Partition part;
  std::vector<Term> freeNames;
  std::vector<Term> privateNames; // visible to processes, unknown to the attacker
  std::vector<Term> channels;
  std::map<std::string, int> theoryIndex;   // name -> index (1-based)
  std::vector<std::string> theoryOrder;
  std::vector<ProcDef> processes;           // declaration order
  std::vector<ProcDef> contexts;
  std::vector<FrameDef> frames;
  std::vector<SystemDef> systems;
  std::vector<ComposeDef> composes;
  std::vector<Query> queries;

  const ProcDef* process(const std::string& n) const;
  const ProcDef* context(const std::string& n) const;
  const FrameDef* frame(const std::string& n) const;
  const SystemDef* system(const std::string& n) const;
  // All attacker-known names: free base names plus public channels.
  std::vector<Term> publics() const;
  // Instantiates a named process with arguments, freshening its binders.
  ProcP instantiate(const std::string& name,
                    const std::vector<Term>& args) const;
};

ProtocolSpec parseSpec(const std::string& text);
ProtocolSpec parseSpecFile(const std::string& path);

// Parses a single term in the spec's environment; `extraNames` supplies
// additional identifiers (for example a frame's restricted names).
Term parseTermIn(ProtocolSpec& spec, const std::string& text,
                 const std::vector<Term>& extraNames = {});

std::string printSpec(const ProtocolSpec& spec);

}  // namespace eqc
