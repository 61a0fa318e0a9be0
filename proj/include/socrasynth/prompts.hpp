#pragma once

#include <array>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "socrasynth/core.hpp"

namespace socrasynth {

enum class SlotKind { Text, TextList, Score, EvidenceKind, PairList };

std::string_view to_string(SlotKind kind);
SlotKind parse_slot_kind(std::string_view text);

using TextList = std::vector<std::string>;
using PairList = std::vector<std::pair<std::string, std::string>>;
using SlotValue = std::variant<std::string, TextList, double, EvidenceType, PairList>;

class SlotMap {
 public:
  using Entries = std::map<std::string, SlotValue, std::less<>>;

  SlotMap() = default;
  SlotMap(std::initializer_list<Entries::value_type> init) : entries_(init) {}

  void set(std::string name, SlotValue value) { entries_.insert_or_assign(std::move(name), std::move(value)); }
  bool contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }
  const SlotValue& at(std::string_view name) const;

  const std::string& text(std::string_view name) const;
  const TextList& text_list(std::string_view name) const;
  double score(std::string_view name) const;
  EvidenceType evidence_type(std::string_view name) const;
  const PairList& pairs(std::string_view name) const;

  const Entries& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  friend bool operator==(const SlotMap&, const SlotMap&) = default;

 private:
  Entries entries_;
};

struct OutSlot {
  std::string name;
  SlotKind kind = SlotKind::Text;
  // pair_list only: first elements must come from this list when it is non-empty.
  // At render time the list is taken from the in-slot named by domain_slot.
  std::string domain_slot;
  std::vector<std::string> domain;

  friend bool operator==(const OutSlot&, const OutSlot&) = default;
};

struct PromptTemplate {
  std::string id;
  std::string body;  // in-slots appear as {{name}}
  std::vector<std::string> in_slots;
  std::vector<OutSlot> out_slots;
};

struct ContentiousnessProfile {
  double level = 0.0;
  std::string tone;
  std::string emphasis;
  std::string language;
};

struct RenderedPrompt {
  std::string template_id;
  std::string text;
  std::vector<OutSlot> expected_out;
  std::string output_contract;
  // In-slot values the prompt was rendered from, and their stable fingerprint.
  SlotMap slots;
  std::string fingerprint;
  std::optional<double> delta;
};

class TemplateRegistry {
 public:
  // Starts with the built-in templates.
  TemplateRegistry();

  static const TemplateRegistry& builtin();

  // Adds or replaces by id.
  void add(PromptTemplate tmpl);
  // Loads every *.tmpl file in the directory (front-matter header + body).
  void load_directory(const std::filesystem::path& dir);

  bool contains(std::string_view id) const;
  const PromptTemplate& get(std::string_view id) const;
  std::vector<std::string> ids() const;

  // Throws UnknownTemplate or MissingSlot. When delta is present the contentiousness
  // profile block for that level is appended; the structured-output contract follows
  // for every template that declares out-slots.
  RenderedPrompt render(std::string_view id, const SlotMap& slots,
                        std::optional<double> delta = std::nullopt) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// Renders with the built-in registry.
RenderedPrompt render(std::string_view id, const SlotMap& slots,
                      std::optional<double> delta = std::nullopt);

// Front matter: "id: ...", "in: a, b", "out: name:kind[@domain_slot], ..." then a "---" line.
PromptTemplate parse_template_text(std::string_view text);

// Finds the first well-formed fenced JSON object in raw model output and validates each
// expected slot. Throws NoStructuredPayload, SlotKindMismatch or ScoreOutOfRange.
SlotMap parse_structured_output(std::string_view raw, std::span<const OutSlot> expected);

// Inverse of parse_structured_output for a valid map: one ```json fenced object.
std::string to_fenced_block(const SlotMap& slots);

std::string output_contract(std::span<const OutSlot> expected);

// Stable hash of canonicalized slot values; what script MATCH lines key on.
std::string slot_fingerprint(const SlotMap& slots);

const std::array<ContentiousnessProfile, 5>& contentiousness_profiles();
const ContentiousnessProfile& profile_for(double delta);
// "Tone: ...\nEmphasis: ...\nLanguage: ..." for the nearest profile level.
std::string profile_text(double delta);

// Human-readable rendering of a slot value when it is substituted into a body.
std::string render_slot_value(const SlotValue& value);

}  // namespace socrasynth
