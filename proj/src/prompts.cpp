#include "socrasynth/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include "json.hpp"
#include <sstream>

#include "socrasynth/error.hpp"
#include "socrasynth/util.hpp"

namespace socrasynth {

using nlohmann::json;

std::string_view to_string(SlotKind kind) {
  switch (kind) {
    case SlotKind::Text: return "text";
    case SlotKind::TextList: return "text_list";
    case SlotKind::Score: return "score_1_10";
    case SlotKind::EvidenceKind: return "evidence_type";
    case SlotKind::PairList: return "pair_list";
  }
  return "text";
}

SlotKind parse_slot_kind(std::string_view text) {
  for (auto k : {SlotKind::Text, SlotKind::TextList, SlotKind::Score, SlotKind::EvidenceKind,
                 SlotKind::PairList}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::TemplateParseError, "unknown slot kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// SlotMap accessors
// ---------------------------------------------------------------------------

const SlotValue& SlotMap::at(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(ErrorCode::MissingSlot, "slot not set", std::string(name));
  return it->second;
}

namespace {

template <class T>
const T& get_as(const SlotMap& m, std::string_view name) {
  const auto* v = std::get_if<T>(&m.at(name));
  if (!v) throw Error(ErrorCode::SlotKindMismatch, "slot has a different kind", std::string(name));
  return *v;
}

}  // namespace

const std::string& SlotMap::text(std::string_view name) const { return get_as<std::string>(*this, name); }
const TextList& SlotMap::text_list(std::string_view name) const { return get_as<TextList>(*this, name); }
double SlotMap::score(std::string_view name) const { return get_as<double>(*this, name); }
EvidenceType SlotMap::evidence_type(std::string_view name) const {
  return get_as<EvidenceType>(*this, name);
}
const PairList& SlotMap::pairs(std::string_view name) const { return get_as<PairList>(*this, name); }

// ---------------------------------------------------------------------------
// Built-in templates
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kDocBlock = "Document d:\n\"\"\"\n{{d}}\n\"\"\"\n\n";

OutSlot out(std::string name, SlotKind kind, std::string domain_slot = {}) {
  return OutSlot{std::move(name), kind, std::move(domain_slot), {}};
}

std::vector<PromptTemplate> builtin_templates() {
  const std::string doc(kDocBlock);
  const std::string evidence_question =
      "What is the type of evidence? A) theory, B) opinion, C) statistics, or D) claim from "
      "other sources?\n\nEvidence: {{evidence}}";
  std::vector<PromptTemplate> t;

  t.push_back({"p1.1",
               doc + "What is the conclusion in document d? The conclusion statement may be written "
                     "in the last paragraph, near keywords 'in conclusion,' 'in summary,' or "
                     "'therefore.'",
               {"d"},
               {out("Ω", SlotKind::Text)}});
  t.push_back({"p2",
               doc + "Conclusion Ω: {{Ω}}\n\nWhat are the supporting reasons of conclusion Ω of "
                     "document d? A reason can be evidence or opinion.",
               {"Ω", "d"},
               {out("R", SlotKind::TextList)}});
  t.push_back({"p3.1",
               doc + "Reason r: {{r}}\nConclusion Ω: {{Ω}}\n\nWhat is the evidence for reason r "
                     "to support conclusion Ω in document d?",
               {"r", "Ω", "d"},
               {out("evidence", SlotKind::Text)}});
  t.push_back({"p3.2", evidence_question, {"evidence"}, {out("type", SlotKind::EvidenceKind)}});
  t.push_back({"p3.4",
               doc + "Reason r: {{r}}\nConclusion Ω: {{Ω}}\n\nHow strongly does reason r support "
                     "Ω in document d? Rate argument validity γ and source credibility θ between "
                     "1 and 10 (strongest).",
               {"r", "Ω", "d"},
               {out("γ", SlotKind::Score), out("θ", SlotKind::Score)}});
  t.push_back({"p4",
               "Reason r: {{r}}\nConclusion Ω: {{Ω}}\n\nAre there counterarguments against "
               "r ⇒ Ω? If so, provide counter reasons R'.",
               {"r", "Ω"},
               {out("R'", SlotKind::TextList)}});
  // Rival reasons are assessed with the p3 questions, r' standing in for r.
  t.push_back({"p5.1",
               doc + "Rival reason r': {{r'}}\nConclusion Ω: {{Ω}}\n\nWhat is the evidence for "
                     "reason r' to support conclusion Ω in document d?",
               {"r'", "Ω", "d"},
               {out("evidence", SlotKind::Text)}});
  t.push_back({"p5.2", evidence_question, {"evidence"}, {out("type", SlotKind::EvidenceKind)}});
  t.push_back({"p5.4",
               doc + "Rival reason r': {{r'}}\nConclusion Ω: {{Ω}}\n\nHow strongly does reason r' "
                     "support Ω in document d? Rate argument validity γ and source credibility θ "
                     "between 1 and 10 (strongest).",
               {"r'", "Ω", "d"},
               {out("γ", SlotKind::Score), out("θ", SlotKind::Score)}});
  t.push_back({"p7",
               "Reason r: {{r}}\nConclusion Ω: {{Ω}}\nValidity score γ: {{γ}}\nSource credibility "
               "score θ: {{θ}}\n\nFor this r ∈ R ∪ R', justify the validity score γ and source "
               "credibility score θ for r ⇒ Ω reasoning.",
               {"r", "Ω", "γ", "θ"},
               {out("justification", SlotKind::Text)}});
  t.push_back({"p8",
               "Context: {{context}}\n\n" + doc +
                   "Reason r: {{r}}\nConclusion Ω: {{Ω}}\n\nEvaluate r ⇒ Ω in the context above. "
                   "How strongly does reason r support Ω in document d? Rate argument validity γ "
                   "and source credibility θ between 1 and 10 (strongest).",
               {"context", "r", "Ω", "d"},
               {out("γ", SlotKind::Score), out("θ", SlotKind::Score)}});

  t.push_back({"M1",
               "Agent {{self}}: I'm organizing a committee to engage in debates on various "
               "subjects. As the moderator, I will introduce a subject for you, Agent {{self}}, "
               "and another participant, Agent {{other}}, to debate. Agent {{self}}, you will "
               "{{stance}} the issue, so please prepare evidence to strengthen your argument. On "
               "a scale from 0 to 1, where 0 denotes complete agreement and 1 indicates a devil's "
               "advocate stance, your argument strength is rated at {{strength}}.",
               {"self", "other", "stance", "strength"},
               {}});
  t.push_back({"M2",
               "Agent {{self}}, we are in the process of selecting a suitable subject for debate. "
               "What do you think of \"{{subject}}\" as a balanced subject for our debate contest?",
               {"self", "subject"},
               {}});
  t.push_back({"M3",
               "Agent {{self}}, could you please suggest various topics or themes for the debate "
               "subject? Afterward, work with Agent {{other}} to narrow these down to a focused "
               "set of topics. Please also provide clear descriptions to delineate the scope of "
               "each topic for discussion.\n\nDebate subject: {{subject}}\nPropose {{count}} "
               "topics, each as a [title, description] pair.",
               {"self", "other", "subject", "count"},
               {out("topics", SlotKind::PairList)}});
  t.push_back({"topics.merge",
               "Debate subject: {{subject}}\n\nTopics proposed by Agent A:\n{{proposals_a}}\n\n"
               "Topics proposed by Agent B:\n{{proposals_b}}\n\nIdentify the themes the two lists "
               "share and reconcile both lists into {{count}} balanced, debatable topics. Each "
               "final topic pairs a concern of one agent with the opposing concern of the other. "
               "Give each a short title and a description stating what each side will argue.",
               {"subject", "proposals_a", "proposals_b", "count"},
               {out("topics", SlotKind::PairList)}});

  const std::string debate_head =
      "Debate subject: {{subject}}\nAgreed topics:\n{{topics}}\n\nYou are Agent {{self}} and you "
      "{{stance}} the subject.\n\n";
  t.push_back({"debate.opening",
               debate_head + "Generate arguments: present your opening arguments on every agreed "
                             "topic.",
               {"self", "stance", "subject", "topics", "topic_ids"},
               {out("sections", SlotKind::PairList, "topic_ids")}});
  t.push_back({"debate.refute",
               debate_head + "Agent {{other}} has just argued:\n\"\"\"\n{{opponent_latest}}\n"
                             "\"\"\"\n\nGenerate arguments: refute Agent {{other}} topic by topic "
                             "while advancing your own position.",
               {"self", "other", "stance", "subject", "topics", "topic_ids", "opponent_latest"},
               {out("sections", SlotKind::PairList, "topic_ids")}});
  t.push_back({"debate.closing",
               debate_head + "The refutation rounds are over. Generate arguments: give your "
                             "concluding remarks on every agreed topic, answering the strongest "
                             "points Agent {{other}} made.",
               {"self", "other", "stance", "subject", "topics", "topic_ids"},
               {out("sections", SlotKind::PairList, "topic_ids")}});

  t.push_back({"judge.topic",
               "You are judging a debate on \"{{subject}}\".\nTopic: {{topic}}\n\nAgent {{arguer}} "
               "provides the arguments:\n\"\"\"\n{{arguer_text}}\n\"\"\"\n\nAgent {{counterer}} "
               "provides the counterarguments:\n\"\"\"\n{{counterer_text}}\n\"\"\"\n\nIdentify the "
               "claim of Agent {{arguer}} and the reasons supporting it, and treat the arguments "
               "of Agent {{counterer}} as rival reasons. Weigh the validity and source credibility "
               "of both sides on this topic, then score each side between 1 and 10 (strongest).",
               {"subject", "topic", "arguer", "counterer", "arguer_text", "counterer_text"},
               {out("arguer_score", SlotKind::Score), out("counterer_score", SlotKind::Score),
                out("rationale", SlotKind::Text)}});
  return t;
}

const std::array<ContentiousnessProfile, 5> kProfiles{{
    {0.9, "Highly confrontational; focused on raising strong ethical, scientific, and social objections.",
     "Highlighting risks and downsides; ethical quandaries, unintended consequences, and exacerbation of inequalities.",
     "Definitive and polarizing, e.g., \"should NOT be allowed,\" \"unacceptable risks,\" \"inevitable disparities.\""},
    {0.7, "Still confrontational but more open to potential benefits, albeit overshadowed by negatives.",
     "Acknowledging that some frameworks could make it safer or more equitable, while cautioning against its use.",
     "Less polarizing; \"serious concerns remain,\" \"needs more scrutiny.\""},
    {0.5, "Balanced; neither advocating strongly for nor against gene editing.",
     "Equal weight on pros and cons; looking for a middle ground.",
     "Neutral; \"should be carefully considered,\" \"both benefits and risks.\""},
    {0.3, "More agreeable than confrontational, but maintaining reservations.",
     "Supportive but cautious; focus on ensuring ethical and equitable use.",
     "Positive but careful; \"transformative potential,\" \"impetus to ensure.\""},
    {0.0, "Completely agreeable and supportive.",
     "Fully focused on immense potential benefits; advocating for proactive adoption.",
     "Very positive; \"groundbreaking advance,\" \"new era of possibilities.\""},
}};

// Canonical slot names and the ASCII keys models commonly use instead.
const std::map<std::string, std::vector<std::string>, std::less<>>& slot_aliases() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> aliases{
      {"Ω", {"omega", "claim", "conclusion"}},
      {"R", {"reasons"}},
      {"R'", {"rivals", "counter_reasons", "counterarguments"}},
      {"γ", {"gamma", "validity"}},
      {"θ", {"theta", "credibility"}},
      {"type", {"evidence_type"}},
  };
  return aliases;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (auto t = trim(cur); !t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (auto t = trim(cur); !t.empty()) out.push_back(t);
  return out;
}

std::string evidence_label(EvidenceType t) {
  switch (t) {
    case EvidenceType::Theory: return "A) theory";
    case EvidenceType::Opinion: return "B) opinion";
    case EvidenceType::Statistics: return "C) statistics";
    case EvidenceType::ClaimFromOtherSources: return "D) claim from other sources";
  }
  return "?";
}

json slot_to_json(const SlotValue& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, EvidenceType>) {
          return std::string(1, evidence_letter(x));
        } else if constexpr (std::is_same_v<T, PairList>) {
          json arr = json::array();
          for (const auto& [k, t] : x) arr.push_back(json::array({k, t}));
          return arr;
        } else {
          return json(x);
        }
      },
      v);
}

}  // namespace

std::string render_slot_value(const SlotValue& value) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, TextList>) {
          std::string s;
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) s += '\n';
            s += std::to_string(i + 1) + ". " + x[i];
          }
          return s;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(x);
        } else if constexpr (std::is_same_v<T, EvidenceType>) {
          return evidence_label(x);
        } else {
          std::string s;
          for (const auto& [k, t] : x) {
            if (!s.empty()) s += '\n';
            s += "- " + k + ": " + t;
          }
          return s;
        }
      },
      value);
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

TemplateRegistry::TemplateRegistry() {
  for (auto& t : builtin_templates()) add(std::move(t));
}

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry registry;
  return registry;
}

void TemplateRegistry::add(PromptTemplate tmpl) {
  if (tmpl.id.empty()) throw Error(ErrorCode::TemplateParseError, "template without id");
  auto id = tmpl.id;
  templates_.insert_or_assign(std::move(id), std::move(tmpl));
}

void TemplateRegistry::load_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tmpl") files.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::IoError, "cannot list " + dir.string(), dir.string());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      add(parse_template_text(read_text_file(f)));
    } catch (const Error& e) {
      throw Error(e.code(), f.filename().string() + ": " + e.what(), e.detail());
    }
  }
}

bool TemplateRegistry::contains(std::string_view id) const { return templates_.find(id) != templates_.end(); }

const PromptTemplate& TemplateRegistry::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw Error(ErrorCode::UnknownTemplate, "no template '" + std::string(id) + "'", std::string(id));
  }
  return it->second;
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

RenderedPrompt TemplateRegistry::render(std::string_view id, const SlotMap& slots,
                                        std::optional<double> delta) const {
  const auto& tmpl = get(id);
  SlotMap used;
  for (const auto& name : tmpl.in_slots) {
    if (!slots.contains(name)) {
      throw Error(ErrorCode::MissingSlot, "template '" + tmpl.id + "' needs slot '" + name + "'", name);
    }
    used.set(name, slots.at(name));
  }

  // Single left-to-right pass, so slot values containing braces are never re-expanded.
  std::string text;
  const std::string& body = tmpl.body;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto open = body.find("{{", pos);
    if (open == std::string::npos) {
      text.append(body, pos);
      break;
    }
    auto close = body.find("}}", open + 2);
    if (close == std::string::npos) {
      text.append(body, pos);
      break;
    }
    text.append(body, pos, open - pos);
    std::string name = body.substr(open + 2, close - open - 2);
    if (!used.contains(name)) {
      throw Error(ErrorCode::MissingSlot,
                  "template '" + tmpl.id + "' references undeclared slot '" + name + "'", name);
    }
    text += render_slot_value(used.at(name));
    pos = close + 2;
  }

  RenderedPrompt rp;
  rp.template_id = tmpl.id;
  rp.delta = delta;
  if (delta) {
    const auto& prof = profile_for(*delta);
    text += "\n\nContentiousness level: " + format_fixed(*delta, 4) + " (profile " +
            format_fixed(prof.level, 1) + ")\n" + profile_text(*delta);
  }
  rp.expected_out = tmpl.out_slots;
  for (auto& slot : rp.expected_out) {
    if (!slot.domain_slot.empty()) slot.domain = used.text_list(slot.domain_slot);
  }
  if (!rp.expected_out.empty()) {
    rp.output_contract = output_contract(rp.expected_out);
    text += "\n\n" + rp.output_contract;
  }
  rp.text = std::move(text);
  rp.fingerprint = slot_fingerprint(used);
  rp.slots = std::move(used);
  return rp;
}

RenderedPrompt render(std::string_view id, const SlotMap& slots, std::optional<double> delta) {
  return TemplateRegistry::builtin().render(id, slots, delta);
}

PromptTemplate parse_template_text(std::string_view text) {
  PromptTemplate t;
  std::size_t pos = 0;
  bool closed = false;
  int line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (trim(line) == "---") {
      closed = true;
      break;
    }
    if (trim(line).empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::TemplateParseError, "line " + std::to_string(line_no) + ": expected key: value");
    }
    auto key = trim(line.substr(0, colon));
    auto value = trim(line.substr(colon + 1));
    if (key == "id") {
      t.id = value;
    } else if (key == "in") {
      t.in_slots = split_list(value, ',');
    } else if (key == "out") {
      for (const auto& decl : split_list(value, ',')) {
        // name:kind[@domain_slot]; the name itself may not contain ':'
        auto c = decl.rfind(':');
        if (c == std::string::npos) {
          throw Error(ErrorCode::TemplateParseError, "out-slot '" + decl + "' lacks a kind");
        }
        OutSlot slot;
        slot.name = trim(decl.substr(0, c));
        auto kind = trim(decl.substr(c + 1));
        if (auto at = kind.find('@'); at != std::string::npos) {
          slot.domain_slot = trim(kind.substr(at + 1));
          kind = trim(kind.substr(0, at));
        }
        slot.kind = parse_slot_kind(kind);
        t.out_slots.push_back(std::move(slot));
      }
    } else {
      throw Error(ErrorCode::TemplateParseError, "unknown header key '" + key + "'");
    }
  }
  if (!closed) throw Error(ErrorCode::TemplateParseError, "missing '---' after header");
  if (t.id.empty()) throw Error(ErrorCode::TemplateParseError, "header lacks id");
  t.body = std::string(text.substr(pos));
  while (!t.body.empty() && (t.body.back() == '\n' || t.body.back() == '\r')) t.body.pop_back();
  return t;
}

// ---------------------------------------------------------------------------
// Structured output
// ---------------------------------------------------------------------------

namespace {

std::optional<json> first_fenced_object(std::string_view raw) {
  std::size_t pos = 0;
  while (pos < raw.size()) {
    auto backticks = raw.find("```", pos);
    auto tildes = raw.find("~~~", pos);
    auto open = std::min(backticks, tildes);
    if (open == std::string_view::npos) return std::nullopt;
    std::string_view fence = raw.substr(open, 3);
    std::size_t content = open + 3;
    // Optional info string such as "json" right after the fence.
    while (content < raw.size() && std::isalnum(static_cast<unsigned char>(raw[content]))) ++content;
    auto close = raw.find(fence, content);
    if (close == std::string_view::npos) return std::nullopt;
    auto parsed = json::parse(raw.substr(content, close - content), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    pos = close + 3;
  }
  return std::nullopt;
}

const json* find_key(const json& obj, const std::string& name) {
  if (auto it = obj.find(name); it != obj.end()) return &*it;
  auto aliases = slot_aliases().find(name);
  if (aliases == slot_aliases().end()) return nullptr;
  for (const auto& alias : aliases->second) {
    if (auto it = obj.find(alias); it != obj.end()) return &*it;
  }
  return nullptr;
}

[[noreturn]] void mismatch(const std::string& name, const std::string& why) {
  throw Error(ErrorCode::SlotKindMismatch, "slot '" + name + "' " + why, name);
}

double parse_score(const json& v, const std::string& name) {
  double score = 0.0;
  if (v.is_number()) {
    score = v.get<double>();
  } else if (v.is_string()) {
    std::string s = trim(v.get<std::string>());
    if (auto slash = s.find('/'); slash != std::string::npos && trim(s.substr(slash + 1)) == "10") {
      s = trim(s.substr(0, slash));
    }
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
    if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) mismatch(name, "is not a number");
  } else {
    mismatch(name, "is not a number");
  }
  if (!(score >= 1.0 && score <= 10.0)) {
    throw Error(ErrorCode::ScoreOutOfRange,
                "slot '" + name + "' = " + format_real(score) + " is outside [1, 10]", name);
  }
  return score;
}

EvidenceType parse_evidence(const json& v, const std::string& name) {
  if (!v.is_string()) mismatch(name, "is not an evidence type");
  std::string s = trim(v.get<std::string>());
  if (!s.empty()) {
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    bool letter_only = s.size() == 1 || !std::isalpha(static_cast<unsigned char>(s[1]));
    if (letter_only && c >= 'A' && c <= 'D') {
      return static_cast<EvidenceType>(c - 'A');
    }
  }
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "theory") return EvidenceType::Theory;
  if (lower == "opinion") return EvidenceType::Opinion;
  if (lower == "statistics") return EvidenceType::Statistics;
  if (lower.rfind("claim", 0) == 0) return EvidenceType::ClaimFromOtherSources;
  mismatch(name, "is not one of A, B, C, D");
}

PairList parse_pairs(const json& v, const OutSlot& slot) {
  if (!v.is_array()) mismatch(slot.name, "is not a list of pairs");
  PairList out;
  for (const auto& item : v) {
    std::pair<std::string, std::string> p;
    if (item.is_array() && item.size() == 2 && item[0].is_string() && item[1].is_string()) {
      p = {item[0].get<std::string>(), item[1].get<std::string>()};
    } else if (item.is_object()) {
      const json* k = nullptr;
      const json* t = nullptr;
      for (const char* key : {"id", "topic_id", "key", "title"}) {
        if (auto it = item.find(key); it != item.end() && it->is_string()) { k = &*it; break; }
      }
      for (const char* key : {"text", "description", "value"}) {
        if (auto it = item.find(key); it != item.end() && it->is_string()) { t = &*it; break; }
      }
      if (!k || !t) mismatch(slot.name, "contains an object without key and text");
      p = {k->get<std::string>(), t->get<std::string>()};
    } else {
      mismatch(slot.name, "contains an element that is not a pair");
    }
    if (!slot.domain.empty() &&
        std::find(slot.domain.begin(), slot.domain.end(), p.first) == slot.domain.end()) {
      mismatch(slot.name, "uses unknown key '" + p.first + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

SlotMap parse_structured_output(std::string_view raw, std::span<const OutSlot> expected) {
  auto payload = first_fenced_object(raw);
  if (!payload) throw Error(ErrorCode::NoStructuredPayload, "no fenced JSON object in model output");
  SlotMap out;
  for (const auto& slot : expected) {
    const json* v = find_key(*payload, slot.name);
    if (!v) mismatch(slot.name, "is absent");
    switch (slot.kind) {
      case SlotKind::Text:
        if (!v->is_string()) mismatch(slot.name, "is not text");
        out.set(slot.name, v->get<std::string>());
        break;
      case SlotKind::TextList: {
        if (!v->is_array()) mismatch(slot.name, "is not a list");
        TextList items;
        for (const auto& item : *v) {
          if (!item.is_string()) mismatch(slot.name, "contains a non-text item");
          items.push_back(item.get<std::string>());
        }
        out.set(slot.name, std::move(items));
        break;
      }
      case SlotKind::Score:
        out.set(slot.name, parse_score(*v, slot.name));
        break;
      case SlotKind::EvidenceKind:
        out.set(slot.name, parse_evidence(*v, slot.name));
        break;
      case SlotKind::PairList:
        out.set(slot.name, parse_pairs(*v, slot));
        break;
    }
  }
  return out;
}

std::string to_fenced_block(const SlotMap& slots) {
  json obj = json::object();
  for (const auto& [name, value] : slots.entries()) obj[name] = slot_to_json(value);
  return "```json\n" + obj.dump(2) + "\n```";
}

std::string output_contract(std::span<const OutSlot> expected) {
  std::string s =
      "Finish your reply with exactly one fenced JSON object (```json ... ```) with these keys:";
  for (const auto& slot : expected) {
    s += "\n- \"" + slot.name + "\": ";
    switch (slot.kind) {
      case SlotKind::Text: s += "a string"; break;
      case SlotKind::TextList: s += "an array of strings"; break;
      case SlotKind::Score: s += "a number between 1 and 10"; break;
      case SlotKind::EvidenceKind: s += "one of \"A\", \"B\", \"C\", \"D\""; break;
      case SlotKind::PairList:
        s += "an array of [key, text] pairs";
        if (!slot.domain.empty()) {
          s += " whose keys are drawn from: ";
          for (std::size_t i = 0; i < slot.domain.size(); ++i) s += (i ? ", " : "") + slot.domain[i];
        }
        break;
    }
  }
  return s;
}

std::string slot_fingerprint(const SlotMap& slots) {
  json obj = json::object();
  for (const auto& [name, value] : slots.entries()) {
    json v = slot_to_json(value);
    if (v.is_string()) {
      v = canonical_whitespace(v.get<std::string>());
    } else if (v.is_array()) {
      for (auto& item : v) {
        if (item.is_string()) item = canonical_whitespace(item.get<std::string>());
        if (item.is_array()) {
          for (auto& inner : item) inner = canonical_whitespace(inner.get<std::string>());
        }
      }
    }
    obj[name] = std::move(v);
  }
  return sha256_hex(obj.dump()).substr(0, 16);
}

// ---------------------------------------------------------------------------
// Contentiousness profiles
// ---------------------------------------------------------------------------

const std::array<ContentiousnessProfile, 5>& contentiousness_profiles() { return kProfiles; }

const ContentiousnessProfile& profile_for(double delta) {
  double level = nearest_profile_level(delta);
  for (const auto& p : kProfiles) {
    if (p.level == level) return p;
  }
  return kProfiles.front();
}

std::string profile_text(double delta) {
  const auto& p = profile_for(delta);
  return "Tone: " + p.tone + "\nEmphasis: " + p.emphasis + "\nLanguage: " + p.language;
}

}  // namespace socrasynth
