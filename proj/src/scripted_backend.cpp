#include <algorithm>
#include <charconv>
#include <random>
#include <sstream>

#include "socrasynth/backend.hpp"
#include "socrasynth/error.hpp"
#include "socrasynth/util.hpp"

namespace socrasynth {

namespace {

[[noreturn]] void parse_error(int line, const std::string& msg) {
  throw Error(ErrorCode::ScriptParseError, "script line " + std::to_string(line) + ": " + msg,
              std::to_string(line));
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::size_t indent_of(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && (s[n] == ' ' || s[n] == '\t')) ++n;
  return n;
}

std::string finish_block(std::vector<std::string>& lines) {
  while (!lines.empty() && is_blank(lines.back())) lines.pop_back();
  std::size_t common = std::string::npos;
  for (const auto& l : lines) {
    if (!is_blank(l)) common = std::min(common, indent_of(l));
  }
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    if (!is_blank(lines[i])) out += lines[i].substr(common);
  }
  lines.clear();
  return out;
}

std::uint64_t seed_from(std::string_view material) {
  auto hex = sha256_hex(material).substr(0, 16);
  std::uint64_t v = 0;
  std::from_chars(hex.data(), hex.data() + hex.size(), v, 16);
  return v;
}

}  // namespace

std::vector<ScriptEntry> parse_script(std::string_view text) {
  std::vector<ScriptEntry> entries;
  std::vector<std::string> block;
  bool in_entry = false;
  int line_no = 0;

  auto close_entry = [&] {
    if (in_entry) entries.back().response = finish_block(block);
    in_entry = false;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    std::string line(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (line.empty() || line[0] == ' ' || line[0] == '\t') {
      if (in_entry) {
        block.push_back(line);
      } else if (!is_blank(line)) {
        parse_error(line_no, "indented text outside a MATCH block");
      }
      continue;
    }
    if (line[0] == '#') continue;

    std::istringstream words(line);
    std::string keyword, tid, fp, extra, more;
    words >> keyword >> tid >> fp >> extra >> more;
    if (keyword != "MATCH") parse_error(line_no, "expected MATCH, found '" + keyword + "'");
    if (tid.empty() || fp.empty()) parse_error(line_no, "MATCH needs a template id and a fingerprint or '*'");
    if (!more.empty()) parse_error(line_no, "unexpected text after MATCH clause");

    ScriptEntry entry;
    entry.template_id = tid;
    if (fp != "*") entry.fingerprint = fp;
    entry.line = line_no;
    if (!extra.empty()) {
      if (extra.rfind("uses=", 0) != 0) parse_error(line_no, "expected uses=N, found '" + extra + "'");
      int uses = 0;
      auto digits = std::string_view(extra).substr(5);
      auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), uses);
      if (ec != std::errc{} || end != digits.data() + digits.size() || uses < 1) {
        parse_error(line_no, "uses must be a positive integer");
      }
      entry.remaining_uses = uses;
    }
    close_entry();
    entries.push_back(std::move(entry));
    in_entry = true;
  }
  close_entry();
  return entries;
}

std::string format_script(std::span<const ScriptEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += "MATCH " + e.template_id + " " + e.fingerprint.value_or("*");
    if (e.remaining_uses) out += " uses=" + std::to_string(*e.remaining_uses);
    out += '\n';
    std::size_t pos = 0;
    while (pos <= e.response.size()) {
      auto eol = e.response.find('\n', pos);
      auto line = e.response.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
      out += line.empty() ? "\n" : "  " + line + "\n";
      if (eol == std::string::npos) break;
      pos = eol + 1;
    }
    out += '\n';
  }
  return out;
}

ScriptedBackend::ScriptedBackend(BackendProfile profile, std::vector<ScriptEntry> entries)
    : profile_(std::move(profile)), entries_(std::move(entries)) {}

Completion ScriptedBackend::complete(std::span<const ChatTurn> history, const RenderedPrompt& prompt) {
  std::unique_lock lock(mu_);
  CallRecord record{prompt.template_id, prompt.fingerprint, prompt.text,
                    std::vector<ChatTurn>(history.begin(), history.end()), {}, std::nullopt};

  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ScriptEntry& e) {
    return e.template_id == prompt.template_id &&
           (!e.fingerprint || *e.fingerprint == prompt.fingerprint) &&
           (!e.remaining_uses || *e.remaining_uses > 0);
  });

  if (it != entries_.end()) {
    if (it->remaining_uses) --*it->remaining_uses;
    record.response = it->response;
    record.matched_line = it->line;
  } else if (profile_.strict) {
    calls_.push_back(std::move(record));
    throw Error(ErrorCode::NoScriptMatch,
                "no script entry for " + prompt.template_id + " " + prompt.fingerprint,
                prompt.template_id);
  } else {
    auto key = prompt.template_id + "|" + prompt.fingerprint;
    record.response = filler(prompt, filler_counts_[key]++);
  }

  Completion c{record.response, prompt.template_id, profile_.model_name, profile_.temperature, 0};
  calls_.push_back(std::move(record));
  lock.unlock();
  record_call(prompt.template_id, 0);
  return c;
}

std::string ScriptedBackend::filler(const RenderedPrompt& prompt, std::uint64_t ordinal) const {
  std::mt19937_64 rng(profile_.seed ^ seed_from(prompt.template_id + "|" + prompt.fingerprint + "|" +
                                                std::to_string(ordinal)));
  auto tag = [&] {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    for (int i = 0; i < 8; ++i) s.push_back(kHex[rng() % 16]);
    return s;
  };

  std::string prose = "Filler reply from " + profile_.id + " for " + prompt.template_id + " (" + tag() + ").";
  if (prompt.expected_out.empty()) return prose;

  SlotMap slots;
  for (const auto& slot : prompt.expected_out) {
    switch (slot.kind) {
      case SlotKind::Text:
        slots.set(slot.name, "filler " + slot.name + " " + tag());
        break;
      case SlotKind::TextList:
        slots.set(slot.name, TextList{"filler item " + tag(), "filler item " + tag()});
        break;
      case SlotKind::Score:
        slots.set(slot.name, static_cast<double>(1 + rng() % 10));
        break;
      case SlotKind::EvidenceKind:
        // Never D, so filler documents do not trigger recursive evaluation.
        slots.set(slot.name, static_cast<EvidenceType>(rng() % 3));
        break;
      case SlotKind::PairList: {
        PairList pairs;
        if (!slot.domain.empty()) {
          for (const auto& key : slot.domain) pairs.emplace_back(key, "filler argument on " + key + " " + tag());
        } else {
          int count = 5;
          if (prompt.slots.contains("count")) {
            if (const auto* c = std::get_if<std::string>(&prompt.slots.at("count"))) {
              std::from_chars(c->data(), c->data() + c->size(), count);
            }
          }
          for (int i = 1; i <= std::max(count, 1); ++i) {
            pairs.emplace_back("Filler topic " + std::to_string(i) + " " + tag(),
                               "filler description " + tag());
          }
        }
        slots.set(slot.name, std::move(pairs));
        break;
      }
    }
  }
  return prose + "\n\n" + to_fenced_block(slots);
}

std::vector<ScriptedBackend::CallRecord> ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::vector<ScriptEntry> ScriptedBackend::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::shared_ptr<ScriptedBackend> load_script(const std::filesystem::path& path, BackendProfile profile) {
  auto entries = parse_script(read_text_file(path));
  profile.script = path.string();
  return std::make_shared<ScriptedBackend>(std::move(profile), std::move(entries));
}

}  // namespace socrasynth
