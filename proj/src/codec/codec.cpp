#include "unifront/codec/codec.hpp"

#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"

namespace unifront {

std::vector<int> encode_source(const Vocab& vocab, const Locale& locale, std::string_view text) {
  auto tag = vocab.source.find(locale.tag());
  if (!tag) throw EncodeError("locale " + locale.str() + " is not in the source vocabulary");
  auto chars = utf8_chars(text);
  std::vector<int> ids;
  ids.reserve(chars.size() + 1);
  ids.push_back(*tag);
  for (const auto& c : chars) {
    auto id = vocab.source.find(c == " " ? kWordBoundary : std::string_view(c));
    ids.push_back(id.value_or(kUnk));
  }
  return ids;
}

std::vector<int> encode_target(const Vocab& vocab, const PhonemeSeq& pron) {
  std::vector<int> ids;
  ids.reserve(pron.size() + 2);
  ids.push_back(kBos);
  for (const auto& t : pron.tokens()) {
    auto id = vocab.target.find(t);
    if (!id || *id < kNumSpecials) {
      throw EncodeError("phoneme token '" + t + "' is not in the target vocabulary");
    }
    ids.push_back(*id);
  }
  ids.push_back(kEos);
  return ids;
}

PhonemeSeq decode_target(const Vocab& vocab, std::span<const int> ids) {
  std::vector<std::string> tokens;
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kBos || id == kPad) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.target.size()) {
      tokens.emplace_back(kUnkToken);
    } else {
      tokens.push_back(vocab.target.symbol(id));
    }
  }
  auto seq = PhonemeSeq::lenient(std::move(tokens));
  return seq;
}

std::vector<std::span<const std::string>> word_spans(const PhonemeSeq& pron) {
  std::vector<std::span<const std::string>> spans;
  const auto& toks = pron.tokens();
  if (toks.empty()) return spans;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= toks.size(); ++i) {
    if (i == toks.size() || is_boundary(toks[i])) {
      spans.emplace_back(toks.data() + start, i - start);
      start = i + 1;
    }
  }
  return spans;
}

}  // namespace unifront
