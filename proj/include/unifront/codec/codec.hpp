#pragma once

#include <span>
#include <string>
#include <vector>

#include "unifront/core/locale.hpp"
#include "unifront/core/phoneme.hpp"
#include "unifront/core/vocab.hpp"

namespace unifront {

/// Model-ready id sequences for one training pair.
struct EncodedPair {
  std::vector<int> src;
  std::vector<int> tgt;
};

/// [locale tag] + one id per character; spaces become the `<wb>` source id and
/// characters absent from the vocabulary become UNK. Throws EncodeError when
/// the locale tag is not in the vocabulary.
std::vector<int> encode_source(const Vocab& vocab, const Locale& locale, std::string_view text);

/// [BOS] + token ids + [EOS]. Throws EncodeError on out-of-vocabulary tokens.
std::vector<int> encode_target(const Vocab& vocab, const PhonemeSeq& pron);

/// Inverse of encode_target. Never throws: ids after the first EOS are
/// ignored, BOS/PAD are dropped, and structurally invalid output comes back
/// with the degenerate flag set.
PhonemeSeq decode_target(const Vocab& vocab, std::span<const int> ids);

/// Splits at word boundaries. Degenerate input may produce empty spans,
/// which are kept so that span positions line up with the input.
std::vector<std::span<const std::string>> word_spans(const PhonemeSeq& pron);

}  // namespace unifront
