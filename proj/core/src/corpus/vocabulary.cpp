// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/corpus/vocabulary.hpp"

#include <array>
#include <cctype>
#include <fstream>

#include "mcvqa/error.hpp"

namespace mcvqa::corpus {
namespace {

constexpr std::array<std::string_view, kReservedCount> kReservedTokens{"[PAD]", "[UNK]", "[CLS]",
                                                                       "[SEP]", "[MASK]"};

}  // namespace

bool is_special(TokenId id) { return id < kReservedCount; }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary::Vocabulary() {
  for (auto t : kReservedTokens) add(t);
}

TokenId Vocabulary::add(std::string_view token) {
  const std::string key(token);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const TokenId id = tokens_.size();
  tokens_.push_back(key);
  index_.emplace(key, id);
  return id;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& t : tokenize(text)) ids.push_back(id(t));
  return ids;
}

std::vector<TokenId> Vocabulary::encode_adding(std::string_view text) {
  std::vector<TokenId> ids;
  for (const auto& t : tokenize(text)) ids.push_back(add(t));
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += token(ids[i]);
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vocabulary " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (line_no < kReservedCount) {
      if (line != kReservedTokens[line_no]) {
        throw ParseError(path.string() + ":" + std::to_string(line_no + 1) + ": expected reserved token " +
                         std::string(kReservedTokens[line_no]));
      }
    } else if (vocab.add(line) != line_no) {
      throw ParseError(path.string() + ":" + std::to_string(line_no + 1) + ": duplicate token '" + line +
                       "'");
    }
    ++line_no;
  }
  if (line_no < kReservedCount) throw ParseError(path.string() + ": missing reserved tokens");
  return vocab;
}

}  // namespace mcvqa::corpus
