// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/text.hpp"

#include <array>
#include <fstream>
#include <random>
#include <unordered_set>

#include "mores/errors.hpp"

namespace mores {

namespace {

constexpr std::array<const char*, kReservedTokens> kReserved = {"[PAD]", "[UNK]", "[CLS]",
                                                                 "[SEP]"};

constexpr std::size_t kDemoVocabTokens = 996;

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr const char* kCommonWords[] = {
    "the", "of", "and", "a", "to", "in", "is", "you", "that", "it", "he", "was", "for", "on",
    "are", "as", "with", "his", "they", "i", "at", "be", "this", "have", "from", "or", "one",
    "had", "by", "word", "but", "not", "what", "all", "were", "we", "when", "your", "can",
    "said", "there", "use", "an", "each", "which", "she", "do", "how", "their", "if", "will",
    "up", "other", "about", "out", "many", "then", "them", "these", "so", "some", "her",
    "would", "make", "like", "him", "into", "time", "has", "look", "two", "more", "write",
    "go", "see", "number", "no", "way", "could", "people", "my", "than", "first", "water",
    "been", "call", "who", "its", "now", "find", "long", "down", "day", "did", "get", "come",
    "made", "may", "part", "over", "new", "sound", "take", "only", "little", "work", "know",
    "place", "year", "live", "me", "back", "give", "most", "very", "after", "thing", "our",
    "just", "name", "good", "sentence", "man", "think", "say", "great", "where", "help",
    "through", "much", "before", "line", "right", "too", "mean", "old", "any", "same", "tell",
    "boy", "follow", "came", "want", "show", "also", "around", "form", "three", "small", "set",
    "put", "end", "does", "another", "well", "large", "must", "big", "even", "such", "because",
    "turn", "here", "why", "ask", "went", "men", "read", "need", "land", "different", "home",
    "us", "move", "try", "kind", "hand", "picture", "again", "change", "off", "play", "spell",
    "air", "away", "animal", "house", "point", "page", "letter", "mother", "answer", "found",
    "study", "still", "learn", "should", "america", "world", "paranoid", "sc", "schizophrenia",
    "psychotic", "disorder", "symptoms", "treatment", "patients", "diagnosis", "delusions",
    "hallucinations", "medication", "therapy", "doctor", "hospital", "health", "mental",
    "brain", "disease", "cause", "risk", "study", "research", "results", "clinical", "drug",
    "effects", "blood", "heart", "cancer", "cell", "cells", "body", "pain", "care", "child",
    "children", "family", "school", "city", "country", "state", "government", "law", "court",
    "history", "war", "river", "mountain", "ocean", "island", "north", "south", "east", "west",
    "weather", "temperature", "rain", "snow", "summer", "winter", "price", "cost", "money",
    "bank", "market", "company", "business", "job", "salary", "pay", "tax", "insurance",
    "car", "engine", "road", "train", "flight", "airport", "hotel", "food", "recipe", "cook",
    "chicken", "rice", "bread", "coffee", "tea", "wine", "music", "song", "movie", "book",
    "author", "game", "team", "player", "season", "sport", "football", "baseball", "computer",
    "software", "internet", "phone", "data", "network", "system", "program", "language",
    "define", "definition", "meaning", "example", "average", "long", "far", "old", "best",
    "largest", "population", "capital", "born", "died", "age", "older", "years", "months",
    "days", "hours", "minutes", "miles", "feet", "pounds", "percent", "degrees", "size",
    "weight", "height", "color", "red", "blue", "green", "black", "white", "dog", "cat",
    "horse", "bird", "fish", "tree", "plant", "flower", "seed", "soil", "rock", "metal",
    "gold", "iron", "oil", "gas", "energy", "power", "light", "heat", "fire", "sun", "moon",
    "star", "planet", "earth", "space", "science", "theory", "test", "exam", "college",
    "university", "student", "teacher", "class", "degree", "course", "online", "free", "best",
};

// Pronounceable filler so the demo vocab reaches its full size.
std::string filler_word(std::mt19937_64& rng) {
  static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                            "s", "t", "v", "z", "br", "tr", "st", "pl"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::uniform_int_distribution<int> syllables(2, 3);
  std::uniform_int_distribution<std::size_t> onset(0, std::size(kOnsets) - 1);
  std::uniform_int_distribution<std::size_t> vowel(0, std::size(kVowels) - 1);
  std::string w;
  for (int i = syllables(rng); i > 0; --i) {
    w += kOnsets[onset(rng)];
    w += kVowels[vowel(rng)];
  }
  return w;
}

}  // namespace

Vocab::Vocab() {
  for (const char* t : kReserved) {
    ids_.emplace(t, static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(t);
  }
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  Vocab v;
  for (const auto& t : tokens) {
    if (t.empty()) throw VocabError("empty token in vocabulary");
    if (!v.ids_.emplace(t, static_cast<TokenId>(v.tokens_.size())).second) {
      throw VocabError("token '" + t + "' listed twice or shadows a reserved token");
    }
    v.tokens_.push_back(t);
  }
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(tokens);
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t i = kReservedTokens; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

TokenId Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw VocabError("id " + std::to_string(id) + " outside vocabulary of " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_word_byte(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else {
      flush();
      words.emplace_back(1, ch);
    }
  }
  flush();
  return words;
}

Tokenized tokenize(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  Tokenized out;
  for (auto& word : split_words(text)) {
    if (out.ids.size() == max_len) {
      out.truncated = true;
      break;
    }
    out.ids.push_back(vocab.id(word));
    out.tokens.push_back(std::move(word));
  }
  out.mask.assign(out.ids.size(), 1.0);
  return out;
}

std::vector<std::string> demo_vocab_tokens() {
  std::vector<std::string> tokens;
  std::unordered_set<std::string> seen;
  for (const char* w : kCommonWords) {
    if (seen.insert(w).second) tokens.emplace_back(w);
  }
  std::mt19937_64 rng(1009);
  while (tokens.size() < kDemoVocabTokens) {
    std::string w = filler_word(rng);
    if (seen.insert(w).second) tokens.push_back(std::move(w));
  }
  return tokens;
}

std::vector<std::pair<std::string, std::string>> read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> rows;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": expected 'id<TAB>value'");
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

}  // namespace mores
