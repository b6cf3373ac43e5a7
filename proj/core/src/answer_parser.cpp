#include <algorithm>
#include <array>
#include <charconv>
#include <optional>

#include "rsica/metrics.hpp"

namespace rsica {

namespace {

constexpr std::array<std::string_view, 21> kNumberWords = {
    "zero",    "one",     "two",       "three",    "four",     "five",
    "six",     "seven",   "eight",     "nine",     "ten",      "eleven",
    "twelve",  "thirteen", "fourteen", "fifteen",  "sixteen",  "seventeen",
    "eighteen", "nineteen", "twenty"};

std::optional<int> number_value(std::string_view token) {
  if (token == "no" || token == "none") return 0;
  if (!token.empty() && std::all_of(token.begin(), token.end(),
                                    [](char c) { return c >= '0' && c <= '9'; })) {
    int value = 0;
    const auto [end, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec == std::errc{} && end == token.data() + token.size()) return value;
    return std::nullopt;
  }
  for (std::size_t i = 0; i < kNumberWords.size(); ++i) {
    if (kNumberWords[i] == token) return static_cast<int>(i);
  }
  return std::nullopt;
}

// Clauses end at . , ; ! ? newlines and the word "and".
std::vector<TokenSeq> split_clauses(std::string_view text) {
  std::vector<TokenSeq> clauses;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const bool boundary = i == text.size() || text[i] == '.' || text[i] == ',' ||
                          text[i] == ';' || text[i] == '!' || text[i] == '?' ||
                          text[i] == '\n';
    if (!boundary) continue;
    TokenSeq clause;
    for (std::string& token : tokenize(text.substr(start, i - start))) {
      if (token == "and") {
        if (!clause.empty()) clauses.push_back(std::move(clause));
        clause.clear();
        continue;
      }
      clause.push_back(std::move(token));
    }
    if (!clause.empty()) clauses.push_back(std::move(clause));
    start = i + 1;
  }
  return clauses;
}

bool is_keyword_of(const std::string& token, const std::vector<std::string>& keywords) {
  return std::find(keywords.begin(), keywords.end(), token) != keywords.end();
}

}  // namespace

std::vector<std::string> category_keywords(std::string_view category) {
  std::vector<std::string> words = {std::string(category), pluralize(category)};
  if (category == "building") {
    words.insert(words.end(), {"house", "houses"});
  }
  return words;
}

std::optional<bool> parse_binary_answer(std::string_view text) {
  for (const std::string& token : tokenize(text)) {
    if (token == "yes") return true;
    if (token == "no") return false;
  }
  return std::nullopt;
}

CategoryCounts parse_quant_answer(std::string_view text,
                                  std::span<const std::string> categories) {
  const std::vector<TokenSeq> clauses = split_clauses(text);
  CategoryCounts counts;
  for (const std::string& category : categories) {
    const auto keywords = category_keywords(category);
    int value = 0;
    bool found = false;
    for (const TokenSeq& clause : clauses) {
      for (std::size_t k = 0; k < clause.size() && !found; ++k) {
        if (!is_keyword_of(clause[k], keywords)) continue;
        found = true;
        std::optional<std::size_t> best_distance;
        for (std::size_t i = 0; i < clause.size(); ++i) {
          const auto number = number_value(clause[i]);
          if (!number) continue;
          const std::size_t distance = i < k ? k - i : i - k;
          // Strict < keeps the earlier (preceding) number on ties.
          if (!best_distance || distance < *best_distance) {
            best_distance = distance;
            value = *number;
          }
        }
      }
      if (found) break;
    }
    counts.set(category, value);
  }
  return counts;
}

LocalizedCells parse_localization_answer(std::string_view text,
                                         std::span<const std::string> categories) {
  const TokenSeq tokens = tokenize(text);
  std::vector<std::vector<std::string>> keywords;
  for (const std::string& c : categories) keywords.push_back(category_keywords(c));

  const auto category_at = [&](const std::string& token) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < keywords.size(); ++c) {
      if (is_keyword_of(token, keywords[c])) return c;
    }
    return std::nullopt;
  };

  LocalizedCells result;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    CellSet cells;
    const auto first = std::find_if(tokens.begin(), tokens.end(), [&](const auto& t) {
      return is_keyword_of(t, keywords[c]);
    });
    if (first != tokens.end()) {
      for (auto it = std::next(first); it != tokens.end() && !category_at(*it); ++it) {
        if (const auto cell = parse_cell_label(*it)) cells.insert(*cell);
      }
    }
    result.emplace_back(categories[c], cells);
  }
  return result;
}

TaskAnswer parse_prediction(TaskType task, std::string_view text,
                            std::span<const std::string> categories) {
  switch (task) {
    case TaskType::Binary:
      if (const auto verdict = parse_binary_answer(text)) return *verdict;
      return std::monostate{};
    case TaskType::Quant:
      return parse_quant_answer(text, categories);
    case TaskType::Localize:
      return parse_localization_answer(text, categories);
    default:
      return std::monostate{};
  }
}

}  // namespace rsica
