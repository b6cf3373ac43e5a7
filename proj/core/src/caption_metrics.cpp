#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "rsica/error.hpp"
#include "rsica/metrics.hpp"

namespace rsica {

namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts count_ngrams(const TokenSeq& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

constexpr std::size_t kMaxOrder = 4;

}  // namespace

void BleuStats::add(const TokenSeq& candidate, std::span<const TokenSeq> references) {
  if (references.empty()) {
    throw InvalidArgument("bleu: at least one reference is required");
  }
  candidate_length += candidate.size();

  std::size_t closest = references.front().size();
  for (const TokenSeq& ref : references) {
    const auto diff = [&](std::size_t len) {
      return len > candidate.size() ? len - candidate.size() : candidate.size() - len;
    };
    if (diff(ref.size()) < diff(closest) ||
        (diff(ref.size()) == diff(closest) && ref.size() < closest)) {
      closest = ref.size();
    }
  }
  reference_length += closest;

  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    const NgramCounts cand = count_ngrams(candidate, n);
    NgramCounts max_ref;
    for (const TokenSeq& ref : references) {
      for (const auto& [gram, count] : count_ngrams(ref, n)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    std::size_t clipped = 0;
    for (const auto& [gram, count] : cand) {
      const auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    matches[n - 1] += clipped;
    totals[n - 1] += candidate.size() >= n ? candidate.size() - n + 1 : 0;
  }
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t k = 0; k < kMaxOrder; ++k) {
    matches[k] += other.matches[k];
    totals[k] += other.totals[k];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

std::vector<double> BleuStats::scores(int max_n) const {
  if (max_n < 1 || max_n > static_cast<int>(kMaxOrder)) {
    throw InvalidArgument("bleu: max_n must lie in 1..4");
  }
  std::vector<double> out(max_n, 0.0);
  if (candidate_length == 0) return out;

  const double c = static_cast<double>(candidate_length);
  const double r = static_cast<double>(reference_length);
  const double brevity = c >= r ? 1.0 : std::exp(1.0 - r / c);

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    if (matches[n - 1] == 0 || totals[n - 1] == 0) break;  // BLEU-n..max_n stay 0
    log_sum += std::log(static_cast<double>(matches[n - 1]) /
                        static_cast<double>(totals[n - 1]));
    out[n - 1] = brevity * std::exp(log_sum / n);
  }
  return out;
}

std::vector<double> bleu(const TokenSeq& candidate,
                         std::span<const TokenSeq> references, int max_n) {
  BleuStats stats;
  stats.add(candidate, references);
  return stats.scores(max_n);
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diagonal + 1 : std::max(row[j], row[j - 1]);
      diagonal = above;
    }
  }
  return row[b.size()];
}

double rouge_l(const TokenSeq& candidate, std::span<const TokenSeq> references,
               double beta) {
  if (references.empty()) {
    throw InvalidArgument("rouge_l: at least one reference is required");
  }
  double best = 0.0;
  if (candidate.empty()) return best;
  const double beta2 = beta * beta;
  for (const TokenSeq& ref : references) {
    const std::size_t lcs = lcs_length(candidate, ref);
    if (lcs == 0 || ref.empty()) continue;
    const double p = static_cast<double>(lcs) / static_cast<double>(candidate.size());
    const double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
    best = std::max(best, (1.0 + beta2) * p * r / (r + beta2 * p));
  }
  return best;
}

double meteor(const TokenSeq& candidate, std::span<const TokenSeq> references) {
  if (references.empty()) {
    throw InvalidArgument("meteor: at least one reference is required");
  }
  double best = 0.0;
  for (const TokenSeq& ref : references) {
    std::vector<bool> used(ref.size(), false);
    std::size_t matches = 0;
    std::size_t chunks = 0;
    std::optional<std::pair<std::size_t, std::size_t>> previous;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (used[j] || ref[j] != candidate[i]) continue;
        used[j] = true;
        ++matches;
        if (!previous || previous->first + 1 != i || previous->second + 1 != j) {
          ++chunks;
        }
        previous = std::pair{i, j};
        break;
      }
    }
    if (matches == 0) continue;
    const double m = static_cast<double>(matches);
    const double p = m / static_cast<double>(candidate.size());
    const double r = m / static_cast<double>(ref.size());
    const double fmean = 10.0 * p * r / (r + 9.0 * p);
    const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
    best = std::max(best, fmean * (1.0 - penalty));
  }
  return best;
}

namespace {

struct TfIdfVector {
  std::unordered_map<std::string, double> weights;
  double norm = 0.0;
};

TfIdfVector tfidf(const NgramCounts& counts,
                  const std::unordered_map<std::string, std::size_t>& document_freq,
                  double log_corpus) {
  TfIdfVector v;
  for (const auto& [gram, tf] : counts) {
    const auto it = document_freq.find(gram);
    const double df = it == document_freq.end() ? 1.0
                                                : std::max<double>(1.0, it->second);
    const double w = static_cast<double>(tf) * (log_corpus - std::log(df));
    v.weights.emplace(gram, w);
    v.norm += w * w;
  }
  v.norm = std::sqrt(v.norm);
  return v;
}

double clipped_cosine(const TfIdfVector& hyp, const TfIdfVector& ref) {
  double dot = 0.0;
  for (const auto& [gram, w] : hyp.weights) {
    const auto it = ref.weights.find(gram);
    if (it != ref.weights.end()) dot += std::min(w, it->second) * it->second;
  }
  if (hyp.norm != 0.0 && ref.norm != 0.0) dot /= hyp.norm * ref.norm;
  return dot;
}

}  // namespace

CiderResult cider_d(const std::map<std::string, TokenSeq>& candidates,
                    const std::map<std::string, std::vector<TokenSeq>>& references,
                    double sigma) {
  if (candidates.size() != references.size() ||
      !std::equal(candidates.begin(), candidates.end(), references.begin(),
                  [](const auto& c, const auto& r) { return c.first == r.first; })) {
    throw InvalidArgument("cider_d: candidate and reference ids differ");
  }
  for (const auto& [id, refs] : references) {
    if (refs.empty()) throw InvalidArgument("cider_d: item '" + id + "' has no reference");
  }

  CiderResult result;
  if (candidates.empty()) return result;
  const double log_corpus = std::log(static_cast<double>(references.size()));

  std::array<std::unordered_map<std::string, std::size_t>, kMaxOrder> document_freq;
  for (const auto& [id, refs] : references) {
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      std::set<std::string> seen;
      for (const TokenSeq& ref : refs) {
        for (const auto& [gram, count] : count_ngrams(ref, n)) seen.insert(gram);
      }
      for (const std::string& gram : seen) ++document_freq[n - 1][gram];
    }
  }

  double total = 0.0;
  for (const auto& [id, candidate] : candidates) {
    const auto& refs = references.at(id);
    double per_order_sum = 0.0;
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      const TfIdfVector hyp =
          tfidf(count_ngrams(candidate, n), document_freq[n - 1], log_corpus);
      double sum = 0.0;
      for (const TokenSeq& ref : refs) {
        const TfIdfVector rv = tfidf(count_ngrams(ref, n), document_freq[n - 1], log_corpus);
        const double delta =
            static_cast<double>(candidate.size()) - static_cast<double>(ref.size());
        sum += clipped_cosine(hyp, rv) * std::exp(-(delta * delta) / (2.0 * sigma * sigma));
      }
      per_order_sum += sum / static_cast<double>(refs.size());
    }
    const double score = 10.0 * per_order_sum / static_cast<double>(kMaxOrder);
    result.per_item.emplace(id, score);
    total += score;
  }
  result.score = total / static_cast<double>(candidates.size());
  return result;
}

}  // namespace rsica
