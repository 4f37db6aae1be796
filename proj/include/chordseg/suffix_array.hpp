#pragma once

// Suffix array (prefix doubling with counting sort, O(n log n)), Kasai LCP,
// and maximal-repeat extraction by bottom-up traversal of the lcp-intervals.

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <stack>
#include <vector>

namespace chordseg {

/// Suffix array of `s`, whose symbols must lie in [0, sigma).
inline std::vector<std::size_t> suffix_array(std::span<const std::size_t> s, std::size_t sigma) {
  const std::size_t n = s.size();
  std::vector<std::size_t> sa(n), rank(s.begin(), s.end()), tmp(n), order(n);
  if (n == 0) return sa;

  const auto counting_sort = [&](const std::vector<std::size_t>& items, std::size_t range) {
    std::vector<std::size_t> count(range + 1, 0);
    for (auto i : items) ++count[rank[i] + 1];
    for (std::size_t r = 1; r <= range; ++r) count[r] += count[r - 1];
    for (auto i : items) sa[count[rank[i]]++] = i;
  };

  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  counting_sort(order, std::max(sigma, n));

  for (std::size_t k = 1;; k <<= 1) {
    // Second key: suffixes shorter than k sort first, then by rank of i + k.
    std::size_t p = 0;
    for (std::size_t i = n - std::min(k, n); i < n; ++i) order[p++] = i;
    for (std::size_t j = 0; j < n; ++j)
      if (sa[j] >= k) order[p++] = sa[j] - k;
    counting_sort(order, std::max(sigma, n));

    tmp[sa[0]] = 0;
    for (std::size_t j = 1; j < n; ++j) {
      const std::size_t a = sa[j - 1], b = sa[j];
      const bool same = rank[a] == rank[b] &&
                        (a + k < n ? static_cast<long long>(rank[a + k]) : -1) ==
                            (b + k < n ? static_cast<long long>(rank[b + k]) : -1);
      tmp[b] = tmp[a] + (same ? 0 : 1);
    }
    rank.swap(tmp);
    if (rank[sa[n - 1]] == n - 1 || k >= n) break;
  }
  return sa;
}

/// lcp[i] = longest common prefix of suffixes sa[i-1] and sa[i]; lcp[0] = 0.
inline std::vector<std::size_t> lcp_array(std::span<const std::size_t> s,
                                          std::span<const std::size_t> sa) {
  const std::size_t n = s.size();
  std::vector<std::size_t> rank(n), lcp(n, 0);
  for (std::size_t i = 0; i < n; ++i) rank[sa[i]] = i;
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rank[i] == 0) {
      h = 0;
      continue;
    }
    const std::size_t j = sa[rank[i] - 1];
    while (i + h < n && j + h < n && s[i + h] == s[j + h]) ++h;
    lcp[rank[i]] = h;
    if (h > 0) --h;
  }
  return lcp;
}

template <class Token>
struct RepeatedPattern {
  std::vector<Token> tokens;
  std::vector<std::size_t> occurrences;  // ascending start positions, possibly overlapping

  std::size_t length() const { return tokens.size(); }
  friend bool operator==(const RepeatedPattern&, const RepeatedPattern&) = default;
};

/// Maps tokens to dense symbols in [0, sigma) by sorted token order.
template <class Token>
std::vector<std::size_t> dense_symbols(std::span<const Token> seq, std::size_t* sigma = nullptr) {
  std::map<Token, std::size_t> ids;
  for (const auto& t : seq) ids.emplace(t, 0);
  std::size_t next = 0;
  for (auto& [tok, id] : ids) id = next++;
  std::vector<std::size_t> out;
  out.reserve(seq.size());
  for (const auto& t : seq) out.push_back(ids.at(t));
  if (sigma) *sigma = next;
  return out;
}

/// All maximal repeats (left- and right-maximal substrings occurring at least
/// twice) of length >= min_len. Sorted by length descending, then by first
/// occurrence.
template <class Token>
std::vector<RepeatedPattern<Token>> repeated_subsequences(std::span<const Token> seq,
                                                          std::size_t min_len = 2) {
  std::vector<RepeatedPattern<Token>> out;
  const std::size_t n = seq.size();
  if (n < 2) return out;
  min_len = std::max<std::size_t>(min_len, 1);

  std::size_t sigma = 0;
  const auto s = dense_symbols(seq, &sigma);
  const auto sa = suffix_array(s, sigma);
  const auto lcp = lcp_array(s, sa);

  const auto report = [&](std::size_t len, std::size_t lb, std::size_t rb) {
    if (len < min_len) return;
    bool left_diverse = false;
    for (std::size_t i = lb; i <= rb && !left_diverse; ++i)
      left_diverse = sa[i] == 0 || s[sa[i] - 1] != s[sa[lb] - 1];
    if (!left_diverse) return;
    RepeatedPattern<Token> p;
    p.tokens.assign(seq.begin() + static_cast<std::ptrdiff_t>(sa[lb]),
                    seq.begin() + static_cast<std::ptrdiff_t>(sa[lb] + len));
    p.occurrences.assign(sa.begin() + static_cast<std::ptrdiff_t>(lb),
                         sa.begin() + static_cast<std::ptrdiff_t>(rb + 1));
    std::sort(p.occurrences.begin(), p.occurrences.end());
    out.push_back(std::move(p));
  };

  struct Interval {
    std::size_t lcp;
    std::size_t lb;
  };
  std::stack<Interval, std::vector<Interval>> stack;
  stack.push({0, 0});
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t cur = i < n ? lcp[i] : 0;
    std::size_t lb = i - 1;
    while (cur < stack.top().lcp) {
      const Interval node = stack.top();
      stack.pop();
      report(node.lcp, node.lb, i - 1);
      lb = node.lb;
    }
    if (cur > stack.top().lcp) stack.push({cur, lb});
  }

  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    return a.occurrences.front() < b.occurrences.front();
  });
  return out;
}

}  // namespace chordseg
