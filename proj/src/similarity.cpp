// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "specjudge/dataset.hpp"

namespace specjudge {
namespace {

struct Block {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t size = 0;
};

// Longest common substring of a[alo,ahi) and b[blo,bhi). Among blocks of
// maximal size the one starting earliest in `a` wins, then earliest in `b`.
class LongestMatchFinder {
 public:
  LongestMatchFinder(std::string_view a, std::string_view b)
      : a_(a), b_(b), prev_(b.size() + 1), cur_(b.size() + 1) {}

  Block find(std::size_t alo, std::size_t ahi, std::size_t blo, std::size_t bhi) {
    const std::size_t width = bhi - blo;
    std::uint32_t* prev = prev_.data();
    std::uint32_t* cur = cur_.data();
    std::fill(prev, prev + width + 1, 0u);
    cur[0] = 0;
    const char* bp = b_.data() + blo;

    Block best{alo, blo, 0};
    for (std::size_t i = alo; i < ahi; ++i) {
      const char ai = a_[i];
      std::uint32_t row_max = 0;
      for (std::size_t jj = 1; jj <= width; ++jj) {
        const std::uint32_t v = (bp[jj - 1] == ai) ? prev[jj - 1] + 1 : 0u;
        cur[jj] = v;
        row_max = std::max(row_max, v);
      }
      if (row_max > best.size) {
        std::size_t jj = 1;
        while (cur[jj] != row_max) ++jj;
        best.size = row_max;
        best.a = i + 1 - row_max;
        best.b = blo + jj - row_max;
      }
      std::swap(prev, cur);
      cur[0] = 0;
    }
    return best;
  }

 private:
  std::string_view a_;
  std::string_view b_;
  std::vector<std::uint32_t> prev_;
  std::vector<std::uint32_t> cur_;
};

// Length of the longest common subsequence, bit-parallel over `b`.
std::size_t lcs_length(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) return 0;
  const std::size_t words = (b.size() + 63) / 64;
  std::array<std::vector<std::uint64_t>, 256> peq;
  for (std::size_t j = 0; j < b.size(); ++j) {
    auto& mask = peq[static_cast<unsigned char>(b[j])];
    if (mask.empty()) mask.assign(words, 0);
    mask[j / 64] |= std::uint64_t{1} << (j % 64);
  }
  std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
  for (char c : a) {
    const auto& mask = peq[static_cast<unsigned char>(c)];
    if (mask.empty()) continue;
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & mask[w];
      const std::uint64_t sum = v[w] + u;
      const std::uint64_t sum2 = sum + carry;
      const std::uint64_t next_carry = (sum < v[w]) || (sum2 < sum) ? 1 : 0;
      v[w] = sum2 | (v[w] & ~u);
      carry = next_carry;
    }
  }
  std::size_t zeros = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t word = ~v[w];
    if (w + 1 == words && b.size() % 64 != 0) {
      word &= (std::uint64_t{1} << (b.size() % 64)) - 1;
    }
    zeros += static_cast<std::size_t>(__builtin_popcountll(word));
  }
  return zeros;
}

std::size_t multiset_intersection(std::string_view a, std::string_view b) {
  std::array<std::size_t, 256> counts{};
  for (char c : b) ++counts[static_cast<unsigned char>(c)];
  std::size_t matches = 0;
  for (char c : a) {
    auto& n = counts[static_cast<unsigned char>(c)];
    if (n > 0) {
      --n;
      ++matches;
    }
  }
  return matches;
}

bool canonical_order(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a <= b;
}

double ratio(std::size_t matched, std::size_t total) {
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace

std::size_t matched_characters(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) return 0;
  LongestMatchFinder finder(a, b);
  struct Range {
    std::size_t alo, ahi, blo, bhi;
  };
  std::vector<Range> pending{{0, a.size(), 0, b.size()}};
  std::size_t matched = 0;
  while (!pending.empty()) {
    const Range r = pending.back();
    pending.pop_back();
    const Block block = finder.find(r.alo, r.ahi, r.blo, r.bhi);
    if (block.size == 0) continue;
    matched += block.size;
    if (r.alo < block.a && r.blo < block.b) {
      pending.push_back({r.alo, block.a, r.blo, block.b});
    }
    if (block.a + block.size < r.ahi && block.b + block.size < r.bhi) {
      pending.push_back({block.a + block.size, r.ahi, block.b + block.size, r.bhi});
    }
  }
  return matched;
}

double sequence_similarity(std::string_view a, std::string_view b) {
  if (!canonical_order(a, b)) std::swap(a, b);
  return ratio(matched_characters(a, b), a.size() + b.size());
}

double similarity_upper_bound(std::string_view a, std::string_view b) {
  return ratio(multiset_intersection(a, b), a.size() + b.size());
}

namespace detail {

// Bounds chain used by the double-standard scan: each test is an upper bound
// on the matched-character count, so rejecting on it is exact.
bool may_exceed(std::string_view a, std::string_view b, double threshold) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 1.0 > threshold;
  if (ratio(std::min(a.size(), b.size()), total) <= threshold) return false;
  if (ratio(multiset_intersection(a, b), total) <= threshold) return false;
  return ratio(lcs_length(a, b), total) > threshold;
}

std::size_t lcs(std::string_view a, std::string_view b) { return lcs_length(a, b); }

}  // namespace detail
}  // namespace specjudge
