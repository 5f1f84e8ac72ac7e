#include "construal/signature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace construal {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Hasher {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  void add(std::uint64_t v) { h = mix(h ^ mix(v)); }
  void add(std::int64_t v) { add(static_cast<std::uint64_t>(v)); }
  void add(const std::string& s) {
    std::uint64_t f = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) f = (f ^ c) * 0x100000001b3ULL;
    add(f);
    add(static_cast<std::uint64_t>(s.size()));
  }
};

std::int64_t quantise(double x) { return static_cast<std::int64_t>(std::llround(x * 1e6)); }

}  // namespace

std::vector<StateSignature> state_signatures(const GroundMdp& mdp, std::size_t horizon) {
  if (horizon < 1) throw Error(Errc::invalid_parameter, "signature horizon must be at least 1");
  const std::size_t n = mdp.state_count();
  std::vector<StateSignature> sig(n);
  for (StateId s = 0; s < n; ++s) {
    auto& out = sig[s];
    const auto& st = mdp.states[s];
    out.terminal = st.terminal;
    out.tags = st.tags;
    for (const auto& a : st.actions) out.rewards.push_back(a.reward);
    std::sort(out.rewards.begin(), out.rewards.end());
    Hasher h;
    h.add(std::uint64_t{out.terminal ? 1u : 0u});
    h.add(static_cast<std::uint64_t>(out.rewards.size()));
    for (double r : out.rewards) h.add(quantise(r));
    for (const auto& t : out.tags) h.add(t);
    out.levels.push_back(h.h);
  }
  for (std::size_t level = 1; level <= horizon; ++level) {
    std::vector<std::uint64_t> next(n);
    for (StateId s = 0; s < n; ++s) {
      std::vector<std::uint64_t> per_action;
      for (const auto& a : mdp.actions(s)) {
        std::map<std::uint64_t, double> profile;
        for (const auto& o : a.outcomes) profile[sig[o.next].levels[level - 1]] += o.prob;
        Hasher h;
        h.add(quantise(a.reward));
        for (const auto& [cls, p] : profile) {
          const auto q = quantise(p);
          if (q == 0) continue;
          h.add(cls);
          h.add(q);
        }
        per_action.push_back(h.h);
      }
      std::sort(per_action.begin(), per_action.end());
      Hasher h;
      h.add(sig[s].levels[0]);
      for (auto v : per_action) h.add(v);
      next[s] = h.h;
    }
    for (StateId s = 0; s < n; ++s) sig[s].levels.push_back(next[s]);
  }
  return sig;
}

StateSignature state_signature(const GroundMdp& mdp, StateId state, std::size_t horizon) {
  if (state >= mdp.state_count()) throw Error(Errc::invalid_parameter, "state out of range", {state});
  return state_signatures(mdp, horizon).at(state);
}

double signature_similarity(const StateSignature& a, const StateSignature& b) {
  double score = 0.0;
  const std::size_t depth = std::min(a.levels.size(), b.levels.size());
  for (std::size_t k = 0; k < depth; ++k)
    if (a.levels[k] == b.levels[k]) score = static_cast<double>(k + 1);
  if (a.terminal != b.terminal) return -1.0;
  // reward-multiset overlap in [0, 1)
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.rewards.size() && j < b.rewards.size()) {
    const auto qa = quantise(a.rewards[i]), qb = quantise(b.rewards[j]);
    if (qa == qb) {
      ++common, ++i, ++j;
    } else if (qa < qb) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t total = a.rewards.size() + b.rewards.size() - common;
  const double overlap = total == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(total);
  return score + 0.5 * overlap;
}

std::vector<std::uint64_t> signature_multiset(const GroundMdp& mdp) {
  std::vector<std::uint64_t> out;
  for (const auto& s : state_signatures(mdp, 1)) out.push_back(s.digest());
  std::sort(out.begin(), out.end());
  return out;
}

double multiset_jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter, ++i, ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace construal
