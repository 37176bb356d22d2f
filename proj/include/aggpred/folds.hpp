#pragma once

// Repeated k-fold assignment.
//
// Sample-level plans deal samples round-robin into folds after a seeded
// shuffle. Stratified plans deal every positive first, then every negative,
// grouped by participant, with one running fold counter. That keeps the
// per-fold class counts and the per-participant class counts within one
// sample of each other, so restricting a plan to one participant stays
// stratified. Session-level plans deal whole sessions instead.

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aggpred/error.hpp"
#include "aggpred/random.hpp"

namespace aggpred {

enum class FoldUnit { Sample, Session };

constexpr std::string_view fold_unit_name(FoldUnit u) noexcept { return u == FoldUnit::Sample ? "sample" : "session"; }

inline FoldUnit parse_fold_unit(std::string_view s) {
  if (s == "sample") return FoldUnit::Sample;
  if (s == "session") return FoldUnit::Session;
  throw ConfigError("unknown fold unit '" + std::string(s) + "'");
}

// Per-sample grouping the planner needs.
struct FoldInputs {
  std::span<const std::uint8_t> labels;
  std::span<const int> participant;  // may be empty: one group
  std::span<const int> session;      // required for session-level plans
};

struct FoldPlan {
  int n_folds = 5;
  int n_repeats = 5;
  std::uint64_t seed = 0;
  bool stratified = true;
  FoldUnit unit = FoldUnit::Sample;
  std::vector<std::vector<int>> assignment;  // [repeat][sample] -> fold

  std::size_t size() const noexcept { return assignment.empty() ? 0 : assignment.front().size(); }

  std::vector<std::size_t> test_indices(int repeat, int fold) const {
    std::vector<std::size_t> out;
    const auto& a = assignment.at(static_cast<std::size_t>(repeat));
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] == fold) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> train_indices(int repeat, int fold) const {
    std::vector<std::size_t> out;
    const auto& a = assignment.at(static_cast<std::size_t>(repeat));
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != fold) out.push_back(i);
    return out;
  }

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

inline FoldPlan make_folds(const FoldInputs& in, int n_folds, int n_repeats, std::uint64_t seed, bool stratified = true,
                           FoldUnit unit = FoldUnit::Sample) {
  const std::size_t n = in.labels.size();
  if (n_folds < 2) throw ConfigError("need at least 2 folds");
  if (n_repeats < 1) throw ConfigError("need at least 1 repeat");
  if (n < static_cast<std::size_t>(n_folds))
    throw ConfigError("fewer samples (" + std::to_string(n) + ") than folds (" + std::to_string(n_folds) + ")");
  if (!in.participant.empty() && in.participant.size() != n) throw DataError("participant index length mismatch");
  if (unit == FoldUnit::Session && in.session.size() != n) throw DataError("session-level folds need session indices");

  auto group_of = [&](std::size_t i) { return in.participant.empty() ? 0 : in.participant[i]; };
  const auto K = static_cast<std::uint64_t>(n_folds);

  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.n_repeats = n_repeats;
  plan.seed = seed;
  plan.stratified = stratified;
  plan.unit = unit;
  for (int r = 0; r < n_repeats; ++r) {
    Rng rng(derive_seed(seed, {0xf01d, static_cast<std::uint64_t>(r)}));
    std::vector<int> fold(n, -1);
    std::uint64_t counter = rng.below(K);
    auto deal = [&](std::vector<std::size_t>& items, auto&& assign) {
      rng.shuffle(items);
      for (std::size_t it : items) assign(it, static_cast<int>(counter++ % K));
    };

    if (unit == FoldUnit::Session) {
      std::map<int, std::vector<std::size_t>> sessions_by_group;
      std::map<int, int> group_of_session;
      for (std::size_t i = 0; i < n; ++i) group_of_session.emplace(in.session[i], group_of(i));
      for (const auto& [s, g] : group_of_session) sessions_by_group[g].push_back(static_cast<std::size_t>(s));
      std::map<int, int> session_fold;
      for (auto& [g, sessions] : sessions_by_group)
        deal(sessions, [&](std::size_t s, int f) { session_fold[static_cast<int>(s)] = f; });
      for (std::size_t i = 0; i < n; ++i) fold[i] = session_fold.at(in.session[i]);
    } else if (stratified) {
      for (std::uint8_t cls : {std::uint8_t{1}, std::uint8_t{0}}) {
        std::map<int, std::vector<std::size_t>> by_group;
        for (std::size_t i = 0; i < n; ++i)
          if ((in.labels[i] ? 1 : 0) == cls) by_group[group_of(i)].push_back(i);
        for (auto& [g, items] : by_group) deal(items, [&](std::size_t i, int f) { fold[i] = f; });
      }
    } else {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      deal(all, [&](std::size_t i, int f) { fold[i] = f; });
    }
    plan.assignment.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace aggpred
