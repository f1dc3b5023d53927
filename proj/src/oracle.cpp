#include "sleepx3/oracle.hpp"

#include <algorithm>
#include <numeric>

#include "sleepx3/errors.hpp"

namespace sleepx3 {

const std::vector<ArmIndex>& HindsightPolicy::action(
    const AvailabilitySet& s) const {
  const auto it = table.find(s.members());
  if (it == table.end())
    throw Error("UnknownAvailabilitySet",
                "policy has no action for an unobserved set");
  return it->second;
}

LossMatrixView LossMatrixView::of(const EpisodeResult& episode) {
  if (episode.losses_retained)
    return {episode.loss_matrix.data(), episode.n};
  if (!episode.spill)
    throw Error("LossMatrixUnavailable",
                "episode retained no losses and has no spill file");
  LossMatrixView view;
  view.n_ = episode.n;
  view.keep_alive_ = episode.spill;
  view.file_ = std::make_shared<std::ifstream>(episode.spill->path,
                                               std::ios::binary);
  if (!view.file_->good())
    throw Error("IoError", "cannot read spill file " + episode.spill->path);
  view.buffer_ = std::make_shared<std::vector<double>>(episode.n, 0.0);
  return view;
}

const double* LossMatrixView::row(std::int64_t t) const {
  if (data_) return data_ + (t - 1) * n_;
  file_->seekg(static_cast<std::streamoff>((t - 1) * n_ * sizeof(double)));
  file_->read(reinterpret_cast<char*>(buffer_->data()),
              static_cast<std::streamsize>(n_ * sizeof(double)));
  if (!file_->good()) throw Error("IoError", "spill file read failed");
  return buffer_->data();
}

HindsightPolicy best_policy(std::span<const RoundRecord> records,
                            const LossMatrixView& losses, int k) {
  // Accumulate per-arm loss sums per distinct availability set.
  std::map<std::vector<ArmIndex>, std::vector<double>> sums;
  for (const auto& record : records) {
    if (record.available.empty()) continue;
    auto& acc = sums[record.available.members()];
    acc.resize(record.available.size(), 0.0);
    const double* row = losses.row(record.t);
    const auto& members = record.available.members();
    for (std::size_t j = 0; j < members.size(); ++j) acc[j] += row[members[j]];
  }

  HindsightPolicy policy;
  policy.k = k;
  for (auto& [members, acc] : sums) {
    std::vector<ArmIndex> chosen;
    if (static_cast<int>(members.size()) <= k) {
      chosen = members;  // select-all fallback, same as the learner
    } else {
      std::vector<int> idx(members.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&acc, &members](int a, int b) {
        if (acc[a] != acc[b]) return acc[a] < acc[b];
        return members[a] < members[b];
      });
      for (int j = 0; j < k; ++j) chosen.push_back(members[idx[j]]);
      std::sort(chosen.begin(), chosen.end());
    }
    policy.table.emplace(members, std::move(chosen));
  }
  return policy;
}

double policy_loss(std::span<const RoundRecord> records,
                   const HindsightPolicy& policy,
                   const LossMatrixView& losses) {
  double total = 0.0;
  for (const auto& record : records) {
    if (record.available.empty()) continue;
    const double* row = losses.row(record.t);
    for (ArmIndex i : policy.action(record.available)) total += row[i];
  }
  return total;
}

double regret(std::span<const RoundRecord> records,
              const HindsightPolicy& policy, const LossMatrixView& losses) {
  double learner = 0.0;
  for (const auto& record : records)
    learner += std::accumulate(record.losses_incurred.begin(),
                               record.losses_incurred.end(), 0.0);
  return learner - policy_loss(records, policy, losses);
}

double regret_against_best(std::span<const RoundRecord> records,
                           const LossMatrixView& losses, int k) {
  return regret(records, best_policy(records, losses, k), losses);
}

}  // namespace sleepx3
