#include "data/split.hpp"

namespace inttravel::data {

DatasetSplit temporal_split(const Dataset& dataset) {
  DatasetSplit split;
  split.users.resize(dataset.users().size());
  for (std::size_t u = 0; u < dataset.users().size(); ++u) {
    const auto& h = dataset.user_history(u);
    UserSplit& s = split.users[u];
    if (h.size() < 3) {
      s.train = h;
      continue;
    }
    s.train.assign(h.begin(), h.end() - 2);
    s.validation = h[h.size() - 2];
    s.test = h.back();
  }
  return split;
}

}  // namespace inttravel::data
