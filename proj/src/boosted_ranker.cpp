#include "boosted_ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>

#include "common.hpp"
#include "lambdarank.hpp"
#include "status.hpp"

namespace crossrank {

double RegressionTree::predict_row(const float* row) const {
  int32_t node = 0;
  while (nodes[node].feature >= 0) {
    const float v = row[nodes[node].feature];
    const bool go_left =
        std::isnan(v) ? nodes[node].missing_left : v <= nodes[node].threshold;
    node = go_left ? nodes[node].left : nodes[node].right;
  }
  return nodes[node].value;
}

int64_t RegressionTree::leaf_count() const {
  int64_t n = 0;
  for (const auto& node : nodes)
    if (node.feature < 0) n++;
  return n;
}

void RankerHyperParams::validate() const {
  if (n_trees < 0) fail(Status::InvalidArgument, "n_trees must be >= 0");
  if (max_leaves < 2) fail(Status::InvalidArgument, "max_leaves must be >= 2");
  if (max_depth < 0) fail(Status::InvalidArgument, "max_depth must be >= 0");
  if (min_samples_leaf < 1)
    fail(Status::InvalidArgument, "min_samples_leaf must be >= 1");
  if (!(learning_rate > 0))
    fail(Status::InvalidArgument, "learning_rate must be > 0");
  if (!(feature_subsample > 0 && feature_subsample <= 1) ||
      !(row_subsample > 0 && row_subsample <= 1))
    fail(Status::InvalidArgument, "subsample rates must be in (0, 1]");
  if (l2_leaf_reg < 0) fail(Status::InvalidArgument, "l2_leaf_reg must be >= 0");
  if (!(sigmoid_scale > 0))
    fail(Status::InvalidArgument, "sigmoid_scale must be > 0");
  if (early_stopping_patience < 1)
    fail(Status::InvalidArgument, "patience must be >= 1");
  if (ndcg_k < 1) fail(Status::InvalidArgument, "ndcg_k must be >= 1");
}

double mean_group_ndcg(const RankingDataset& data,
                       std::span<const double> scores, int k) {
  if (static_cast<int64_t>(scores.size()) != data.n_rows())
    fail(Status::InvalidArgument, "mean_group_ndcg: score count mismatch");
  if (data.n_groups() == 0) return 0.0;
  std::vector<int64_t> order;
  double total = 0;
  for (int64_t g = 0; g < data.n_groups(); ++g) {
    const int64_t begin = data.group_offsets[g];
    const int64_t n = data.group_offsets[g + 1] - begin;
    order.resize(n);
    std::iota(order.begin(), order.end(), begin);
    std::stable_sort(order.begin(), order.end(),
                     [&](int64_t a, int64_t b) { return scores[a] > scores[b]; });
    double dcg = 0;
    int64_t positives = 0;
    for (int64_t pos = 0; pos < n; ++pos) {
      if (data.labels[order[pos]] && pos < k)
        dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
      if (data.labels[order[pos]]) positives++;
    }
    double idcg = 0;
    for (int64_t pos = 0; pos < std::min<int64_t>(positives, k); ++pos)
      idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    total += idcg > 0 ? dcg / idcg : 0.0;
  }
  return total / static_cast<double>(data.n_groups());
}

namespace {

struct NodeStats {
  double g = 0;
  double h = 0;
  int64_t count = 0;
};

struct SplitInfo {
  double gain = 0;
  int32_t feature = -1;
  float threshold = 0;
  bool missing_left = true;
  NodeStats left, right;

  bool valid() const { return feature >= 0; }
};

double leaf_score(double g, double h, double lambda) {
  return g * g / (h + lambda + 1e-12);
}

// Exact greedy split finder over per-node attribute lists (pre-sorted per
// feature, partitioned in place on every split).
class TreeBuilder {
 public:
  TreeBuilder(const RankingDataset& data, const RankerHyperParams& hp,
              std::span<const double> grad, std::span<const double> hess,
              const std::vector<std::vector<int32_t>>& presorted,
              std::span<const char> in_bag, std::span<const char> feature_mask)
      : data_(data),
        hp_(hp),
        grad_(grad),
        hess_(hess),
        feature_mask_(feature_mask) {
    const int32_t nf = data_.n_features;
    flists_.resize(nf);
    for (int32_t f = 0; f < nf; ++f) {
      flists_[f].reserve(presorted[f].size());
      for (int32_t r : presorted[f])
        if (in_bag.empty() || in_bag[r]) flists_[f].push_back(r);
    }
    for (int64_t r = 0; r < data_.n_rows(); ++r)
      if (in_bag.empty() || in_bag[r]) mlist_.push_back(static_cast<int32_t>(r));
  }

  RegressionTree build() {
    RegressionTree tree;
    const int32_t nf = data_.n_features;

    NodeStats root;
    for (int32_t r : mlist_) {
      root.g += grad_[r];
      root.h += hess_[r];
      root.count++;
    }
    tree.nodes.push_back({});
    node_stats_.push_back(root);
    node_depth_.push_back(0);
    fseg_.assign(nf, {});
    for (int32_t f = 0; f < nf; ++f)
      fseg_[f] = {{0, static_cast<int64_t>(flists_[f].size())}};
    mseg_.push_back({0, static_cast<int64_t>(mlist_.size())});

    // best-first growth: heap of (gain, node id)
    using HeapItem = std::pair<double, int32_t>;
    auto cmp = [](const HeapItem& a, const HeapItem& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second > b.second;
    };
    std::priority_queue<HeapItem, std::vector<HeapItem>, decltype(cmp)> heap(cmp);

    pending_.push_back(find_best_split(0));
    if (pending_[0].valid()) heap.push({pending_[0].gain, 0});

    int64_t leaves = 1;
    while (leaves < hp_.max_leaves && !heap.empty()) {
      const auto [gain, node] = heap.top();
      heap.pop();
      const SplitInfo split = pending_[node];
      if (!split.valid()) continue;
      apply_split(tree, node, split);
      leaves++;
      for (int32_t child : {tree.nodes[node].left, tree.nodes[node].right}) {
        const SplitInfo cs = find_best_split(child);
        pending_[child] = cs;
        if (cs.valid()) heap.push({cs.gain, child});
      }
    }

    for (size_t n = 0; n < tree.nodes.size(); ++n) {
      if (tree.nodes[n].feature < 0) {
        tree.nodes[n].value = -node_stats_[n].g /
                              (node_stats_[n].h + hp_.l2_leaf_reg + 1e-12);
      }
    }
    return tree;
  }

 private:
  SplitInfo find_best_split(int32_t node) {
    SplitInfo best;
    best.gain = 1e-12;  // require strictly positive gain
    if (hp_.max_depth > 0 && node_depth_[node] >= hp_.max_depth) return best;
    const NodeStats total = node_stats_[node];
    if (total.count < 2 * hp_.min_samples_leaf) return best;
    const double parent_score = leaf_score(total.g, total.h, hp_.l2_leaf_reg);

    for (int32_t f = 0; f < data_.n_features; ++f) {
      if (!feature_mask_.empty() && !feature_mask_[f]) continue;
      const auto [begin, end] = fseg_[f][node];
      if (end - begin < 2 && total.count - (end - begin) == 0) continue;

      NodeStats finite;
      for (int64_t p = begin; p < end; ++p) {
        const int32_t r = flists_[f][p];
        finite.g += grad_[r];
        finite.h += hess_[r];
        finite.count++;
      }
      const NodeStats missing{total.g - finite.g, total.h - finite.h,
                              total.count - finite.count};

      NodeStats prefix;
      for (int64_t p = begin; p + 1 < end; ++p) {
        const int32_t r = flists_[f][p];
        prefix.g += grad_[r];
        prefix.h += hess_[r];
        prefix.count++;
        const float v = data_.at(r, f);
        const float v_next = data_.at(flists_[f][p + 1], f);
        if (v_next <= v) continue;  // no boundary between equal values

        for (const bool missing_left : {true, false}) {
          if (!missing_left && missing.count == 0) break;
          NodeStats left = prefix;
          NodeStats right{finite.g - prefix.g, finite.h - prefix.h,
                          finite.count - prefix.count};
          (missing_left ? left : right).g += missing.g;
          (missing_left ? left : right).h += missing.h;
          (missing_left ? left : right).count += missing.count;
          if (left.count < hp_.min_samples_leaf ||
              right.count < hp_.min_samples_leaf)
            continue;
          const double gain = leaf_score(left.g, left.h, hp_.l2_leaf_reg) +
                              leaf_score(right.g, right.h, hp_.l2_leaf_reg) -
                              parent_score;
          if (gain > best.gain) {
            best.gain = gain;
            best.feature = f;
            best.threshold = v;  // exact: left is value <= v
            best.missing_left = missing_left;
            best.left = left;
            best.right = right;
          }
        }
      }
    }
    return best;
  }

  void apply_split(RegressionTree& tree, int32_t node, const SplitInfo& split) {
    const int32_t left_id = static_cast<int32_t>(tree.nodes.size());
    const int32_t right_id = left_id + 1;
    tree.nodes[node].feature = split.feature;
    tree.nodes[node].threshold = split.threshold;
    tree.nodes[node].missing_left = split.missing_left;
    tree.nodes[node].left = left_id;
    tree.nodes[node].right = right_id;
    tree.nodes.push_back({});
    tree.nodes.push_back({});
    node_stats_.push_back(split.left);
    node_stats_.push_back(split.right);
    node_depth_.push_back(node_depth_[node] + 1);
    node_depth_.push_back(node_depth_[node] + 1);
    pending_.resize(tree.nodes.size());
    mseg_.resize(tree.nodes.size());
    for (int32_t f = 0; f < data_.n_features; ++f)
      fseg_[f].resize(tree.nodes.size());

    auto goes_left = [&](int32_t r) {
      const float v = data_.at(r, split.feature);
      return std::isnan(v) ? split.missing_left : v <= split.threshold;
    };
    auto partition = [&](std::vector<int32_t>& list, int64_t begin, int64_t end,
                         std::pair<int64_t, int64_t>* lseg,
                         std::pair<int64_t, int64_t>* rseg) {
      scratch_.clear();
      int64_t write = begin;
      for (int64_t p = begin; p < end; ++p) {
        if (goes_left(list[p]))
          list[write++] = list[p];
        else
          scratch_.push_back(list[p]);
      }
      std::copy(scratch_.begin(), scratch_.end(), list.begin() + write);
      *lseg = {begin, write};
      *rseg = {write, end};
    };

    for (int32_t f = 0; f < data_.n_features; ++f) {
      const auto [begin, end] = fseg_[f][node];
      partition(flists_[f], begin, end, &fseg_[f][left_id], &fseg_[f][right_id]);
    }
    const auto [mb, me] = mseg_[node];
    partition(mlist_, mb, me, &mseg_[left_id], &mseg_[right_id]);
  }

  const RankingDataset& data_;
  const RankerHyperParams& hp_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  std::span<const char> feature_mask_;
  std::vector<std::vector<int32_t>> flists_;
  std::vector<int32_t> mlist_;
  std::vector<std::vector<std::pair<int64_t, int64_t>>> fseg_;  // [feature][node]
  std::vector<std::pair<int64_t, int64_t>> mseg_;               // [node]
  std::vector<NodeStats> node_stats_;
  std::vector<int32_t> node_depth_;
  std::vector<SplitInfo> pending_;
  std::vector<int32_t> scratch_;
};

std::vector<std::vector<int32_t>> presort_features(const RankingDataset& data) {
  std::vector<std::vector<int32_t>> presorted(data.n_features);
  for (int32_t f = 0; f < data.n_features; ++f) {
    auto& list = presorted[f];
    for (int64_t r = 0; r < data.n_rows(); ++r)
      if (!std::isnan(data.at(r, f))) list.push_back(static_cast<int32_t>(r));
    std::sort(list.begin(), list.end(), [&](int32_t a, int32_t b) {
      const float va = data.at(a, f), vb = data.at(b, f);
      if (va != vb) return va < vb;
      return a < b;
    });
  }
  return presorted;
}

}  // namespace

BoostedRanker fit_ranker(const RankingDataset& train,
                         const RankingDataset& valid,
                         const RankerHyperParams& hp, uint64_t seed) {
  hp.validate();
  if (valid.n_rows() > 0 && valid.n_features != train.n_features)
    fail(Status::InvalidArgument, "fit_ranker: feature width mismatch");
  if (valid.n_rows() == 0 && hp.n_trees > 0)
    fail(Status::InvalidArgument, "fit_ranker: empty validation set");

  BoostedRanker ranker;
  ranker.learning_rate = hp.learning_rate;
  ranker.n_features = train.n_features;

  std::vector<double> train_scores(train.n_rows(), 0.0);
  std::vector<double> valid_scores(valid.n_rows(), 0.0);
  ranker.valid_ndcg_trace.push_back(mean_group_ndcg(valid, valid_scores, hp.ndcg_k));

  const auto presorted = presort_features(train);

  int64_t best_iter = 0;
  double best_ndcg = ranker.valid_ndcg_trace[0];

  std::vector<char> in_bag;
  std::vector<char> feature_mask;
  for (int64_t t = 0; t < hp.n_trees; ++t) {
    const auto stats =
        lambda_gradients(train_scores, train, hp.ndcg_k, hp.sigmoid_scale);

    std::mt19937_64 rng(mix_seed(seed, static_cast<uint64_t>(t)));
    in_bag.clear();
    if (hp.row_subsample < 1.0) {
      in_bag.assign(train.n_rows(), 0);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (int64_t g = 0; g < train.n_groups(); ++g) {
        if (unit(rng) <= hp.row_subsample) {
          for (int64_t r = train.group_offsets[g]; r < train.group_offsets[g + 1];
               ++r)
            in_bag[r] = 1;
        }
      }
    }
    feature_mask.clear();
    if (hp.feature_subsample < 1.0) {
      feature_mask.assign(train.n_features, 0);
      const auto want = std::max<int64_t>(
          1, static_cast<int64_t>(
                 std::ceil(hp.feature_subsample * train.n_features)));
      std::vector<int32_t> order(train.n_features);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int64_t i = 0; i < want; ++i) feature_mask[order[i]] = 1;
    }

    TreeBuilder builder(train, hp, stats.grad, stats.hess, presorted, in_bag,
                        feature_mask);
    ranker.trees.push_back(builder.build());
    const auto& tree = ranker.trees.back();

    for (int64_t r = 0; r < train.n_rows(); ++r)
      train_scores[r] += hp.learning_rate * tree.predict_row(train.row(r));
    for (int64_t r = 0; r < valid.n_rows(); ++r)
      valid_scores[r] += hp.learning_rate * tree.predict_row(valid.row(r));

    const double ndcg = mean_group_ndcg(valid, valid_scores, hp.ndcg_k);
    ranker.valid_ndcg_trace.push_back(ndcg);
    if (ndcg > best_ndcg) {
      best_ndcg = ndcg;
      best_iter = t + 1;
    }
    if ((t + 1) - best_iter >= hp.early_stopping_patience) break;
  }
  ranker.best_iteration = best_iter;
  return ranker;
}

std::vector<double> predict(const BoostedRanker& ranker,
                            const RankingDataset& data) {
  if (data.n_features != ranker.n_features)
    fail(Status::InvalidArgument,
         "predict: feature width mismatch (" + std::to_string(data.n_features) +
             " vs " + std::to_string(ranker.n_features) + ")");
  std::vector<double> scores(data.n_rows(), 0.0);
  for (int64_t t = 0; t < ranker.best_iteration; ++t) {
    const auto& tree = ranker.trees[t];
    for (int64_t r = 0; r < data.n_rows(); ++r)
      scores[r] += ranker.learning_rate * tree.predict_row(data.row(r));
  }
  return scores;
}

std::string BoostedRanker::to_text() const {
  std::string out = "crossrank-ranker v1\n";
  out += "n_features " + std::to_string(n_features) + "\n";
  out += "learning_rate " + format_double(learning_rate) + "\n";
  out += "best_iteration " + std::to_string(best_iteration) + "\n";
  out += "n_trees " + std::to_string(trees.size()) + "\n";
  for (size_t t = 0; t < trees.size(); ++t) {
    out += "tree " + std::to_string(t) + " " +
           std::to_string(trees[t].nodes.size()) + "\n";
    for (size_t n = 0; n < trees[t].nodes.size(); ++n) {
      const auto& node = trees[t].nodes[n];
      out += "node " + std::to_string(n) + " " + std::to_string(node.feature) +
             " " + format_double(node.threshold) + " " +
             std::to_string(node.missing_left ? 1 : 0) + " " +
             std::to_string(node.left) + " " + std::to_string(node.right) +
             " " + format_double(node.value) + "\n";
    }
  }
  return out;
}

BoostedRanker BoostedRanker::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string token;
  auto expect = [&](const std::string& want) {
    in >> token;
    if (token != want)
      fail(Status::Parse, "ranker parse: expected '" + want + "', got '" + token + "'");
  };
  expect("crossrank-ranker");
  expect("v1");
  BoostedRanker ranker;
  expect("n_features");
  in >> ranker.n_features;
  expect("learning_rate");
  in >> ranker.learning_rate;
  expect("best_iteration");
  in >> ranker.best_iteration;
  expect("n_trees");
  size_t n_trees;
  in >> n_trees;
  ranker.trees.resize(n_trees);
  for (size_t t = 0; t < n_trees; ++t) {
    expect("tree");
    size_t idx, n_nodes;
    in >> idx >> n_nodes;
    ranker.trees[t].nodes.resize(n_nodes);
    for (size_t n = 0; n < n_nodes; ++n) {
      expect("node");
      size_t id;
      int missing_left;
      auto& node = ranker.trees[t].nodes[n];
      in >> id >> node.feature >> node.threshold >> missing_left >>
          node.left >> node.right >> node.value;
      node.missing_left = missing_left != 0;
    }
  }
  if (!in) fail(Status::Parse, "ranker parse: truncated input");
  return ranker;
}

}  // namespace crossrank
