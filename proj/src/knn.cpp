#include "noisekit/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "noisekit/errors.hpp"

namespace noisekit {

namespace {

// Both the kd-tree and the brute-force oracle accumulate |delta|^p over
// dims in ascending order with scalar adds, so their distances agree
// bitwise and tie-breaks are comparable across the two routes.
inline double pow_p(double abs_delta, int p) {
  if (p == 1) return abs_delta;
  if (p == 2) return abs_delta * abs_delta;
  return std::pow(abs_delta, p);
}

inline double root_p(double accum, int p) {
  if (p == 1) return accum;
  if (p == 2) return std::sqrt(accum);
  return std::pow(accum, 1.0 / static_cast<double>(p));
}

inline double accum_masked(const double* pt, const double* q, Eigen::Index n_dims, Eigen::Index skip,
                           int p) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n_dims; ++j) {
    if (j == skip) continue;
    acc += pow_p(std::abs(pt[j] - q[j]), p);
  }
  return acc;
}

void validate_knn_config(const KnnConfig& config) {
  if (config.k < 1) throw ConfigError("knn k must be >= 1");
  if (config.minkowski_p < 1) throw ConfigError("knn minkowski_p must be >= 1");
  if (config.leaf_size < 1) throw ConfigError("knn leaf_size must be >= 1");
}

}  // namespace

NeighborIndex NeighborIndex::over_points(std::shared_ptr<const Eigen::MatrixXd> storage,
                                         std::vector<std::string> dim_names, Eigen::Index target_dim,
                                         std::vector<std::int64_t> row_ids, Eigen::Index n_points,
                                         const KnnConfig& config) {
  validate_knn_config(config);
  if (!storage || storage->rows() < 2) throw DataError("index needs at least 2 feature dims");
  if (n_points < 1 || n_points > storage->cols()) throw DataError("bad point count for index");
  if (static_cast<Eigen::Index>(dim_names.size()) != storage->rows())
    throw DataError("dim name count does not match storage");
  if (target_dim < 0 || target_dim >= storage->rows()) throw DataError("target dim out of range");
  if (static_cast<Eigen::Index>(row_ids.size()) != n_points) throw DataError("row id count mismatch");
  if (config.k > n_points)
    throw DataError("k=" + std::to_string(config.k) + " exceeds training size " + std::to_string(n_points));

  NeighborIndex index;
  index.storage_ = std::move(storage);
  index.dim_names_ = std::move(dim_names);
  index.target_dim_ = target_dim;
  index.n_points_ = n_points;
  index.row_ids_ = std::move(row_ids);
  index.config_ = config;
  index.order_.resize(static_cast<std::size_t>(n_points));
  for (Eigen::Index i = 0; i < n_points; ++i) index.order_[static_cast<std::size_t>(i)] = i;
  if (config.algorithm == KnnAlgorithm::kd_tree) index.build_tree();
  return index;
}

std::vector<std::string> NeighborIndex::input_features() const {
  std::vector<std::string> out;
  out.reserve(dim_names_.size() - 1);
  for (std::size_t j = 0; j < dim_names_.size(); ++j)
    if (static_cast<Eigen::Index>(j) != target_dim_) out.push_back(dim_names_[j]);
  return out;
}

void NeighborIndex::build_tree() {
  nodes_.clear();
  nodes_.reserve(static_cast<std::size_t>(2 * n_points_ / std::max(1, config_.leaf_size) + 2));
  root_ = build_node(0, n_points_);
}

int NeighborIndex::build_node(Eigen::Index begin, Eigen::Index end) {
  const Eigen::MatrixXd& pts = *storage_;
  const Eigen::Index n_dims = pts.rows();

  Node node;
  node.begin = begin;
  node.end = end;
  node.box_lo = Eigen::VectorXd::Constant(n_dims, std::numeric_limits<double>::infinity());
  node.box_hi = Eigen::VectorXd::Constant(n_dims, -std::numeric_limits<double>::infinity());
  for (Eigen::Index i = begin; i < end; ++i) {
    const auto col = pts.col(order_[static_cast<std::size_t>(i)]);
    node.box_lo = node.box_lo.cwiseMin(col);
    node.box_hi = node.box_hi.cwiseMax(col);
  }

  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  if (end - begin <= config_.leaf_size) return id;

  // Split the widest masked dimension at its median point.
  int axis = -1;
  double best_spread = -1.0;
  for (Eigen::Index j = 0; j < n_dims; ++j) {
    if (j == target_dim_) continue;
    const double spread =
        nodes_[static_cast<std::size_t>(id)].box_hi(j) - nodes_[static_cast<std::size_t>(id)].box_lo(j);
    if (spread > best_spread) {
      best_spread = spread;
      axis = static_cast<int>(j);
    }
  }

  const Eigen::Index mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Eigen::Index a, Eigen::Index b) { return pts(axis, a) < pts(axis, b); });
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = pts(axis, order_[static_cast<std::size_t>(mid)]);

  const int left = build_node(begin, mid);
  const int right = build_node(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void NeighborIndex::offer(std::vector<Candidate>& heap, int k, const Candidate& cand) const {
  if (static_cast<int>(heap.size()) < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end());
  } else if (cand < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end());
  }
}

void NeighborIndex::scan_range(Eigen::Index begin, Eigen::Index end, const double* q, int k,
                               std::vector<Candidate>& heap) const {
  const Eigen::MatrixXd& pts = *storage_;
  for (Eigen::Index i = begin; i < end; ++i) {
    const Eigen::Index point = order_[static_cast<std::size_t>(i)];
    const double accum =
        accum_masked(pts.col(point).data(), q, pts.rows(), target_dim_, config_.minkowski_p);
    offer(heap, k, {accum, row_ids_[static_cast<std::size_t>(point)], point});
  }
}

void NeighborIndex::query_node(int node_id, const double* q, int k, std::vector<Candidate>& heap) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (static_cast<int>(heap.size()) == k) {
    // Minimum reachable accumulated distance inside this node's box. A tied
    // bound must still be visited: a point at exactly the worst distance can
    // win its tie-break on a lower row id.
    double bound = 0.0;
    for (Eigen::Index j = 0; j < storage_->rows(); ++j) {
      if (j == target_dim_) continue;
      const double gap = std::max(0.0, std::max(node.box_lo(j) - q[j], q[j] - node.box_hi(j)));
      bound += pow_p(gap, config_.minkowski_p);
      if (bound > heap.front().accum) return;
    }
  }

  if (node.left < 0) {
    scan_range(node.begin, node.end, q, k, heap);
    return;
  }
  const bool left_first = q[node.axis] <= node.split;
  query_node(left_first ? node.left : node.right, q, k, heap);
  query_node(left_first ? node.right : node.left, q, k, heap);
}

std::vector<NeighborIndex::Candidate> NeighborIndex::query_candidates(
    const Eigen::Ref<const Eigen::VectorXd>& query, int k) const {
  if (query.size() != query_dims())
    throw DataError("query has " + std::to_string(query.size()) + " dims, index expects " +
                    std::to_string(query_dims()));
  if (k < 1) throw ConfigError("query k must be >= 1");
  if (k > n_points_)
    throw DataError("k=" + std::to_string(k) + " exceeds index size " + std::to_string(n_points_));

  // Expand the masked query to full dim order; the target slot is skipped
  // by every distance evaluation.
  Eigen::VectorXd expanded(storage_->rows());
  Eigen::Index at = 0;
  for (Eigen::Index j = 0; j < storage_->rows(); ++j)
    expanded(j) = (j == target_dim_) ? 0.0 : query(at++);

  std::vector<Candidate> heap;
  heap.reserve(static_cast<std::size_t>(k));
  if (config_.algorithm == KnnAlgorithm::kd_tree)
    query_node(root_, expanded.data(), k, heap);
  else
    scan_range(0, n_points_, expanded.data(), k, heap);
  std::sort(heap.begin(), heap.end());
  return heap;
}

std::vector<Neighbor> NeighborIndex::query(const Eigen::Ref<const Eigen::VectorXd>& query, int k) const {
  const auto candidates = query_candidates(query, k);
  std::vector<Neighbor> out;
  out.reserve(candidates.size());
  for (const auto& cand : candidates) out.push_back({cand.row_id, root_p(cand.accum, config_.minkowski_p)});
  return out;
}

double NeighborIndex::impute_one(const Eigen::Ref<const Eigen::VectorXd>& query) const {
  const auto candidates = query_candidates(query, config_.k);
  const auto target_of = [&](const Candidate& cand) { return (*storage_)(target_dim_, cand.point); };

  if (candidates.front().accum == 0.0) {
    // Exact matches short-circuit the singular 1/d weights: average all
    // zero-distance neighbors' targets.
    double sum = 0.0;
    Eigen::Index count = 0;
    for (const auto& cand : candidates) {
      if (cand.accum != 0.0) break;
      sum += target_of(cand);
      ++count;
    }
    return sum / static_cast<double>(count);
  }
  if (config_.weighting == Weighting::uniform) {
    double sum = 0.0;
    for (const auto& cand : candidates) sum += target_of(cand);
    return sum / static_cast<double>(candidates.size());
  }
  double weighted = 0.0, total = 0.0;
  for (const auto& cand : candidates) {
    const double w = 1.0 / root_p(cand.accum, config_.minkowski_p);
    weighted += w * target_of(cand);
    total += w;
  }
  return weighted / total;
}

NeighborIndex build_index(const FeatureTable& train, const std::string& target_feature,
                          const KnnConfig& config) {
  const auto feature_idx = train.feature_indices();
  const auto feature_names = train.feature_names();
  if (std::find(feature_names.begin(), feature_names.end(), target_feature) == feature_names.end())
    throw DataError("target feature '" + target_feature + "' not among the table's features");

  auto storage =
      std::make_shared<Eigen::MatrixXd>(static_cast<Eigen::Index>(feature_idx.size()), train.rows());
  Eigen::Index target_dim = -1;
  for (std::size_t j = 0; j < feature_idx.size(); ++j) {
    storage->row(static_cast<Eigen::Index>(j)) = train.values().col(feature_idx[j]).transpose();
    if (feature_names[j] == target_feature) target_dim = static_cast<Eigen::Index>(j);
  }
  return NeighborIndex::over_points(std::move(storage), feature_names, target_dim, train.row_ids(),
                                    train.rows(), config);
}

std::vector<Neighbor> query_neighbors(const NeighborIndex& index,
                                      const Eigen::Ref<const Eigen::VectorXd>& query, int k) {
  return index.query(query, k);
}

Eigen::VectorXd impute_feature(const NeighborIndex& index,
                               const Eigen::Ref<const Eigen::MatrixXd>& queries) {
  if (queries.cols() != index.query_dims())
    throw DataError("query matrix has " + std::to_string(queries.cols()) + " dims, index expects " +
                    std::to_string(index.query_dims()));
  Eigen::VectorXd out(queries.rows());
  for (Eigen::Index r = 0; r < queries.rows(); ++r) out(r) = index.impute_one(queries.row(r).transpose());
  return out;
}

std::vector<Neighbor> brute_force_neighbors(const FeatureTable& train, const std::string& target_feature,
                                            const Eigen::Ref<const Eigen::VectorXd>& query, int k,
                                            const KnnConfig& config) {
  validate_knn_config(config);
  const auto feature_idx = train.feature_indices();
  const Eigen::Index target_col = train.column_index(target_feature);
  Eigen::Index masked_dims = 0;
  for (Eigen::Index col : feature_idx)
    if (col != target_col) ++masked_dims;
  if (masked_dims != query.size())
    throw DataError("query has " + std::to_string(query.size()) + " dims, expected " +
                    std::to_string(masked_dims));
  if (k < 1) throw ConfigError("query k must be >= 1");
  if (k > train.rows()) throw DataError("k exceeds training size");

  // Max-heap of (accum, row_id) pairs; lexicographic pair order gives the
  // same tie-break rule as the index.
  std::vector<std::pair<double, std::int64_t>> heap;
  heap.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    double accum = 0.0;
    Eigen::Index at = 0;
    for (Eigen::Index col : feature_idx) {
      if (col == target_col) continue;
      accum += pow_p(std::abs(train.values()(i, col) - query(at++)), config.minkowski_p);
    }
    const std::pair<double, std::int64_t> cand{accum, train.row_ids()[static_cast<std::size_t>(i)]};
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end());
    } else if (cand < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end());
    }
  }
  std::sort(heap.begin(), heap.end());
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  for (const auto& [accum, id] : heap) out.push_back({id, root_p(accum, config.minkowski_p)});
  return out;
}

}  // namespace noisekit
