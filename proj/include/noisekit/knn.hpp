#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "noisekit/feature_table.hpp"

namespace noisekit {

enum class Weighting { inverse_distance, uniform };
enum class KnnAlgorithm { kd_tree, brute_force };

struct KnnConfig {
  int k = 5;
  int minkowski_p = 1;  // 1 = Manhattan
  int leaf_size = 30;
  Weighting weighting = Weighting::inverse_distance;
  KnnAlgorithm algorithm = KnnAlgorithm::kd_tree;
};

struct Neighbor {
  std::int64_t row_id = 0;
  double distance = 0.0;
};

/// Immutable nearest-neighbor index over training rows projected onto a
/// feature mask (every feature except the target one). Queries are answered
/// under the configured Minkowski metric with ties broken by lower row id,
/// and leave the index bit-identical, so one index may serve many threads.
///
/// Points are stored column-wise (dims x points) so each point is a
/// contiguous span; several indices may share one storage block, each
/// masking out its own target dimension.
class NeighborIndex {
 public:
  /// `storage` holds one point per column (all feature dims, target row
  /// included); the index covers its first `n_points` columns.
  static NeighborIndex over_points(std::shared_ptr<const Eigen::MatrixXd> storage,
                                   std::vector<std::string> dim_names, Eigen::Index target_dim,
                                   std::vector<std::int64_t> row_ids, Eigen::Index n_points,
                                   const KnnConfig& config);

  Eigen::Index size() const { return n_points_; }
  Eigen::Index query_dims() const { return storage_->rows() - 1; }
  const std::string& target_feature() const { return dim_names_[static_cast<std::size_t>(target_dim_)]; }
  /// Feature names of the query coordinates, in query order (target removed).
  std::vector<std::string> input_features() const;
  const KnnConfig& config() const { return config_; }

  /// k nearest training rows to `query` (masked coordinates, input_features
  /// order), ascending by (distance, row_id).
  std::vector<Neighbor> query(const Eigen::Ref<const Eigen::VectorXd>& query, int k) const;

  /// Distance-weighted imputation of the target feature for one masked query.
  double impute_one(const Eigen::Ref<const Eigen::VectorXd>& query) const;

 private:
  struct Node {
    Eigen::Index begin = 0, end = 0;
    int left = -1, right = -1;
    int axis = -1;
    double split = 0.0;
    Eigen::VectorXd box_lo, box_hi;
  };
  struct Candidate {
    double accum = 0.0;  // accumulated |delta|^p, monotone in distance
    std::int64_t row_id = 0;
    Eigen::Index point = 0;
    bool operator<(const Candidate& other) const {
      return accum != other.accum ? accum < other.accum : row_id < other.row_id;
    }
  };

  NeighborIndex() = default;
  void build_tree();
  int build_node(Eigen::Index begin, Eigen::Index end);
  void offer(std::vector<Candidate>& heap, int k, const Candidate& cand) const;
  void scan_range(Eigen::Index begin, Eigen::Index end, const double* q, int k,
                  std::vector<Candidate>& heap) const;
  void query_node(int node, const double* q, int k, std::vector<Candidate>& heap) const;
  std::vector<Candidate> query_candidates(const Eigen::Ref<const Eigen::VectorXd>& query, int k) const;

  std::shared_ptr<const Eigen::MatrixXd> storage_;
  std::vector<std::string> dim_names_;
  Eigen::Index target_dim_ = 0;
  Eigen::Index n_points_ = 0;
  std::vector<std::int64_t> row_ids_;
  KnnConfig config_;
  std::vector<Eigen::Index> order_;  // point permutation laid out by the tree
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Builds an index over `train`'s feature columns with `target_feature`
/// masked out and stored as the imputation target.
NeighborIndex build_index(const FeatureTable& train, const std::string& target_feature,
                          const KnnConfig& config);

std::vector<Neighbor> query_neighbors(const NeighborIndex& index,
                                      const Eigen::Ref<const Eigen::VectorXd>& query, int k);

/// Distance-weighted kNN imputation of the index's target feature, one value
/// per query row. Weights are 1/distance; when any of the k neighbors sits
/// at distance exactly 0, the unweighted mean of all zero-distance
/// neighbors' targets is returned instead.
Eigen::VectorXd impute_feature(const NeighborIndex& index,
                               const Eigen::Ref<const Eigen::MatrixXd>& queries);

/// Reference semantics for query_neighbors: exhaustive scan over the train
/// table with the same metric and (distance, row_id) ordering. Kept free of
/// the index machinery so it can serve as an oracle for it.
std::vector<Neighbor> brute_force_neighbors(const FeatureTable& train, const std::string& target_feature,
                                            const Eigen::Ref<const Eigen::VectorXd>& query, int k,
                                            const KnnConfig& config);

}  // namespace noisekit
