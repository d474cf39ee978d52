// Reconstruction and generative-set metrics. Production paths use a k-d
// tree plus OpenMP over points/pairs; *_ref functions are the serial
// brute-force reference implementations and must agree exactly.
#pragma once

#include <vector>

#include "dpf/geometry.hpp"

namespace dpf {

struct MetricReport {
    double cd = 0.0;
    double emd = 0.0;
    double jsd = 0.0;
    double mmd_cd = 0.0;
    double mmd_emd = 0.0;
    double cov_cd = 0.0;
    double cov_emd = 0.0;
    double nna_cd = 0.0;
    double nna_emd = 0.0;
    double f1 = 0.0;
};

struct VoxelGrid {
    int resolution = 28;
    double lo = -0.5;  // cube [lo, hi]^3
    double hi = 0.5;
};

// Exact nearest-neighbor index over a 3-D cloud (median-split k-d tree).
class KdTree {
public:
    explicit KdTree(const Matrix& points);
    // squared distance to the nearest stored point
    double nearest_sq(const double* q) const;

private:
    struct Node {
        int point;  // row into pts_
        int axis;
        int left = -1, right = -1;
    };
    int build(std::vector<int>& idx, int lo, int hi, int depth);
    void search(int node, const double* q, double& best) const;

    Matrix pts_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// Squared-distance, sum-of-directed-means Chamfer distance.
double chamfer(const PointCloud& a, const PointCloud& b);
double chamfer_ref(const PointCloud& a, const PointCloud& b);  // serial O(n^2)

enum class EmdMode { Exact, Approx };

// Minimal mean Euclidean matching cost between equal-size clouds.
// Exact: O(n^3) Hungarian. Approx: epsilon-scaling auction; the result is
// guaranteed within eps_final of the exact mean cost (delta = n * eps_final
// / exact sum cost in relative terms).
double emd(const PointCloud& a, const PointCloud& b, EmdMode mode = EmdMode::Exact,
           double eps_final = 1e-7);

// Hungarian assignment on an n x n cost matrix; returns the optimal total
// cost, and the column assigned to each row in `assignment` if non-null.
double solve_assignment(const Matrix& cost, std::vector<int>* assignment = nullptr);
// Epsilon-scaling auction on the same problem, within n * eps_final of
// optimal.
double solve_assignment_auction(const Matrix& cost, double eps_final);

// Jensen-Shannon divergence between voxel-occupancy histograms of the set
// unions (natural log). Out-of-bounds points clamp to boundary cells;
// `oob_count` (if non-null) receives how many were clamped.
double jsd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
           const VoxelGrid& grid, int* oob_count = nullptr);

enum class CloudDist { Cd, Emd };

// (minimum matching distance, coverage)
std::pair<double, double> mmd_cov(const std::vector<PointCloud>& gen,
                                  const std::vector<PointCloud>& ref, CloudDist dist,
                                  EmdMode emd_mode = EmdMode::Exact);

// Leave-one-out 1-NN two-sample accuracy over the pooled sets; ties go to
// the lower pooled index (gen clouds first).
double one_nna(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
               CloudDist dist, EmdMode emd_mode = EmdMode::Exact);

// F1 at squared-distance threshold tau: harmonic mean of the fractions of
// each cloud within sqrt(tau) of the other.
double f1_score(const PointCloud& a, const PointCloud& b, double tau);

// All pairwise cloud distances: out[i][j] = dist(gen[i], ref[j]).
Matrix pairwise_cloud_dist(const std::vector<PointCloud>& a,
                           const std::vector<PointCloud>& b, CloudDist dist,
                           EmdMode emd_mode = EmdMode::Exact);

}  // namespace dpf
