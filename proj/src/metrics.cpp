#include "dpf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dpf {

namespace {

double sq_dist3(const double* a, const double* b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace

KdTree::KdTree(const Matrix& points) : pts_(points) {
    if (pts_.rows < 1 || pts_.cols != 3) throw DataError("KdTree: need n x 3, n >= 1");
    std::vector<int> idx(pts_.rows);
    std::iota(idx.begin(), idx.end(), 0);
    nodes_.reserve(pts_.rows);
    root_ = build(idx, 0, pts_.rows, 0);
}

int KdTree::build(std::vector<int>& idx, int lo, int hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const int mid = (lo + hi) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                     [&](int a, int b) { return pts_.at(a, axis) < pts_.at(b, axis); });
    Node n;
    n.point = idx[mid];
    n.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    nodes_[self].left = build(idx, lo, mid, depth + 1);
    nodes_[self].right = build(idx, mid + 1, hi, depth + 1);
    return self;
}

void KdTree::search(int node, const double* q, double& best) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    best = std::min(best, sq_dist3(q, pts_.row(n.point)));
    const double delta = q[n.axis] - pts_.at(n.point, n.axis);
    const int near = delta < 0 ? n.left : n.right;
    const int far = delta < 0 ? n.right : n.left;
    search(near, q, best);
    if (delta * delta < best) search(far, q, best);
}

double KdTree::nearest_sq(const double* q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
}

double chamfer_ref(const PointCloud& a, const PointCloud& b) {
    if (a.size() < 1 || b.size() < 1) throw DataError("chamfer: empty cloud");
    double sum_a = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < b.size(); ++j)
            best = std::min(best, sq_dist3(a.points.row(i), b.points.row(j)));
        sum_a += best;
    }
    double sum_b = 0.0;
    for (int j = 0; j < b.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < a.size(); ++i)
            best = std::min(best, sq_dist3(b.points.row(j), a.points.row(i)));
        sum_b += best;
    }
    return sum_a / a.size() + sum_b / b.size();
}

double chamfer(const PointCloud& a, const PointCloud& b) {
    if (a.size() < 1 || b.size() < 1) throw DataError("chamfer: empty cloud");
    const KdTree ta(a.points), tb(b.points);
    double sum_a = 0.0, sum_b = 0.0;
#pragma omp parallel for reduction(+ : sum_a) schedule(static)
    for (int i = 0; i < a.size(); ++i) sum_a += tb.nearest_sq(a.points.row(i));
#pragma omp parallel for reduction(+ : sum_b) schedule(static)
    for (int j = 0; j < b.size(); ++j) sum_b += ta.nearest_sq(b.points.row(j));
    return sum_a / a.size() + sum_b / b.size();
}

double solve_assignment(const Matrix& cost, std::vector<int>* assignment) {
    // O(n^3) shortest augmenting path variant of the Hungarian method
    // (1-based internal indexing).
    const int n = cost.rows;
    if (cost.cols != n) throw ParamError("solve_assignment: cost matrix must be square");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    std::vector<int> rowsol(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j]) {
            rowsol[p[j] - 1] = j - 1;
            total += cost.at(p[j] - 1, j - 1);
        }
    if (assignment) *assignment = std::move(rowsol);
    return total;
}

double solve_assignment_auction(const Matrix& cost, double eps_final) {
    const int n = cost.rows;
    if (cost.cols != n) throw ParamError("auction: cost matrix must be square");
    if (eps_final <= 0.0) throw ParamError("auction: eps_final must be positive");
    // Maximize benefit = -cost with Gauss-Seidel forward auction under
    // epsilon-scaling: eps starts at max|cost| / 2 and divides by 5 until
    // eps_final, keeping prices between rounds. Final assignment satisfies
    // eps-complementary slackness, so total cost <= optimal + n * eps_final.
    double cmax = 0.0;
    for (double c : cost.data) cmax = std::max(cmax, std::abs(c));
    std::vector<double> price(n, 0.0);
    std::vector<int> owner(n, -1), assigned(n, -1);

    double eps = std::max(cmax / 2.0, eps_final);
    while (true) {
        std::fill(owner.begin(), owner.end(), -1);
        std::fill(assigned.begin(), assigned.end(), -1);
        std::vector<int> queue(n);
        std::iota(queue.begin(), queue.end(), 0);
        while (!queue.empty()) {
            const int i = queue.back();
            queue.pop_back();
            int best_j = -1;
            double best = -std::numeric_limits<double>::infinity();
            double second = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                const double val = -cost.at(i, j) - price[j];
                if (val > best) {
                    second = best;
                    best = val;
                    best_j = j;
                } else if (val > second) {
                    second = val;
                }
            }
            const double bid = n == 1 ? eps : best - second + eps;
            price[best_j] += bid;
            if (owner[best_j] >= 0) {
                assigned[owner[best_j]] = -1;
                queue.push_back(owner[best_j]);
            }
            owner[best_j] = i;
            assigned[i] = best_j;
        }
        if (eps <= eps_final) break;
        eps = std::max(eps / 5.0, eps_final);
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost.at(i, assigned[i]);
    return total;
}

namespace {

Matrix euclidean_cost(const PointCloud& a, const PointCloud& b) {
    Matrix c(a.size(), b.size());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j)
            c.at(i, j) = std::sqrt(sq_dist3(a.points.row(i), b.points.row(j)));
    return c;
}

}  // namespace

double emd(const PointCloud& a, const PointCloud& b, EmdMode mode, double eps_final) {
    if (a.size() != b.size())
        throw ParamError("emd: cloud sizes differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    if (a.size() < 1) throw DataError("emd: empty cloud");
    const Matrix cost = euclidean_cost(a, b);
    const double total = mode == EmdMode::Exact
                             ? solve_assignment(cost)
                             : solve_assignment_auction(cost, eps_final);
    return total / a.size();
}

double jsd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
           const VoxelGrid& grid, int* oob_count) {
    if (grid.resolution < 2) throw ParamError("jsd: grid resolution must be >= 2");
    if (gen.empty() || ref.empty()) throw DataError("jsd: empty cloud set");
    const int r = grid.resolution;
    const double cell = (grid.hi - grid.lo) / r;
    int oob = 0;
    auto histogram = [&](const std::vector<PointCloud>& set) {
        std::vector<double> h(static_cast<size_t>(r) * r * r, 0.0);
        double total = 0.0;
        for (const auto& pc : set)
            for (int i = 0; i < pc.size(); ++i) {
                const double* p = pc.points.row(i);
                int c[3];
                bool clamped = false;
                for (int k = 0; k < 3; ++k) {
                    int ck = static_cast<int>((p[k] - grid.lo) / cell);
                    if (ck < 0 || ck >= r || p[k] < grid.lo || p[k] > grid.hi) {
                        clamped = true;
                        ck = std::clamp(ck, 0, r - 1);
                    }
                    c[k] = ck;
                }
                if (clamped) ++oob;
                h[(static_cast<size_t>(c[0]) * r + c[1]) * r + c[2]] += 1.0;
                total += 1.0;
            }
        if (total > 0)
            for (double& x : h) x /= total;
        return h;
    };
    const auto p = histogram(gen);
    const auto q = histogram(ref);
    int n_gen = 0, n_ref = 0;
    for (const auto& pc : gen) n_gen += pc.size();
    for (const auto& pc : ref) n_ref += pc.size();
    if (oob == n_gen + n_ref)
        throw DataError("jsd: all points outside the voxel grid bounds");
    if (oob_count) *oob_count = oob;

    double d = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0) d += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0) d += 0.5 * q[i] * std::log(q[i] / m);
    }
    return d;
}

Matrix pairwise_cloud_dist(const std::vector<PointCloud>& a,
                           const std::vector<PointCloud>& b, CloudDist dist,
                           EmdMode emd_mode) {
    Matrix d(static_cast<int>(a.size()), static_cast<int>(b.size()));
    const int total = d.rows * d.cols;
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < total; ++t) {
        const int i = t / d.cols, j = t % d.cols;
        d.at(i, j) = dist == CloudDist::Cd ? chamfer(a[i], b[j])
                                           : emd(a[i], b[j], emd_mode);
    }
    return d;
}

std::pair<double, double> mmd_cov(const std::vector<PointCloud>& gen,
                                  const std::vector<PointCloud>& ref, CloudDist dist,
                                  EmdMode emd_mode) {
    if (gen.empty() || ref.empty()) throw DataError("mmd_cov: empty cloud set");
    const Matrix d = pairwise_cloud_dist(gen, ref, dist, emd_mode);
    double mmd = 0.0;
    for (int j = 0; j < d.cols; ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < d.rows; ++i) best = std::min(best, d.at(i, j));
        mmd += best;
    }
    mmd /= d.cols;
    std::vector<char> matched(d.cols, 0);
    for (int i = 0; i < d.rows; ++i) {
        int arg = 0;
        for (int j = 1; j < d.cols; ++j)
            if (d.at(i, j) < d.at(i, arg)) arg = j;
        matched[arg] = 1;
    }
    int covered = 0;
    for (char m : matched) covered += m;
    return {mmd, static_cast<double>(covered) / d.cols};
}

double one_nna(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
               CloudDist dist, EmdMode emd_mode) {
    if (gen.size() != ref.size())
        throw ParamError("one_nna: set sizes differ (" + std::to_string(gen.size()) +
                         " vs " + std::to_string(ref.size()) + ")");
    if (gen.empty()) throw DataError("one_nna: empty cloud set");
    std::vector<const PointCloud*> pool;
    for (const auto& c : gen) pool.push_back(&c);
    for (const auto& c : ref) pool.push_back(&c);
    const int n = static_cast<int>(pool.size());
    Matrix d(n, n);
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < n * n; ++t) {
        const int i = t / n, j = t % n;
        if (i < j)
            d.at(i, j) = dist == CloudDist::Cd ? chamfer(*pool[i], *pool[j])
                                               : emd(*pool[i], *pool[j], emd_mode);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) d.at(i, j) = d.at(j, i);
    const int g = static_cast<int>(gen.size());
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        int arg = -1;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (arg < 0 || d.at(i, j) < d.at(i, arg)) arg = j;  // ties: lower index
        }
        const bool same_set = (i < g) == (arg < g);
        if (same_set) ++correct;
    }
    return static_cast<double>(correct) / n;
}

double f1_score(const PointCloud& a, const PointCloud& b, double tau) {
    if (tau <= 0.0) throw ParamError("f1: tau must be positive");
    if (a.size() < 1 || b.size() < 1) throw DataError("f1: empty cloud");
    const KdTree ta(a.points), tb(b.points);
    int hits_a = 0, hits_b = 0;
#pragma omp parallel for reduction(+ : hits_a) schedule(static)
    for (int i = 0; i < a.size(); ++i)
        if (tb.nearest_sq(a.points.row(i)) <= tau) ++hits_a;
#pragma omp parallel for reduction(+ : hits_b) schedule(static)
    for (int j = 0; j < b.size(); ++j)
        if (ta.nearest_sq(b.points.row(j)) <= tau) ++hits_b;
    const double precision = static_cast<double>(hits_a) / a.size();
    const double recall = static_cast<double>(hits_b) / b.size();
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace dpf
