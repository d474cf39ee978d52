// Mesh ingestion, unit-diameter normalization, area-weighted surface
// sampling, and synthetic parametric shape families.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "dpf/matrix.hpp"
#include "dpf/rng.hpp"

namespace dpf {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Vec3 = std::array<double, 3>;

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    bool empty() const { return vertices.empty() || faces.empty(); }
};

// n x 3 matrix of surface samples; rows are exchangeable.
struct PointCloud {
    Matrix points;

    int size() const { return points.rows; }
};

struct NormalizationStats {
    Vec3 centroid{0, 0, 0};
    double scale = 1.0;  // diameter divisor
};

enum class MeshFormat { Off, Obj };

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

// ASCII OFF/OBJ, vertices and faces only; polygons are fan-triangulated.
Mesh load_mesh(const std::string& path, MeshFormat format);
Mesh load_mesh(const std::string& path);  // format from extension
void write_off(const Mesh& mesh, const std::string& path);

// Shift by the area-weighted centroid of triangle centroids, divide by the
// max pairwise vertex distance. Output fits tightly in a unit diameter
// sphere.
std::pair<Mesh, NormalizationStats> normalize_mesh(const Mesh& mesh);
Mesh denormalize_mesh(const Mesh& mesh, const NormalizationStats& stats);

// Triangles chosen by cumulative-area inverse CDF, points uniform per
// triangle via reflected (u, v) barycentric draws.
PointCloud sample_surface(const Mesh& mesh, int n, Rng& rng);

enum class ShapeFamily { Sphere, Torus, Box, Superquadric };

ShapeFamily parse_family(const std::string& name);
std::string family_name(ShapeFamily f);

// Parametric surfaces triangulated on a resolution x resolution grid
// (zero-area polar slivers permitted; they carry no sampling weight).
//   sphere:       params = {radius}
//   torus:        params = {major_radius, minor_radius}, minor < major
//   box:          params = {sx, sy, sz} (side lengths)
//   superquadric: params = {ax, ay, az, eps1, eps2}
Mesh synth_shape(ShapeFamily family, const std::vector<double>& params, int resolution);

struct ParamRange {
    double lo, hi;
};

// `count` meshes with parameters drawn uniformly from `ranges`; deterministic
// given seed. Returns meshes and the drawn parameter vectors.
std::pair<std::vector<Mesh>, std::vector<std::vector<double>>> synth_dataset(
    ShapeFamily family, int count, const std::vector<ParamRange>& ranges, int resolution,
    uint64_t seed);

}  // namespace dpf
