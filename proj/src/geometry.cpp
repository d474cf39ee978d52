#include "dpf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpf {

namespace {

Vec3 sub3(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 cross3(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm3(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

void push_face_fan(Mesh& mesh, const std::vector<int>& poly, const std::string& path,
                   int line) {
    if (poly.size() < 3) parse_fail(path, line, "face with fewer than 3 vertices");
    for (int v : poly)
        if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
            parse_fail(path, line, "face index " + std::to_string(v) + " out of range");
    for (size_t k = 1; k + 1 < poly.size(); ++k)
        mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
}

Mesh load_off(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    Mesh mesh;
    int line_no = 0;
    auto next_line = [&](std::string& out) -> bool {
        while (std::getline(f, out)) {
            ++line_no;
            const auto pos = out.find('#');
            if (pos != std::string::npos) out.erase(pos);
            if (out.find_first_not_of(" \t\r\n") != std::string::npos) return true;
        }
        return false;
    };
    std::string line;
    if (!next_line(line)) parse_fail(path, line_no, "empty file");
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "OFF") parse_fail(path, line_no, "missing OFF header");
    int nv = -1, nf = -1, ne = 0;
    // counts may share the header line or follow it
    if (!(header >> nv >> nf >> ne)) {
        if (!next_line(line)) parse_fail(path, line_no, "missing counts");
        std::istringstream counts(line);
        if (!(counts >> nv >> nf >> ne)) parse_fail(path, line_no, "bad counts line");
    }
    if (nv <= 0 || nf < 0) parse_fail(path, line_no, "bad vertex/face counts");
    mesh.vertices.reserve(nv);
    for (int i = 0; i < nv; ++i) {
        if (!next_line(line)) parse_fail(path, line_no, "unexpected end of vertices");
        std::istringstream ss(line);
        Vec3 v;
        if (!(ss >> v[0] >> v[1] >> v[2])) parse_fail(path, line_no, "bad vertex");
        mesh.vertices.push_back(v);
    }
    for (int i = 0; i < nf; ++i) {
        if (!next_line(line)) parse_fail(path, line_no, "unexpected end of faces");
        std::istringstream ss(line);
        int cnt;
        if (!(ss >> cnt) || cnt < 3) parse_fail(path, line_no, "bad face count");
        std::vector<int> poly(cnt);
        for (int& v : poly)
            if (!(ss >> v)) parse_fail(path, line_no, "bad face index");
        push_face_fan(mesh, poly, path, line_no);
    }
    if (mesh.empty()) throw DataError(path + ": empty mesh");
    return mesh;
}

Mesh load_obj(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    Mesh mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v[0] >> v[1] >> v[2])) parse_fail(path, line_no, "bad vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ss >> tok) {
                // v, v/vt, v/vt/vn, v//vn all start with the vertex index
                const int idx = std::atoi(tok.c_str());
                if (idx == 0) parse_fail(path, line_no, "bad face token '" + tok + "'");
                poly.push_back(idx > 0 ? idx - 1
                                       : static_cast<int>(mesh.vertices.size()) + idx);
            }
            push_face_fan(mesh, poly, path, line_no);
        }
        // normals, textures, groups, materials are ignored
    }
    if (mesh.empty()) throw DataError(path + ": empty mesh");
    return mesh;
}

}  // namespace

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm3(cross3(sub3(b, a), sub3(c, a)));
}

Mesh load_mesh(const std::string& path, MeshFormat format) {
    return format == MeshFormat::Off ? load_off(path) : load_obj(path);
}

Mesh load_mesh(const std::string& path) {
    const auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == "off") return load_off(path);
    if (ext == "obj") return load_obj(path);
    throw DataError("unknown mesh extension: " + path);
}

void write_off(const Mesh& mesh, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << "OFF\n" << mesh.vertices.size() << " " << mesh.faces.size() << " 0\n";
    char buf[96];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", v[0], v[1], v[2]);
        f << buf;
    }
    for (const auto& fc : mesh.faces) f << "3 " << fc[0] << " " << fc[1] << " " << fc[2] << "\n";
    if (!f) throw DataError("write failed: " + path);
}

std::pair<Mesh, NormalizationStats> normalize_mesh(const Mesh& mesh) {
    if (mesh.empty()) throw DataError("normalize_mesh: empty mesh");
    double total_area = 0.0;
    Vec3 centroid{0, 0, 0};
    for (const auto& f : mesh.faces) {
        const Vec3 &a = mesh.vertices[f[0]], &b = mesh.vertices[f[1]], &c = mesh.vertices[f[2]];
        const double area = triangle_area(a, b, c);
        total_area += area;
        for (int k = 0; k < 3; ++k) centroid[k] += area * (a[k] + b[k] + c[k]) / 3.0;
    }
    if (total_area <= 0.0) throw DataError("normalize_mesh: degenerate mesh (zero area)");
    for (int k = 0; k < 3; ++k) centroid[k] /= total_area;

    // exact pairwise diameter; desk-scale meshes keep O(V^2) cheap
    double diam_sq = 0.0;
    for (size_t i = 0; i < mesh.vertices.size(); ++i)
        for (size_t j = i + 1; j < mesh.vertices.size(); ++j) {
            const Vec3 d = sub3(mesh.vertices[i], mesh.vertices[j]);
            diam_sq = std::max(diam_sq, d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        }
    const double diam = std::sqrt(diam_sq);
    if (diam <= 0.0) throw DataError("normalize_mesh: degenerate mesh (zero diameter)");

    Mesh out = mesh;
    for (auto& v : out.vertices)
        for (int k = 0; k < 3; ++k) v[k] = (v[k] - centroid[k]) / diam;
    return {std::move(out), NormalizationStats{centroid, diam}};
}

Mesh denormalize_mesh(const Mesh& mesh, const NormalizationStats& stats) {
    Mesh out = mesh;
    for (auto& v : out.vertices)
        for (int k = 0; k < 3; ++k) v[k] = v[k] * stats.scale + stats.centroid[k];
    return out;
}

PointCloud sample_surface(const Mesh& mesh, int n, Rng& rng) {
    if (mesh.empty()) throw DataError("sample_surface: empty mesh");
    if (n < 1) throw ParamError("sample_surface: n must be >= 1");
    std::vector<double> cum(mesh.faces.size());
    double total = 0.0;
    for (size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& f = mesh.faces[i];
        total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
        cum[i] = total;
    }
    if (total <= 0.0) throw DataError("sample_surface: zero-area mesh");

    PointCloud pc;
    pc.points = Matrix(n, 3);
    for (int i = 0; i < n; ++i) {
        const double r = rng.uniform() * total;
        const size_t fi = std::lower_bound(cum.begin(), cum.end(), r) - cum.begin();
        const auto& f = mesh.faces[std::min(fi, mesh.faces.size() - 1)];
        double u = rng.uniform(), v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        const Vec3 &a = mesh.vertices[f[0]], &b = mesh.vertices[f[1]], &c = mesh.vertices[f[2]];
        for (int k = 0; k < 3; ++k)
            pc.points.at(i, k) = a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]);
    }
    return pc;
}

namespace {

// sign(x) |x|^p, the superquadric exponentiation
double spow(double x, double p) {
    return x < 0 ? -std::pow(-x, p) : std::pow(x, p);
}

// Grid-triangulated parametric surface: (i, j) in [0, res] x [0, res],
// wrap controls whether the last row/column reuses the first.
template <typename F>
Mesh grid_surface(int res, bool wrap_i, bool wrap_j, F&& point) {
    Mesh m;
    const int ni = wrap_i ? res : res + 1;
    const int nj = wrap_j ? res : res + 1;
    m.vertices.reserve(static_cast<size_t>(ni) * nj);
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < nj; ++j) m.vertices.push_back(point(i, j));
    auto vid = [&](int i, int j) { return (i % ni) * nj + (j % nj); };
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            m.faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            m.faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    return m;
}

constexpr double kPi = 3.1415926535897932384626433832795;

}  // namespace

ShapeFamily parse_family(const std::string& name) {
    if (name == "sphere") return ShapeFamily::Sphere;
    if (name == "torus") return ShapeFamily::Torus;
    if (name == "box") return ShapeFamily::Box;
    if (name == "superquadric") return ShapeFamily::Superquadric;
    throw ParamError("unknown shape family: " + name);
}

std::string family_name(ShapeFamily f) {
    switch (f) {
        case ShapeFamily::Sphere: return "sphere";
        case ShapeFamily::Torus: return "torus";
        case ShapeFamily::Box: return "box";
        case ShapeFamily::Superquadric: return "superquadric";
    }
    return "?";
}

Mesh synth_shape(ShapeFamily family, const std::vector<double>& params, int resolution) {
    if (resolution < 2) throw ParamError("synth_shape: resolution must be >= 2");
    switch (family) {
        case ShapeFamily::Sphere: {
            if (params.size() != 1 || params[0] <= 0.0)
                throw ParamError("sphere: expected positive {radius}");
            const double r = params[0];
            return grid_surface(resolution, false, true, [&](int i, int j) -> Vec3 {
                const double th = kPi * i / resolution;        // polar
                const double ph = 2.0 * kPi * j / resolution;  // azimuth
                return {r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph),
                        r * std::cos(th)};
            });
        }
        case ShapeFamily::Torus: {
            if (params.size() != 2 || params[0] <= 0.0 || params[1] <= 0.0 ||
                params[1] >= params[0])
                throw ParamError("torus: expected {major, minor} with 0 < minor < major");
            const double R = params[0], r = params[1];
            return grid_surface(resolution, true, true, [&](int i, int j) -> Vec3 {
                const double u = 2.0 * kPi * i / resolution;
                const double v = 2.0 * kPi * j / resolution;
                const double w = R + r * std::cos(v);
                return {w * std::cos(u), w * std::sin(u), r * std::sin(v)};
            });
        }
        case ShapeFamily::Box: {
            if (params.size() != 3 || params[0] <= 0 || params[1] <= 0 || params[2] <= 0)
                throw ParamError("box: expected positive {sx, sy, sz}");
            Mesh m;
            const double hx = params[0] / 2, hy = params[1] / 2, hz = params[2] / 2;
            for (int i = 0; i < 8; ++i)
                m.vertices.push_back({i & 1 ? hx : -hx, i & 2 ? hy : -hy, i & 4 ? hz : -hz});
            static const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                            {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
            for (const auto& q : quads) {
                m.faces.push_back({q[0], q[1], q[2]});
                m.faces.push_back({q[0], q[2], q[3]});
            }
            return m;
        }
        case ShapeFamily::Superquadric: {
            if (params.size() != 5 || params[0] <= 0 || params[1] <= 0 || params[2] <= 0 ||
                params[3] <= 0 || params[4] <= 0)
                throw ParamError("superquadric: expected positive {ax, ay, az, eps1, eps2}");
            const double ax = params[0], ay = params[1], az = params[2];
            const double e1 = params[3], e2 = params[4];
            return grid_surface(resolution, false, true, [&](int i, int j) -> Vec3 {
                const double eta = -kPi / 2 + kPi * i / resolution;
                const double w = 2.0 * kPi * j / resolution;
                const double ce = spow(std::cos(eta), e1), se = spow(std::sin(eta), e1);
                return {ax * ce * spow(std::cos(w), e2), ay * ce * spow(std::sin(w), e2),
                        az * se};
            });
        }
    }
    throw ParamError("synth_shape: bad family");
}

std::pair<std::vector<Mesh>, std::vector<std::vector<double>>> synth_dataset(
    ShapeFamily family, int count, const std::vector<ParamRange>& ranges, int resolution,
    uint64_t seed) {
    if (count < 1) throw ParamError("synth_dataset: count must be >= 1");
    if (ranges.empty()) throw ParamError("synth_dataset: empty parameter ranges");
    for (const auto& r : ranges)
        if (r.hi < r.lo) throw ParamError("synth_dataset: range with hi < lo");
    Rng rng(seed);
    std::vector<Mesh> meshes;
    std::vector<std::vector<double>> param_list;
    meshes.reserve(count);
    for (int i = 0; i < count; ++i) {
        std::vector<double> p;
        p.reserve(ranges.size());
        for (const auto& r : ranges) p.push_back(rng.uniform(r.lo, r.hi));
        meshes.push_back(synth_shape(family, p, resolution));
        param_list.push_back(std::move(p));
    }
    return {std::move(meshes), std::move(param_list)};
}

}  // namespace dpf
