#include "dpf/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dpf {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw DataError("cannot write " + tmp);
        f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!f) throw DataError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void write_xyz(const PointCloud& pc, const std::string& path) {
    std::string out;
    out.reserve(static_cast<size_t>(pc.size()) * 40);
    char buf[96];
    for (int i = 0; i < pc.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", pc.points.at(i, 0),
                      pc.points.at(i, 1), pc.points.at(i, 2));
        out += buf;
    }
    atomic_write(path, out);
}

PointCloud read_xyz(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    std::vector<double> vals;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x >> y >> z))
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad point line");
        vals.push_back(x);
        vals.push_back(y);
        vals.push_back(z);
    }
    if (vals.empty()) throw DataError(path + ": empty point cloud");
    PointCloud pc;
    pc.points = Matrix(static_cast<int>(vals.size() / 3), 3);
    pc.points.data = std::move(vals);
    return pc;
}

void write_xyz_binary(const PointCloud& pc, const std::string& path) {
    std::string out;
    out.append("DPFX", 4);
    const uint32_t n = static_cast<uint32_t>(pc.size());
    out.append(reinterpret_cast<const char*>(&n), 4);
    out.append(reinterpret_cast<const char*>(pc.points.data.data()),
               pc.points.size() * sizeof(double));
    atomic_write(path, out);
}

PointCloud read_xyz_binary(const std::string& path) {
    const std::string raw = read_file(path);
    if (raw.size() < 8 || raw.compare(0, 4, "DPFX") != 0)
        throw ParseError(path + ": not a binary point cloud (bad magic)");
    uint32_t n = 0;
    std::memcpy(&n, raw.data() + 4, 4);
    if (raw.size() != 8 + static_cast<size_t>(n) * 3 * sizeof(double))
        throw ParseError(path + ": truncated binary point cloud");
    PointCloud pc;
    pc.points = Matrix(static_cast<int>(n), 3);
    std::memcpy(pc.points.data.data(), raw.data() + 8, static_cast<size_t>(n) * 24);
    return pc;
}

void Config::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : items_)
        if (k == key) {
            v = value;
            return;
        }
    items_.emplace_back(key, value);
}

bool Config::has(const std::string& key) const {
    return std::any_of(items_.begin(), items_.end(),
                       [&](const auto& kv) { return kv.first == key; });
}

std::string Config::get(const std::string& key) const {
    for (const auto& [k, v] : items_)
        if (k == key) return v;
    throw ParamError("config: missing key '" + key + "'");
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    const std::string v = get(key);
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParamError("config: key '" + key + "' is not a number: " + v);
    }
}

int Config::get_int(const std::string& key) const {
    const double d = get_double(key);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw ParamError("config: key '" + key + "' is not an integer");
    return i;
}

uint64_t Config::get_u64(const std::string& key) const {
    const std::string v = get(key);
    try {
        size_t pos = 0;
        const uint64_t u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ParamError("config: key '" + key + "' is not an unsigned integer: " + v);
    }
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [k, v] : items_) out += k + " = " + v + "\n";
    return out;
}

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ParseError("config line " + std::to_string(line_no) +
                                 ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        c.set(key, val);
    }
    return c;
}

Config Config::load(const std::string& path) { return parse(read_file(path)); }

void Config::save(const std::string& path) const { atomic_write(path, serialize()); }

void Config::validate_keys(const std::vector<std::string>& known) const {
    for (const auto& [k, v] : items_)
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ParamError("config: unknown key '" + k + "'");
}

void Report::save(const std::string& path) const {
    std::string out;
    char buf[64];
    for (const auto& [name, values] : sections) {
        out += "[" + name + "]\n";
        for (const auto& [k, v] : values) {
            std::snprintf(buf, sizeof buf, "%.12g", v);
            out += k + " = " + buf + "\n";
        }
        out += "\n";
    }
    atomic_write(path, out);
}

namespace {

void put_u32(std::string& out, uint32_t v) {
    out.append(reinterpret_cast<const char*>(&v), 4);
}
void put_u64(std::string& out, uint64_t v) {
    out.append(reinterpret_cast<const char*>(&v), 8);
}
void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out += s;
}
void put_matrix(std::string& out, const Matrix& m) {
    put_u32(out, static_cast<uint32_t>(m.rows));
    put_u32(out, static_cast<uint32_t>(m.cols));
    out.append(reinterpret_cast<const char*>(m.data.data()), m.size() * sizeof(double));
}

struct Reader {
    const std::string& raw;
    const std::string& path;
    size_t pos = 0;
    std::string section = "header";

    void need(size_t n) {
        if (pos + n > raw.size())
            throw ParseError(path + ": truncated checkpoint in section '" + section + "'");
    }
    uint32_t u32() {
        need(4);
        uint32_t v;
        std::memcpy(&v, raw.data() + pos, 4);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v;
        std::memcpy(&v, raw.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::string str() {
        const uint32_t n = u32();
        need(n);
        std::string s = raw.substr(pos, n);
        pos += n;
        return s;
    }
    Matrix matrix() {
        const uint32_t r = u32(), c = u32();
        need(static_cast<size_t>(r) * c * sizeof(double));
        Matrix m(static_cast<int>(r), static_cast<int>(c));
        std::memcpy(m.data.data(), raw.data() + pos, m.size() * sizeof(double));
        pos += m.size() * sizeof(double);
        return m;
    }
};

constexpr uint32_t kCheckpointVersion = 1;

}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::string out;
    out.append("DPFN", 4);
    put_u32(out, kCheckpointVersion);
    put_str(out, config.serialize());

    put_u32(out, static_cast<uint32_t>(params.entries.size()));
    for (const auto& [name, e] : params.entries) {
        put_str(out, name);
        put_matrix(out, e.value);
    }

    put_u64(out, opt_step);
    auto put_moments = [&](const std::map<std::string, Matrix>& mm) {
        put_u32(out, static_cast<uint32_t>(mm.size()));
        for (const auto& [name, m] : mm) {
            put_str(out, name);
            put_matrix(out, m);
        }
    };
    put_moments(opt_m);
    put_moments(opt_v);
    put_moments(opt_vhat);

    for (uint64_t s : rng_state.s) put_u64(out, s);
    put_u32(out, rng_state.has_cache ? 1 : 0);
    out.append(reinterpret_cast<const char*>(&rng_state.cache), sizeof(double));
    put_u64(out, epoch);
    atomic_write(path, out);
}

Checkpoint Checkpoint::load(const std::string& path) {
    const std::string raw = read_file(path);
    Reader r{raw, path};
    r.need(8);
    if (raw.compare(0, 4, "DPFN") != 0)
        throw ParseError(path + ": not a checkpoint (bad magic)");
    r.pos = 4;
    const uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw ParseError(path + ": unsupported checkpoint version " +
                         std::to_string(version));
    Checkpoint ck;
    r.section = "config";
    ck.config = Config::parse(r.str());
    r.section = "parameters";
    const uint32_t np = r.u32();
    for (uint32_t i = 0; i < np; ++i) {
        const std::string name = r.str();
        ck.params.add(name, r.matrix());
    }
    r.section = "optimizer";
    ck.opt_step = r.u64();
    auto read_moments = [&](std::map<std::string, Matrix>& mm) {
        const uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
            const std::string name = r.str();
            mm[name] = r.matrix();
        }
    };
    read_moments(ck.opt_m);
    read_moments(ck.opt_v);
    read_moments(ck.opt_vhat);
    r.section = "rng";
    for (auto& s : ck.rng_state.s) s = r.u64();
    ck.rng_state.has_cache = r.u32() != 0;
    r.need(sizeof(double));
    std::memcpy(&ck.rng_state.cache, raw.data() + r.pos, sizeof(double));
    r.pos += sizeof(double);
    r.section = "epoch";
    ck.epoch = r.u64();
    if (r.pos != raw.size())
        throw ParseError(path + ": trailing bytes after checkpoint payload");
    return ck;
}

}  // namespace dpf
