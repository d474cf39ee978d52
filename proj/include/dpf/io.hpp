// File formats: XYZ point clouds (text and binary), flat key=value configs,
// sectioned report files, and the binary checkpoint. All writes go through
// a temp-file rename.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpf/geometry.hpp"
#include "dpf/model.hpp"
#include "dpf/rng.hpp"
#include "dpf/train.hpp"

namespace dpf {

// One "x y z" line per point, 9 significant digits, LF endings.
void write_xyz(const PointCloud& pc, const std::string& path);
PointCloud read_xyz(const std::string& path);

// Binary variant for large clouds: "DPFX", u32 count, little-endian doubles.
void write_xyz_binary(const PointCloud& pc, const std::string& path);
PointCloud read_xyz_binary(const std::string& path);

// Flat `key = value` text with '#' comments. Order-preserving.
class Config {
public:
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& items() const {
        return items_;
    }

    std::string serialize() const;
    static Config parse(const std::string& text);
    static Config load(const std::string& path);
    void save(const std::string& path) const;

    // Unknown keys (not in `known`) raise ParamError.
    void validate_keys(const std::vector<std::string>& known) const;

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

// Sectioned key=value report: [section] headers, one section per repeat
// plus an optional summary.
struct Report {
    std::vector<std::pair<std::string, std::map<std::string, double>>> sections;
    void add(const std::string& section, const std::map<std::string, double>& values) {
        sections.emplace_back(section, values);
    }
    void save(const std::string& path) const;
};

// Binary checkpoint: magic "DPFN", version, config snapshot, parameter
// blobs, optimizer moments, rng state, epoch. save/load/save is
// byte-identical.
struct Checkpoint {
    Config config;
    ParamStore params;
    std::map<std::string, Matrix> opt_m, opt_v, opt_vhat;
    uint64_t opt_step = 0;
    Rng::State rng_state{};
    uint64_t epoch = 0;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

// Atomic text/binary write via temp file + rename.
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace dpf
