#include "dpf/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "dpf/metrics.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;

namespace dpf {

namespace {

const std::vector<std::string> kKnownKeys = {
    // model
    "latent_dim", "point_layers", "prior_layers", "d_inf", "film_hidden", "base_hidden",
    "prior_hidden", "log_scale_bound", "encoder_widths", "encoder_head_hidden",
    // training
    "epochs", "batch_size", "points_per_cloud", "seed", "lr", "beta1", "beta2", "eps",
    "weight_decay", "milestones", "gamma", "clip_norm", "log_interval",
    "checkpoint_interval",
    // data
    "data_dir", "family", "count", "resolution", "ranges", "normalize",
    // metrics
    "grid_resolution", "emd_mode", "emd_epsilon", "tau",
};

const std::vector<std::string> kModelKeys = {
    "latent_dim",  "point_layers",    "prior_layers",  "d_inf",          "film_hidden",
    "base_hidden", "prior_hidden",    "log_scale_bound", "encoder_widths",
    "encoder_head_hidden"};

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

std::vector<ParamRange> parse_ranges(const std::string& s) {
    std::vector<ParamRange> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw ParamError("ranges: expected lo:hi pairs, got '" + tok + "'");
        out.push_back({std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1))});
    }
    return out;
}

std::vector<ParamRange> default_ranges(ShapeFamily f) {
    switch (f) {
        case ShapeFamily::Sphere: return {{0.3, 1.0}};
        case ShapeFamily::Torus: return {{0.6, 1.0}, {0.15, 0.4}};
        case ShapeFamily::Box: return {{0.4, 1.2}, {0.4, 1.2}, {0.4, 1.2}};
        case ShapeFamily::Superquadric:
            return {{0.4, 1.0}, {0.4, 1.0}, {0.4, 1.0}, {0.4, 1.6}, {0.4, 1.6}};
    }
    return {};
}

void apply_thread_cap() {
#ifdef _OPENMP
    if (const char* env = std::getenv("DPF_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

DPFNet build_net(const Config& cfg, Rng& rng) {
    DPFNet net(model_config_from(cfg));
    net.init(rng);
    return net;
}

void load_params_from(DPFNet& net, const ParamStore& stored) {
    for (auto& [name, e] : net.params().entries) {
        auto it = stored.entries.find(name);
        if (it == stored.entries.end())
            throw ParseError("checkpoint: missing parameter '" + name + "'");
        if (!e.value.same_shape(it->second.value))
            throw ParseError("checkpoint: parameter '" + name + "' has shape " +
                             it->second.value.shape_str() + ", expected " +
                             e.value.shape_str());
        e.value = it->second.value;
    }
}

std::vector<std::string> list_files(const std::string& dir,
                                    const std::vector<std::string>& exts) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        for (char& c : ext) c = static_cast<char>(std::tolower(c));
        if (std::find(exts.begin(), exts.end(), ext) != exts.end())
            out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Mesh> load_dataset(const Config& cfg) {
    const std::string dir = cfg.get("data_dir");
    const bool normalize = cfg.get_or("normalize", "1") != "0";
    std::vector<Mesh> meshes;
    for (const auto& path : list_files(dir, {".off", ".obj"})) {
        Mesh m = load_mesh(path);
        if (normalize) m = normalize_mesh(m).first;
        meshes.push_back(std::move(m));
    }
    if (meshes.empty()) throw DataError("no meshes found in " + dir);
    return meshes;
}

void echo_config(const Config& cfg, const std::string& artifact_path) {
    cfg.save(artifact_path + ".config");
}

Config merge_flags(const std::string& config_path,
                   const std::vector<std::pair<std::string, std::string>>& overrides) {
    Config cfg = default_config();
    if (!config_path.empty()) {
        const Config file = Config::load(config_path);
        file.validate_keys(kKnownKeys);
        for (const auto& [k, v] : file.items()) cfg.set(k, v);
    }
    for (const auto& [k, v] : overrides)
        if (!v.empty()) cfg.set(k, v);
    return cfg;
}

Checkpoint make_checkpoint(const Config& cfg, DPFNet& net, Optimizer& opt, Rng& rng,
                           uint64_t epoch) {
    Checkpoint ck;
    ck.config = cfg;
    ck.params = net.params();
    ck.opt_m = opt.m();
    ck.opt_v = opt.v();
    ck.opt_vhat = opt.v_hat();
    ck.opt_step = opt.step_count();
    ck.rng_state = rng.state();
    ck.epoch = epoch;
    return ck;
}

int cmd_gen_data(const std::string& family, int count, uint64_t seed, int resolution,
                 const std::string& ranges_str, const std::string& out_dir) {
    const ShapeFamily fam = parse_family(family);
    const auto ranges = ranges_str.empty() ? default_ranges(fam) : parse_ranges(ranges_str);
    auto [meshes, param_list] = synth_dataset(fam, count, ranges, resolution, seed);
    fs::create_directories(out_dir);
    std::string manifest;
    char buf[64];
    for (size_t i = 0; i < meshes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "shape_%04zu.off", i);
        write_off(meshes[i], (fs::path(out_dir) / buf).string());
        manifest += buf;
        manifest += " " + family;
        for (double p : param_list[i]) {
            char pb[32];
            std::snprintf(pb, sizeof pb, " %.9g", p);
            manifest += pb;
        }
        manifest += "\n";
    }
    atomic_write((fs::path(out_dir) / "manifest.txt").string(), manifest);
    std::cout << "wrote " << meshes.size() << " shapes to " << out_dir << "\n";
    return 0;
}

int cmd_train(const Config& cfg, const std::string& out, const std::string& resume) {
    const std::vector<Mesh> data = load_dataset(cfg);
    TrainConfig tc = train_config_from(cfg);

    Rng init_rng(tc.seed);
    DPFNet net = build_net(cfg, init_rng);
    Optimizer opt(tc.opt);
    Rng rng = init_rng.split();
    int start_epoch = 0;

    if (!resume.empty()) {
        Checkpoint ck = Checkpoint::load(resume);
        std::string mismatch;
        if (!model_keys_match(ck.config, cfg, &mismatch))
            throw ParamError("resume: incompatible config, key '" + mismatch +
                             "' differs from checkpoint");
        load_params_from(net, ck.params);
        opt.m() = ck.opt_m;
        opt.v() = ck.opt_v;
        opt.v_hat() = ck.opt_vhat;
        opt.set_step_count(ck.opt_step);
        rng.set_state(ck.rng_state);
        start_epoch = static_cast<int>(ck.epoch);
    }

    auto sink = [](const StepInfo& s) {
        std::printf("epoch %d step %d loss %.6f recon %.6f kl %.6f lr %.6g\n", s.epoch,
                    s.step, s.terms.loss, s.terms.recon_per_point, s.terms.kl, s.lr);
        std::fflush(stdout);
    };
    auto epoch_end = [&](int epoch) {
        if (tc.checkpoint_interval > 0 && (epoch + 1) % tc.checkpoint_interval == 0 &&
            epoch + 1 < tc.epochs)
            make_checkpoint(cfg, net, opt, rng, epoch + 1).save(out);
    };
    train(net, data, tc, opt, rng, start_epoch, sink, epoch_end);
    make_checkpoint(cfg, net, opt, rng, tc.epochs).save(out);
    echo_config(cfg, out);
    std::cout << "checkpoint written to " << out << "\n";
    return 0;
}

std::pair<DPFNet, Config> net_from_checkpoint(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    Rng rng(0);
    DPFNet net = build_net(ck.config, rng);
    load_params_from(net, ck.params);
    return {std::move(net), ck.config};
}

int cmd_sample(const std::string& ckpt, int k, int n, uint64_t seed,
               const std::string& out_dir, bool trace, const std::string& trace_layers) {
    if (k < 1 || n < 1) throw ParamError("sample: k and n must be >= 1");
    auto [net, cfg] = net_from_checkpoint(ckpt);
    fs::create_directories(out_dir);
    Rng rng(seed);
    char buf[64];
    if (trace) {
        std::vector<int> layers = trace_layers.empty()
                                      ? std::vector<int>{0, 32, 48, 56, 60, 62, 63}
                                      : parse_int_list(trace_layers);
        const int max_layer = net.config().point_layers;
        for (int& l : layers) l = std::min(l, max_layer);
        layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
        auto clouds = net.trace(n, layers, rng);
        for (size_t i = 0; i < clouds.size(); ++i) {
            std::snprintf(buf, sizeof buf, "trace_l%02d.xyz", layers[i]);
            write_xyz(clouds[i], (fs::path(out_dir) / buf).string());
        }
    } else {
        auto clouds = net.generate(k, n, rng);
        for (size_t i = 0; i < clouds.size(); ++i) {
            std::snprintf(buf, sizeof buf, "sample_%04zu.xyz", i);
            write_xyz(clouds[i], (fs::path(out_dir) / buf).string());
        }
    }
    echo_config(cfg, (fs::path(out_dir) / "run").string());
    return 0;
}

PointCloud load_cloud_arg(const std::string& path, int mesh_points, Rng& rng) {
    std::string ext = fs::path(path).extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".xyz") return read_xyz(path);
    if (ext == ".off" || ext == ".obj") {
        Mesh m = normalize_mesh(load_mesh(path)).first;
        return sample_surface(m, mesh_points, rng);
    }
    throw DataError("unsupported input format: " + path);
}

int cmd_autoencode(const std::string& ckpt, const std::string& input, int n,
                   const std::string& mode, uint64_t seed, const std::string& out) {
    auto [net, cfg] = net_from_checkpoint(ckpt);
    Rng rng(seed);
    const PointCloud in = load_cloud_arg(input, 2048, rng);
    const auto m = mode == "mean" ? DPFNet::LatentMode::Mean : DPFNet::LatentMode::Sample;
    if (mode != "mean" && mode != "sample")
        throw ParamError("autoencode: mode must be 'mean' or 'sample'");
    write_xyz(net.reconstruct(in, n, rng, m), out);
    echo_config(cfg, out);
    return 0;
}

int cmd_interpolate(const std::string& ckpt, const std::string& input_a,
                    const std::string& input_b, int steps, int n, uint64_t seed,
                    const std::string& out_dir) {
    if (steps < 2) throw ParamError("interpolate: steps must be >= 2");
    auto [net, cfg] = net_from_checkpoint(ckpt);
    Rng rng(seed);
    const PointCloud a = load_cloud_arg(input_a, 2048, rng);
    const PointCloud b = load_cloud_arg(input_b, 2048, rng);
    auto clouds = net.interpolate(a, b, steps, n, rng);
    fs::create_directories(out_dir);
    char buf[64];
    for (size_t i = 0; i < clouds.size(); ++i) {
        std::snprintf(buf, sizeof buf, "interp_%03zu.xyz", i);
        write_xyz(clouds[i], (fs::path(out_dir) / buf).string());
    }
    echo_config(cfg, (fs::path(out_dir) / "run").string());
    return 0;
}

std::vector<PointCloud> load_cloud_dir(const std::string& dir) {
    std::vector<PointCloud> out;
    for (const auto& path : list_files(dir, {".xyz"})) out.push_back(read_xyz(path));
    if (out.empty()) throw DataError("no .xyz files in " + dir);
    return out;
}

std::map<std::string, double> eval_one(const std::vector<PointCloud>& gen,
                                       const std::vector<PointCloud>& ref,
                                       const std::vector<std::string>& metrics,
                                       const Config& cfg) {
    std::map<std::string, double> out;
    const VoxelGrid grid{cfg.get_int("grid_resolution"), -0.5, 0.5};
    const EmdMode emode =
        cfg.get("emd_mode") == "exact" ? EmdMode::Exact : EmdMode::Approx;
    auto want = [&](const std::string& m) {
        return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
    };
    const bool paired = gen.size() == ref.size();
    if (want("cd") || want("emd") || want("f1")) {
        if (!paired)
            throw ParamError("eval: cd/emd/f1 need equally many gen and ref clouds");
        double cd_sum = 0, emd_sum = 0, f1_sum = 0;
        for (size_t i = 0; i < gen.size(); ++i) {
            if (want("cd")) cd_sum += chamfer(gen[i], ref[i]);
            if (want("emd")) emd_sum += emd(gen[i], ref[i], emode,
                                            cfg.get_double("emd_epsilon"));
            if (want("f1")) f1_sum += f1_score(gen[i], ref[i], cfg.get_double("tau"));
        }
        if (want("cd")) out["cd"] = cd_sum / gen.size();
        if (want("emd")) out["emd"] = emd_sum / gen.size();
        if (want("f1")) out["f1"] = f1_sum / gen.size();
    }
    if (want("jsd")) out["jsd"] = jsd(gen, ref, grid);
    if (want("mmd_cd") || want("cov_cd")) {
        auto [m, c] = mmd_cov(gen, ref, CloudDist::Cd);
        if (want("mmd_cd")) out["mmd_cd"] = m;
        if (want("cov_cd")) out["cov_cd"] = c;
    }
    if (want("mmd_emd") || want("cov_emd")) {
        auto [m, c] = mmd_cov(gen, ref, CloudDist::Emd, emode);
        if (want("mmd_emd")) out["mmd_emd"] = m;
        if (want("cov_emd")) out["cov_emd"] = c;
    }
    if (want("nna_cd")) out["nna_cd"] = one_nna(gen, ref, CloudDist::Cd);
    if (want("nna_emd")) out["nna_emd"] = one_nna(gen, ref, CloudDist::Emd, emode);
    return out;
}

int cmd_eval(const Config& cfg, const std::string& gen_dir, const std::string& ref_dir,
             const std::string& metrics_str, int repeats, uint64_t seed,
             const std::string& out) {
    if (repeats < 1) throw ParamError("eval: repeats must be >= 1");
    std::vector<std::string> metrics;
    {
        std::istringstream ss(metrics_str == "all"
                                  ? "cd,emd,jsd,mmd_cd,mmd_emd,cov_cd,cov_emd,nna_cd,"
                                    "nna_emd,f1"
                                  : metrics_str);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) metrics.push_back(tok);
    }
    const auto gen = load_cloud_dir(gen_dir);
    const auto ref = load_cloud_dir(ref_dir);

    Report report;
    std::map<std::string, std::vector<double>> series;
    for (int r = 0; r < repeats; ++r) {
        std::vector<PointCloud> g = gen, f = ref;
        if (repeats > 1) {
            // each repeat evaluates an independent random subset (4/5 of the
            // smaller set) from both directories
            Rng rng(seed + static_cast<uint64_t>(r));
            const size_t take =
                std::max<size_t>(1, std::min(gen.size(), ref.size()) * 4 / 5);
            auto subset = [&](std::vector<PointCloud>& v) {
                for (size_t i = v.size(); i > 1; --i)
                    std::swap(v[i - 1], v[std::min(static_cast<size_t>(rng.uniform() * i),
                                                   i - 1)]);
                v.resize(take);
            };
            subset(g);
            subset(f);
        }
        auto vals = eval_one(g, f, metrics, cfg);
        report.add("repeat" + std::to_string(r), vals);
        for (const auto& [k, v] : vals) series[k].push_back(v);
    }
    if (repeats > 1) {
        std::map<std::string, double> summary;
        for (const auto& [k, vs] : series) {
            double mean = 0;
            for (double v : vs) mean += v;
            mean /= vs.size();
            double var = 0;
            for (double v : vs) var += (v - mean) * (v - mean);
            summary[k + "_mean"] = mean;
            summary[k + "_std"] = std::sqrt(var / vs.size());
        }
        report.add("summary", summary);
    }
    report.save(out);
    echo_config(cfg, out);
    std::cout << "report written to " << out << "\n";
    return 0;
}

}  // namespace

Config default_config() {
    Config c;
    c.set("latent_dim", "128");
    c.set("point_layers", "63");
    c.set("prior_layers", "14");
    c.set("d_inf", "64");
    c.set("film_hidden", "64");
    c.set("base_hidden", "64");
    c.set("prior_hidden", "256");
    c.set("log_scale_bound", "5");
    c.set("encoder_widths", "3,64,128,256,512");
    c.set("encoder_head_hidden", "512");
    c.set("epochs", "100");
    c.set("batch_size", "4");
    c.set("points_per_cloud", "2048");
    c.set("seed", "0");
    c.set("lr", "0.001");
    c.set("beta1", "0.9");
    c.set("beta2", "0.999");
    c.set("eps", "1e-8");
    c.set("weight_decay", "1e-4");
    c.set("milestones", "");  // defaults to 50% and 75% of epochs
    c.set("gamma", "0.1");
    c.set("clip_norm", "0");
    c.set("log_interval", "10");
    c.set("checkpoint_interval", "0");
    c.set("normalize", "1");
    c.set("grid_resolution", "28");
    c.set("emd_mode", "exact");
    c.set("emd_epsilon", "1e-7");
    c.set("tau", "0.001");
    return c;
}

ModelConfig model_config_from(const Config& cfg) {
    ModelConfig m;
    m.latent_dim = cfg.get_int("latent_dim");
    m.point_layers = cfg.get_int("point_layers");
    m.prior_layers = cfg.get_int("prior_layers");
    m.d_inf = cfg.get_int("d_inf");
    m.film_hidden = cfg.get_int("film_hidden");
    m.base_hidden = cfg.get_int("base_hidden");
    m.prior_hidden = cfg.get_int("prior_hidden");
    m.log_scale_bound = cfg.get_double("log_scale_bound");
    m.encoder_widths = parse_int_list(cfg.get("encoder_widths"));
    m.encoder_head_hidden = cfg.get_int("encoder_head_hidden");
    return m;
}

TrainConfig train_config_from(const Config& cfg) {
    TrainConfig t;
    t.epochs = cfg.get_int("epochs");
    t.batch_size = cfg.get_int("batch_size");
    t.points_per_cloud = cfg.get_int("points_per_cloud");
    t.seed = cfg.get_u64("seed");
    t.log_interval = cfg.get_int("log_interval");
    t.checkpoint_interval = cfg.get_int("checkpoint_interval");
    t.clip_norm = cfg.get_double("clip_norm");
    t.opt.lr = cfg.get_double("lr");
    t.opt.beta1 = cfg.get_double("beta1");
    t.opt.beta2 = cfg.get_double("beta2");
    t.opt.eps = cfg.get_double("eps");
    t.opt.weight_decay = cfg.get_double("weight_decay");
    t.schedule.base_lr = t.opt.lr;
    t.schedule.gamma = cfg.get_double("gamma");
    const std::string ms = cfg.get_or("milestones", "");
    if (ms.empty()) {
        t.schedule.milestones = {t.epochs / 2, t.epochs * 3 / 4};
    } else {
        t.schedule.milestones = parse_int_list(ms);
    }
    if (t.epochs < 1 || t.batch_size < 1 || t.points_per_cloud < 1)
        throw ParamError("train config: counts must be >= 1");
    return t;
}

bool model_keys_match(const Config& a, const Config& b, std::string* mismatch) {
    for (const auto& key : kModelKeys) {
        if (a.get_or(key, "") != b.get_or(key, "")) {
            if (mismatch) *mismatch = key;
            return false;
        }
    }
    return true;
}

int run_cli(const std::vector<std::string>& args) {
    apply_thread_cap();

    CLI::App app{"Discrete point flow networks for 3D point cloud generation"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic mesh dataset");
    std::string gd_family = "torus", gd_ranges, gd_out = "data";
    int gd_count = 50, gd_res = 24;
    uint64_t gd_seed = 0;
    gen->add_option("--family", gd_family, "sphere|torus|box|superquadric");
    gen->add_option("--count", gd_count, "number of shapes");
    gen->add_option("--seed", gd_seed, "rng seed");
    gen->add_option("--resolution", gd_res, "grid resolution");
    gen->add_option("--ranges", gd_ranges, "parameter ranges lo:hi,lo:hi,...");
    gen->add_option("--out-dir", gd_out, "output directory");

    // train
    auto* tr = app.add_subcommand("train", "Train a model");
    std::string tr_config, tr_data, tr_out = "model.dpfn", tr_resume;
    std::vector<std::pair<std::string, std::string>> tr_overrides;
    std::string tr_epochs, tr_batch, tr_points, tr_seed, tr_lr, tr_latent, tr_layers;
    tr->add_option("--config", tr_config, "config file (flat key = value)");
    tr->add_option("--data-dir", tr_data, "directory of OFF/OBJ meshes")->required();
    tr->add_option("--out", tr_out, "checkpoint output path");
    tr->add_option("--resume", tr_resume, "checkpoint to resume from");
    tr->add_option("--epochs", tr_epochs);
    tr->add_option("--batch-size", tr_batch);
    tr->add_option("--points", tr_points);
    tr->add_option("--seed", tr_seed);
    tr->add_option("--lr", tr_lr);
    tr->add_option("--latent-dim", tr_latent);
    tr->add_option("--point-layers", tr_layers);

    // sample
    auto* sa = app.add_subcommand("sample", "Sample point clouds from a checkpoint");
    std::string sa_ckpt, sa_out = "samples", sa_trace_layers;
    int sa_k = 1, sa_n = 2048;
    uint64_t sa_seed = 0;
    bool sa_trace = false;
    sa->add_option("--checkpoint", sa_ckpt)->required();
    sa->add_option("--k", sa_k, "number of clouds");
    sa->add_option("--n", sa_n, "points per cloud");
    sa->add_option("--seed", sa_seed);
    sa->add_option("--out-dir", sa_out);
    sa->add_flag("--trace", sa_trace, "write per-layer deformation trace");
    sa->add_option("--trace-layers", sa_trace_layers, "comma list, default 0,32,48,56,60,62,63");

    // autoencode
    auto* ae = app.add_subcommand("autoencode", "Reconstruct a cloud through the model");
    std::string ae_ckpt, ae_in, ae_out = "recon.xyz", ae_mode = "mean";
    int ae_n = 2048;
    uint64_t ae_seed = 0;
    ae->add_option("--checkpoint", ae_ckpt)->required();
    ae->add_option("--input", ae_in, "XYZ cloud or OFF/OBJ mesh")->required();
    ae->add_option("--n", ae_n, "output points");
    ae->add_option("--mode", ae_mode, "mean|sample");
    ae->add_option("--seed", ae_seed);
    ae->add_option("--out", ae_out);

    // eval
    auto* ev = app.add_subcommand("eval", "Compare generated and reference cloud sets");
    std::string ev_config, ev_gen, ev_ref, ev_metrics = "cd,jsd,mmd_cd,cov_cd,nna_cd";
    std::string ev_out = "report.txt", ev_grid, ev_emd_mode;
    int ev_repeats = 1;
    uint64_t ev_seed = 0;
    ev->add_option("--config", ev_config);
    ev->add_option("--gen-dir", ev_gen)->required();
    ev->add_option("--ref-dir", ev_ref)->required();
    ev->add_option("--metrics", ev_metrics, "comma list or 'all'");
    ev->add_option("--repeats", ev_repeats);
    ev->add_option("--seed", ev_seed);
    ev->add_option("--grid-resolution", ev_grid);
    ev->add_option("--emd-mode", ev_emd_mode, "exact|approx");
    ev->add_option("--out", ev_out);

    // interpolate
    auto* it = app.add_subcommand("interpolate", "Latent interpolation between two inputs");
    std::string it_ckpt, it_a, it_b, it_out = "interp";
    int it_steps = 7, it_n = 2048;
    uint64_t it_seed = 0;
    it->add_option("--checkpoint", it_ckpt)->required();
    it->add_option("--input-a", it_a)->required();
    it->add_option("--input-b", it_b)->required();
    it->add_option("--steps", it_steps);
    it->add_option("--n", it_n);
    it->add_option("--seed", it_seed);
    it->add_option("--out-dir", it_out);

    std::vector<std::string> argv_copy = args;
    try {
        std::vector<const char*> argv;
        argv.push_back("dpf");
        for (const auto& a : argv_copy) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(gd_family, gd_count, gd_seed, gd_res, gd_ranges, gd_out);
        if (tr->parsed()) {
            std::vector<std::pair<std::string, std::string>> overrides = {
                {"epochs", tr_epochs},        {"batch_size", tr_batch},
                {"points_per_cloud", tr_points}, {"seed", tr_seed},
                {"lr", tr_lr},                {"latent_dim", tr_latent},
                {"point_layers", tr_layers},  {"data_dir", tr_data}};
            return cmd_train(merge_flags(tr_config, overrides), tr_out, tr_resume);
        }
        if (sa->parsed())
            return cmd_sample(sa_ckpt, sa_k, sa_n, sa_seed, sa_out, sa_trace,
                              sa_trace_layers);
        if (ae->parsed())
            return cmd_autoencode(ae_ckpt, ae_in, ae_n, ae_mode, ae_seed, ae_out);
        if (ev->parsed()) {
            Config cfg = merge_flags(
                ev_config, {{"grid_resolution", ev_grid}, {"emd_mode", ev_emd_mode}});
            return cmd_eval(cfg, ev_gen, ev_ref, ev_metrics, ev_repeats, ev_seed, ev_out);
        }
        if (it->parsed())
            return cmd_interpolate(it_ckpt, it_a, it_b, it_steps, it_n, it_seed, it_out);
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}

}  // namespace dpf
