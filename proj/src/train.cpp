#include "dpf/train.hpp"

#include <cmath>

namespace dpf {

void Optimizer::step(ParamStore& params) {
    for (const auto& [name, e] : params.entries)
        for (double g : e.grad.data)
            if (!std::isfinite(g))
                throw NumericError("non-finite gradient in parameter '" + name + "'");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, e] : params.entries) {
        Matrix& m = m_.try_emplace(name, Matrix(e.value.rows, e.value.cols)).first->second;
        Matrix& v = v_.try_emplace(name, Matrix(e.value.rows, e.value.cols)).first->second;
        Matrix& vh =
            vhat_.try_emplace(name, Matrix(e.value.rows, e.value.cols)).first->second;
        for (size_t i = 0; i < e.value.size(); ++i) {
            const double g = e.grad.data[i];
            m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g;
            v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g * g;
            vh.data[i] = std::max(vh.data[i], v.data[i]);
            const double m_hat = m.data[i] / bc1;
            const double v_hat = vh.data[i] / bc2;
            e.value.data[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
            e.value.data[i] -= cfg_.lr * cfg_.weight_decay * e.value.data[i];
        }
    }
}

namespace {

void clip_grads(ParamStore& params, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, e] : params.entries)
        for (double g : e.grad.data) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double s = max_norm / norm;
    for (auto& [name, e] : params.entries)
        for (double& g : e.grad.data) g *= s;
}

}  // namespace

std::vector<double> train(DPFNet& net, const std::vector<Mesh>& data,
                          const TrainConfig& cfg, Optimizer& opt, Rng& rng,
                          int start_epoch, const std::function<void(const StepInfo&)>& sink,
                          const std::function<void(int)>& epoch_end) {
    if (data.empty()) throw DataError("train: empty dataset");
    std::vector<double> history;
    std::vector<int> order(data.size());

    int global_step = static_cast<int>(opt.step_count());
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        opt.config().lr = cfg.schedule.lr_at(epoch);
        // Fisher-Yates from the identity each epoch, so a resumed run visits
        // shapes in the same order as an uninterrupted one
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(rng.uniform() * i);
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        for (size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const size_t end = std::min(b + cfg.batch_size, order.size());
            net.params().zero_grads();
            ElboTerms batch_terms;
            int count = 0;
            for (size_t s = b; s < end; ++s) {
                const Mesh& mesh = data[order[s]];
                PointCloud x_enc = sample_surface(mesh, cfg.points_per_cloud, rng);
                PointCloud x_dec = sample_surface(mesh, cfg.points_per_cloud, rng);
                const ElboTerms e = net.elbo(x_enc, x_dec, rng, true);
                batch_terms.recon += e.recon;
                batch_terms.recon_per_point += e.recon_per_point;
                batch_terms.kl += e.kl;
                batch_terms.loss += e.loss;
                ++count;
            }
            // average over the batch
            const double inv = 1.0 / count;
            for (auto& [name, e] : net.params().entries)
                for (double& g : e.grad.data) g *= inv;
            batch_terms.recon *= inv;
            batch_terms.recon_per_point *= inv;
            batch_terms.kl *= inv;
            batch_terms.loss *= inv;

            if (cfg.clip_norm > 0.0) clip_grads(net.params(), cfg.clip_norm);
            opt.step(net.params());

            ++global_step;
            history.push_back(batch_terms.loss);
            if (sink && cfg.log_interval > 0 &&
                (global_step % cfg.log_interval == 0 || global_step == 1))
                sink({epoch, global_step, batch_terms, opt.config().lr});
        }
        if (epoch_end) epoch_end(epoch);
    }
    return history;
}

double heldout_nll(DPFNet& net, const std::vector<Mesh>& meshes, int points, Rng& rng) {
    double total = 0.0;
    for (const auto& mesh : meshes) {
        PointCloud x_enc = sample_surface(mesh, points, rng);
        PointCloud x_dec = sample_surface(mesh, points, rng);
        const Matrix z = net.encode_mean(x_enc);
        Tape t;
        const int lp = t.sum(net.point_flow().log_prob(
            t, net.params(), t.constant(x_dec.points), t.constant(z)));
        total += -t.value(lp).at(0, 0) / points;
    }
    return total / meshes.size();
}

}  // namespace dpf
