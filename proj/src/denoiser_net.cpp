#include "scoregeo/denoiser_net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "scoregeo/dual.hpp"

namespace scoregeo {

DenoiserNet::DenoiserNet(int dim, int t_max, Arch arch, uint64_t seed)
    : dim_(dim), t_max_(t_max), arch_(std::move(arch)) {
    if (dim < 1) throw std::invalid_argument("DenoiserNet: dim must be >= 1");
    if (t_max < 1) throw std::invalid_argument("DenoiserNet: t_max must be >= 1");
    if (arch_.time_emb_dim < 2 || arch_.time_emb_dim % 2 != 0)
        throw std::invalid_argument("DenoiserNet: time_emb_dim must be even and >= 2");
    for (int w : arch_.hidden)
        if (w < 1) throw std::invalid_argument("DenoiserNet: hidden width must be >= 1");

    const std::vector<int> widths = layer_widths();
    Rng rng(seed);
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        const double scale = std::sqrt(6.0 / (fan_in + fan_out));
        Mat w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-scale, scale);
        weights_.push_back(std::move(w));
        biases_.push_back(Vec::Zero(fan_out));
    }
}

std::vector<int> DenoiserNet::layer_widths() const {
    std::vector<int> widths;
    widths.push_back(dim_ + arch_.time_emb_dim);
    for (int h : arch_.hidden) widths.push_back(h);
    widths.push_back(dim_);
    return widths;
}

Vec DenoiserNet::time_embedding(int t) const {
    const double tn = static_cast<double>(t) / t_max_;
    Vec emb(arch_.time_emb_dim);
    for (int j = 0; j < arch_.time_emb_dim / 2; ++j) {
        const double angle = M_PI * std::ldexp(tn, j); // pi * 2^j * t/T
        emb[2 * j] = std::sin(angle);
        emb[2 * j + 1] = std::cos(angle);
    }
    return emb;
}

template <class S>
std::vector<S> DenoiserNet::forward_impl(const std::vector<S>& input) const {
    using std::tanh;
    std::vector<S> h = input;
    for (size_t l = 0; l < weights_.size(); ++l) {
        const Mat& w = weights_[l];
        const Vec& b = biases_[l];
        const bool last = l + 1 == weights_.size();
        std::vector<S> z(static_cast<size_t>(w.rows()));
        for (int i = 0; i < w.rows(); ++i) {
            S acc(b[i]);
            for (int j = 0; j < w.cols(); ++j) acc += S(w(i, j)) * h[static_cast<size_t>(j)];
            z[static_cast<size_t>(i)] = last ? acc : tanh(acc);
        }
        h = std::move(z);
    }
    return h;
}

template <class S>
std::vector<S> DenoiserNet::input_grad_impl(const std::vector<S>& input, const Vec& cotangent) const {
    using std::tanh;
    const size_t n_layers = weights_.size();
    std::vector<std::vector<S>> acts(n_layers + 1);
    acts[0] = input;
    for (size_t l = 0; l < n_layers; ++l) {
        const Mat& w = weights_[l];
        const Vec& b = biases_[l];
        const bool last = l + 1 == n_layers;
        acts[l + 1].resize(static_cast<size_t>(w.rows()));
        for (int i = 0; i < w.rows(); ++i) {
            S acc(b[i]);
            for (int j = 0; j < w.cols(); ++j) acc += S(w(i, j)) * acts[l][static_cast<size_t>(j)];
            acts[l + 1][static_cast<size_t>(i)] = last ? acc : tanh(acc);
        }
    }

    std::vector<S> delta(static_cast<size_t>(cotangent.size()));
    for (int i = 0; i < cotangent.size(); ++i) delta[static_cast<size_t>(i)] = S(cotangent[i]);
    for (size_t l = n_layers; l-- > 0;) {
        if (l + 1 != n_layers) {
            // d tanh(z) = 1 - tanh(z)^2, with tanh(z) already stored in acts.
            for (size_t i = 0; i < delta.size(); ++i)
                delta[i] = delta[i] * (S(1.0) - acts[l + 1][i] * acts[l + 1][i]);
        }
        const Mat& w = weights_[l];
        std::vector<S> prev(static_cast<size_t>(w.cols()));
        for (int j = 0; j < w.cols(); ++j) {
            S acc(0.0);
            for (int i = 0; i < w.rows(); ++i) acc += S(w(i, j)) * delta[static_cast<size_t>(i)];
            prev[static_cast<size_t>(j)] = acc;
        }
        delta = std::move(prev);
    }
    return delta;
}

Vec DenoiserNet::eps(const Vec& x, int t) const {
    if (x.size() != dim_) throw std::invalid_argument("DenoiserNet::eps: dimension mismatch");
    const Vec emb = time_embedding(t);
    std::vector<double> input(static_cast<size_t>(dim_ + emb.size()));
    for (int i = 0; i < dim_; ++i) input[static_cast<size_t>(i)] = x[i];
    for (int i = 0; i < emb.size(); ++i) input[static_cast<size_t>(dim_ + i)] = emb[i];
    const std::vector<double> out = forward_impl(input);
    Vec result(dim_);
    for (int i = 0; i < dim_; ++i) result[i] = out[static_cast<size_t>(i)];
    return result;
}

Vec DenoiserNet::eps_jvp(const Vec& x, int t, const Vec& v) const {
    if (x.size() != dim_ || v.size() != dim_)
        throw std::invalid_argument("DenoiserNet::eps_jvp: dimension mismatch");
    const Vec emb = time_embedding(t);
    std::vector<Dual> input(static_cast<size_t>(dim_ + emb.size()));
    for (int i = 0; i < dim_; ++i) input[static_cast<size_t>(i)] = Dual(x[i], v[i]);
    for (int i = 0; i < emb.size(); ++i) input[static_cast<size_t>(dim_ + i)] = Dual(emb[i]);
    const std::vector<Dual> out = forward_impl(input);
    Vec result(dim_);
    for (int i = 0; i < dim_; ++i) result[i] = out[static_cast<size_t>(i)].d;
    return result;
}

Vec DenoiserNet::eps_input_grad(const Vec& x, int t, const Vec& w) const {
    if (x.size() != dim_ || w.size() != dim_)
        throw std::invalid_argument("DenoiserNet::eps_input_grad: dimension mismatch");
    const Vec emb = time_embedding(t);
    std::vector<double> input(static_cast<size_t>(dim_ + emb.size()));
    for (int i = 0; i < dim_; ++i) input[static_cast<size_t>(i)] = x[i];
    for (int i = 0; i < emb.size(); ++i) input[static_cast<size_t>(dim_ + i)] = emb[i];
    const std::vector<double> grad = input_grad_impl(input, w);
    Vec result(dim_);
    for (int i = 0; i < dim_; ++i) result[i] = grad[static_cast<size_t>(i)];
    return result;
}

Vec DenoiserNet::eps_grad_form(const Vec& x, int t, const Vec& w, const Vec& v) const {
    if (x.size() != dim_ || w.size() != dim_ || v.size() != dim_)
        throw std::invalid_argument("DenoiserNet::eps_grad_form: dimension mismatch");
    const Vec emb = time_embedding(t);
    std::vector<Dual> input(static_cast<size_t>(dim_ + emb.size()));
    for (int i = 0; i < dim_; ++i) input[static_cast<size_t>(i)] = Dual(x[i], v[i]);
    for (int i = 0; i < emb.size(); ++i) input[static_cast<size_t>(dim_ + i)] = Dual(emb[i]);
    // Tangent of the reverse-mode input gradient along v is the Hessian-vector
    // product of the scalar w . eps.
    const std::vector<Dual> grad = input_grad_impl(input, w);
    Vec result(dim_);
    for (int i = 0; i < dim_; ++i) result[i] = grad[static_cast<size_t>(i)].d;
    return result;
}

int DenoiserNet::num_params() const {
    int n = 0;
    for (size_t l = 0; l < weights_.size(); ++l)
        n += static_cast<int>(weights_[l].size() + biases_[l].size());
    return n;
}

Vec DenoiserNet::get_params() const {
    Vec p(num_params());
    int k = 0;
    for (size_t l = 0; l < weights_.size(); ++l) {
        const Mat& w = weights_[l];
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) p[k++] = w(i, j);
        for (int i = 0; i < biases_[l].size(); ++i) p[k++] = biases_[l][i];
    }
    return p;
}

void DenoiserNet::set_params(const Vec& p) {
    if (p.size() != num_params()) throw std::invalid_argument("DenoiserNet::set_params: size mismatch");
    int k = 0;
    for (size_t l = 0; l < weights_.size(); ++l) {
        Mat& w = weights_[l];
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) w(i, j) = p[k++];
        for (int i = 0; i < biases_[l].size(); ++i) biases_[l][i] = p[k++];
    }
}

double DenoiserNet::loss_and_param_grad(const std::vector<Vec>& x_t, const std::vector<int>& ts,
                                        const std::vector<Vec>& eps_target, Vec& grad) const {
    const size_t batch = x_t.size();
    if (batch == 0 || ts.size() != batch || eps_target.size() != batch)
        throw std::invalid_argument("loss_and_param_grad: batch size mismatch");
    grad = Vec::Zero(num_params());
    const size_t n_layers = weights_.size();
    double loss = 0.0;

    std::vector<Vec> acts(n_layers + 1);
    for (size_t s = 0; s < batch; ++s) {
        const Vec emb = time_embedding(ts[s]);
        Vec input(dim_ + emb.size());
        input.head(dim_) = x_t[s];
        input.tail(emb.size()) = emb;

        acts[0] = input;
        for (size_t l = 0; l < n_layers; ++l) {
            Vec z = weights_[l] * acts[l] + biases_[l];
            acts[l + 1] = (l + 1 == n_layers) ? z : z.array().tanh().matrix();
        }
        const Vec residual = acts[n_layers] - eps_target[s];
        loss += residual.squaredNorm();

        Vec delta = (2.0 / static_cast<double>(batch)) * residual;
        int offset = static_cast<int>(grad.size());
        for (size_t l = n_layers; l-- > 0;) {
            if (l + 1 != n_layers)
                delta = delta.cwiseProduct(Vec::Ones(delta.size()) - acts[l + 1].cwiseProduct(acts[l + 1]));
            const int nw = static_cast<int>(weights_[l].size());
            const int nb = static_cast<int>(biases_[l].size());
            offset -= nw + nb;
            // Row-major weight layout matches get_params/set_params.
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(
                grad.data() + offset, weights_[l].rows(), weights_[l].cols());
            gw += delta * acts[l].transpose();
            Eigen::Map<Vec> gb(grad.data() + offset + nw, nb);
            gb += delta;
            delta = weights_[l].transpose() * delta;
        }
    }
    return loss / static_cast<double>(batch);
}

TrainReport train_denoiser(DenoiserNet& net, const std::vector<Vec>& data, const Schedule& schedule,
                           const TrainConfig& cfg) {
    if (data.empty()) throw std::invalid_argument("train_denoiser: empty dataset");
    for (const Vec& x : data)
        if (x.size() != net.dim()) throw std::invalid_argument("train_denoiser: data dimension mismatch");
    if (cfg.epochs < 0 || cfg.steps_per_epoch < 0 || cfg.batch_size < 1)
        throw std::invalid_argument("train_denoiser: bad optimizer config");

    TrainReport report;
    Rng rng(cfg.seed);
    Vec params = net.get_params();
    Vec m = Vec::Zero(params.size());
    Vec v = Vec::Zero(params.size());
    const double beta1 = 0.9, beta2 = 0.999, eps_adam = 1e-8;
    int step = 0;

    std::vector<Vec> x_batch(cfg.batch_size);
    std::vector<int> t_batch(cfg.batch_size);
    std::vector<Vec> eps_batch(cfg.batch_size);
    Vec grad;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int it = 0; it < cfg.steps_per_epoch; ++it) {
            for (int b = 0; b < cfg.batch_size; ++b) {
                const Vec& x0 = data[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(data.size()) - 1))];
                const int t = rng.uniform_int(1, schedule.T);
                const Vec noise = rng.normal_vec(net.dim());
                const double ab = schedule.alpha_bar(t);
                x_batch[b] = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
                t_batch[b] = t;
                eps_batch[b] = noise;
            }
            const double loss = net.loss_and_param_grad(x_batch, t_batch, eps_batch, grad);
            if (!std::isfinite(loss))
                throw numerical_error("train_denoiser: loss diverged at epoch " + std::to_string(epoch) +
                                      " step " + std::to_string(it));
            ++step;
            const double bc1 = 1.0 - std::pow(beta1, step);
            const double bc2 = 1.0 - std::pow(beta2, step);
            m = beta1 * m + (1.0 - beta1) * grad;
            v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
            const Vec denom = ((v / bc2).cwiseSqrt().array() + eps_adam).matrix();
            params -= cfg.lr * (m / bc1).cwiseQuotient(denom);
            net.set_params(params);
            epoch_loss += loss;
        }
        if (cfg.steps_per_epoch > 0) report.epoch_loss.push_back(epoch_loss / cfg.steps_per_epoch);
    }
    return report;
}

Vec net_score(const DenoiserNet& net, const Vec& x, int t, const Schedule& schedule) {
    if (t < 1 || t > schedule.T) throw std::invalid_argument("net_score: t out of [1, T]");
    return -net.eps(x, t) / std::sqrt(1.0 - schedule.alpha_bar(t));
}

Vec net_jvp(const DenoiserNet& net, const Vec& x, int t, const Vec& v, const Schedule& schedule) {
    if (t < 1 || t > schedule.T) throw std::invalid_argument("net_jvp: t out of [1, T]");
    return -net.eps_jvp(x, t, v) / std::sqrt(1.0 - schedule.alpha_bar(t));
}

NetScoreField::NetScoreField(DenoiserNet net, Schedule schedule)
    : net_(std::move(net)), schedule_(std::move(schedule)) {
    schedule_.validate();
    if (net_.t_max() != schedule_.T)
        throw std::invalid_argument("NetScoreField: net t_max does not match schedule T");
}

double NetScoreField::score_scale(int t) const {
    return -1.0 / std::sqrt(1.0 - schedule_.alpha_bar(t));
}

Vec NetScoreField::score(const Vec& x, int t) const {
    check_time(t);
    return score_scale(t) * net_.eps(x, t);
}

Vec NetScoreField::jvp(const Vec& x, int t, const Vec& v) const {
    check_time(t);
    return score_scale(t) * net_.eps_jvp(x, t, v);
}

Vec NetScoreField::vjp(const Vec& x, int t, const Vec& w) const {
    check_time(t);
    return score_scale(t) * net_.eps_input_grad(x, t, w);
}

Vec NetScoreField::grad_jvp_form(const Vec& x, int t, const Vec& u, const Vec& v) const {
    check_time(t);
    return score_scale(t) * net_.eps_grad_form(x, t, u, v);
}

namespace {
constexpr char kNetMagic[8] = {'S', 'G', 'E', 'O', 'N', 'E', 'T', '1'};

void write_i32(std::ostream& out, int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
int32_t read_i32(std::istream& in) {
    int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
} // namespace

void save_net(const DenoiserNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_net: cannot open " + path);
    out.write(kNetMagic, 8);
    write_i32(out, net.dim());
    write_i32(out, net.t_max());
    write_i32(out, net.arch().time_emb_dim);
    write_i32(out, static_cast<int32_t>(net.arch().hidden.size()));
    for (int h : net.arch().hidden) write_i32(out, h);
    const Vec p = net.get_params();
    write_i32(out, static_cast<int32_t>(p.size()));
    out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_net: write failed for " + path);
}

DenoiserNet load_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_net: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kNetMagic, 8) != 0)
        throw std::runtime_error("load_net: bad magic in " + path);
    const int dim = read_i32(in);
    const int t_max = read_i32(in);
    DenoiserNet::Arch arch;
    arch.time_emb_dim = read_i32(in);
    const int n_hidden = read_i32(in);
    if (n_hidden < 0 || n_hidden > 64) throw std::runtime_error("load_net: corrupt hidden layer count");
    arch.hidden.resize(static_cast<size_t>(n_hidden));
    for (int i = 0; i < n_hidden; ++i) arch.hidden[static_cast<size_t>(i)] = read_i32(in);
    DenoiserNet net(dim, t_max, arch, /*seed=*/0);
    const int n_params = read_i32(in);
    if (n_params != net.num_params()) throw std::runtime_error("load_net: parameter count mismatch");
    Vec p(n_params);
    in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(n_params * sizeof(double)));
    if (!in) throw std::runtime_error("load_net: truncated file " + path);
    net.set_params(p);
    return net;
}

} // namespace scoregeo
