#include "mcpd/neural.hpp"

#include "mcpd/errors.hpp"
#include "mcpd/rng.hpp"

#include <cmath>
#include <utility>

namespace mcpd {

namespace {

constexpr double kProbFloor = 1e-7;

void fill_uniform(Eigen::MatrixXd& m, double scale, Rng& rng) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.uniform(-scale, scale);
    }
}

void fill_uniform(Eigen::VectorXd& v, double scale, Rng& rng) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = rng.uniform(-scale, scale);
    }
}

LstmGate init_gate(Eigen::Index hidden, Eigen::Index in, Rng& rng, double bias_init) {
    LstmGate g;
    g.wx.resize(hidden, in);
    g.wh.resize(hidden, hidden);
    fill_uniform(g.wx, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    fill_uniform(g.wh, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    g.b = Eigen::VectorXd::Constant(hidden, bias_init);
    return g;
}

Eigen::MatrixXd sigmoid_mat(const Eigen::MatrixXd& z) {
    // 1/(1+exp(-z)) stated via tanh to stay stable at both tails.
    return (0.5 * (z.array() * 0.5).tanh() + 0.5).matrix();
}

void check_shapes(const NetParams& net) {
    if (net.enc1.W.rows() != net.enc1.b.size() || net.enc2.W.rows() != net.enc2.b.size() ||
        net.enc2.W.cols() != net.enc1.W.rows()) {
        throw ArgumentError("grade encoder layer shapes are inconsistent");
    }
    const Eigen::Index h = net.lstm.hidden_dim();
    const Eigen::Index d = net.lstm.in_dim();
    for (const LstmGate* g : {&net.lstm.input, &net.lstm.forget, &net.lstm.output, &net.lstm.candidate}) {
        if (g->wx.rows() != h || g->wx.cols() != d || g->wh.rows() != h || g->wh.cols() != h ||
            g->b.size() != h) {
            throw ArgumentError("LSTM gate shapes are inconsistent");
        }
    }
    if (net.head.w.size() != h) {
        throw ArgumentError("sigmoid head dimension does not match the LSTM hidden size");
    }
    if (net.enc2.W.rows() > d) {
        throw ArgumentError("encoder output exceeds the LSTM input dimension");
    }
}

}  // namespace

NetParams init_net(Eigen::Index grade_dim, Eigen::Index ffn_hidden, Eigen::Index d_num,
                   Eigen::Index d_text, Eigen::Index lstm_hidden, Rng& rng) {
    if (grade_dim <= 0 || ffn_hidden <= 0 || d_num <= 0 || d_text <= 0 || lstm_hidden <= 0) {
        throw ArgumentError("all model dimensions must be positive");
    }
    NetParams net;
    net.enc1.W.resize(ffn_hidden, grade_dim);
    fill_uniform(net.enc1.W, 1.0 / std::sqrt(static_cast<double>(grade_dim)), rng);
    net.enc1.b = Eigen::VectorXd::Zero(ffn_hidden);
    net.enc2.W.resize(d_num, ffn_hidden);
    fill_uniform(net.enc2.W, 1.0 / std::sqrt(static_cast<double>(ffn_hidden)), rng);
    net.enc2.b = Eigen::VectorXd::Zero(d_num);

    const Eigen::Index in = d_num + d_text;
    net.lstm.input = init_gate(lstm_hidden, in, rng, 0.0);
    net.lstm.forget = init_gate(lstm_hidden, in, rng, 1.0);
    net.lstm.output = init_gate(lstm_hidden, in, rng, 0.0);
    net.lstm.candidate = init_gate(lstm_hidden, in, rng, 0.0);

    net.head.w.resize(lstm_hidden);
    fill_uniform(net.head.w, 1.0 / std::sqrt(static_cast<double>(lstm_hidden)), rng);
    net.head.b = 0.0;
    return net;
}

NetParams zeros_like(const NetParams& shape) {
    NetParams z;
    z.enc1.W = Eigen::MatrixXd::Zero(shape.enc1.W.rows(), shape.enc1.W.cols());
    z.enc1.b = Eigen::VectorXd::Zero(shape.enc1.b.size());
    z.enc2.W = Eigen::MatrixXd::Zero(shape.enc2.W.rows(), shape.enc2.W.cols());
    z.enc2.b = Eigen::VectorXd::Zero(shape.enc2.b.size());
    auto zero_gate = [](const LstmGate& g) {
        LstmGate out;
        out.wx = Eigen::MatrixXd::Zero(g.wx.rows(), g.wx.cols());
        out.wh = Eigen::MatrixXd::Zero(g.wh.rows(), g.wh.cols());
        out.b = Eigen::VectorXd::Zero(g.b.size());
        return out;
    };
    z.lstm.input = zero_gate(shape.lstm.input);
    z.lstm.forget = zero_gate(shape.lstm.forget);
    z.lstm.output = zero_gate(shape.lstm.output);
    z.lstm.candidate = zero_gate(shape.lstm.candidate);
    z.head.w = Eigen::VectorXd::Zero(shape.head.w.size());
    z.head.b = 0.0;
    return z;
}

std::vector<ParamBlock> param_blocks(NetParams& net) {
    std::vector<ParamBlock> blocks;
    blocks.reserve(18);
    auto add_mat = [&](const char* name, Eigen::MatrixXd& m) {
        blocks.emplace_back(name, m.data(), m.rows(), m.cols());
    };
    auto add_vec = [&](const char* name, Eigen::VectorXd& v) {
        blocks.emplace_back(name, v.data(), v.size(), 1);
    };
    add_mat("enc1.W", net.enc1.W);
    add_vec("enc1.b", net.enc1.b);
    add_mat("enc2.W", net.enc2.W);
    add_vec("enc2.b", net.enc2.b);
    auto add_gate = [&](const std::string& prefix, LstmGate& g) {
        blocks.emplace_back(prefix + ".wx", g.wx.data(), g.wx.rows(), g.wx.cols());
        blocks.emplace_back(prefix + ".wh", g.wh.data(), g.wh.rows(), g.wh.cols());
        blocks.emplace_back(prefix + ".b", g.b.data(), g.b.size(), 1);
    };
    add_gate("lstm.input", net.lstm.input);
    add_gate("lstm.forget", net.lstm.forget);
    add_gate("lstm.output", net.lstm.output);
    add_gate("lstm.candidate", net.lstm.candidate);
    add_vec("head.w", net.head.w);
    blocks.emplace_back("head.b", &net.head.b, 1, 1);
    return blocks;
}

std::vector<ConstParamBlock> param_blocks(const NetParams& net) {
    std::vector<ConstParamBlock> blocks;
    blocks.reserve(18);
    for (const ParamBlock& b : param_blocks(const_cast<NetParams&>(net))) {
        blocks.emplace_back(b.name, b.value.data(), b.value.rows(), b.value.cols());
    }
    return blocks;
}

Eigen::VectorXd ffn_forward(const Eigen::VectorXd& x, const DenseLayer& l1, const DenseLayer& l2) {
    if (l1.W.cols() != x.size() || l1.W.rows() != l1.b.size() || l2.W.cols() != l1.W.rows() ||
        l2.W.rows() != l2.b.size()) {
        throw ArgumentError("feedforward layer shapes do not match the input");
    }
    const Eigen::VectorXd a1 = ((l1.W * x + l1.b).array().max(0.0)).matrix();
    return l2.W * a1 + l2.b;
}

Eigen::VectorXd lstm_forward(const std::vector<Eigen::VectorXd>& seq, const LstmParams& params) {
    if (seq.empty()) {
        throw ArgumentError("LSTM input sequence is empty");
    }
    const Eigen::Index h = params.hidden_dim();
    const Eigen::Index d = params.in_dim();
    Eigen::VectorXd hidden = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd cell = Eigen::VectorXd::Zero(h);
    for (const Eigen::VectorXd& x : seq) {
        if (x.size() != d) {
            throw ArgumentError("LSTM input dimension mismatch");
        }
        const Eigen::MatrixXd i = sigmoid_mat(params.input.wx * x + params.input.wh * hidden + params.input.b);
        const Eigen::MatrixXd f = sigmoid_mat(params.forget.wx * x + params.forget.wh * hidden + params.forget.b);
        const Eigen::MatrixXd o = sigmoid_mat(params.output.wx * x + params.output.wh * hidden + params.output.b);
        const Eigen::MatrixXd g =
            (params.candidate.wx * x + params.candidate.wh * hidden + params.candidate.b).array().tanh().matrix();
        cell = (f.array() * cell.array() + i.array() * g.array()).matrix();
        hidden = (o.array() * cell.array().tanh()).matrix();
    }
    return hidden;
}

double sigmoid(double z) { return 0.5 * std::tanh(0.5 * z) + 0.5; }

double bce_loss(double p, double y, double pos_weight) {
    const double q = std::min(std::max(p, kProbFloor), 1.0 - kProbFloor);
    return -(pos_weight * y * std::log(q) + (1.0 - y) * std::log1p(-q));
}

Eigen::VectorXd stack_forward(const NetParams& net, const std::vector<Eigen::MatrixXd>& grades,
                              const std::vector<Eigen::MatrixXd>& text,
                              const Eigen::MatrixXd& weights, StackCache* cache) {
    check_shapes(net);
    const size_t T = grades.size();
    if (T == 0 || text.size() != T) {
        throw ArgumentError("grade and text sequences must be non-empty and equally long");
    }
    const Eigen::Index B = grades.front().cols();
    if (weights.rows() != static_cast<Eigen::Index>(T) || weights.cols() != B) {
        throw ArgumentError("attention weight matrix must be periods x batch");
    }
    const Eigen::Index h = net.hidden_dim();
    const Eigen::Index d_num = net.num_dim();
    const Eigen::Index d_text = net.text_dim();

    if (cache) {
        cache->grades = grades;
        cache->text = text;
        cache->weights = weights;
        cache->a1.resize(T);
        cache->scaled.resize(T);
        cache->gate_i.resize(T);
        cache->gate_f.resize(T);
        cache->gate_o.resize(T);
        cache->gate_g.resize(T);
        cache->cell.resize(T);
        cache->tanh_c.resize(T);
        cache->hidden.assign(T + 1, Eigen::MatrixXd::Zero(h, B));
    }

    Eigen::MatrixXd hidden = Eigen::MatrixXd::Zero(h, B);
    Eigen::MatrixXd cell = Eigen::MatrixXd::Zero(h, B);
    for (size_t t = 0; t < T; ++t) {
        const Eigen::MatrixXd& g_t = grades[t];
        const Eigen::MatrixXd& x_t = text[t];
        if (g_t.rows() != net.grade_dim() || x_t.rows() != d_text || g_t.cols() != B ||
            x_t.cols() != B) {
            throw ArgumentError("period feature shapes do not match the model");
        }
        Eigen::MatrixXd a1 =
            ((net.enc1.W * g_t).colwise() + net.enc1.b).array().max(0.0).matrix();
        Eigen::MatrixXd fused(d_num + d_text, B);
        fused.topRows(d_num) = (net.enc2.W * a1).colwise() + net.enc2.b;
        fused.bottomRows(d_text) = x_t;
        const Eigen::MatrixXd scaled =
            fused.array().rowwise() * weights.row(static_cast<Eigen::Index>(t)).array();

        const Eigen::MatrixXd pre_i =
            ((net.lstm.input.wx * scaled + net.lstm.input.wh * hidden).colwise() + net.lstm.input.b);
        const Eigen::MatrixXd pre_f =
            ((net.lstm.forget.wx * scaled + net.lstm.forget.wh * hidden).colwise() + net.lstm.forget.b);
        const Eigen::MatrixXd pre_o =
            ((net.lstm.output.wx * scaled + net.lstm.output.wh * hidden).colwise() + net.lstm.output.b);
        const Eigen::MatrixXd pre_g =
            ((net.lstm.candidate.wx * scaled + net.lstm.candidate.wh * hidden).colwise() +
             net.lstm.candidate.b);

        const Eigen::MatrixXd gi = sigmoid_mat(pre_i);
        const Eigen::MatrixXd gf = sigmoid_mat(pre_f);
        const Eigen::MatrixXd go = sigmoid_mat(pre_o);
        const Eigen::MatrixXd gg = pre_g.array().tanh().matrix();

        cell = (gf.array() * cell.array() + gi.array() * gg.array()).matrix();
        const Eigen::MatrixXd tc = cell.array().tanh().matrix();
        hidden = (go.array() * tc.array()).matrix();

        if (cache) {
            cache->a1[t] = std::move(a1);
            cache->scaled[t] = scaled;
            cache->gate_i[t] = gi;
            cache->gate_f[t] = gf;
            cache->gate_o[t] = go;
            cache->gate_g[t] = gg;
            cache->cell[t] = cell;
            cache->tanh_c[t] = tc;
            cache->hidden[t + 1] = hidden;
        }
    }

    Eigen::VectorXd z = (net.head.w.transpose() * hidden).transpose();
    z.array() += net.head.b;
    Eigen::VectorXd p(B);
    for (Eigen::Index j = 0; j < B; ++j) {
        p[j] = sigmoid(z[j]);
    }
    if (cache) {
        cache->z = z;
        cache->p = p;
    }
    return p;
}

double stack_loss(const Eigen::VectorXd& p, const Eigen::VectorXd& y, double pos_weight) {
    if (p.size() != y.size() || p.size() == 0) {
        throw ArgumentError("probability and label vectors must be non-empty and equally long");
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        total += bce_loss(p[j], y[j], pos_weight);
    }
    return total;
}

NetParams stack_backward(const NetParams& net, const StackCache& cache, const Eigen::VectorXd& y,
                         double pos_weight) {
    check_shapes(net);
    const size_t T = cache.scaled.size();
    if (T == 0 || cache.hidden.size() != T + 1 || cache.grades.size() != T ||
        cache.text.size() != T || cache.p.size() != y.size()) {
        throw InternalError("forward cache does not match the backward call");
    }
    const Eigen::Index B = cache.p.size();
    const Eigen::Index h = net.hidden_dim();
    const Eigen::Index d_num = net.num_dim();
    if (cache.hidden.back().rows() != h || cache.hidden.back().cols() != B ||
        cache.scaled.front().rows() != net.lstm.in_dim()) {
        throw InternalError("forward cache shapes do not match the parameters");
    }

    NetParams grad = zeros_like(net);

    // d(sum of losses)/dz, the fused sigmoid + cross-entropy form.
    Eigen::VectorXd dz(B);
    for (Eigen::Index j = 0; j < B; ++j) {
        dz[j] = pos_weight * y[j] * (cache.p[j] - 1.0) + (1.0 - y[j]) * cache.p[j];
    }

    grad.head.w = cache.hidden.back() * dz;
    grad.head.b = dz.sum();

    Eigen::MatrixXd dh = net.head.w * dz.transpose();
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(h, B);

    for (size_t t = T; t-- > 0;) {
        const Eigen::MatrixXd& gi = cache.gate_i[t];
        const Eigen::MatrixXd& gf = cache.gate_f[t];
        const Eigen::MatrixXd& go = cache.gate_o[t];
        const Eigen::MatrixXd& gg = cache.gate_g[t];
        const Eigen::MatrixXd& tc = cache.tanh_c[t];
        const Eigen::MatrixXd c_prev = t == 0 ? Eigen::MatrixXd::Zero(h, B) : cache.cell[t - 1];

        dc.array() += dh.array() * go.array() * (1.0 - tc.array().square());
        const Eigen::MatrixXd dpre_o =
            (dh.array() * tc.array() * go.array() * (1.0 - go.array())).matrix();
        const Eigen::MatrixXd dpre_f =
            (dc.array() * c_prev.array() * gf.array() * (1.0 - gf.array())).matrix();
        const Eigen::MatrixXd dpre_i =
            (dc.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
        const Eigen::MatrixXd dpre_g =
            (dc.array() * gi.array() * (1.0 - gg.array().square())).matrix();

        const Eigen::MatrixXd& x_scaled = cache.scaled[t];
        const Eigen::MatrixXd& h_prev = cache.hidden[t];

        grad.lstm.input.wx += dpre_i * x_scaled.transpose();
        grad.lstm.input.wh += dpre_i * h_prev.transpose();
        grad.lstm.input.b += dpre_i.rowwise().sum();
        grad.lstm.forget.wx += dpre_f * x_scaled.transpose();
        grad.lstm.forget.wh += dpre_f * h_prev.transpose();
        grad.lstm.forget.b += dpre_f.rowwise().sum();
        grad.lstm.output.wx += dpre_o * x_scaled.transpose();
        grad.lstm.output.wh += dpre_o * h_prev.transpose();
        grad.lstm.output.b += dpre_o.rowwise().sum();
        grad.lstm.candidate.wx += dpre_g * x_scaled.transpose();
        grad.lstm.candidate.wh += dpre_g * h_prev.transpose();
        grad.lstm.candidate.b += dpre_g.rowwise().sum();

        Eigen::MatrixXd dscaled = net.lstm.input.wx.transpose() * dpre_i +
                                  net.lstm.forget.wx.transpose() * dpre_f +
                                  net.lstm.output.wx.transpose() * dpre_o +
                                  net.lstm.candidate.wx.transpose() * dpre_g;
        dh = net.lstm.input.wh.transpose() * dpre_i + net.lstm.forget.wh.transpose() * dpre_f +
             net.lstm.output.wh.transpose() * dpre_o + net.lstm.candidate.wh.transpose() * dpre_g;
        dc = (dc.array() * gf.array()).matrix();

        // Undo the constant attention scaling, then split off the encoded
        // grade slice; the text slice has no parameters upstream.
        const Eigen::MatrixXd dfused =
            dscaled.array().rowwise() * cache.weights.row(static_cast<Eigen::Index>(t)).array();
        const Eigen::MatrixXd dnum = dfused.topRows(d_num);

        grad.enc2.W += dnum * cache.a1[t].transpose();
        grad.enc2.b += dnum.rowwise().sum();
        const Eigen::MatrixXd da1 = net.enc2.W.transpose() * dnum;
        const Eigen::MatrixXd dz1 =
            (da1.array() * (cache.a1[t].array() > 0.0).cast<double>()).matrix();
        grad.enc1.W += dz1 * cache.grades[t].transpose();
        grad.enc1.b += dz1.rowwise().sum();
    }
    return grad;
}

NetParams numeric_gradients(const NetParams& net, const std::vector<Eigen::MatrixXd>& grades,
                            const std::vector<Eigen::MatrixXd>& text,
                            const Eigen::MatrixXd& weights, const Eigen::VectorXd& y,
                            double pos_weight, double h) {
    NetParams work = net;
    NetParams grad = zeros_like(net);
    std::vector<ParamBlock> work_blocks = param_blocks(work);
    std::vector<ParamBlock> grad_blocks = param_blocks(grad);
    for (size_t b = 0; b < work_blocks.size(); ++b) {
        auto& value = work_blocks[b].value;
        for (Eigen::Index i = 0; i < value.size(); ++i) {
            const double saved = value.data()[i];
            value.data()[i] = saved + h;
            const double up = stack_loss(stack_forward(work, grades, text, weights), y, pos_weight);
            value.data()[i] = saved - h;
            const double down = stack_loss(stack_forward(work, grades, text, weights), y, pos_weight);
            value.data()[i] = saved;
            grad_blocks[b].value.data()[i] = (up - down) / (2.0 * h);
        }
    }
    return grad;
}

double max_relative_error(const NetParams& analytic, const NetParams& numeric) {
    const std::vector<ConstParamBlock> a = param_blocks(analytic);
    const std::vector<ConstParamBlock> n = param_blocks(numeric);
    double worst = 0.0;
    for (size_t b = 0; b < a.size(); ++b) {
        if (a[b].value.rows() != n[b].value.rows() || a[b].value.cols() != n[b].value.cols()) {
            throw ArgumentError("gradient block shapes differ: " + a[b].name);
        }
        for (Eigen::Index i = 0; i < a[b].value.size(); ++i) {
            const double x = a[b].value.data()[i];
            const double z = n[b].value.data()[i];
            const double denom = std::max({std::abs(x), std::abs(z), 1e-6});
            worst = std::max(worst, std::abs(x - z) / denom);
        }
    }
    return worst;
}

double grad_check(const NetParams& net, const std::vector<Eigen::MatrixXd>& grades,
                  const std::vector<Eigen::MatrixXd>& text, const Eigen::MatrixXd& weights,
                  const Eigen::VectorXd& y, double pos_weight, double h) {
    StackCache cache;
    stack_forward(net, grades, text, weights, &cache);
    const NetParams analytic = stack_backward(net, cache, y, pos_weight);
    const NetParams numeric = numeric_gradients(net, grades, text, weights, y, pos_weight, h);
    return max_relative_error(analytic, numeric);
}

AdamState init_adam(const NetParams& shape) {
    AdamState state;
    state.m = zeros_like(shape);
    state.v = zeros_like(shape);
    state.step = 0;
    return state;
}

void adam_step(NetParams& params, const NetParams& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    std::vector<ParamBlock> p = param_blocks(params);
    const std::vector<ConstParamBlock> g = param_blocks(grads);
    std::vector<ParamBlock> m = param_blocks(state.m);
    std::vector<ParamBlock> v = param_blocks(state.v);
    for (size_t b = 0; b < p.size(); ++b) {
        if (!g[b].value.allFinite()) {
            throw TrainingError("non-finite gradient in parameter block " + g[b].name);
        }
        if (g[b].value.rows() != p[b].value.rows() || g[b].value.cols() != p[b].value.cols()) {
            throw TrainingError("gradient shape mismatch in parameter block " + g[b].name);
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t b = 0; b < p.size(); ++b) {
        m[b].value = beta1 * m[b].value + (1.0 - beta1) * g[b].value;
        v[b].value =
            (beta2 * v[b].value.array() + (1.0 - beta2) * g[b].value.array().square()).matrix();
        const Eigen::ArrayXXd m_hat = m[b].value.array() / bc1;
        const Eigen::ArrayXXd v_hat = v[b].value.array() / bc2;
        p[b].value.array() -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

}  // namespace mcpd
