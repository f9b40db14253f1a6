#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace mcpd {

class Rng;

// Minimal dense numerics for the risk model: a two-layer feedforward encoder
// for the grade slice, a single-layer LSTM over the weighted fused sequence,
// and a sigmoid head. Everything is 64-bit and hand-differentiated; batched
// variants lay examples out as matrix columns so training runs on GEMMs.

struct DenseLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;  // out
};

struct LstmGate {
    Eigen::MatrixXd wx;  // hidden x input
    Eigen::MatrixXd wh;  // hidden x hidden
    Eigen::VectorXd b;   // hidden
};

struct LstmParams {
    LstmGate input;
    LstmGate forget;
    LstmGate output;
    LstmGate candidate;

    Eigen::Index hidden_dim() const { return input.wx.rows(); }
    Eigen::Index in_dim() const { return input.wx.cols(); }
};

struct SigmoidHead {
    Eigen::VectorXd w;  // hidden
    double b = 0.0;
};

// Every trainable tensor of the model. Gradients and Adam moments reuse the
// same struct so block iteration stays in one place.
struct NetParams {
    DenseLayer enc1;  // grade encoder, hidden layer
    DenseLayer enc2;  // grade encoder, output layer
    LstmParams lstm;
    SigmoidHead head;

    Eigen::Index grade_dim() const { return enc1.W.cols(); }
    Eigen::Index num_dim() const { return enc2.W.rows(); }
    Eigen::Index text_dim() const { return lstm.in_dim() - num_dim(); }
    Eigen::Index hidden_dim() const { return lstm.hidden_dim(); }
};

// Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init; biases zero except
// the forget gate's, which starts at +1.
NetParams init_net(Eigen::Index grade_dim, Eigen::Index ffn_hidden, Eigen::Index d_num,
                   Eigen::Index d_text, Eigen::Index lstm_hidden, Rng& rng);

NetParams zeros_like(const NetParams& shape);

// Named view over one parameter tensor; data stays owned by the NetParams.
struct ParamBlock {
    std::string name;
    Eigen::Map<Eigen::MatrixXd> value;

    ParamBlock(std::string n, double* data, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(data, rows, cols) {}
};

struct ConstParamBlock {
    std::string name;
    Eigen::Map<const Eigen::MatrixXd> value;

    ConstParamBlock(std::string n, const double* data, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(data, rows, cols) {}
};

std::vector<ParamBlock> param_blocks(NetParams& net);
std::vector<ConstParamBlock> param_blocks(const NetParams& net);

// layer2(relu(layer1(x)))
Eigen::VectorXd ffn_forward(const Eigen::VectorXd& x, const DenseLayer& l1, const DenseLayer& l2);

// Standard gates from zero initial state; returns the final hidden vector.
Eigen::VectorXd lstm_forward(const std::vector<Eigen::VectorXd>& seq, const LstmParams& params);

double sigmoid(double z);

// -[pos_weight * y * log p + (1 - y) * log(1 - p)] with p clamped to
// [1e-7, 1 - 1e-7].
double bce_loss(double p, double y, double pos_weight);

// Forward cache for one batch (columns = examples) over T periods.
struct StackCache {
    std::vector<Eigen::MatrixXd> grades;   // T of grade_dim x B
    std::vector<Eigen::MatrixXd> text;     // T of text_dim x B
    Eigen::MatrixXd weights;               // T x B attention weights
    std::vector<Eigen::MatrixXd> a1;       // relu output of enc1
    std::vector<Eigen::MatrixXd> scaled;   // weighted fused input to the LSTM
    std::vector<Eigen::MatrixXd> gate_i, gate_f, gate_o, gate_g;
    std::vector<Eigen::MatrixXd> cell;     // c_t
    std::vector<Eigen::MatrixXd> tanh_c;   // tanh(c_t)
    std::vector<Eigen::MatrixXd> hidden;   // T+1 entries, hidden[0] = 0
    Eigen::VectorXd z;                     // head pre-activation per example
    Eigen::VectorXd p;                     // sigmoid(z)
};

// Full stack over a batch: per period, encode the grade slice, concatenate
// the text slice, scale the fused vector by its attention weight, then run
// the LSTM and head. grades[t] is grade_dim x B, text[t] is text_dim x B,
// weights is T x B. Returns per-example probabilities; fills *cache when
// given.
Eigen::VectorXd stack_forward(const NetParams& net, const std::vector<Eigen::MatrixXd>& grades,
                              const std::vector<Eigen::MatrixXd>& text,
                              const Eigen::MatrixXd& weights, StackCache* cache = nullptr);

// Sum over the batch of bce_loss(p_j, y_j, pos_weight).
double stack_loss(const Eigen::VectorXd& p, const Eigen::VectorXd& y, double pos_weight);

// Exact gradients of stack_loss w.r.t. every parameter, backpropagated
// through the LSTM recurrence, the attention scaling (weights are constants)
// and the grade encoder. The cache must come from stack_forward on the same
// parameters.
NetParams stack_backward(const NetParams& net, const StackCache& cache, const Eigen::VectorXd& y,
                         double pos_weight);

// Central finite differences of stack_loss over every parameter.
NetParams numeric_gradients(const NetParams& net, const std::vector<Eigen::MatrixXd>& grades,
                            const std::vector<Eigen::MatrixXd>& text,
                            const Eigen::MatrixXd& weights, const Eigen::VectorXd& y,
                            double pos_weight, double h = 1e-5);

// max over entries of |a - b| / max(|a|, |b|, 1e-6)
double max_relative_error(const NetParams& analytic, const NetParams& numeric);

// Analytic-vs-numeric comparison on one batch; the acceptance suite requires
// this to stay at or below 1e-4.
double grad_check(const NetParams& net, const std::vector<Eigen::MatrixXd>& grades,
                  const std::vector<Eigen::MatrixXd>& text, const Eigen::MatrixXd& weights,
                  const Eigen::VectorXd& y, double pos_weight, double h = 1e-5);

struct AdamState {
    NetParams m;
    NetParams v;
    long step = 0;
};

AdamState init_adam(const NetParams& shape);

// Bias-corrected Adam, applied elementwise per parameter block.
void adam_step(NetParams& params, const NetParams& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace mcpd
