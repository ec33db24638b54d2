#include "tscrec/lstm.hpp"

#include <stdexcept>

namespace tscrec {

LstmCell LstmCell::zeros(Eigen::Index n_in, Eigen::Index h) {
    LstmCell c;
    c.w_x = Eigen::MatrixXd::Zero(4 * h, n_in);
    c.w_h = Eigen::MatrixXd::Zero(4 * h, h);
    c.b = Eigen::VectorXd::Zero(4 * h);
    return c;
}

void LstmTrace::clear() {
    inputs.clear();
    gate_i.clear();
    gate_f.clear();
    gate_g.clear();
    gate_o.clear();
    cell.clear();
    hidden.clear();
}

namespace {
inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& a) {
    return 1.0 / (1.0 + (-a).exp());
}
}  // namespace

void lstm_forward(const LstmCell& cell, const std::vector<Eigen::VectorXd>& inputs,
                  LstmTrace& trace) {
    const Eigen::Index h = cell.hidden_size();
    trace.clear();
    trace.inputs = inputs;

    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
    for (const auto& x : inputs) {
        if (x.size() != cell.input_size())
            throw std::invalid_argument("lstm_forward: input size mismatch");
        const Eigen::VectorXd a = cell.w_x * x + cell.w_h * h_prev + cell.b;
        Eigen::VectorXd gi = sigmoid(a.segment(0, h).array());
        Eigen::VectorXd gf = sigmoid(a.segment(h, h).array());
        Eigen::VectorXd gg = a.segment(2 * h, h).array().tanh();
        Eigen::VectorXd go = sigmoid(a.segment(3 * h, h).array());
        Eigen::VectorXd c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
        Eigen::VectorXd hh = go.cwiseProduct(c.array().tanh().matrix());

        trace.gate_i.push_back(std::move(gi));
        trace.gate_f.push_back(std::move(gf));
        trace.gate_g.push_back(std::move(gg));
        trace.gate_o.push_back(std::move(go));
        trace.cell.push_back(c);
        trace.hidden.push_back(hh);
        c_prev = std::move(c);
        h_prev = std::move(hh);
    }
}

std::vector<Eigen::VectorXd> lstm_backward(const LstmCell& cell, const LstmTrace& trace,
                                           const std::vector<Eigen::VectorXd>& dhidden,
                                           LstmCell& grad) {
    const Eigen::Index h = cell.hidden_size();
    const int T = static_cast<int>(trace.inputs.size());
    if (static_cast<int>(dhidden.size()) != T)
        throw std::invalid_argument("lstm_backward: dhidden length mismatch");

    std::vector<Eigen::VectorXd> dx(T);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd da(4 * h);

    for (int t = T - 1; t >= 0; --t) {
        const Eigen::ArrayXd dh = (dhidden[t] + dh_next).array();
        const Eigen::ArrayXd i = trace.gate_i[t].array();
        const Eigen::ArrayXd f = trace.gate_f[t].array();
        const Eigen::ArrayXd g = trace.gate_g[t].array();
        const Eigen::ArrayXd o = trace.gate_o[t].array();
        const Eigen::ArrayXd tanh_c = trace.cell[t].array().tanh();

        const Eigen::ArrayXd dout = dh * tanh_c;
        const Eigen::ArrayXd dc = dh * o * (1.0 - tanh_c.square()) + dc_next.array();
        const Eigen::ArrayXd di = dc * g;
        const Eigen::ArrayXd dg = dc * i;
        dc_next = (dc * f).matrix();

        da.segment(0, h) = (di * i * (1.0 - i)).matrix();
        if (t > 0) {
            const Eigen::ArrayXd df = dc * trace.cell[t - 1].array();
            da.segment(h, h) = (df * f * (1.0 - f)).matrix();
        } else {
            da.segment(h, h).setZero();  // c_{-1} = 0
        }
        da.segment(2 * h, h) = (dg * (1.0 - g.square())).matrix();
        da.segment(3 * h, h) = (dout * o * (1.0 - o)).matrix();

        grad.w_x.noalias() += da * trace.inputs[t].transpose();
        if (t > 0) grad.w_h.noalias() += da * trace.hidden[t - 1].transpose();
        grad.b += da;

        dx[t] = cell.w_x.transpose() * da;
        dh_next = cell.w_h.transpose() * da;
    }
    return dx;
}

}  // namespace tscrec
