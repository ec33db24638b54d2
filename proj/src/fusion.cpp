#include "tscrec/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace tscrec {
namespace {

Eigen::VectorXd elu_vec(const Eigen::VectorXd& x) {
    Eigen::VectorXd y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = elu(x[i]);
    return y;
}

// d elu(x)/dx expressed through the pre-activation.
Eigen::VectorXd elu_grad(const Eigen::VectorXd& pre) {
    Eigen::VectorXd g(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i)
        g[i] = pre[i] > 0.0 ? 1.0 : std::exp(pre[i]);
    return g;
}

}  // namespace

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

FusionParams FusionParams::zeros(Eigen::Index visual_dim, Eigen::Index d) {
    FusionParams p;
    p.w_visual = Eigen::MatrixXd::Zero(d, visual_dim);
    p.b_visual = Eigen::VectorXd::Zero(d);
    p.w_combine = Eigen::MatrixXd::Zero(d, 2 * d);
    p.b_combine = Eigen::VectorXd::Zero(d);
    return p;
}

Eigen::VectorXd project_visual(const FusionParams& params, const Eigen::VectorXd& visual,
                               FusionTrace* trace) {
    if (visual.size() != params.visual_dim())
        throw std::invalid_argument("project_visual: feature width mismatch");
    Eigen::VectorXd pre = params.w_visual * visual + params.b_visual;
    Eigen::VectorXd out = elu_vec(pre);
    if (trace) {
        trace->visual_in = visual;
        trace->visual_pre = std::move(pre);
        trace->visual_proj = out;
    }
    return out;
}

Eigen::VectorXd fuse(const FusionParams& params, const Eigen::VectorXd& textual,
                     const Eigen::VectorXd& visual_proj, FusionTrace* trace) {
    const Eigen::Index d = params.output_size();
    if (textual.size() != d || visual_proj.size() != d)
        throw std::invalid_argument("fuse: input width mismatch");
    Eigen::VectorXd cat(2 * d);
    cat << textual, visual_proj;
    Eigen::VectorXd pre = params.w_combine * cat + params.b_combine;
    Eigen::VectorXd out = elu_vec(pre);
    if (trace) {
        trace->textual = textual;
        trace->combine_pre = std::move(pre);
        trace->output = out;
    }
    return out;
}

void fuse_backward(const FusionParams& params, const FusionTrace& trace,
                   const Eigen::VectorXd& doutput, Eigen::VectorXd& dtextual,
                   Eigen::VectorXd& dvisual_proj, FusionParams& grad) {
    const Eigen::Index d = params.output_size();
    const Eigen::VectorXd dpre = doutput.cwiseProduct(elu_grad(trace.combine_pre));
    Eigen::VectorXd cat(2 * d);
    cat << trace.textual, trace.visual_proj;
    grad.w_combine.noalias() += dpre * cat.transpose();
    grad.b_combine += dpre;
    const Eigen::VectorXd dcat = params.w_combine.transpose() * dpre;
    dtextual = dcat.head(d);
    dvisual_proj = dcat.tail(d);
}

void project_visual_backward(const FusionParams& params, const FusionTrace& trace,
                             const Eigen::VectorXd& dvisual_proj, FusionParams& grad) {
    const Eigen::VectorXd dpre = dvisual_proj.cwiseProduct(elu_grad(trace.visual_pre));
    grad.w_visual.noalias() += dpre * trace.visual_in.transpose();
    grad.b_visual += dpre;
    (void)params;
}

}  // namespace tscrec
