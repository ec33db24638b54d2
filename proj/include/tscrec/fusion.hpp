#pragma once

#include <Eigen/Dense>

namespace tscrec {

// Image-text fusion: an elu-activated dense projection of the frame feature
// to width d, then an elu-activated dense layer over [textual ; visual].
struct FusionParams {
    Eigen::MatrixXd w_visual;   // d x visual_dim
    Eigen::VectorXd b_visual;   // d
    Eigen::MatrixXd w_combine;  // d x 2d
    Eigen::VectorXd b_combine;  // d

    Eigen::Index output_size() const { return w_combine.rows(); }
    Eigen::Index visual_dim() const { return w_visual.cols(); }

    static FusionParams zeros(Eigen::Index visual_dim, Eigen::Index d);
};

struct FusionTrace {
    Eigen::VectorXd visual_in;       // raw frame feature
    Eigen::VectorXd visual_pre;      // pre-activation of the projection
    Eigen::VectorXd visual_proj;     // elu(visual_pre)
    Eigen::VectorXd textual;         // text-side input
    Eigen::VectorXd combine_pre;     // pre-activation of the combiner
    Eigen::VectorXd output;
};

double elu(double x);

Eigen::VectorXd project_visual(const FusionParams& params, const Eigen::VectorXd& visual,
                               FusionTrace* trace = nullptr);

Eigen::VectorXd fuse(const FusionParams& params, const Eigen::VectorXd& textual,
                     const Eigen::VectorXd& visual_proj, FusionTrace* trace = nullptr);

// Backward through the combiner; fills dL/dtextual and dL/dvisual_proj.
void fuse_backward(const FusionParams& params, const FusionTrace& trace,
                   const Eigen::VectorXd& doutput, Eigen::VectorXd& dtextual,
                   Eigen::VectorXd& dvisual_proj, FusionParams& grad);

// Backward through the projection (gradients w.r.t. the raw feature are not
// needed; frame features are data).
void project_visual_backward(const FusionParams& params, const FusionTrace& trace,
                             const Eigen::VectorXd& dvisual_proj, FusionParams& grad);

}  // namespace tscrec
