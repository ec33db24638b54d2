#include <cmath>

#include "doctest.h"
#include "oracle.hpp"
#include "tscrec/fusion.hpp"
#include "tscrec/rng.hpp"

using namespace tscrec;

namespace {

FusionParams random_fusion(int visual_dim, int d, std::uint64_t seed) {
    FusionParams p = FusionParams::zeros(visual_dim, d);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < p.w_visual.size(); ++i)
        p.w_visual.data()[i] = rng.uniform(-0.9, 0.9);
    for (Eigen::Index i = 0; i < p.b_visual.size(); ++i) p.b_visual(i) = rng.uniform(-0.5, 0.5);
    for (Eigen::Index i = 0; i < p.w_combine.size(); ++i)
        p.w_combine.data()[i] = rng.uniform(-0.9, 0.9);
    for (Eigen::Index i = 0; i < p.b_combine.size(); ++i)
        p.b_combine(i) = rng.uniform(-0.5, 0.5);
    return p;
}

}  // namespace

TEST_CASE("elu is identity above zero and a saturating exponential below") {
    CHECK(elu(2.5) == 2.5);
    CHECK(elu(0.0) == 0.0);
    CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-15));
    CHECK(elu(-5.0) > -1.0);
    // exp(-50) underflows below one ulp of 1.0, so the saturation is exact here
    CHECK(elu(-50.0) >= -1.0);
    CHECK(elu(-50.0) == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("fusion output matches the scalar oracle") {
    FusionParams p = random_fusion(5, 4, 61);
    Rng rng(62);
    Eigen::VectorXd textual(4), visual(5);
    for (int i = 0; i < 4; ++i) textual(i) = rng.uniform(-2, 2);
    for (int i = 0; i < 5; ++i) visual(i) = rng.uniform(-2, 2);

    Eigen::VectorXd got = fuse(p, textual, project_visual(p, visual));
    oracle::Vec want = oracle::fuse(p, oracle::from_eigen(textual), oracle::from_eigen(visual));
    REQUIRE(got.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(got(i) == doctest::Approx(want[i]).epsilon(1e-13));
}

TEST_CASE("identity wiring passes the textual half straight through") {
    // w_combine = [I | 0], zero biases, so fuse(textual, anything) = elu(textual)
    FusionParams p = FusionParams::zeros(3, 4);
    for (int i = 0; i < 4; ++i) p.w_combine(i, i) = 1.0;
    Eigen::VectorXd textual(4), visual(3);
    textual << 0.5, -0.5, 2.0, 0.0;
    visual << 9.0, -9.0, 3.0;
    Eigen::VectorXd out = fuse(p, textual, project_visual(p, visual));
    CHECK(out(0) == 0.5);
    CHECK(out(1) == doctest::Approx(std::exp(-0.5) - 1.0).epsilon(1e-15));
    CHECK(out(2) == 2.0);
    CHECK(out(3) == 0.0);
}

TEST_CASE("a zero frame feature is a valid input, not an error") {
    FusionParams p = random_fusion(5, 4, 63);
    Eigen::VectorXd textual(4);
    textual << 1, 2, 3, 4;
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
    Eigen::VectorXd out = fuse(p, textual, project_visual(p, zero));
    CHECK(out.size() == 4);
    CHECK(out.allFinite());
    // projecting zero still applies the bias, so the result need not be zero
    Eigen::VectorXd proj = project_visual(p, zero);
    for (int i = 0; i < 4; ++i) CHECK(proj(i) == elu(p.b_visual(i)));
}

TEST_CASE("mismatched widths are rejected") {
    FusionParams p = random_fusion(5, 4, 64);
    Eigen::VectorXd textual(4), bad_visual(3), bad_textual(2), visual(5);
    visual.setOnes();
    textual.setOnes();
    bad_visual.setOnes();
    bad_textual.setOnes();
    CHECK_THROWS_AS(project_visual(p, bad_visual), std::invalid_argument);
    CHECK_THROWS_AS(fuse(p, bad_textual, project_visual(p, visual)), std::invalid_argument);
}

TEST_CASE("fusion gradients agree with finite differences across the elu kink") {
    FusionParams p = random_fusion(4, 3, 65);
    Rng rng(66);
    Eigen::VectorXd textual(3), visual(4), w(3);
    for (int i = 0; i < 3; ++i) textual(i) = rng.uniform(-2, 2);
    for (int i = 0; i < 4; ++i) visual(i) = rng.uniform(-2, 2);
    for (int i = 0; i < 3; ++i) w(i) = rng.uniform(-1, 1);

    auto objective = [&]() { return w.dot(fuse(p, textual, project_visual(p, visual))); };

    FusionTrace trace;
    project_visual(p, visual, &trace);
    fuse(p, textual, trace.visual_proj, &trace);
    FusionParams grad = FusionParams::zeros(4, 3);
    Eigen::VectorXd dtextual, dvisual_proj;
    fuse_backward(p, trace, w, dtextual, dvisual_proj, grad);
    project_visual_backward(p, trace, dvisual_proj, grad);

    for (auto [mat, gmat] : {std::pair<Eigen::MatrixXd*, Eigen::MatrixXd*>{
                                 &p.w_visual, &grad.w_visual},
                             {&p.w_combine, &grad.w_combine}}) {
        for (Eigen::Index i = 0; i < mat->size(); ++i) {
            double numeric = oracle::central_diff(mat->data() + i, 1e-6, objective);
            CHECK(oracle::rel_err(gmat->data()[i], numeric) < 1e-5);
        }
    }
    for (auto [vec, gvec] : {std::pair<Eigen::VectorXd*, Eigen::VectorXd*>{
                                 &p.b_visual, &grad.b_visual},
                             {&p.b_combine, &grad.b_combine}}) {
        for (Eigen::Index i = 0; i < vec->size(); ++i) {
            double numeric = oracle::central_diff(vec->data() + i, 1e-6, objective);
            CHECK(oracle::rel_err((*gvec)(i), numeric) < 1e-5);
        }
    }
    for (Eigen::Index i = 0; i < textual.size(); ++i) {
        double numeric = oracle::central_diff(textual.data() + i, 1e-6, objective);
        CHECK(oracle::rel_err(dtextual(i), numeric) < 1e-5);
    }
}
