#include "hoa/shape_model.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace hoa;

namespace {

std::vector<LandmarkConfiguration> synthetic_configs(std::size_t n, std::uint64_t seed, int rank = kConfigDim)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd base(kConfigDim);
    for (int d = 0; d < kConfigDim; ++d) base[d] = 30.0 * g(rng);
    Eigen::MatrixXd dirs(kConfigDim, rank);
    for (int c = 0; c < rank; ++c)
        for (int d = 0; d < kConfigDim; ++d) dirs(d, c) = g(rng) * (4.0 / (1.0 + c));
    std::vector<LandmarkConfiguration> out;
    for (std::size_t s = 0; s < n; ++s) {
        Eigen::VectorXd coef(rank);
        for (int c = 0; c < rank; ++c) coef[c] = g(rng);
        out.push_back(base + dirs * coef);
    }
    return out;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("configuration layout")
{
    LandmarkSet s;
    for (int id = 1; id <= 16; ++id) s.set(id, {double(id), 10.0 + id, 20.0 + id});
    const LandmarkConfiguration x = to_configuration(s);
    CHECK(x.size() == 48);
    CHECK(x[0] == 1.0);
    CHECK(x[1] == 11.0);
    CHECK(x[47] == 36.0);
    CHECK(to_landmark_set(x) == s);
    s.erase(4);
    CHECK_THROWS_AS(to_configuration(s), ValidationError);
}

TEST_CASE("eigenvalues match a Jacobi oracle")
{
    const auto configs = synthetic_configs(60, 1);
    const ShapeModel m = fit_shape_model(configs, ModeSelector::all_nonzero());

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(kConfigDim);
    for (const auto& c : configs) mean += c;
    mean /= double(configs.size());
    std::vector<double> cov(kConfigDim * kConfigDim, 0.0);
    for (const auto& c : configs)
        for (int r = 0; r < kConfigDim; ++r)
            for (int q = 0; q < kConfigDim; ++q)
                cov[std::size_t(r * kConfigDim + q)] += (c[r] - mean[r]) * (c[q] - mean[q]) / double(configs.size() - 1);
    const auto eig = oracle::jacobi_eigenvalues(cov, kConfigDim);
    REQUIRE(m.n_modes() == kConfigDim);
    for (int k = 0; k < kConfigDim; ++k) CHECK(m.mode_variances()[k] == doctest::Approx(eig[std::size_t(k)]).epsilon(1e-8));
    double trace = 0;
    for (int d = 0; d < kConfigDim; ++d) trace += cov[std::size_t(d * kConfigDim + d)];
    CHECK(m.total_variance() == doctest::Approx(trace).epsilon(1e-10));
    CHECK(m.variance_fraction_retained() == doctest::Approx(1.0));
}

TEST_CASE("orthonormal components, exact reconstruction and orthogonal residuals")
{
    const auto configs = synthetic_configs(80, 2);
    const ShapeModel m = fit_shape_model(configs, ModeSelector::all_nonzero());
    const Eigen::MatrixXd& W = m.components();
    CHECK(max_abs(W.transpose() * W - Eigen::MatrixXd::Identity(W.cols(), W.cols())) < 1e-9);
    for (const auto& x : configs) CHECK((m.reconstruct(m.project(x)) - x).cwiseAbs().maxCoeff() < 1e-9);

    for (int k = 0; k < W.cols(); ++k) {
        const Eigen::Index top = [&] {
            Eigen::Index idx;
            W.col(k).cwiseAbs().maxCoeff(&idx);
            return idx;
        }();
        CHECK(W(top, k) > 0);
        if (k > 0) CHECK(m.mode_variances()[k] <= m.mode_variances()[k - 1]);
    }

    // Rank-deficient model: out-of-sample residual is orthogonal to every mode.
    const auto few = synthetic_configs(12, 3);
    const ShapeModel r = fit_shape_model(few, ModeSelector::all_nonzero());
    CHECK(r.n_modes() == 11);
    for (const auto& x : few) CHECK((r.reconstruct(r.project(x)) - x).cwiseAbs().maxCoeff() < 1e-9);
    const auto outside = synthetic_configs(5, 4);
    for (const auto& x : outside) {
        const Eigen::VectorXd residual = x - r.reconstruct(r.project(x));
        CHECK((r.components().transpose() * residual).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("two configurations give one mode along their difference")
{
    Eigen::VectorXd a = Eigen::VectorXd::Zero(kConfigDim), b = Eigen::VectorXd::Zero(kConfigDim);
    b[0] = 2.0;
    const LandmarkConfiguration pair[] = {a, b};
    const ShapeModel m = fit_shape_model(pair, ModeSelector::all_nonzero());
    REQUIRE(m.n_modes() == 1);
    CHECK(m.mean()[0] == 1.0);
    CHECK(m.components()(0, 0) == doctest::Approx(1.0));
    CHECK(m.mode_variances()[0] == doctest::Approx(2.0));
    CHECK(m.project(b)[0] == doctest::Approx(1.0));
}

TEST_CASE("mode selection")
{
    const auto configs = synthetic_configs(40, 5);
    CHECK(fit_shape_model(configs, ModeSelector::fixed(7)).n_modes() == 7);
    const ShapeModel t = fit_shape_model(configs, ModeSelector::variance_threshold(0.9));
    CHECK(t.variance_fraction_retained() >= 0.9 - 1e-12);
    const ShapeModel fewer = fit_shape_model(configs, ModeSelector::fixed(t.n_modes() - 1));
    CHECK(fewer.variance_fraction_retained() < 0.9);
    const auto low = synthetic_configs(40, 6, 3);
    CHECK(fit_shape_model(low, ModeSelector::all_nonzero()).n_modes() == 3);
    CHECK_THROWS_AS(fit_shape_model(low, ModeSelector::fixed(4)), ValidationError);
    CHECK_THROWS_AS(fit_shape_model(std::span(low).first(1), ModeSelector::all_nonzero()), ValidationError);
    std::vector<LandmarkConfiguration> same(3, low[0]);
    CHECK_THROWS_AS(fit_shape_model(same, ModeSelector::all_nonzero()), ValidationError);
}

TEST_CASE("length checks")
{
    const auto configs = synthetic_configs(10, 7);
    const ShapeModel m = fit_shape_model(configs, ModeSelector::fixed(3));
    CHECK_THROWS_AS(m.reconstruct(Eigen::VectorXd::Zero(4)), ValidationError);
    CHECK_THROWS_AS(m.project(Eigen::VectorXd::Zero(47)), ValidationError);
}

TEST_CASE("json round trip")
{
    const auto configs = synthetic_configs(30, 8);
    const ShapeModel m = fit_shape_model(configs, ModeSelector::fixed(5));
    const ShapeModel back = ShapeModel::from_json(m.to_json());
    CHECK(back.mean() == m.mean());
    CHECK(back.components() == m.components());
    CHECK(back.mode_variances() == m.mode_variances());
    CHECK(back.total_variance() == m.total_variance());
    CHECK_THROWS_AS(ShapeModel::from_json("{}"), ValidationError);
}

TEST_CASE("iterative fit")
{
    const auto configs = synthetic_configs(50, 9);
    const ShapeModel m = fit_shape_model(configs, ModeSelector::fixed(10));
    const LandmarkConfiguration target = m.reconstruct(m.project(configs[3]));
    const ShapeParams b0 = ShapeParams::Zero(m.n_modes());

    OraclePredictor full(target, 1.0);
    const auto one = iterate_fit(m, full, b0, 3);
    REQUIRE(one.size() == 4);
    CHECK((one[0].b - b0).norm() == 0.0);
    for (std::size_t t = 1; t < one.size(); ++t) CHECK((one[t].x - target).cwiseAbs().maxCoeff() < 1e-9);

    OraclePredictor none(target, 0.0);
    const ShapeParams start = m.project(configs[7]);
    for (const auto& step : iterate_fit(m, none, start, 5)) CHECK(step.b == start);

    OraclePredictor over(target, 7.0);
    const auto clamped = iterate_fit(m, over, b0, 1);
    CHECK((clamped[1].x - target).cwiseAbs().maxCoeff() < 1e-9);

    OraclePredictor half(target, 0.5);
    const auto geo = iterate_fit(m, half, b0, 4);
    const Eigen::VectorXd bt = m.project(target);
    for (std::size_t t = 0; t < geo.size(); ++t)
        CHECK((geo[t].b - bt).norm() == doctest::Approx(bt.norm() * std::pow(0.5, double(t))).epsilon(1e-9));

    ZeroPredictor zero;
    for (const auto& step : iterate_fit(m, zero, start, 3)) CHECK(step.b == start);
}

TEST_CASE("noisy oracle reduces the error and is reproducible")
{
    const auto configs = synthetic_configs(50, 10);
    const ShapeModel m = fit_shape_model(configs, ModeSelector::fixed(8));
    const LandmarkConfiguration target = configs[0];
    const ShapeParams b0 = ShapeParams::Zero(m.n_modes());
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        NoisyOraclePredictor p(target, 1.0, 0.5, seed);
        const auto run = iterate_fit(m, p, b0, 10);
        improved += landmark_error(run.back().x, target).mean < landmark_error(run.front().x, target).mean;
    }
    CHECK(improved >= 95);

    NoisyOraclePredictor a(target, 1.0, 0.5, 42), b(target, 1.0, 0.5, 42);
    CHECK(iterate_fit(m, a, b0, 5).back().b == iterate_fit(m, b, b0, 5).back().b);
}

TEST_CASE("chi(3) quantile")
{
    CHECK(chi3_quantile(0.95) == doctest::Approx(2.7954834).epsilon(1e-7));
    CHECK(chi3_cdf(chi3_quantile(0.5)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(chi3_cdf(0.0) == 0.0);
    CHECK(derive_sigma(2.7954834) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK_THROWS_AS(derive_sigma(-1.0), ValidationError);
}

TEST_CASE("patch sampler covers 95% within the radius")
{
    const Vec3 p{10, -4, 2};
    const double radius = 5.0;
    const auto patches = sample_patch_centers(p, radius, 200000, 99, lm::AC);
    std::size_t inside = 0;
    bool sides = true;
    for (const auto& s : patches) {
        sides &= s.side == 16;
        inside += norm(s.center - p) <= radius;
    }
    CHECK(sides);
    CHECK(double(inside) / double(patches.size()) == doctest::Approx(0.95).epsilon(0.004));
    CHECK(patches[0].landmark_id == lm::AC);
    const auto again = sample_patch_centers(p, radius, 10, 99);
    CHECK(again[3].center == patches[3].center);
}

TEST_CASE("landmark error")
{
    Eigen::VectorXd a = Eigen::VectorXd::Zero(kConfigDim), b = a;
    b.segment<3>(0) << 3, 4, 0;
    const LandmarkErrors e = landmark_error(a, b);
    CHECK(e.per_landmark[0] == 5.0);
    CHECK(e.mean == doctest::Approx(5.0 / 16));
}
