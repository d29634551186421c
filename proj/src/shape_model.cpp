#include "hoa/shape_model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hoa {
namespace {

void check_config(const Eigen::VectorXd& x, const char* what)
{
    if (x.size() != kConfigDim)
        throw ValidationError(std::string(what) + ": expected length 48, got " + std::to_string(x.size()));
    if (!x.allFinite()) throw ValidationError(std::string(what) + ": non-finite entry");
}

} // namespace

LandmarkConfiguration to_configuration(const LandmarkSet& set)
{
    if (!set.complete()) set.require(set.missing(), "landmark configuration");
    LandmarkConfiguration x(kConfigDim);
    for (int id = 1; id <= kLandmarkCount; ++id) {
        const Vec3 p = set.at(id);
        for (int a = 0; a < 3; ++a) x[3 * (id - 1) + a] = p[a];
    }
    return x;
}

LandmarkSet to_landmark_set(const LandmarkConfiguration& x)
{
    check_config(x, "landmark configuration");
    LandmarkSet set;
    for (int id = 1; id <= kLandmarkCount; ++id) set.set(id, {x[3 * (id - 1)], x[3 * (id - 1) + 1], x[3 * (id - 1) + 2]});
    return set;
}

ShapeModel::ShapeModel(Eigen::VectorXd mean, Eigen::MatrixXd components, Eigen::VectorXd variances, double total_variance)
    : mean_(std::move(mean)), components_(std::move(components)), variances_(std::move(variances)),
      total_variance_(total_variance)
{
    if (components_.rows() != mean_.size() || variances_.size() != components_.cols())
        throw ValidationError("shape model: inconsistent mean/components/variances sizes");
    if (!(total_variance_ > 0.0)) throw ValidationError("shape model: total variance must be positive");
}

double ShapeModel::variance_fraction_retained() const { return variances_.sum() / total_variance_; }

LandmarkConfiguration ShapeModel::reconstruct(const ShapeParams& b) const
{
    if (b.size() != components_.cols())
        throw ValidationError("shape parameters: expected length " + std::to_string(components_.cols()) + ", got " +
                              std::to_string(b.size()));
    return mean_ + components_ * b;
}

ShapeParams ShapeModel::project(const LandmarkConfiguration& x) const
{
    if (x.size() != mean_.size()) throw ValidationError("project: configuration length mismatch");
    return components_.transpose() * (x - mean_);
}

std::string ShapeModel::to_json() const
{
    nlohmann::json doc;
    doc["n_landmarks"] = kLandmarkCount;
    doc["dimension"] = dimension();
    doc["n_modes"] = n_modes();
    std::vector<int> order(kLandmarkCount);
    for (int id = 1; id <= kLandmarkCount; ++id) order[std::size_t(id - 1)] = id;
    doc["catalog_order"] = order;
    doc["mean"] = std::vector<double>(mean_.data(), mean_.data() + mean_.size());
    std::vector<double> rows;
    rows.reserve(std::size_t(components_.size()));
    for (Eigen::Index r = 0; r < components_.rows(); ++r)
        for (Eigen::Index c = 0; c < components_.cols(); ++c) rows.push_back(components_(r, c));
    doc["components"] = rows;
    doc["variances"] = std::vector<double>(variances_.data(), variances_.data() + variances_.size());
    doc["total_variance"] = total_variance_;
    doc["variance_fraction_retained"] = variance_fraction_retained();
    return doc.dump(1) + "\n";
}

ShapeModel ShapeModel::from_json(std::string_view text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        const int dim = doc.at("dimension").get<int>();
        const int modes = doc.at("n_modes").get<int>();
        const auto mean = doc.at("mean").get<std::vector<double>>();
        const auto comps = doc.at("components").get<std::vector<double>>();
        const auto vars = doc.at("variances").get<std::vector<double>>();
        if (int(mean.size()) != dim || int(comps.size()) != dim * modes || int(vars.size()) != modes)
            throw ValidationError("shape model JSON: array sizes do not match dimension/n_modes");
        Eigen::MatrixXd w(dim, modes);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < modes; ++c) w(r, c) = comps[std::size_t(r) * std::size_t(modes) + std::size_t(c)];
        return ShapeModel(Eigen::Map<const Eigen::VectorXd>(mean.data(), dim), w,
                          Eigen::Map<const Eigen::VectorXd>(vars.data(), modes), doc.at("total_variance").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("shape model JSON: ") + e.what());
    }
}

ShapeModel fit_shape_model(std::span<const LandmarkConfiguration> configs, ModeSelector selector)
{
    if (configs.size() < 2) throw ValidationError("shape model fit needs at least 2 configurations");
    const Eigen::Index dim = configs.front().size();
    for (const auto& x : configs) {
        if (x.size() != dim) throw ValidationError("shape model fit: configurations differ in length");
        if (!x.allFinite()) throw ValidationError("shape model fit: non-finite coordinate");
    }
    const Eigen::Index n = Eigen::Index(configs.size());

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& x : configs) mean += x;
    mean /= double(n);

    Eigen::MatrixXd centered(n, dim);
    for (Eigen::Index s = 0; s < n; ++s) centered.row(s) = (configs[std::size_t(s)] - mean).transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / double(n - 1);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw ValidationError("shape model fit: eigendecomposition failed");

    // Eigen returns ascending order.
    Eigen::VectorXd values = eig.eigenvalues().reverse();
    Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
    for (Eigen::Index m = 0; m < values.size(); ++m) values[m] = std::max(0.0, values[m]);

    const double total = values.sum();
    // Identical inputs leave only rounding noise from the mean.
    if (!(total > 1e-24 * (1.0 + mean.squaredNorm()))) throw ValidationError("shape model fit: zero total variance");

    const double tiny = values[0] * 1e-12;
    Eigen::Index positive = 0;
    while (positive < values.size() && values[positive] > tiny) ++positive;

    Eigen::Index keep = positive;
    switch (selector.kind) {
    case ModeSelector::Kind::Fixed:
        if (selector.count < 1 || selector.count > positive)
            throw ValidationError("shape model fit: requested " + std::to_string(selector.count) + " modes, " +
                                  std::to_string(positive) + " have nonzero variance");
        keep = selector.count;
        break;
    case ModeSelector::Kind::VarianceThreshold: {
        if (!(selector.threshold > 0.0 && selector.threshold <= 1.0))
            throw ValidationError("shape model fit: variance threshold must lie in (0, 1]");
        double cumulative = 0.0;
        keep = 0;
        while (keep < positive) {
            cumulative += values[keep];
            ++keep;
            if (cumulative / total >= selector.threshold - 1e-12) break;
        }
        break;
    }
    case ModeSelector::Kind::AllNonzero: break;
    }

    Eigen::MatrixXd w = vectors.leftCols(keep);
    for (Eigen::Index c = 0; c < keep; ++c) {
        Eigen::Index arg = 0;
        for (Eigen::Index r = 1; r < dim; ++r)
            if (std::abs(w(r, c)) > std::abs(w(arg, c))) arg = r;
        if (w(arg, c) < 0.0) w.col(c) *= -1.0;
    }
    return ShapeModel(mean, w, values.head(keep), total);
}

DisplacementPrediction LandmarkSpacePredictor::predict(const ShapeModel& model, const ShapeParams& b,
                                                       const LandmarkConfiguration& x)
{
    Output out = predict_landmarks(model, b, x);
    if (out.landmark_displacement.size() != model.dimension())
        throw ValidationError("landmark-space predictor returned a displacement of the wrong length");
    return {model.components().transpose() * out.landmark_displacement, std::move(out.confidence)};
}

OraclePredictor::OraclePredictor(LandmarkConfiguration target, double confidence)
    : target_(std::move(target)), confidence_(confidence)
{
}

DisplacementPrediction OraclePredictor::predict(const ShapeModel& model, const ShapeParams& b, const LandmarkConfiguration&)
{
    return {model.project(target_) - b, Eigen::VectorXd::Constant(model.n_modes(), confidence_)};
}

NoisyOraclePredictor::NoisyOraclePredictor(LandmarkConfiguration target, double noise_sd, double confidence,
                                           std::uint64_t seed)
    : target_(std::move(target)), noise_sd_(noise_sd), confidence_(confidence), rng_(seed)
{
}

DisplacementPrediction NoisyOraclePredictor::predict(const ShapeModel& model, const ShapeParams& b,
                                                     const LandmarkConfiguration&)
{
    std::normal_distribution<double> noise(0.0, noise_sd_);
    Eigen::VectorXd d = model.project(target_) - b;
    for (Eigen::Index m = 0; m < d.size(); ++m) d[m] += noise(rng_);
    return {d, Eigen::VectorXd::Constant(model.n_modes(), confidence_)};
}

DisplacementPrediction ZeroPredictor::predict(const ShapeModel& model, const ShapeParams&, const LandmarkConfiguration&)
{
    return {Eigen::VectorXd::Zero(model.n_modes()), Eigen::VectorXd::Zero(model.n_modes())};
}

std::vector<FitStep> iterate_fit(const ShapeModel& model, DisplacementPredictor& predictor, const ShapeParams& b0,
                                 int iterations)
{
    if (iterations < 0) throw ValidationError("iteration count must be non-negative");
    std::vector<FitStep> trajectory;
    trajectory.reserve(std::size_t(iterations) + 1);
    trajectory.push_back({b0, model.reconstruct(b0)});
    for (int t = 0; t < iterations; ++t) {
        const FitStep& cur = trajectory.back();
        DisplacementPrediction pred = predictor.predict(model, cur.b, cur.x);
        if (pred.displacement.size() != model.n_modes() || pred.confidence.size() != model.n_modes())
            throw ValidationError("predictor returned vectors of length " + std::to_string(pred.displacement.size()) +
                                  "/" + std::to_string(pred.confidence.size()) + ", model has " +
                                  std::to_string(model.n_modes()) + " modes");
        const Eigen::VectorXd p = pred.confidence.cwiseMax(0.0).cwiseMin(1.0);
        ShapeParams next = cur.b + p.cwiseProduct(pred.displacement);
        LandmarkConfiguration x = model.reconstruct(next);
        trajectory.push_back({std::move(next), std::move(x)});
    }
    return trajectory;
}

double chi3_cdf(double r)
{
    if (r <= 0.0) return 0.0;
    return std::erf(r / std::numbers::sqrt2) - std::sqrt(2.0 / std::numbers::pi) * r * std::exp(-0.5 * r * r);
}

double chi3_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("chi3 quantile needs p in (0, 1)");
    double lo = 0.0, hi = 1.0;
    while (chi3_cdf(hi) < p) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (chi3_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double derive_sigma(double radius_mm)
{
    if (!(radius_mm >= 0.0)) throw ValidationError("patch radius must be non-negative");
    static const double q95 = chi3_quantile(0.95);
    return radius_mm / q95;
}

std::vector<PatchSpec> sample_patch_centers(Vec3 landmark, double radius_mm, std::size_t count, std::uint64_t seed,
                                            int landmark_id)
{
    if (count < 1) throw ValidationError("patch sample count must be at least 1");
    const double sigma = derive_sigma(radius_mm);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<PatchSpec> out;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        const Vec3 delta{sigma * gauss(rng), sigma * gauss(rng), sigma * gauss(rng)};
        out.push_back({landmark + delta, kPatchSide, landmark_id});
    }
    return out;
}

LandmarkErrors landmark_error(const LandmarkConfiguration& predicted, const LandmarkConfiguration& truth)
{
    check_config(predicted, "predicted configuration");
    check_config(truth, "reference configuration");
    LandmarkErrors e;
    e.per_landmark.resize(kLandmarkCount);
    double sum = 0.0;
    for (int l = 0; l < kLandmarkCount; ++l) {
        const double err = (predicted.segment<3>(3 * l) - truth.segment<3>(3 * l)).norm();
        e.per_landmark[std::size_t(l)] = err;
        sum += err;
    }
    e.mean = sum / kLandmarkCount;
    return e;
}

} // namespace hoa
