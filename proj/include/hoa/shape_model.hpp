#pragma once

#include "hoa/landmarks.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hoa {

/// Concatenated (x, y, z) of all 16 landmarks in catalog id order, mm.
inline constexpr int kConfigDim = 3 * kLandmarkCount;

using LandmarkConfiguration = Eigen::VectorXd;
using ShapeParams = Eigen::VectorXd;

/// Throws ValidationError unless the set is complete.
LandmarkConfiguration to_configuration(const LandmarkSet& set);
LandmarkSet to_landmark_set(const LandmarkConfiguration& x);

/// How many principal modes a fit keeps.
struct ModeSelector {
    enum class Kind { Fixed, VarianceThreshold, AllNonzero };
    Kind kind = Kind::AllNonzero;
    int count = 0;
    double threshold = 1.0;

    static ModeSelector fixed(int n) { return {Kind::Fixed, n, 1.0}; }
    static ModeSelector variance_threshold(double tau) { return {Kind::VarianceThreshold, 0, tau}; }
    static ModeSelector all_nonzero() { return {}; }
};

/// Linear landmark shape space X = mean + W b with orthonormal W.
class ShapeModel {
public:
    ShapeModel() = default;
    ShapeModel(Eigen::VectorXd mean, Eigen::MatrixXd components, Eigen::VectorXd variances, double total_variance);

    int dimension() const { return int(mean_.size()); }
    int n_modes() const { return int(components_.cols()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& components() const { return components_; }
    const Eigen::VectorXd& mode_variances() const { return variances_; }
    double total_variance() const { return total_variance_; }
    double variance_fraction_retained() const;

    /// mean + W b. Throws ValidationError on a length mismatch.
    LandmarkConfiguration reconstruct(const ShapeParams& b) const;
    /// W^T (x - mean), the least-squares parameters of x.
    ShapeParams project(const LandmarkConfiguration& x) const;

    std::string to_json() const;
    static ShapeModel from_json(std::string_view text);

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd components_;
    Eigen::VectorXd variances_;
    double total_variance_ = 0.0;
};

/// PCA over training configurations: sample covariance with divisor N-1, modes by descending
/// eigenvalue, each mode's largest-magnitude entry made positive.
/// Throws ValidationError for fewer than 2 configurations, ragged input or zero total variance.
ShapeModel fit_shape_model(std::span<const LandmarkConfiguration> configs, ModeSelector selector);

struct DisplacementPrediction {
    Eigen::VectorXd displacement; // length n_modes
    Eigen::VectorXd confidence;   // length n_modes, clamped to [0, 1] by the fitter
};

/// Source of per-iteration shape-parameter updates.
class DisplacementPredictor {
public:
    virtual ~DisplacementPredictor() = default;
    virtual DisplacementPrediction predict(const ShapeModel& model, const ShapeParams& b,
                                           const LandmarkConfiguration& x) = 0;
};

/// Predictor that reasons in landmark space; its displacement is mapped to parameters by W^T.
class LandmarkSpacePredictor : public DisplacementPredictor {
public:
    struct Output {
        Eigen::VectorXd landmark_displacement; // length 48
        Eigen::VectorXd confidence;            // length n_modes
    };
    virtual Output predict_landmarks(const ShapeModel& model, const ShapeParams& b, const LandmarkConfiguration& x) = 0;

    DisplacementPrediction predict(const ShapeModel& model, const ShapeParams& b,
                                   const LandmarkConfiguration& x) final;
};

/// d = project(target) - b with a fixed confidence.
class OraclePredictor : public DisplacementPredictor {
public:
    OraclePredictor(LandmarkConfiguration target, double confidence = 1.0);
    DisplacementPrediction predict(const ShapeModel& model, const ShapeParams& b, const LandmarkConfiguration& x) override;

private:
    LandmarkConfiguration target_;
    double confidence_;
};

/// Oracle displacement plus i.i.d. zero-mean Gaussian noise (per parameter), seeded.
class NoisyOraclePredictor : public DisplacementPredictor {
public:
    NoisyOraclePredictor(LandmarkConfiguration target, double noise_sd, double confidence, std::uint64_t seed);
    DisplacementPrediction predict(const ShapeModel& model, const ShapeParams& b, const LandmarkConfiguration& x) override;

private:
    LandmarkConfiguration target_;
    double noise_sd_;
    double confidence_;
    std::mt19937_64 rng_;
};

class ZeroPredictor : public DisplacementPredictor {
public:
    DisplacementPrediction predict(const ShapeModel& model, const ShapeParams& b, const LandmarkConfiguration& x) override;
};

struct FitStep {
    ShapeParams b;
    LandmarkConfiguration x;
};

/// Runs b <- b + P (.) d for `iterations` steps, reconstructing x after each update.
/// The returned trajectory has iterations + 1 entries, starting with b0.
std::vector<FitStep> iterate_fit(const ShapeModel& model, DisplacementPredictor& predictor, const ShapeParams& b0,
                                 int iterations);

/// 95th percentile of the norm of a standard 3D Gaussian (chi distribution, 3 dof).
double chi3_quantile(double p);
double chi3_cdf(double r);

/// Isotropic sigma such that 95% of 3D displacements fall within radius r. Throws on negative r.
double derive_sigma(double radius_mm);

inline constexpr int kPatchSide = 16;

struct PatchSpec {
    Vec3 center;
    int side = kPatchSide;
    int landmark_id = 0;
};

/// Centers p + delta with delta ~ N(0, sigma^2 I), sigma = derive_sigma(radius). Deterministic per seed.
std::vector<PatchSpec> sample_patch_centers(Vec3 landmark, double radius_mm, std::size_t count, std::uint64_t seed,
                                            int landmark_id = 0);

struct LandmarkErrors {
    std::vector<double> per_landmark; // mm, catalog order
    double mean = 0.0;
};

LandmarkErrors landmark_error(const LandmarkConfiguration& predicted, const LandmarkConfiguration& truth);

} // namespace hoa
