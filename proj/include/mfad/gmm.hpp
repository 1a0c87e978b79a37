#pragma once

// Gaussian mixture density for two-dimensional velocity features, fitted by
// expectation-maximization.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace mfad {

using Vec2 = std::array<double, 2>;

// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Cov2 {
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;

    double det() const noexcept { return xx * yy - xy * xy; }
    bool operator==(const Cov2&) const = default;
};

struct GmmFitOptions {
    std::uint32_t n_components = 5;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    std::uint32_t max_iter = 200;
    // Minimum eigenvalue enforced on every component covariance.
    double reg_floor = 1e-6;
};

struct GmmModel {
    std::vector<double> weights;
    std::vector<Vec2> means;
    std::vector<Cov2> covariances;
    std::uint32_t iterations = 0;
    double log_likelihood = 0.0;           // mean per-sample, at the returned parameters
    std::vector<double> log_likelihood_trace;  // one entry per E-step, starting at the initial parameters

    std::size_t n_components() const noexcept { return weights.size(); }
    bool operator==(const GmmModel&) const = default;
};

// Throws TooFewSamples when samples.size() < n_components, InvalidRecord on
// non-finite input, DegenerateComponent when a component loses all
// responsibility mass.
GmmModel fit_gmm(std::span<const Vec2> samples, const GmmFitOptions& options);

// Clamps the smaller eigenvalue(s) of `c` to at least `floor`. Leaves `c`
// untouched when it already satisfies the floor.
Cov2 floor_eigenvalues(const Cov2& c, double floor);

// log N(x; mean, cov).
double gaussian_log_density(const Vec2& x, const Vec2& mean, const Cov2& cov);

// Negative log-likelihood of x under the mixture; larger is more anomalous.
double gmm_score(const GmmModel& model, const Vec2& x);

// Mean log-likelihood of a sample set.
double gmm_mean_log_likelihood(const GmmModel& model, std::span<const Vec2> samples);

}  // namespace mfad
