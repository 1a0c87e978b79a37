#include "mfad/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mfad/error.hpp"
#include "mfad/rng.hpp"

namespace mfad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double squared_distance(const Vec2& a, const Vec2& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

// k-means++ style seeding of component means.
std::vector<Vec2> seed_means(std::span<const Vec2> samples, std::uint32_t k, Rng& rng) {
    std::vector<Vec2> centres;
    centres.push_back(samples[uniform_below(rng, samples.size())]);
    std::vector<double> d2(samples.size(), std::numeric_limits<double>::infinity());
    while (centres.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(samples[i], centres.back()));
            total += d2[i];
        }
        std::size_t pick = samples.size() - 1;
        if (total > 0.0) {
            const double target = uniform_unit(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                acc += d2[i];
                if (target < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = uniform_below(rng, samples.size());
        }
        centres.push_back(samples[pick]);
    }
    return centres;
}

// E-step: fills log-responsibilities (row-major n x k) and returns the mean
// log-likelihood.
double expectation(const GmmModel& m, std::span<const Vec2> samples, std::vector<double>& log_resp) {
    const std::size_t k = m.n_components();
    log_resp.resize(samples.size() * k);
    std::vector<double> log_w(k);
    for (std::size_t j = 0; j < k; ++j) log_w[j] = m.weights[j] > 0.0 ? std::log(m.weights[j]) : kNegInf;

    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::span<double> row(log_resp.data() + i * k, k);
        for (std::size_t j = 0; j < k; ++j) {
            row[j] = log_w[j] == kNegInf ? kNegInf : log_w[j] + gaussian_log_density(samples[i], m.means[j], m.covariances[j]);
        }
        const double lse = log_sum_exp(row);
        for (double& r : row) r -= lse;
        total += lse;
    }
    return total / static_cast<double>(samples.size());
}

void maximization(GmmModel& m, std::span<const Vec2> samples, const std::vector<double>& log_resp, double floor) {
    const std::size_t k = m.n_components();
    const std::size_t n = samples.size();
    for (std::size_t j = 0; j < k; ++j) {
        double nk = 0.0;
        Vec2 mu{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::exp(log_resp[i * k + j]);
            nk += r;
            mu[0] += r * samples[i][0];
            mu[1] += r * samples[i][1];
        }
        if (!(nk > 1e-12 * static_cast<double>(n))) {
            throw Error(ErrorCode::DegenerateComponent,
                        "GMM component " + std::to_string(j) + " lost all responsibility mass");
        }
        mu[0] /= nk;
        mu[1] /= nk;
        Cov2 c{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::exp(log_resp[i * k + j]);
            const double dx = samples[i][0] - mu[0];
            const double dy = samples[i][1] - mu[1];
            c.xx += r * dx * dx;
            c.xy += r * dx * dy;
            c.yy += r * dy * dy;
        }
        c.xx /= nk;
        c.xy /= nk;
        c.yy /= nk;
        m.weights[j] = nk / static_cast<double>(n);
        m.means[j] = mu;
        m.covariances[j] = floor_eigenvalues(c, floor);
    }
    double wsum = 0.0;
    for (double w : m.weights) wsum += w;
    for (double& w : m.weights) w /= wsum;
}

}  // namespace

Cov2 floor_eigenvalues(const Cov2& c, double floor) {
    const double mid = 0.5 * (c.xx + c.yy);
    const double half = 0.5 * (c.xx - c.yy);
    const double rad = std::sqrt(half * half + c.xy * c.xy);
    const double lo = mid - rad;
    const double hi = mid + rad;
    if (lo >= floor && c.xx >= floor && c.yy >= floor) return c;
    if (rad == 0.0) {
        const double v = std::max(mid, floor);
        return {v, 0.0, v};
    }
    // Spectral projectors of a symmetric 2x2 matrix with distinct eigenvalues.
    const double a = std::max(lo, floor);
    const double b = std::max(hi, floor);
    const double inv = 1.0 / (lo - hi);
    // P_lo = (C - hi I) / (lo - hi), P_hi = I - P_lo
    const double plo_xx = (c.xx - hi) * inv;
    const double plo_xy = c.xy * inv;
    const double plo_yy = (c.yy - hi) * inv;
    Cov2 out{a * plo_xx + b * (1.0 - plo_xx), a * plo_xy - b * plo_xy, a * plo_yy + b * (1.0 - plo_yy)};
    out.xx = std::max(out.xx, floor);
    out.yy = std::max(out.yy, floor);
    return out;
}

double gaussian_log_density(const Vec2& x, const Vec2& mean, const Cov2& cov) {
    const double det = cov.det();
    const double dx = x[0] - mean[0];
    const double dy = x[1] - mean[1];
    // Quadratic form with the explicit 2x2 inverse.
    const double q = (cov.yy * dx * dx - 2.0 * cov.xy * dx * dy + cov.xx * dy * dy) / det;
    return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * q;
}

double gmm_score(const GmmModel& model, const Vec2& x) {
    std::vector<double> terms(model.n_components());
    for (std::size_t j = 0; j < terms.size(); ++j) {
        terms[j] = model.weights[j] > 0.0
                       ? std::log(model.weights[j]) + gaussian_log_density(x, model.means[j], model.covariances[j])
                       : kNegInf;
    }
    return -log_sum_exp(terms);
}

double gmm_mean_log_likelihood(const GmmModel& model, std::span<const Vec2> samples) {
    double total = 0.0;
    for (const auto& x : samples) total -= gmm_score(model, x);
    return total / static_cast<double>(samples.size());
}

GmmModel fit_gmm(std::span<const Vec2> samples, const GmmFitOptions& options) {
    if (options.n_components == 0) throw Error(ErrorCode::InvalidConfig, "GMM needs at least one component");
    if (samples.size() < options.n_components) {
        throw Error(ErrorCode::TooFewSamples, std::to_string(samples.size()) + " samples for " +
                                                  std::to_string(options.n_components) + " components");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i][0]) || !std::isfinite(samples[i][1])) {
            throw Error(ErrorCode::InvalidRecord, "non-finite GMM sample at index " + std::to_string(i));
        }
    }

    Rng rng(options.seed);
    const std::uint32_t k = options.n_components;
    const double n = static_cast<double>(samples.size());

    // Initial covariance: pooled sample covariance, shared by all components.
    Vec2 mean{0.0, 0.0};
    for (const auto& x : samples) {
        mean[0] += x[0];
        mean[1] += x[1];
    }
    mean[0] /= n;
    mean[1] /= n;
    Cov2 pooled{0.0, 0.0, 0.0};
    for (const auto& x : samples) {
        const double dx = x[0] - mean[0];
        const double dy = x[1] - mean[1];
        pooled.xx += dx * dx;
        pooled.xy += dx * dy;
        pooled.yy += dy * dy;
    }
    pooled.xx /= n;
    pooled.xy /= n;
    pooled.yy /= n;
    pooled = floor_eigenvalues(pooled, options.reg_floor);

    GmmModel m;
    m.weights.assign(k, 1.0 / k);
    m.means = seed_means(samples, k, rng);
    m.covariances.assign(k, pooled);

    std::vector<double> log_resp;
    double ll = expectation(m, samples, log_resp);
    m.log_likelihood_trace.push_back(ll);
    for (std::uint32_t it = 0; it < options.max_iter; ++it) {
        maximization(m, samples, log_resp, options.reg_floor);
        ++m.iterations;
        const double next = expectation(m, samples, log_resp);
        m.log_likelihood_trace.push_back(next);
        const bool converged = std::abs(next - ll) < options.tol;
        ll = next;
        if (converged) break;
    }
    m.log_likelihood = ll;
    return m;
}

}  // namespace mfad
