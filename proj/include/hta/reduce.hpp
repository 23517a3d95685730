#pragma once

// Per-block PCA over shape features and the discretizers feeding the
// Bayesian network: median split for principal components, fixed intervals
// for effect displacements.

#include "hta/error.hpp"
#include "hta/shape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace hta::reduce {

using shape::FeatureVector;
using shape::kFeatureCount;

inline constexpr std::size_t kComponents = 2;

using Projection = std::array<double, kComponents>;

struct PcaBlock {
    FeatureVector mean{};
    std::array<FeatureVector, kComponents> components{};
    std::array<double, kComponents> explained_variance{};

    friend bool operator==(const PcaBlock&, const PcaBlock&) = default;
};

/// Flips a component so its largest-magnitude entry (first on ties) is positive.
inline void normalize_sign(FeatureVector& v) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    }
    if (v[arg] < 0) {
        for (double& x : v) x = -x;
    }
}

/// Top-2 principal axes of the sample covariance (n-1 denominator).
inline PcaBlock fit_pca(std::span<const FeatureVector> samples) {
    if (samples.size() < 2) {
        throw Error(ErrorKind::InsufficientVariance, "PCA needs at least 2 samples");
    }
    const auto n = static_cast<double>(samples.size());
    PcaBlock block;
    for (const auto& s : samples) {
        for (std::size_t j = 0; j < kFeatureCount; ++j) block.mean[j] += s[j];
    }
    for (double& m : block.mean) m /= n;

    Eigen::Matrix<double, kFeatureCount, kFeatureCount> cov =
        Eigen::Matrix<double, kFeatureCount, kFeatureCount>::Zero();
    for (const auto& s : samples) {
        Eigen::Matrix<double, kFeatureCount, 1> d;
        for (std::size_t j = 0; j < kFeatureCount; ++j) d(j) = s[j] - block.mean[j];
        cov.noalias() += d * d.transpose();
    }
    cov /= (n - 1.0);

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kFeatureCount, kFeatureCount>> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorKind::InsufficientVariance, "covariance eigendecomposition failed");
    }
    // Eigen sorts eigenvalues ascending.
    const auto& values = eig.eigenvalues();
    const double top = values(kFeatureCount - 1);
    const double second = values(kFeatureCount - 2);
    if (!(top > 0.0) || second <= 1e-12 * top) {
        throw Error(ErrorKind::InsufficientVariance,
                    "covariance has rank < 2 (eigenvalues " + std::to_string(top) + ", " +
                        std::to_string(second) + ")");
    }
    for (std::size_t c = 0; c < kComponents; ++c) {
        const Eigen::Index col = static_cast<Eigen::Index>(kFeatureCount - 1 - c);
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            block.components[c][j] = eig.eigenvectors()(static_cast<Eigen::Index>(j), col);
        }
        normalize_sign(block.components[c]);
        block.explained_variance[c] = values(col);
    }
    return block;
}

inline Projection project(const PcaBlock& block, const FeatureVector& x) {
    Projection out{};
    for (std::size_t c = 0; c < kComponents; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            acc += block.components[c][j] * (x[j] - block.mean[j]);
        }
        out[c] = acc;
    }
    return out;
}

/// One threshold per component: bin 0 iff value <= threshold.
struct PcDiscretizer {
    std::array<double, kComponents> thresholds{};

    int bin(std::size_t component, double value) const { return value <= thresholds[component] ? 0 : 1; }

    std::array<int, kComponents> bins(const Projection& p) const {
        std::array<int, kComponents> out{};
        for (std::size_t c = 0; c < kComponents; ++c) out[c] = bin(c, p[c]);
        return out;
    }

    friend bool operator==(const PcDiscretizer&, const PcDiscretizer&) = default;
};

/// Median split of one coordinate. When ties make the median equal to the
/// maximum, the threshold drops to the largest value below it so that the
/// upper bin is populated whenever two distinct values exist.
inline double median_threshold(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    double t = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    if (t >= values.back()) {
        const auto below = std::lower_bound(values.begin(), values.end(), values.back());
        if (below != values.begin()) t = *(below - 1);
    }
    return t;
}

inline PcDiscretizer fit_pc_discretizer(std::span<const Projection> projections) {
    if (projections.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "discretizer needs at least 2 projections");
    }
    PcDiscretizer d;
    for (std::size_t c = 0; c < kComponents; ++c) {
        std::vector<double> column;
        column.reserve(projections.size());
        for (const auto& p : projections) {
            if (!std::isfinite(p[c])) throw Error(ErrorKind::NonFinite, "non-finite projection");
            column.push_back(p[c]);
        }
        d.thresholds[c] = median_threshold(std::move(column));
    }
    return d;
}

inline constexpr int kEffectBins = 5;

/// Half-open intervals (-inf,e0], (e0,e1], (e1,e2], (e2,e3], (e3,inf) in meters.
struct EffectBinning {
    std::array<double, kEffectBins - 1> edges{-0.06, -0.025, 0.025, 0.06};

    int bin(double displacement_m) const {
        if (!std::isfinite(displacement_m)) {
            throw Error(ErrorKind::NonFinite, "effect displacement is not finite");
        }
        int b = 0;
        while (b < kEffectBins - 1 && displacement_m > edges[static_cast<std::size_t>(b)]) ++b;
        return b;
    }

    bool valid() const {
        for (std::size_t i = 0; i < edges.size(); ++i) {
            if (!std::isfinite(edges[i])) return false;
            if (i > 0 && !(edges[i] > edges[i - 1])) return false;
        }
        return true;
    }

    friend bool operator==(const EffectBinning&, const EffectBinning&) = default;
};

inline int effect_bin(double displacement_m) { return EffectBinning{}.bin(displacement_m); }

} // namespace hta::reduce
