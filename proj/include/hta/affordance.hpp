#pragma once

// Discrete affordance network: manipulator PCs (2 x 2 bins), object PCs
// (2 x 2 bins) and the action are parents of EffectX and EffectY (5 bins each).
// Parents are always observed, so a query is a CPT lookup; EffectX and EffectY
// are siblings without an arc, which makes the joint an outer product.

#include "hta/action.hpp"
#include "hta/error.hpp"
#include "hta/reduce.hpp"
#include "hta/shape.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hta::affordance {

using reduce::kEffectBins;
using shape::FeatureVector;

inline constexpr std::size_t kConfigCount = 2 * 2 * 2 * 2 * kActionCount;

struct ParentConfig {
    int m1 = 0;
    int m2 = 0;
    int o1 = 0;
    int o2 = 0;
    ActionId action = ActionId::TapFromRight;

    /// ((((m1*2 + m2)*2 + o1)*2 + o2)*4 + action)
    std::size_t index() const {
        return ((((static_cast<std::size_t>(m1) * 2 + m2) * 2 + o1) * 2 + o2) * kActionCount) + index_of(action);
    }

    static ParentConfig from_index(std::size_t idx) {
        ParentConfig c;
        c.action = static_cast<ActionId>(idx % kActionCount);
        idx /= kActionCount;
        c.o2 = static_cast<int>(idx % 2);
        c.o1 = static_cast<int>((idx / 2) % 2);
        c.m2 = static_cast<int>((idx / 4) % 2);
        c.m1 = static_cast<int>((idx / 8) % 2);
        return c;
    }

    std::string to_string() const {
        return "m=(" + std::to_string(m1) + "," + std::to_string(m2) + ") o=(" + std::to_string(o1) + "," +
               std::to_string(o2) + ") a=" + std::string(hta::to_string(action));
    }

    friend bool operator==(const ParentConfig&, const ParentConfig&) = default;
};

using CptRow = std::array<double, kEffectBins>;
/// nullopt marks a row with no evidence and no smoothing (unknown).
using CptTable = std::array<std::optional<CptRow>, kConfigCount>;

/// One training observation after discretization.
struct DiscreteTrial {
    ParentConfig config;
    int bin_x = 0;
    int bin_y = 0;
};

struct Cpts {
    CptTable x;
    CptTable y;
    std::array<std::uint64_t, kConfigCount> counts{};
};

/// Smoothed maximum-likelihood CPTs:
/// P(b | cfg) = (count(cfg, b) + alpha) / (count(cfg) + 5 alpha).
inline Cpts learn(std::span<const DiscreteTrial> trials, double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorKind::InvalidArgument, "smoothing alpha must be finite and >= 0");
    }
    std::array<std::array<std::uint64_t, kEffectBins>, kConfigCount> tally_x{};
    std::array<std::array<std::uint64_t, kEffectBins>, kConfigCount> tally_y{};
    Cpts out;
    for (const auto& t : trials) {
        if (t.bin_x < 0 || t.bin_x >= kEffectBins || t.bin_y < 0 || t.bin_y >= kEffectBins) {
            throw Error(ErrorKind::RangeError, "effect bin out of range");
        }
        const std::size_t cfg = t.config.index();
        ++tally_x[cfg][static_cast<std::size_t>(t.bin_x)];
        ++tally_y[cfg][static_cast<std::size_t>(t.bin_y)];
        ++out.counts[cfg];
    }
    auto normalize = [&](const std::array<std::uint64_t, kEffectBins>& tally, std::uint64_t total)
        -> std::optional<CptRow> {
        const double denom = static_cast<double>(total) + kEffectBins * alpha;
        if (denom == 0.0) return std::nullopt;
        CptRow row{};
        for (std::size_t b = 0; b < kEffectBins; ++b) row[b] = (static_cast<double>(tally[b]) + alpha) / denom;
        return row;
    };
    for (std::size_t cfg = 0; cfg < kConfigCount; ++cfg) {
        out.x[cfg] = normalize(tally_x[cfg], out.counts[cfg]);
        out.y[cfg] = normalize(tally_y[cfg], out.counts[cfg]);
    }
    return out;
}

/// Joint P(EffectX bin i, EffectY bin j), stored as p[i][j].
struct EffectDistribution {
    std::array<std::array<double, kEffectBins>, kEffectBins> p{};

    double total() const {
        double s = 0.0;
        for (const auto& row : p) {
            for (double v : row) s += v;
        }
        return s;
    }

    friend bool operator==(const EffectDistribution&, const EffectDistribution&) = default;
};

inline std::array<double, kEffectBins> marginal(const EffectDistribution& d, Axis axis) {
    std::array<double, kEffectBins> out{};
    for (std::size_t i = 0; i < kEffectBins; ++i) {
        for (std::size_t j = 0; j < kEffectBins; ++j) {
            out[axis == Axis::X ? i : j] += d.p[i][j];
        }
    }
    return out;
}

/// Numeric sample: manipulator and object features, action and the
/// measured displacement in meters.
struct Sample {
    FeatureVector manipulator{};
    FeatureVector object{};
    ActionId action = ActionId::TapFromRight;
    double effect_x_m = 0.0;
    double effect_y_m = 0.0;
};

struct AffordanceModel {
    reduce::PcaBlock pca_manip;
    reduce::PcaBlock pca_obj;
    reduce::PcDiscretizer disc_manip;
    reduce::PcDiscretizer disc_obj;
    CptTable cpt_x{};
    CptTable cpt_y{};
    std::array<std::uint64_t, kConfigCount> counts{};
    double smoothing_alpha = 1.0;
    reduce::EffectBinning effect_binning{};
    ActionDirectionMap directions{};

    ParentConfig configure(const FeatureVector& manipulator, const FeatureVector& object, ActionId a) const {
        const auto mb = disc_manip.bins(reduce::project(pca_manip, manipulator));
        const auto ob = disc_obj.bins(reduce::project(pca_obj, object));
        return {mb[0], mb[1], ob[0], ob[1], a};
    }

    std::vector<ParentConfig> empty_configs() const {
        std::vector<ParentConfig> out;
        for (std::size_t i = 0; i < kConfigCount; ++i) {
            if (counts[i] == 0) out.push_back(ParentConfig::from_index(i));
        }
        return out;
    }

    friend bool operator==(const AffordanceModel&, const AffordanceModel&) = default;
};

inline EffectDistribution infer(const AffordanceModel& model, const ParentConfig& cfg) {
    const std::size_t idx = cfg.index();
    const auto& rx = model.cpt_x[idx];
    const auto& ry = model.cpt_y[idx];
    if (!rx || !ry) {
        throw Error(ErrorKind::UnknownRow, "no evidence for configuration " + cfg.to_string() +
                                               " (alpha = 0 leaves it undefined)");
    }
    EffectDistribution d;
    for (std::size_t i = 0; i < kEffectBins; ++i) {
        for (std::size_t j = 0; j < kEffectBins; ++j) d.p[i][j] = (*rx)[i] * (*ry)[j];
    }
    return d;
}

/// P(EffectX, EffectY | M, O, A) with M, O and A forced as evidence.
inline EffectDistribution infer(const AffordanceModel& model, const FeatureVector& manipulator,
                                const FeatureVector& object, ActionId a) {
    return infer(model, model.configure(manipulator, object, a));
}

/// Discretizes samples against a fitted model's PCA blocks and bins.
inline std::vector<DiscreteTrial> discretize(const AffordanceModel& model, std::span<const Sample> samples) {
    std::vector<DiscreteTrial> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back({model.configure(s.manipulator, s.object, s.action),
                       model.effect_binning.bin(s.effect_x_m), model.effect_binning.bin(s.effect_y_m)});
    }
    return out;
}

/// Full pipeline fit: one PCA block per side, median-split discretizers,
/// then CPT learning on the discretized samples.
inline AffordanceModel fit_model(std::span<const Sample> samples, double alpha,
                                 const ActionDirectionMap& directions = {},
                                 const reduce::EffectBinning& binning = {}) {
    if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "no training samples");
    std::vector<FeatureVector> manip;
    std::vector<FeatureVector> obj;
    manip.reserve(samples.size());
    obj.reserve(samples.size());
    for (const auto& s : samples) {
        manip.push_back(s.manipulator);
        obj.push_back(s.object);
    }
    AffordanceModel model;
    model.pca_manip = reduce::fit_pca(manip);
    model.pca_obj = reduce::fit_pca(obj);

    std::vector<reduce::Projection> proj;
    proj.reserve(samples.size());
    for (const auto& m : manip) proj.push_back(reduce::project(model.pca_manip, m));
    model.disc_manip = reduce::fit_pc_discretizer(proj);
    proj.clear();
    for (const auto& o : obj) proj.push_back(reduce::project(model.pca_obj, o));
    model.disc_obj = reduce::fit_pc_discretizer(proj);

    model.smoothing_alpha = alpha;
    model.effect_binning = binning;
    model.directions = directions;
    const auto discrete = discretize(model, samples);
    Cpts cpts = learn(discrete, alpha);
    model.cpt_x = cpts.x;
    model.cpt_y = cpts.y;
    model.counts = cpts.counts;
    return model;
}

} // namespace hta::affordance
