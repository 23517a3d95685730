#pragma once

// Evaluation protocols over a fitted affordance model: joint effect-bin
// prediction accuracy and zero-shot tool selection.

#include "hta/action.hpp"
#include "hta/affordance.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hta::tasks {

using affordance::AffordanceModel;
using affordance::EffectDistribution;
using affordance::Sample;
using shape::FeatureVector;

struct BinPair {
    int x = 0;
    int y = 0;
    friend bool operator==(const BinPair&, const BinPair&) = default;
};

/// Argmax cell of the joint; ties go to the lowest x bin, then lowest y bin.
inline BinPair argmax_cell(const EffectDistribution& d) {
    BinPair best;
    for (int i = 0; i < affordance::kEffectBins; ++i) {
        for (int j = 0; j < affordance::kEffectBins; ++j) {
            if (d.p[i][j] > d.p[best.x][best.y]) best = {i, j};
        }
    }
    return best;
}

inline BinPair predict_bin_pair(const AffordanceModel& model, const FeatureVector& manipulator,
                                const FeatureVector& object, ActionId a) {
    return argmax_cell(affordance::infer(model, manipulator, object, a));
}

struct AccuracyReport {
    std::uint64_t correct = 0;
    std::uint64_t total = 0;
    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

/// A sample scores when both predicted bins match the binned ground truth.
inline AccuracyReport evaluate(const AffordanceModel& model, std::span<const Sample> test) {
    if (test.empty()) throw Error(ErrorKind::EmptyTestSet, "no test samples");
    AccuracyReport r;
    for (const auto& s : test) {
        const BinPair pred = predict_bin_pair(model, s.manipulator, s.object, s.action);
        const BinPair truth{model.effect_binning.bin(s.effect_x_m), model.effect_binning.bin(s.effect_y_m)};
        r.correct += pred == truth ? 1 : 0;
        ++r.total;
    }
    return r;
}

inline double evaluate_accuracy(const AffordanceModel& model, std::span<const Sample> test) {
    return evaluate(model, test).accuracy();
}

inline constexpr double kRandomBaseline = 1.0 / 25.0;

/// Strict comparison: the two desired-side bins must outweigh the other three.
inline bool desired_side_wins(const std::array<double, affordance::kEffectBins>& marginal,
                              const DesiredDirection& dir) {
    const auto want = dir.desired_bins();
    double desired = 0.0;
    double rest = 0.0;
    for (int b = 0; b < affordance::kEffectBins; ++b) {
        (b == want[0] || b == want[1] ? desired : rest) += marginal[static_cast<std::size_t>(b)];
    }
    return desired > rest;
}

inline bool select_tool(const AffordanceModel& model, const FeatureVector& tool, const FeatureVector& object,
                        ActionId a, const DesiredDirection& dir) {
    const auto joint = affordance::infer(model, tool, object, a);
    return desired_side_wins(affordance::marginal(joint, dir.axis), dir);
}

/// Feature views of one entity.
struct ViewSet {
    std::string id;
    std::vector<FeatureVector> views;
};

struct SelectionRow {
    ActionId action = ActionId::TapFromRight;
    std::string tool;
    std::uint64_t selected = 0;
    std::uint64_t total = 0;
    double selection_rate() const {
        return total == 0 ? 0.0 : static_cast<double>(selected) / static_cast<double>(total);
    }
};

/// Selection rate per (action, tool) over every tool view x object view pair.
/// Rows are ordered by the given actions, then tools.
inline std::vector<SelectionRow> tool_selection_table(const AffordanceModel& model, std::span<const ViewSet> tools,
                                                      std::span<const ViewSet> objects,
                                                      std::span<const ActionId> actions,
                                                      const ActionDirectionMap& directions) {
    for (const auto& set : {tools, objects}) {
        for (const auto& vs : set) {
            if (vs.views.empty()) throw Error(ErrorKind::MissingViews, "entity '" + vs.id + "' has no views");
        }
    }
    if (tools.empty() || objects.empty()) {
        throw Error(ErrorKind::MissingViews, "tool selection needs at least one tool and one object");
    }
    std::vector<SelectionRow> rows;
    for (ActionId a : actions) {
        for (const auto& tool : tools) {
            SelectionRow row{a, tool.id, 0, 0};
            for (const auto& tv : tool.views) {
                for (const auto& obj : objects) {
                    for (const auto& ov : obj.views) {
                        row.selected += select_tool(model, tv, ov, a, directions[a]) ? 1 : 0;
                        ++row.total;
                    }
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace hta::tasks
