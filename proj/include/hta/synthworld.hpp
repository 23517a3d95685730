#pragma once

// Desk-scale stand-in for robot data collection: parametric 2D silhouettes of
// hand postures, tools and target objects seen from seeded viewpoints, and a
// quasi-static rule table mapping (manipulator family, action) to the mean
// displacement of the pushed object.

#include "hta/action.hpp"
#include "hta/data.hpp"
#include "hta/error.hpp"
#include "hta/rng.hpp"
#include "hta/shape.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hta::synth {

using shape::Contour;
using shape::Point;

enum class Family : std::uint8_t { StraightHand, BentHand, ArchedHand, Stick, Rake, Hook };

inline constexpr std::array<Family, 6> kAllFamilies = {Family::StraightHand, Family::BentHand, Family::ArchedHand,
                                                      Family::Stick,        Family::Rake,     Family::Hook};

constexpr std::string_view to_string(Family f) {
    switch (f) {
    case Family::StraightHand: return "straight_hand";
    case Family::BentHand: return "bent_hand";
    case Family::ArchedHand: return "arched_hand";
    case Family::Stick: return "stick";
    case Family::Rake: return "rake";
    case Family::Hook: return "hook";
    }
    return "?";
}

constexpr bool is_hand(Family f) {
    return f == Family::StraightHand || f == Family::BentHand || f == Family::ArchedHand;
}

inline std::optional<Family> parse_family(std::string_view s) {
    for (Family f : kAllFamilies) {
        if (to_string(f) == s) return f;
    }
    return std::nullopt;
}

/// Manipulator silhouette parameters. Ranges: size in [0.5, 2],
/// curl in [0.5, 1.5] (bend/hook length factor), fingers in [2, 8]
/// (teeth for rakes, fingers for arched hands).
struct ManipSpec {
    Family family = Family::StraightHand;
    double size = 1.0;
    double curl = 1.0;
    int fingers = 4;
    std::uint64_t seed = 0;
};

enum class ObjectShape : std::uint8_t { LegoPiece, Pear };

constexpr std::string_view to_string(ObjectShape s) { return s == ObjectShape::LegoPiece ? "lego_piece" : "pear"; }

struct ObjectSpec {
    ObjectShape shape = ObjectShape::LegoPiece;
    double size = 1.0;
    std::uint64_t seed = 0;
};

namespace detail {

/// Row of `count` teeth spanning [x0, x1] on top of y0, reaching up to y1,
/// emitted left to right along the top outline. Teeth cover 60% of the span.
inline void append_teeth(std::vector<Point>& pts, double x0, double x1, double y0, double y1, int count) {
    const double tooth_w = 0.6 * (x1 - x0) / count;
    const double gap = 0.4 * (x1 - x0) / (count - 1);
    for (int t = 0; t < count; ++t) {
        const double left = x0 + t * (tooth_w + gap);
        const double right = left + tooth_w;
        if (t > 0) pts.push_back({left, y0});
        pts.push_back({left, y1});
        pts.push_back({right, y1});
        if (t + 1 < count) pts.push_back({right, y0});
    }
}

// Base outlines are counter-clockwise, fingers/teeth pointing toward +y.

inline std::vector<Point> straight_hand(const ManipSpec& s) {
    // Palm plus closed, extended fingers; fingertip chamfers leave shallow
    // notches that stay below the defect depth threshold.
    const double w = 60, palm = 60, len = 70 * s.curl, c = 3;
    const double fw = w / s.fingers;
    std::vector<Point> pts{{0, 0}, {w, 0}, {w, palm + len - c}};
    for (int f = s.fingers - 1; f >= 0; --f) {
        const double l = f * fw, r = l + fw;
        pts.push_back({r - c, palm + len});
        pts.push_back({l + c, palm + len});
        pts.push_back({l, palm + len - c});
    }
    return pts;
}

inline std::vector<Point> bent_hand(const ManipSpec& s) {
    // Proximal phalanges continue the palm; distal ones fold sideways.
    const double w = 60, up = 90, reach = 40 * s.curl, thick = 30;
    return {{0, 0}, {w, 0}, {w, up - thick}, {w + reach, up - thick}, {w + reach, up}, {0, up}};
}

inline std::vector<Point> arched_hand(const ManipSpec& s) {
    // Spread fingers with open gaps between them.
    const double w = 60, palm = 50, len = 55 * s.curl;
    std::vector<Point> top;
    append_teeth(top, 0, w, palm, palm + len, s.fingers);
    std::vector<Point> pts{{0, 0}, {w, 0}};
    pts.insert(pts.end(), top.rbegin(), top.rend());
    return pts;
}

inline std::vector<Point> stick(const ManipSpec& s) {
    const double w = 24, len = 150 * s.curl, c = 3;
    return {{c, 0}, {w - c, 0}, {w, c}, {w, len - c}, {w - c, len}, {c, len}, {0, len - c}, {0, c}};
}

inline std::vector<Point> hook(const ManipSpec& s) {
    const double w = 20, len = 160, reach = 50 * s.curl, thick = 25;
    return {{0, 0}, {w, 0}, {w, len - thick}, {w + reach, len - thick}, {w + reach, len}, {0, len}};
}

inline std::vector<Point> rake(const ManipSpec& s) {
    // Handle flaring into the head keeps the outline convex below the teeth,
    // so the only cavities are the gaps between teeth.
    const double head = 80, handle_w = 10, handle_len = 100, bar = 15, teeth = 40 * s.curl;
    std::vector<Point> top;
    append_teeth(top, 0, head, handle_len + bar, handle_len + bar + teeth, s.fingers);
    const double mid = head / 2;
    std::vector<Point> pts{{mid - handle_w / 2, 0}, {mid + handle_w / 2, 0}, {head, handle_len}};
    pts.insert(pts.end(), top.rbegin(), top.rend());
    pts.push_back({0, handle_len});
    return pts;
}

inline std::vector<Point> lego_piece(const ObjectSpec&) {
    const double w = 64, h = 32, c = 2;
    return {{c, 0}, {w - c, 0}, {w, c}, {w, h - c}, {w - c, h}, {c, h}, {0, h - c}, {0, c}};
}

inline std::vector<Point> pear(const ObjectSpec&) {
    std::vector<Point> pts;
    constexpr int n = 72;
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n;
        const double r = 30.0 * (1.0 + 0.3 * std::cos(t) + 0.1 * std::cos(2 * t));
        pts.push_back({r * std::cos(t), r * std::sin(t)});
    }
    return pts;
}

/// Seeded viewpoint: in-plane rotation, distance (uniform scale), image
/// position and a mild foreshortening along a random direction.
inline std::vector<Point> apply_view(std::vector<Point> pts, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x7e1));
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double scale = rng.uniform(0.8, 1.25);
    const double phi = rng.uniform(0.0, std::numbers::pi);
    const double squash = rng.uniform(0.85, 1.0);
    const Point shift{rng.uniform(50.0, 250.0), rng.uniform(50.0, 250.0)};
    const Point dir{std::cos(phi), std::sin(phi)};
    const double c = std::cos(theta), s = std::sin(theta);
    for (Point& p : pts) {
        const Point f = p + (squash - 1.0) * shape::dot(p, dir) * dir;
        p = Point{scale * (c * f.x - s * f.y), scale * (s * f.x + c * f.y)} + shift;
    }
    return pts;
}

} // namespace detail

inline void validate(const ManipSpec& s) {
    if (!(s.size >= 0.5 && s.size <= 2.0)) throw Error(ErrorKind::InvalidSpec, "size outside [0.5, 2]");
    if (!(s.curl >= 0.5 && s.curl <= 1.5)) throw Error(ErrorKind::InvalidSpec, "curl outside [0.5, 1.5]");
    if (s.fingers < 2 || s.fingers > 8) throw Error(ErrorKind::InvalidSpec, "fingers outside [2, 8]");
}

/// Base outline of a manipulator before any viewpoint transform.
inline std::vector<Point> base_outline(const ManipSpec& spec) {
    validate(spec);
    std::vector<Point> pts;
    switch (spec.family) {
    case Family::StraightHand: pts = detail::straight_hand(spec); break;
    case Family::BentHand: pts = detail::bent_hand(spec); break;
    case Family::ArchedHand: pts = detail::arched_hand(spec); break;
    case Family::Stick: pts = detail::stick(spec); break;
    case Family::Rake: pts = detail::rake(spec); break;
    case Family::Hook: pts = detail::hook(spec); break;
    }
    for (Point& p : pts) p = spec.size * p;
    return pts;
}

/// One seeded view of the manipulator silhouette.
inline Contour generate_contour(const ManipSpec& spec) {
    return Contour(detail::apply_view(base_outline(spec), spec.seed));
}

inline Contour generate_object_contour(const ObjectSpec& spec) {
    if (!(spec.size >= 0.5 && spec.size <= 2.0)) throw Error(ErrorKind::InvalidSpec, "size outside [0.5, 2]");
    auto pts = spec.shape == ObjectShape::LegoPiece ? detail::lego_piece(spec) : detail::pear(spec);
    for (Point& p : pts) p = spec.size * p;
    return Contour(detail::apply_view(std::move(pts), spec.seed));
}

struct Displacement {
    double x = 0.0;
    double y = 0.0;
};

/// Mean displacement per (family, action) plus a noise scale. Hands push
/// gently and tap hard; tools tap gently and push hard. Drawing depends on
/// whether the morphology can hook the object.
struct EffectRule {
    std::array<std::array<Displacement, kActionCount>, kAllFamilies.size()> mean{{
        //  tapFromRight      tapFromLeft      draw              push
        {{{-0.09, 0.0}, {0.09, 0.0}, {0.0, 0.0}, {0.0, 0.04}}},   // straight_hand
        {{{-0.09, 0.0}, {0.09, 0.0}, {0.0, -0.09}, {0.0, 0.04}}}, // bent_hand
        {{{-0.09, 0.0}, {0.09, 0.0}, {0.0, -0.09}, {0.0, 0.04}}}, // arched_hand
        {{{-0.04, 0.0}, {0.04, 0.0}, {0.0, 0.0}, {0.0, 0.09}}},   // stick
        {{{-0.04, 0.0}, {0.04, 0.0}, {0.0, -0.09}, {0.0, 0.09}}}, // rake
        {{{-0.04, 0.0}, {0.04, 0.0}, {0.0, -0.04}, {0.0, 0.09}}}, // hook
    }};
    double noise_sigma = 0.0;

    const Displacement& operator()(Family f, ActionId a) const {
        return mean[static_cast<std::size_t>(f)][index_of(a)];
    }
};

/// Noise is Gaussian, clipped to two standard deviations.
inline constexpr double kNoiseBound = 2.0;

inline Displacement simulate_trial(Family family, ActionId action, std::uint64_t seed, const EffectRule& rule = {}) {
    Displacement d = rule(family, action);
    if (rule.noise_sigma > 0.0) {
        Rng rng(derive_seed(seed, 0xeff));
        auto noise = [&] { return rule.noise_sigma * std::clamp(rng.normal(), -kNoiseBound, kNoiseBound); };
        d.x += noise();
        d.y += noise();
    }
    return d;
}

inline Displacement simulate_trial(const ManipSpec& manip, ActionId action, std::uint64_t seed,
                                   const EffectRule& rule = {}) {
    validate(manip);
    return simulate_trial(manip.family, action, seed, rule);
}

struct WorldConfig {
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    int views = 10;
    int repetitions = 5;
};

struct World {
    data::EntitySet entities;
    std::vector<data::TrialRecord> hand_trials;
    std::vector<data::TrialRecord> tool_trials;
};

inline std::string view_id(int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "v%02d", v);
    return buf;
}

struct WorldContour {
    std::string entity_id;
    data::EntityKind kind = data::EntityKind::Object;
    std::string view_id;
    Contour contour;
};

inline void check_world_config(const WorldConfig& cfg) {
    if (cfg.views < 1 || cfg.repetitions < 1) {
        throw Error(ErrorKind::InvalidArgument, "views and repetitions must be positive");
    }
    if (!(cfg.noise_sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise sigma must be >= 0");
}

/// Raw contours of every entity view in the world, hands and tools first.
inline std::vector<WorldContour> world_contours(const WorldConfig& cfg) {
    check_world_config(cfg);
    std::vector<WorldContour> out;
    std::uint64_t stream = 1;
    for (Family f : kAllFamilies) {
        for (int v = 0; v < cfg.views; ++v) {
            ManipSpec spec{f, 1.0, 1.0, 4, derive_seed(cfg.seed, stream * 1000 + static_cast<std::uint64_t>(v))};
            out.push_back({std::string(to_string(f)), is_hand(f) ? data::EntityKind::Hand : data::EntityKind::Tool,
                           view_id(v), generate_contour(spec)});
        }
        ++stream;
    }
    for (ObjectShape o : {ObjectShape::LegoPiece, ObjectShape::Pear}) {
        for (int v = 0; v < cfg.views; ++v) {
            ObjectSpec spec{o, 1.0, derive_seed(cfg.seed, stream * 1000 + static_cast<std::uint64_t>(v))};
            out.push_back({std::string(to_string(o)), data::EntityKind::Object, view_id(v),
                           generate_object_contour(spec)});
        }
        ++stream;
    }
    return out;
}

/// Three hand postures, three tools and two objects, each seen from
/// `views` viewpoints, and every (manipulator, object, action) combination
/// repeated `repetitions` times.
inline World make_world(const WorldConfig& cfg) {
    World w;
    for (auto& wc : world_contours(cfg)) {
        w.entities.add({wc.entity_id, wc.kind, wc.view_id, shape::extract_features(wc.contour)});
    }

    EffectRule rule;
    rule.noise_sigma = cfg.noise_sigma;
    std::uint64_t trial_no = 0;
    for (Family f : kAllFamilies) {
        auto& out = is_hand(f) ? w.hand_trials : w.tool_trials;
        for (ObjectShape o : {ObjectShape::LegoPiece, ObjectShape::Pear}) {
            for (ActionId a : kAllActions) {
                for (int r = 0; r < cfg.repetitions; ++r) {
                    const auto d = simulate_trial(f, a, derive_seed(cfg.seed, 0x7a1a1000 + trial_no), rule);
                    char id[32];
                    std::snprintf(id, sizeof(id), "%c%04llu", is_hand(f) ? 'h' : 't',
                                  static_cast<unsigned long long>(out.size() + 1));
                    out.push_back({id, std::string(to_string(f)), std::string(to_string(o)), a, d.x, d.y});
                    ++trial_no;
                }
            }
        }
    }
    return w;
}

} // namespace hta::synth
