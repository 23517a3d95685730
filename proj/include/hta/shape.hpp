#pragma once

// Planar contour geometry and the 13 pre-categorical shape descriptors.

#include "hta/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace hta::shape {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
    friend constexpr bool operator==(Point a, Point b) = default;
};

constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }

namespace detail {

// Orientation of c relative to the directed line a->b, snapped to zero when
// the triangle is negligible relative to its edge lengths.
inline int orientation(Point a, Point b, Point c) {
    const Point u = b - a;
    const Point v = c - a;
    const double o = cross(u, v);
    const double scale = norm(u) * norm(v);
    if (std::abs(o) <= 1e-12 * scale) return 0;
    return o > 0 ? 1 : -1;
}

inline bool within_box(Point a, Point b, Point c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
}

/// Closed-segment intersection test (touching counts).
inline bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 * o2 < 0 && o3 * o4 < 0) return true;
    if (o1 == 0 && within_box(p1, p2, q1)) return true;
    if (o2 == 0 && within_box(p1, p2, q2)) return true;
    if (o3 == 0 && within_box(q1, q2, p1)) return true;
    if (o4 == 0 && within_box(q1, q2, p2)) return true;
    return false;
}

inline double signed_area(std::span<const Point> pts) {
    const Point origin = pts.front();
    double twice = 0.0;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        twice += cross(pts[i] - origin, pts[i + 1] - origin);
    }
    return 0.5 * twice;
}

} // namespace detail

/// Closed simple polygon; the last vertex connects back to the first.
/// Construction validates every invariant and throws hta::Error on failure.
class Contour {
public:
    explicit Contour(std::vector<Point> points) : points_(std::move(points)) { validate(); }

    std::span<const Point> points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    const Point& operator[](std::size_t i) const { return points_[i]; }

    /// Positive for counter-clockwise vertex order.
    double signed_area() const { return detail::signed_area(points_); }

private:
    void validate() const {
        const std::size_t n = points_.size();
        if (n < 3) {
            throw Error(ErrorKind::DegenerateShape,
                        "contour needs at least 3 points, got " + std::to_string(n));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
                throw Error(ErrorKind::NonFinite, "non-finite coordinate at vertex " + std::to_string(i));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (points_[i] == points_[(i + 1) % n]) {
                throw Error(ErrorKind::InvalidContour,
                            "consecutive duplicate vertex at index " + std::to_string(i));
            }
        }
        bool any_turn = false;
        for (std::size_t i = 0; i < n && !any_turn; ++i) {
            any_turn = detail::orientation(points_[i], points_[(i + 1) % n], points_[(i + 2) % n]) != 0;
        }
        if (!any_turn || detail::signed_area(points_) == 0.0) {
            throw Error(ErrorKind::DegenerateShape, "contour has zero area (collinear vertices)");
        }
        check_simple();
    }

    void check_simple() const {
        const std::size_t n = points_.size();
        // Adjacent edges may only share their common vertex.
        for (std::size_t i = 0; i < n; ++i) {
            const Point prev = points_[(i + n - 1) % n];
            const Point here = points_[i];
            const Point next = points_[(i + 1) % n];
            if (detail::orientation(prev, here, next) == 0 && dot(prev - here, next - here) > 0) {
                throw Error(ErrorKind::InvalidContour,
                            "contour folds back on itself at vertex " + std::to_string(i));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const Point a1 = points_[i];
            const Point a2 = points_[(i + 1) % n];
            for (std::size_t j = i + 2; j < n; ++j) {
                if (i == 0 && j == n - 1) continue; // closing edge is adjacent to edge 0
                if (detail::segments_intersect(a1, a2, points_[j], points_[(j + 1) % n])) {
                    throw Error(ErrorKind::InvalidContour,
                                "self-intersection between edges " + std::to_string(i) + " and " +
                                    std::to_string(j));
                }
            }
        }
    }

    std::vector<Point> points_;
};

/// Absolute shoelace area in squared pixels.
inline double area(const Contour& c) { return std::abs(c.signed_area()); }

inline double perimeter(const Contour& c) {
    const auto pts = c.points();
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        total += norm(pts[(i + 1) % pts.size()] - pts[i]);
    }
    return total;
}

/// Indices of convex hull vertices, counter-clockwise (monotone chain).
/// Collinear boundary points are dropped.
inline std::vector<std::size_t> convex_hull_indices(std::span<const Point> pts) {
    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pts[a].x < pts[b].x || (pts[a].x == pts[b].x && pts[a].y < pts[b].y);
    });
    order.erase(std::unique(order.begin(), order.end(),
                            [&](std::size_t a, std::size_t b) { return pts[a] == pts[b]; }),
                order.end());
    if (order.size() < 3) {
        throw Error(ErrorKind::DegenerateShape, "convex hull of fewer than 3 distinct points");
    }

    std::vector<std::size_t> hull(2 * order.size());
    std::size_t k = 0;
    auto turns_left = [&](std::size_t o, std::size_t a, std::size_t b) {
        return detail::orientation(pts[o], pts[a], pts[b]) > 0;
    };
    for (std::size_t idx : order) {
        while (k >= 2 && !turns_left(hull[k - 2], hull[k - 1], idx)) --k;
        hull[k++] = idx;
    }
    const std::size_t lower = k + 1;
    for (auto it = order.rbegin() + 1; it != order.rend(); ++it) {
        while (k >= lower && !turns_left(hull[k - 2], hull[k - 1], *it)) --k;
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    if (hull.size() < 3) {
        throw Error(ErrorKind::DegenerateShape, "all points are collinear");
    }
    return hull;
}

inline Contour convex_hull(const Contour& c) {
    const auto idx = convex_hull_indices(c.points());
    std::vector<Point> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(c[i]);
    return Contour(std::move(out));
}

/// Counts cavities: maximal runs of contour vertices lying strictly inside
/// the convex hull whose deepest point is further than
/// `depth_fraction * perimeter` from the hull edge spanning the run.
/// Vertices touching the hull boundary (e.g. aligned fingertips) end a run.
inline int convexity_defects(const Contour& c, double depth_fraction = 0.02) {
    if (!(depth_fraction > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "convexity defect depth fraction must be positive");
    }
    auto hull = convex_hull_indices(c.points());
    // Hull vertices of a simple polygon appear along the contour in cyclic
    // order, so ascending indices walk the hull in contour order.
    std::sort(hull.begin(), hull.end());
    const double perim = perimeter(c);
    const double threshold = depth_fraction * perim;
    const double contact = 1e-9 * perim;
    const std::size_t n = c.size();
    int count = 0;
    for (std::size_t k = 0; k < hull.size(); ++k) {
        const std::size_t from = hull[k];
        const std::size_t to = k + 1 < hull.size() ? hull[k + 1] : hull[0] + n;
        const Point a = c[from];
        const Point edge = c[to % n] - a;
        const double len = norm(edge);
        double deepest = 0.0;
        for (std::size_t i = from + 1; i <= to; ++i) {
            const double depth = i == to ? 0.0 : std::abs(cross(edge, c[i % n] - a)) / len;
            if (depth <= contact) {
                if (deepest > threshold) ++count;
                deepest = 0.0;
            } else {
                deepest = std::max(deepest, depth);
            }
        }
    }
    return count;
}

struct Circle {
    Point center;
    double radius = 0.0;
};

namespace detail {

inline bool contains(const Circle& c, Point p) {
    return norm(p - c.center) <= c.radius * (1.0 + 1e-12) + 1e-300;
}

inline Circle circle_from(Point a, Point b) {
    const Point mid = 0.5 * (a + b);
    return {mid, 0.5 * norm(b - a)};
}

inline Circle circle_from(Point a, Point b, Point c) {
    const Point ab = b - a;
    const Point ac = c - a;
    const double d = 2.0 * cross(ab, ac);
    if (std::abs(d) <= 1e-14 * norm(ab) * norm(ac)) {
        // Collinear: the widest pair spans the circle.
        Circle best = circle_from(a, b);
        for (const Circle& cand : {circle_from(a, c), circle_from(b, c)}) {
            if (cand.radius > best.radius) best = cand;
        }
        return best;
    }
    const double ab2 = dot(ab, ab);
    const double ac2 = dot(ac, ac);
    const Point offset{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
    return {a + offset, norm(offset)};
}

} // namespace detail

/// Smallest circle enclosing all points (iterative Welzl, deterministic order).
inline Circle min_enclosing_circle(std::span<const Point> pts) {
    Circle c{pts.front(), 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (detail::contains(c, pts[i])) continue;
        c = {pts[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (detail::contains(c, pts[j])) continue;
            c = detail::circle_from(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (!detail::contains(c, pts[k])) c = detail::circle_from(pts[i], pts[j], pts[k]);
            }
        }
    }
    return c;
}

/// Area of the minimum-area enclosing rectangle of a convex polygon (CCW).
/// The optimal rectangle has a side collinear with some hull edge.
inline double min_area_rect(std::span<const Point> hull) {
    double best = INFINITY;
    const std::size_t h = hull.size();
    for (std::size_t i = 0; i < h; ++i) {
        const Point e = hull[(i + 1) % h] - hull[i];
        const double len = norm(e);
        const Point u{e.x / len, e.y / len};
        const Point v{-u.y, u.x};
        double umin = INFINITY, umax = -INFINITY, vmin = INFINITY, vmax = -INFINITY;
        for (const Point& p : hull) {
            const Point d = p - hull[i];
            umin = std::min(umin, dot(d, u));
            umax = std::max(umax, dot(d, u));
            vmin = std::min(vmin, dot(d, v));
            vmax = std::max(vmax, dot(d, v));
        }
        best = std::min(best, (umax - umin) * (vmax - vmin));
    }
    return best;
}

/// Area moments of a polygon up to third order, indexed [p][q] for p+q <= 3.
using MomentTable = std::array<std::array<double, 4>, 4>;

/// Raw area moments m_pq of the polygon region via Green's theorem, using
/// the closed form per edge. Sign-corrected so that m00 is the area.
inline MomentTable polygon_moments(std::span<const Point> pts) {
    static constexpr std::array<std::array<double, 7>, 7> binom = [] {
        std::array<std::array<double, 7>, 7> b{};
        for (int n = 0; n < 7; ++n) {
            b[n][0] = 1.0;
            for (int k = 1; k <= n; ++k) b[n][k] = b[n - 1][k - 1] + (k < n ? b[n - 1][k] : 0.0);
        }
        return b;
    }();

    MomentTable m{};
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = pts[i];
        const Point b = pts[(i + 1) % n];
        const double w = cross(a, b);
        std::array<double, 4> ax{1, a.x, a.x * a.x, a.x * a.x * a.x};
        std::array<double, 4> bx{1, b.x, b.x * b.x, b.x * b.x * b.x};
        std::array<double, 4> ay{1, a.y, a.y * a.y, a.y * a.y * a.y};
        std::array<double, 4> by{1, b.y, b.y * b.y, b.y * b.y * b.y};
        for (int p = 0; p <= 3; ++p) {
            for (int q = 0; p + q <= 3; ++q) {
                double s = 0.0;
                for (int k = 0; k <= p; ++k) {
                    for (int l = 0; l <= q; ++l) {
                        s += binom[k + l][l] * binom[p + q - k - l][q - l] * bx[k] * ax[p - k] * by[l] *
                             ay[q - l];
                    }
                }
                m[p][q] += w * s;
            }
        }
    }
    for (int p = 0; p <= 3; ++p) {
        for (int q = 0; p + q <= 3; ++q) {
            const double denom = (p + q + 2) * (p + q + 1) * binom[p + q][p];
            m[p][q] /= denom;
        }
    }
    const double sign = m[0][0] < 0 ? -1.0 : 1.0;
    for (auto& row : m) {
        for (double& v : row) v *= sign;
    }
    return m;
}

/// Central moments mu_pq (moments about the area centroid).
inline MomentTable central_moments(const Contour& c) {
    const auto pts = c.points();
    // Shift by the vertex mean first; keeps the products well conditioned.
    Point mean{};
    for (const Point& p : pts) mean = mean + p;
    mean = (1.0 / static_cast<double>(pts.size())) * mean;
    std::vector<Point> shifted(pts.begin(), pts.end());
    for (Point& p : shifted) p = p - mean;
    const MomentTable raw = polygon_moments(shifted);
    const Point centroid{raw[1][0] / raw[0][0], raw[0][1] / raw[0][0]};
    for (Point& p : shifted) p = p - centroid;
    return polygon_moments(shifted);
}

/// The seven Hu invariants of the normalized central moments.
inline std::array<double, 7> hu_moments(const Contour& c) {
    const MomentTable mu = central_moments(c);
    auto eta = [&](int p, int q) { return mu[p][q] / std::pow(mu[0][0], 1.0 + 0.5 * (p + q)); };
    const double n20 = eta(2, 0), n02 = eta(0, 2), n11 = eta(1, 1);
    const double n30 = eta(3, 0), n03 = eta(0, 3), n21 = eta(2, 1), n12 = eta(1, 2);
    const double s1 = n30 + n12;
    const double s2 = n21 + n03;
    const double d1 = n30 - 3 * n12;
    const double d2 = 3 * n21 - n03;
    return {
        n20 + n02,
        (n20 - n02) * (n20 - n02) + 4 * n11 * n11,
        d1 * d1 + d2 * d2,
        s1 * s1 + s2 * s2,
        d1 * s1 * (s1 * s1 - 3 * s2 * s2) + d2 * s2 * (3 * s1 * s1 - s2 * s2),
        (n20 - n02) * (s1 * s1 - s2 * s2) + 4 * n11 * s1 * s2,
        d2 * s1 * (s1 * s1 - 3 * s2 * s2) - d1 * s2 * (3 * s1 * s1 - s2 * s2),
    };
}

/// Signed log squashing of a Hu invariant into [0, 1]; 0.5 means zero.
inline double squash_hu(double h) {
    const double mag = std::log10(1.0 + std::abs(h) * 1e6) / 12.0;
    const double s = (std::copysign(mag, h) + 1.0) / 2.0;
    return std::clamp(s, 0.0, 1.0);
}

inline constexpr std::size_t kFeatureCount = 13;
inline constexpr double kDefectDepthFraction = 0.02;
inline constexpr int kDefectCountCap = 10;

/// Positions within ShapeFeatures::values.
enum Feature : std::size_t {
    kConvexity = 0,
    kEccentricity,
    kCompactness,
    kCircularity,
    kSquareness,
    kDefectScore,
    kHu1,
    kHu2,
    kHu3,
    kHu4,
    kHu5,
    kHu6,
    kHu7,
};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "convexity", "eccentricity", "compactness", "circularity", "squareness", "convexity_defects", "hu1",
    "hu2",       "hu3",          "hu4",         "hu5",         "hu6",        "hu7",
};

using FeatureVector = std::array<double, kFeatureCount>;

/// 13 shape descriptors, each in [0,1], in `Feature` order.
struct ShapeFeatures {
    FeatureVector values{};

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    friend bool operator==(const ShapeFeatures&, const ShapeFeatures&) = default;
};

/// Minor over major principal axis length of the region (1 for a disc).
inline double eccentricity_ratio(const Contour& c) {
    const MomentTable mu = central_moments(c);
    const double a = mu[2][0] + mu[0][2];
    const double d = std::hypot(mu[2][0] - mu[0][2], 2.0 * mu[1][1]);
    const double major = 0.5 * (a + d);
    const double minor = std::max(0.0, 0.5 * (a - d));
    return std::sqrt(minor / major);
}

inline ShapeFeatures extract_features(const Contour& c) {
    const double a = area(c);
    const double p = perimeter(c);
    const auto hull_idx = convex_hull_indices(c.points());
    std::vector<Point> hull;
    hull.reserve(hull_idx.size());
    for (std::size_t i : hull_idx) hull.push_back(c[i]);
    const double hull_area = std::abs(detail::signed_area(hull));
    const Circle mec = min_enclosing_circle(hull);
    const double rect = min_area_rect(hull);

    ShapeFeatures f;
    f[kConvexity] = a / hull_area;
    f[kEccentricity] = eccentricity_ratio(c);
    f[kCompactness] = 4.0 * std::numbers::pi * a / (p * p);
    f[kCircularity] = a / (std::numbers::pi * mec.radius * mec.radius);
    f[kSquareness] = a / rect;
    f[kDefectScore] =
        static_cast<double>(std::min(convexity_defects(c, kDefectDepthFraction), kDefectCountCap)) / kDefectCountCap;
    const auto hu = hu_moments(c);
    for (std::size_t i = 0; i < hu.size(); ++i) f[kHu1 + i] = squash_hu(hu[i]);
    for (double& v : f.values) {
        if (!std::isfinite(v)) throw Error(ErrorKind::DegenerateShape, "non-finite shape descriptor");
        v = std::clamp(v, 0.0, 1.0);
    }
    return f;
}

} // namespace hta::shape
