#pragma once

#include "hta/error.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hta {

enum class ActionId : std::uint8_t { TapFromRight = 0, TapFromLeft = 1, Draw = 2, Push = 3 };

inline constexpr std::size_t kActionCount = 4;
inline constexpr std::array<ActionId, kActionCount> kAllActions = {ActionId::TapFromRight, ActionId::TapFromLeft,
                                                                  ActionId::Draw, ActionId::Push};

constexpr std::string_view to_string(ActionId a) {
    switch (a) {
    case ActionId::TapFromRight: return "tapFromRight";
    case ActionId::TapFromLeft: return "tapFromLeft";
    case ActionId::Draw: return "draw";
    case ActionId::Push: return "push";
    }
    return "?";
}

constexpr std::size_t index_of(ActionId a) { return static_cast<std::size_t>(a); }

inline std::optional<ActionId> parse_action(std::string_view name) {
    for (ActionId a : kAllActions) {
        if (to_string(a) == name) return a;
    }
    return std::nullopt;
}

enum class Axis : std::uint8_t { X = 0, Y = 1 };
enum class Sign : std::uint8_t { Negative = 0, Positive = 1 };

/// Desired displacement direction of the target object for an action.
struct DesiredDirection {
    Axis axis = Axis::X;
    Sign sign = Sign::Negative;

    /// The two effect bins on the desired side of zero; never the center bin.
    std::array<int, 2> desired_bins() const {
        return sign == Sign::Negative ? std::array<int, 2>{0, 1} : std::array<int, 2>{3, 4};
    }

    std::string to_string() const {
        return std::string(axis == Axis::X ? "x" : "y") + (sign == Sign::Negative ? "-" : "+");
    }

    static std::optional<DesiredDirection> parse(std::string_view s) {
        if (s.size() != 2) return std::nullopt;
        DesiredDirection d;
        if (s[0] == 'x' || s[0] == 'X') d.axis = Axis::X;
        else if (s[0] == 'y' || s[0] == 'Y') d.axis = Axis::Y;
        else return std::nullopt;
        if (s[1] == '-') d.sign = Sign::Negative;
        else if (s[1] == '+') d.sign = Sign::Positive;
        else return std::nullopt;
        return d;
    }

    friend bool operator==(const DesiredDirection&, const DesiredDirection&) = default;
};

/// Action -> desired direction. The robot sits at y = 0: drawing pulls the
/// object toward negative y, pushing moves it away; tapping from the right
/// shifts the object left (negative x).
struct ActionDirectionMap {
    std::array<DesiredDirection, kActionCount> directions{{
        {Axis::X, Sign::Negative},
        {Axis::X, Sign::Positive},
        {Axis::Y, Sign::Negative},
        {Axis::Y, Sign::Positive},
    }};

    const DesiredDirection& operator[](ActionId a) const { return directions[index_of(a)]; }
    DesiredDirection& operator[](ActionId a) { return directions[index_of(a)]; }

    /// Applies overrides of the form "draw=y-,push=y+".
    void apply_overrides(std::string_view spec) {
        while (!spec.empty()) {
            const auto comma = spec.find(',');
            const std::string_view item = spec.substr(0, comma);
            spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
            if (item.empty()) continue;
            const auto eq = item.find('=');
            const auto action = eq == std::string_view::npos ? std::nullopt : parse_action(item.substr(0, eq));
            const auto dir =
                eq == std::string_view::npos ? std::nullopt : DesiredDirection::parse(item.substr(eq + 1));
            if (!action || !dir) {
                throw Error(ErrorKind::InvalidArgument,
                            "bad direction override '" + std::string(item) + "' (expected e.g. draw=y-)");
            }
            (*this)[*action] = *dir;
        }
    }

    friend bool operator==(const ActionDirectionMap&, const ActionDirectionMap&) = default;
};

} // namespace hta
