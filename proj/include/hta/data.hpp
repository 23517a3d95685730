#pragma once

// Dataset schemas and ingestion (entities.csv, trials.csv, contour files),
// viewpoint augmentation, train/test splits and the model file format.

#include "hta/action.hpp"
#include "hta/affordance.hpp"
#include "hta/error.hpp"
#include "hta/rng.hpp"
#include "hta/shape.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace hta::data {

using affordance::AffordanceModel;
using affordance::Sample;
using shape::Contour;
using shape::FeatureVector;
using shape::kFeatureCount;
using shape::ShapeFeatures;

// ---------------------------------------------------------------------------
// Text helpers

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a temporary file so readers never see a partial file.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
        out << text;
        if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line of each row
};

inline CsvTable parse_csv(std::string_view text, const std::string& source) {
    CsvTable t;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        const std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        ++line_no;
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw Error(ErrorKind::SchemaError, source + " line " + std::to_string(line_no) + ": expected " +
                                                    std::to_string(t.header.size()) + " fields, got " +
                                                    std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line_no);
    }
    if (t.header.empty()) throw Error(ErrorKind::SchemaError, source + ": missing header row");
    return t;
}

// ---------------------------------------------------------------------------
// Contour files: one "x,y" per line, blank lines separate contours.

inline std::vector<Contour> parse_contours(std::string_view text, const std::string& source) {
    std::vector<Contour> out;
    std::vector<shape::Point> current;
    auto flush = [&](std::size_t line_no) {
        if (current.empty()) return;
        try {
            out.emplace_back(std::move(current));
        } catch (const Error& e) {
            throw Error(e.kind(), source + " contour " + std::to_string(out.size() + 1) + " (ending line " +
                                      std::to_string(line_no) + "): " + e.what());
        }
        current.clear();
    };
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        const std::string_view line = trim(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        ++line_no;
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        if (line.empty()) {
            flush(line_no);
            continue;
        }
        const auto fields = split_fields(line);
        const auto x = fields.size() == 2 ? parse_double(fields[0]) : std::nullopt;
        const auto y = fields.size() == 2 ? parse_double(fields[1]) : std::nullopt;
        if (!x || !y) {
            throw Error(ErrorKind::SchemaError,
                        source + " line " + std::to_string(line_no) + ": expected 'x,y', got '" + std::string(line) + "'");
        }
        current.push_back({*x, *y});
    }
    flush(line_no);
    if (out.empty()) throw Error(ErrorKind::SchemaError, source + ": no contours");
    return out;
}

inline std::vector<Contour> load_contours(const std::filesystem::path& path) {
    return parse_contours(read_text(path), path.string());
}

inline std::string format_contours(std::span<const Contour> contours) {
    std::string out;
    for (std::size_t i = 0; i < contours.size(); ++i) {
        if (i > 0) out += '\n';
        for (const auto& p : contours[i].points()) out += format_double(p.x) + "," + format_double(p.y) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Column mapping adapter for foreign dataset dumps.

/// Maps source column names and action labels onto the canonical schema, and
/// rescales effect displacements to meters. Loaded from JSON:
/// {"entities": {"columns": {"entity_id": "name", ...}},
///  "trials": {"columns": {...}, "actions": {"tap_r": "tapFromRight"}, "effect_scale": 0.01}}
struct ColumnMapping {
    std::map<std::string, std::string> entity_columns; // canonical -> source
    std::map<std::string, std::string> trial_columns;
    std::map<std::string, std::string> actions;        // source label -> canonical
    double effect_scale = 1.0;

    static ColumnMapping from_json(const nlohmann::json& j) {
        ColumnMapping m;
        try {
            if (j.contains("entities") && j["entities"].contains("columns")) {
                m.entity_columns = j["entities"]["columns"].get<std::map<std::string, std::string>>();
            }
            if (j.contains("trials")) {
                const auto& t = j["trials"];
                if (t.contains("columns")) m.trial_columns = t["columns"].get<std::map<std::string, std::string>>();
                if (t.contains("actions")) m.actions = t["actions"].get<std::map<std::string, std::string>>();
                if (t.contains("effect_scale")) m.effect_scale = t["effect_scale"].get<double>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::SchemaError, std::string("column mapping: ") + e.what());
        }
        if (!(m.effect_scale > 0.0) || !std::isfinite(m.effect_scale)) {
            throw Error(ErrorKind::SchemaError, "column mapping: effect_scale must be positive");
        }
        return m;
    }

    static ColumnMapping load(const std::filesystem::path& path) {
        try {
            return from_json(nlohmann::json::parse(read_text(path)));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::SchemaError, path.string() + ": " + e.what());
        }
    }
};

inline void rename_columns(std::vector<std::string>& header, const std::map<std::string, std::string>& canonical_to_source) {
    for (auto& h : header) {
        for (const auto& [canonical, source] : canonical_to_source) {
            if (h == source) {
                h = canonical;
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Entities

enum class EntityKind { Hand, Tool, Object };

constexpr std::string_view to_string(EntityKind k) {
    switch (k) {
    case EntityKind::Hand: return "hand";
    case EntityKind::Tool: return "tool";
    case EntityKind::Object: return "object";
    }
    return "?";
}

inline std::optional<EntityKind> parse_kind(std::string_view s) {
    if (s == "hand") return EntityKind::Hand;
    if (s == "tool") return EntityKind::Tool;
    if (s == "object") return EntityKind::Object;
    return std::nullopt;
}

struct EntityRecord {
    std::string entity_id;
    EntityKind kind = EntityKind::Object;
    std::string view_id;
    ShapeFeatures features;

    friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

/// Entity views in insertion order, keyed by entity id.
class EntitySet {
public:
    void add(EntityRecord r) {
        for (double v : r.features.values) {
            if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                throw Error(ErrorKind::RangeError, "feature of '" + r.entity_id + "' outside [0,1]");
            }
        }
        auto it = index_.find(r.entity_id);
        if (it == index_.end()) {
            order_.push_back(r.entity_id);
            it = index_.emplace(r.entity_id, Entry{r.kind, {}}).first;
        } else if (it->second.kind != r.kind) {
            throw Error(ErrorKind::SchemaError, "entity '" + r.entity_id + "' declared as both " +
                                                    std::string(to_string(it->second.kind)) + " and " +
                                                    std::string(to_string(r.kind)));
        }
        for (std::size_t idx : it->second.views) {
            if (records_[idx].view_id == r.view_id) {
                throw Error(ErrorKind::DuplicateKey,
                            "duplicate view '" + r.view_id + "' for entity '" + r.entity_id + "'");
            }
        }
        it->second.views.push_back(records_.size());
        records_.push_back(std::move(r));
    }

    bool contains(const std::string& id) const { return index_.count(id) > 0; }

    std::optional<EntityKind> kind(const std::string& id) const {
        const auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second.kind;
    }

    std::vector<const EntityRecord*> views(const std::string& id) const {
        std::vector<const EntityRecord*> out;
        const auto it = index_.find(id);
        if (it == index_.end()) return out;
        for (std::size_t idx : it->second.views) out.push_back(&records_[idx]);
        return out;
    }

    /// Entity ids in order of first appearance.
    const std::vector<std::string>& ids() const { return order_; }
    const std::vector<EntityRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    std::vector<std::string> ids_of_kind(EntityKind k) const {
        std::vector<std::string> out;
        for (const auto& id : order_) {
            if (index_.at(id).kind == k) out.push_back(id);
        }
        return out;
    }

    friend bool operator==(const EntitySet& a, const EntitySet& b) { return a.records_ == b.records_; }

private:
    struct Entry {
        EntityKind kind;
        std::vector<std::size_t> views;
    };
    std::vector<EntityRecord> records_;
    std::vector<std::string> order_;
    std::map<std::string, Entry> index_;
};

inline std::string feature_column(std::size_t i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "f%02zu", i + 1);
    return buf;
}

/// Parses entities.csv text. Columns: entity_id, kind, view_id, then either
/// f01..f13 or contour_path (resolved against base_dir).
inline EntitySet parse_entities(std::string_view text, const std::string& source,
                                const std::filesystem::path& base_dir = {}, const ColumnMapping& mapping = {}) {
    CsvTable t = parse_csv(text, source);
    rename_columns(t.header, mapping.entity_columns);

    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (!col.emplace(t.header[i], i).second) {
            throw Error(ErrorKind::SchemaError, source + ": duplicate column '" + t.header[i] + "'");
        }
    }
    std::vector<std::string> expected = {"entity_id", "kind", "view_id"};
    const bool raw_contours = col.count("contour_path") > 0;
    if (raw_contours) {
        expected.push_back("contour_path");
    } else {
        for (std::size_t i = 0; i < kFeatureCount; ++i) expected.push_back(feature_column(i));
    }
    for (const auto& name : expected) {
        if (!col.count(name)) throw Error(ErrorKind::SchemaError, source + ": missing column '" + name + "'");
    }
    if (t.header.size() != expected.size()) {
        for (const auto& h : t.header) {
            if (std::find(expected.begin(), expected.end(), h) == expected.end()) {
                throw Error(ErrorKind::SchemaError, source + ": unexpected column '" + h + "'");
            }
        }
    }

    EntitySet set;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string where = source + " line " + std::to_string(t.line_numbers[r]);
        EntityRecord rec;
        rec.entity_id = row[col["entity_id"]];
        rec.view_id = row[col["view_id"]];
        if (rec.entity_id.empty() || rec.view_id.empty()) {
            throw Error(ErrorKind::SchemaError, where + ": empty entity_id or view_id");
        }
        const auto kind = parse_kind(row[col["kind"]]);
        if (!kind) throw Error(ErrorKind::SchemaError, where + ": unknown kind '" + row[col["kind"]] + "'");
        rec.kind = *kind;
        if (raw_contours) {
            const std::filesystem::path p = base_dir / row[col["contour_path"]];
            const auto contours = load_contours(p);
            if (contours.size() != 1) {
                throw Error(ErrorKind::SchemaError, where + ": contour file '" + p.string() +
                                                        "' must hold exactly one contour per view");
            }
            rec.features = shape::extract_features(contours.front());
        } else {
            for (std::size_t i = 0; i < kFeatureCount; ++i) {
                const std::string name = feature_column(i);
                const auto v = parse_double(row[col[name]]);
                if (!v) throw Error(ErrorKind::SchemaError, where + ", column " + name + ": not a number");
                if (!std::isfinite(*v) || *v < 0.0 || *v > 1.0) {
                    throw Error(ErrorKind::RangeError,
                                where + ", column " + name + ": value " + row[col[name]] + " outside [0,1]");
                }
                rec.features[i] = *v;
            }
        }
        try {
            set.add(std::move(rec));
        } catch (const Error& e) {
            throw Error(e.kind(), where + ": " + e.what());
        }
    }
    return set;
}

inline EntitySet load_entities(const std::filesystem::path& path, const ColumnMapping& mapping = {}) {
    return parse_entities(read_text(path), path.string(), path.parent_path(), mapping);
}

inline std::string format_entities(const EntitySet& set) {
    std::string out = "entity_id,kind,view_id";
    for (std::size_t i = 0; i < kFeatureCount; ++i) out += "," + feature_column(i);
    out += "\n";
    for (const auto& r : set.records()) {
        out += r.entity_id + "," + std::string(to_string(r.kind)) + "," + r.view_id;
        for (double v : r.features.values) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trials

struct TrialRecord {
    std::string trial_id;
    std::string manipulator_id;
    std::string object_id;
    ActionId action = ActionId::TapFromRight;
    double effect_x_m = 0.0;
    double effect_y_m = 0.0;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

inline void check_references(const TrialRecord& t, const EntitySet& entities, const std::string& where) {
    const auto mk = entities.kind(t.manipulator_id);
    if (!mk) throw Error(ErrorKind::UnknownEntity, where + ": unknown manipulator '" + t.manipulator_id + "'");
    if (*mk == EntityKind::Object) {
        throw Error(ErrorKind::SchemaError, where + ": manipulator '" + t.manipulator_id + "' is an object");
    }
    const auto ok = entities.kind(t.object_id);
    if (!ok) throw Error(ErrorKind::UnknownEntity, where + ": unknown object '" + t.object_id + "'");
    if (*ok != EntityKind::Object) {
        throw Error(ErrorKind::SchemaError, where + ": object '" + t.object_id + "' is not an object");
    }
}

inline std::vector<TrialRecord> parse_trials(std::string_view text, const std::string& source, const EntitySet& entities,
                                             const ColumnMapping& mapping = {}) {
    CsvTable t = parse_csv(text, source);
    rename_columns(t.header, mapping.trial_columns);
    static const std::vector<std::string> expected = {"trial_id", "manipulator_id", "object_id",
                                                      "action",   "effect_x_m",     "effect_y_m"};
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < t.header.size(); ++i) col.emplace(t.header[i], i);
    for (const auto& name : expected) {
        if (!col.count(name)) throw Error(ErrorKind::SchemaError, source + ": missing column '" + name + "'");
    }
    for (const auto& h : t.header) {
        if (std::find(expected.begin(), expected.end(), h) == expected.end()) {
            throw Error(ErrorKind::SchemaError, source + ": unexpected column '" + h + "'");
        }
    }
    if (col.size() != t.header.size()) throw Error(ErrorKind::SchemaError, source + ": duplicate column");

    std::vector<TrialRecord> out;
    std::map<std::string, std::size_t> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string where = source + " line " + std::to_string(t.line_numbers[r]);
        TrialRecord rec;
        rec.trial_id = row[col["trial_id"]];
        rec.manipulator_id = row[col["manipulator_id"]];
        rec.object_id = row[col["object_id"]];
        std::string label = row[col["action"]];
        if (const auto it = mapping.actions.find(label); it != mapping.actions.end()) label = it->second;
        const auto action = parse_action(label);
        if (!action) throw Error(ErrorKind::SchemaError, where + ": unknown action '" + row[col["action"]] + "'");
        rec.action = *action;
        for (const auto& [name, dst] : {std::pair{"effect_x_m", &rec.effect_x_m}, std::pair{"effect_y_m", &rec.effect_y_m}}) {
            const auto v = parse_double(row[col[name]]);
            if (!v) throw Error(ErrorKind::SchemaError, where + ", column " + name + ": not a number");
            if (!std::isfinite(*v)) throw Error(ErrorKind::NonFinite, where + ", column " + name + ": not finite");
            *dst = *v * mapping.effect_scale;
        }
        if (!seen.emplace(rec.trial_id, r).second) {
            throw Error(ErrorKind::DuplicateKey, where + ": duplicate trial_id '" + rec.trial_id + "'");
        }
        check_references(rec, entities, where);
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<TrialRecord> load_trials(const std::filesystem::path& path, const EntitySet& entities,
                                            const ColumnMapping& mapping = {}) {
    return parse_trials(read_text(path), path.string(), entities, mapping);
}

inline std::string format_trials(std::span<const TrialRecord> trials) {
    std::string out = "trial_id,manipulator_id,object_id,action,effect_x_m,effect_y_m\n";
    for (const auto& t : trials) {
        out += t.trial_id + "," + t.manipulator_id + "," + t.object_id + "," + std::string(to_string(t.action)) + "," +
               format_double(t.effect_x_m) + "," + format_double(t.effect_y_m) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Viewpoint augmentation

struct AugmentedSample {
    std::string trial_id;
    std::string manipulator_id;
    std::string manipulator_view;
    std::string object_id;
    std::string object_view;
    Sample sample;
};

/// Replicates each trial over every (manipulator view, object view) pair,
/// assuming affordances are viewpoint invariant. Effects and actions are
/// copied unchanged.
inline std::vector<AugmentedSample> augment(std::span<const TrialRecord> trials, const EntitySet& entities) {
    std::vector<AugmentedSample> out;
    for (const auto& t : trials) {
        for (const auto* id : {&t.manipulator_id, &t.object_id}) {
            if (!entities.contains(*id)) throw Error(ErrorKind::UnknownEntity, "trial '" + t.trial_id + "': unknown entity '" + *id + "'");
        }
        const auto mv = entities.views(t.manipulator_id);
        const auto ov = entities.views(t.object_id);
        if (mv.empty() || ov.empty()) {
            throw Error(ErrorKind::MissingViews, "trial '" + t.trial_id + "': entity '" +
                                                     (mv.empty() ? t.manipulator_id : t.object_id) + "' has no views");
        }
        out.reserve(out.size() + mv.size() * ov.size());
        for (const auto* m : mv) {
            for (const auto* o : ov) {
                out.push_back({t.trial_id, t.manipulator_id, m->view_id, t.object_id, o->view_id,
                               Sample{m->features.values, o->features.values, t.action, t.effect_x_m, t.effect_y_m}});
            }
        }
    }
    return out;
}

inline std::vector<Sample> samples_of(std::span<const AugmentedSample> augmented) {
    std::vector<Sample> out;
    out.reserve(augmented.size());
    for (const auto& a : augmented) out.push_back(a.sample);
    return out;
}

inline std::string format_augmented(std::span<const AugmentedSample> samples) {
    std::string out = "trial_id,manipulator_id,manipulator_view,object_id,object_view,action,effect_x_m,effect_y_m";
    for (const char* side : {"m", "o"}) {
        for (std::size_t i = 0; i < kFeatureCount; ++i) out += std::string(",") + side + "_" + feature_column(i);
    }
    out += "\n";
    for (const auto& a : samples) {
        out += a.trial_id + "," + a.manipulator_id + "," + a.manipulator_view + "," + a.object_id + "," + a.object_view +
               "," + std::string(to_string(a.sample.action)) + "," + format_double(a.sample.effect_x_m) + "," +
               format_double(a.sample.effect_y_m);
        for (double v : a.sample.manipulator) out += "," + format_double(v);
        for (double v : a.sample.object) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Train/test splits

enum class SplitMode { ByTrial, ByView };

inline std::optional<SplitMode> parse_split_mode(std::string_view s) {
    if (s == "by-trial") return SplitMode::ByTrial;
    if (s == "by-view") return SplitMode::ByView;
    return std::nullopt;
}

struct Split {
    std::vector<AugmentedSample> train;
    std::vector<AugmentedSample> test;
    std::string description;
};

inline void check_fraction(double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "split fraction must lie in (0, 1]");
    }
}

/// Number of training items out of n; leaves at least one test item when n >= 2.
inline std::size_t train_count(std::size_t n, double fraction) {
    auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    if (n >= 2 && k == n) k = n - 1;
    return k;
}

/// Splits trials, then augments each side. A fraction of 1 trains and tests
/// on the full set.
inline Split split_by_trial(std::span<const TrialRecord> trials, const EntitySet& entities, double fraction,
                            std::uint64_t seed) {
    check_fraction(fraction);
    Split s;
    if (fraction == 1.0) {
        s.train = augment(trials, entities);
        s.test = s.train;
        s.description = "by-trial, train = test = all " + std::to_string(trials.size()) + " trials";
        return s;
    }
    std::vector<std::size_t> idx(trials.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(derive_seed(seed, 0x5117));
    rng.shuffle(std::span<std::size_t>(idx));
    const std::size_t k = train_count(idx.size(), fraction);
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::size_t> test_idx(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::vector<TrialRecord> train, test;
    for (std::size_t i : train_idx) train.push_back(trials[i]);
    for (std::size_t i : test_idx) test.push_back(trials[i]);
    s.train = augment(train, entities);
    s.test = augment(test, entities);
    s.description = "by-trial, " + std::to_string(train.size()) + " train / " + std::to_string(test.size()) +
                    " test trials";
    return s;
}

/// Partitions the views of every entity, then augments all trials with
/// train views for training and held-out views for testing.
inline Split split_by_view(std::span<const TrialRecord> trials, const EntitySet& entities, double fraction,
                           std::uint64_t seed) {
    check_fraction(fraction);
    if (fraction == 1.0) {
        Split s = split_by_trial(trials, entities, 1.0, seed);
        s.description = "by-view, train = test = all views";
        return s;
    }
    EntitySet train_views, test_views;
    std::size_t n_train = 0, n_test = 0;
    std::uint64_t stream = 0;
    for (const auto& id : entities.ids()) {
        auto views = entities.views(id);
        Rng rng(derive_seed(seed, 0xa1e0 + stream++));
        rng.shuffle(std::span<const EntityRecord*>(views));
        const std::size_t k = train_count(views.size(), fraction);
        std::vector<const EntityRecord*> tr(views.begin(), views.begin() + static_cast<std::ptrdiff_t>(k));
        std::vector<const EntityRecord*> te(views.begin() + static_cast<std::ptrdiff_t>(k), views.end());
        // Keep file order within each side.
        auto by_address = [](const EntityRecord* a, const EntityRecord* b) { return a < b; };
        std::sort(tr.begin(), tr.end(), by_address);
        std::sort(te.begin(), te.end(), by_address);
        for (const auto* r : tr) train_views.add(*r);
        for (const auto* r : te) test_views.add(*r);
        n_train += tr.size();
        n_test += te.size();
    }
    Split s;
    s.train = augment(trials, train_views);
    s.test = augment(trials, test_views);
    s.description = "by-view, " + std::to_string(n_train) + " train / " + std::to_string(n_test) + " test views";
    return s;
}

// ---------------------------------------------------------------------------
// Model file: JSON with a format version and a CRC-32 over the model body.

inline constexpr int kFormatVersion = 1;

inline std::string checksum_of(const std::string& text) {
    const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
    return std::string("crc32:") + buf;
}

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson pca_to_json(const reduce::PcaBlock& b) {
    return ojson{{"mean", b.mean}, {"components", b.components}, {"explained_variance", b.explained_variance}};
}

inline ojson table_to_json(const affordance::CptTable& t) {
    ojson rows = ojson::array();
    for (const auto& r : t) rows.push_back(r ? ojson(*r) : ojson(nullptr));
    return rows;
}

inline ojson model_body(const AffordanceModel& m) {
    ojson dirs = ojson::object();
    for (ActionId a : kAllActions) dirs[std::string(to_string(a))] = m.directions[a].to_string();
    return ojson{
        {"smoothing_alpha", m.smoothing_alpha},
        {"effect_bin_edges", m.effect_binning.edges},
        {"action_directions", dirs},
        {"pca", {{"manipulator", pca_to_json(m.pca_manip)}, {"object", pca_to_json(m.pca_obj)}}},
        {"discretizers", {{"manipulator", m.disc_manip.thresholds}, {"object", m.disc_obj.thresholds}}},
        {"config_index", "((((m1*2+m2)*2+o1)*2+o2)*4+action)"},
        {"config_counts", m.counts},
        {"cpt_x", table_to_json(m.cpt_x)},
        {"cpt_y", table_to_json(m.cpt_y)},
    };
}

inline void check_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) throw Error(ErrorKind::CorruptModel, what + " is not finite");
}

inline reduce::PcaBlock pca_from_json(const ojson& j, const std::string& name) {
    reduce::PcaBlock b;
    b.mean = j.at("mean").get<shape::FeatureVector>();
    b.components = j.at("components").get<std::array<shape::FeatureVector, reduce::kComponents>>();
    b.explained_variance = j.at("explained_variance").get<std::array<double, reduce::kComponents>>();
    for (double v : b.mean) check_finite(v, name + " mean");
    for (const auto& c : b.components) {
        for (double v : c) check_finite(v, name + " component");
    }
    for (double v : b.explained_variance) {
        if (!(v >= 0.0)) throw Error(ErrorKind::CorruptModel, name + " explained variance negative");
    }
    return b;
}

inline affordance::CptTable table_from_json(const ojson& j, const std::string& name, double alpha) {
    if (!j.is_array() || j.size() != affordance::kConfigCount) {
        throw Error(ErrorKind::CorruptModel, name + " must have " + std::to_string(affordance::kConfigCount) + " rows");
    }
    affordance::CptTable t{};
    for (std::size_t i = 0; i < affordance::kConfigCount; ++i) {
        if (j[i].is_null()) {
            if (alpha > 0.0) {
                throw Error(ErrorKind::CorruptModel, name + " row " + std::to_string(i) + " is unknown but alpha > 0");
            }
            continue;
        }
        const auto row = j[i].get<affordance::CptRow>();
        double sum = 0.0;
        for (double v : row) {
            if (!std::isfinite(v) || v < 0.0) {
                throw Error(ErrorKind::CorruptModel, name + " row " + std::to_string(i) + " has an invalid probability");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw Error(ErrorKind::CorruptModel,
                        name + " row " + std::to_string(i) + " sums to " + format_double(sum) + ", not 1");
        }
        t[i] = row;
    }
    return t;
}

} // namespace detail

inline std::string serialize_model(const AffordanceModel& m) {
    const auto body = detail::model_body(m);
    detail::ojson doc{{"format_version", kFormatVersion}, {"checksum", checksum_of(body.dump())}, {"model", body}};
    return doc.dump(2) + "\n";
}

inline AffordanceModel deserialize_model(std::string_view text, const std::string& source = "model") {
    detail::ojson doc;
    try {
        doc = detail::ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::CorruptModel, source + ": truncated or malformed document (" + e.what() + ")");
    }
    try {
        if (!doc.is_object() || !doc.contains("format_version")) {
            throw Error(ErrorKind::CorruptModel, source + ": missing format_version");
        }
        const int version = doc.at("format_version").get<int>();
        if (version != kFormatVersion) {
            throw Error(ErrorKind::VersionMismatch, source + ": format_version " + std::to_string(version) +
                                                        ", expected " + std::to_string(kFormatVersion));
        }
        const auto& body = doc.at("model");
        AffordanceModel m;
        m.smoothing_alpha = body.at("smoothing_alpha").get<double>();
        if (!(m.smoothing_alpha >= 0.0) || !std::isfinite(m.smoothing_alpha)) {
            throw Error(ErrorKind::CorruptModel, source + ": invalid smoothing_alpha");
        }
        m.effect_binning.edges = body.at("effect_bin_edges").get<decltype(m.effect_binning.edges)>();
        if (!m.effect_binning.valid()) throw Error(ErrorKind::CorruptModel, source + ": effect bin edges not ascending");
        for (ActionId a : kAllActions) {
            const auto s = body.at("action_directions").at(std::string(to_string(a))).get<std::string>();
            const auto d = DesiredDirection::parse(s);
            if (!d) throw Error(ErrorKind::CorruptModel, source + ": bad direction '" + s + "'");
            m.directions[a] = *d;
        }
        m.pca_manip = detail::pca_from_json(body.at("pca").at("manipulator"), "manipulator PCA");
        m.pca_obj = detail::pca_from_json(body.at("pca").at("object"), "object PCA");
        m.disc_manip.thresholds = body.at("discretizers").at("manipulator").get<std::array<double, reduce::kComponents>>();
        m.disc_obj.thresholds = body.at("discretizers").at("object").get<std::array<double, reduce::kComponents>>();
        for (double v : m.disc_manip.thresholds) detail::check_finite(v, "threshold");
        for (double v : m.disc_obj.thresholds) detail::check_finite(v, "threshold");
        m.counts = body.at("config_counts").get<decltype(m.counts)>();
        m.cpt_x = detail::table_from_json(body.at("cpt_x"), "cpt_x", m.smoothing_alpha);
        m.cpt_y = detail::table_from_json(body.at("cpt_y"), "cpt_y", m.smoothing_alpha);

        const auto expected = doc.at("checksum").get<std::string>();
        if (checksum_of(body.dump()) != expected) {
            throw Error(ErrorKind::CorruptModel, source + ": checksum mismatch");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::CorruptModel, source + ": " + e.what());
    }
}

inline void save_model(const AffordanceModel& m, const std::filesystem::path& path) {
    write_text_atomic(path, serialize_model(m));
}

inline AffordanceModel load_model(const std::filesystem::path& path) {
    return deserialize_model(read_text(path), path.string());
}

} // namespace hta::data
