#include "hta/data.hpp"
#include "hta/synthworld.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace hta;
using namespace hta::data;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / ("hta_" + std::string(info->test_suite_name()) + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string row(const std::string& id, const std::string& kind, const std::string& view, double v) {
    std::string out = id + "," + kind + "," + view;
    for (std::size_t i = 0; i < shape::kFeatureCount; ++i) out += "," + format_double(v);
    return out + "\n";
}

std::string header() {
    std::string h = "entity_id,kind,view_id";
    for (std::size_t i = 0; i < shape::kFeatureCount; ++i) h += "," + feature_column(i);
    return h + "\n";
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::Io;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    ADD_FAILURE() << "no error raised";
    return {};
}

EntitySet small_entities(int hand_views, int object_views) {
    std::string text = header();
    for (int v = 0; v < hand_views; ++v) text += row("hand", "hand", synth::view_id(v), 0.1 + 0.05 * v);
    for (int v = 0; v < object_views; ++v) text += row("ball", "object", synth::view_id(v), 0.9 - 0.01 * v);
    return parse_entities(text, "mem");
}

std::vector<TrialRecord> trials_for(const std::string& manip, const std::string& obj, int n) {
    std::vector<TrialRecord> t;
    for (int i = 0; i < n; ++i) t.push_back({"t" + std::to_string(i), manip, obj, ActionId::Draw, 0.0, -0.05});
    return t;
}

} // namespace

TEST(Text, FormatParseRoundTrip) {
    for (double v : {0.0, 0.1, 1.0 / 3.0, -2.5e-7, 123456.789, 0.30000000000000004}) {
        EXPECT_EQ(parse_double(format_double(v)).value(), v);
    }
    EXPECT_FALSE(parse_double("abc"));
    EXPECT_FALSE(parse_double("1.0x"));
    EXPECT_FALSE(parse_double(""));
    EXPECT_EQ(parse_double(" 2.5 ").value(), 2.5);
}

TEST(Entities, ThreeEntitiesTenViews) {
    std::string text = header();
    for (const char* id : {"hand_a", "stick", "ball"}) {
        const std::string kind = std::string(id) == "ball" ? "object" : (std::string(id) == "stick" ? "tool" : "hand");
        for (int v = 0; v < 10; ++v) text += row(id, kind, synth::view_id(v), 0.5);
    }
    const auto set = parse_entities(text, "mem");
    EXPECT_EQ(set.size(), 30u);
    EXPECT_EQ(set.ids().size(), 3u);
    EXPECT_EQ(set.views("stick").size(), 10u);
    EXPECT_EQ(set.kind("ball"), EntityKind::Object);
    EXPECT_EQ(set.ids_of_kind(EntityKind::Hand), std::vector<std::string>{"hand_a"});
}

TEST(Entities, OutOfRangeNamesLineAndColumn) {
    std::string text = header() + row("a", "hand", "v00", 0.5);
    std::string bad = row("a", "hand", "v01", 0.5);
    bad.replace(bad.find(",0.5"), 4, ",1.2");
    text += bad;
    const auto msg = message_of([&] { parse_entities(text, "ents.csv"); });
    EXPECT_NE(msg.find("RangeError"), std::string::npos);
    EXPECT_NE(msg.find("ents.csv line 3"), std::string::npos);
    EXPECT_NE(msg.find("f01"), std::string::npos);
}

TEST(Entities, SchemaErrors) {
    EXPECT_EQ(kind_of([] { parse_entities("entity_id,kind,view_id,f01\n", "m"); }), ErrorKind::SchemaError);
    EXPECT_EQ(kind_of([] { parse_entities(header() + "a,hand,v00\n", "m"); }), ErrorKind::SchemaError);
    EXPECT_EQ(kind_of([] { parse_entities(header() + row("a", "robot", "v00", 0.5), "m"); }),
              ErrorKind::SchemaError);
    std::string extra = header();
    extra.insert(extra.size() - 1, ",bonus");
    EXPECT_EQ(kind_of([&] { parse_entities(extra, "m"); }), ErrorKind::SchemaError);
    std::string nan_row = row("a", "hand", "v00", 0.5);
    nan_row.replace(nan_row.find(",0.5"), 4, ",nan");
    EXPECT_EQ(kind_of([&] { parse_entities(header() + nan_row, "m"); }), ErrorKind::RangeError);
    EXPECT_EQ(kind_of([] { parse_entities("", "m"); }), ErrorKind::SchemaError);
}

TEST(Entities, DuplicateViewAndKindConflict) {
    EXPECT_EQ(kind_of([] { parse_entities(header() + row("a", "hand", "v00", 0.5) + row("a", "hand", "v00", 0.4), "m"); }),
              ErrorKind::DuplicateKey);
    EXPECT_EQ(kind_of([] { parse_entities(header() + row("a", "hand", "v00", 0.5) + row("a", "tool", "v01", 0.4), "m"); }),
              ErrorKind::SchemaError);
}

TEST(Entities, ContourPathMatchesDirectExtraction) {
    TempDir dir;
    fs::create_directories(dir / "shapes");
    const shape::Contour c(oracle::comb(4));
    write_text_atomic(dir / "shapes/comb.txt", format_contours(std::span(&c, 1)));
    write_text_atomic(dir / "ents.csv", "entity_id,kind,view_id,contour_path\nrake,tool,v00,shapes/comb.txt\n");
    const auto set = load_entities(dir / "ents.csv");
    ASSERT_EQ(set.size(), 1u);
    EXPECT_EQ(set.records()[0].features, shape::extract_features(c));
}

TEST(Entities, ContourFileErrorsCarryLocation) {
    TempDir dir;
    write_text_atomic(dir / "bad.txt", "0,0\n2,2\n2,0\n0,1\n");
    write_text_atomic(dir / "ents.csv", "entity_id,kind,view_id,contour_path\nx,tool,v00,bad.txt\n");
    const auto msg = message_of([&] { load_entities(dir / "ents.csv"); });
    EXPECT_NE(msg.find("bad.txt"), std::string::npos);
    EXPECT_NE(msg.find("InvalidContour"), std::string::npos);
    EXPECT_EQ(kind_of([] { parse_contours("0,0\n1,zero\n", "c"); }), ErrorKind::SchemaError);
}

TEST(Entities, FormatRoundTrip) {
    const auto world = synth::make_world({7, 0.0, 3, 1});
    const auto text = format_entities(world.entities);
    const auto back = parse_entities(text, "mem");
    EXPECT_EQ(back, world.entities);
    EXPECT_EQ(format_entities(back), text);
}

TEST(Contours, MultipleContoursPerFile) {
    const auto cs = parse_contours("0,0\n1,0\n0,1\n\n\n0,0\n2,0\n2,2\n0,2\n", "c");
    ASSERT_EQ(cs.size(), 2u);
    EXPECT_EQ(cs[1].size(), 4u);
    const auto again = parse_contours(format_contours(cs), "c");
    EXPECT_EQ(again.size(), 2u);
}

TEST(Trials, ParsesAndValidatesReferences) {
    const auto ents = small_entities(2, 2);
    const std::string h = "trial_id,manipulator_id,object_id,action,effect_x_m,effect_y_m\n";
    const auto t = parse_trials(h + "a,hand,ball,draw,0.01,-0.08\n", "t", ents);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0].action, ActionId::Draw);
    EXPECT_DOUBLE_EQ(t[0].effect_y_m, -0.08);
    EXPECT_EQ(kind_of([&] { parse_trials(h + "a,robot,ball,draw,0,0\n", "t", ents); }), ErrorKind::UnknownEntity);
    EXPECT_EQ(kind_of([&] { parse_trials(h + "a,hand,ball,lift,0,0\n", "t", ents); }), ErrorKind::SchemaError);
    EXPECT_EQ(kind_of([&] { parse_trials(h + "a,ball,hand,draw,0,0\n", "t", ents); }), ErrorKind::SchemaError);
    EXPECT_EQ(kind_of([&] { parse_trials(h + "a,hand,ball,draw,0,0\na,hand,ball,push,0,0\n", "t", ents); }),
              ErrorKind::DuplicateKey);
    EXPECT_EQ(kind_of([&] { parse_trials(h + "a,hand,ball,draw,inf,0\n", "t", ents); }), ErrorKind::NonFinite);
    EXPECT_EQ(kind_of([&] { parse_trials(h + "a,hand,ball,draw,0\n", "t", ents); }), ErrorKind::SchemaError);
}

TEST(Trials, MappingAdapter) {
    const auto ents = small_entities(1, 1);
    const auto mapping = ColumnMapping::from_json(nlohmann::json::parse(R"({
        "trials": {"columns": {"trial_id": "id", "manipulator_id": "tool", "object_id": "target",
                               "effect_x_m": "dx_cm", "effect_y_m": "dy_cm"},
                   "actions": {"pull": "draw"}, "effect_scale": 0.01}})"));
    const auto t = parse_trials("id,tool,target,action,dx_cm,dy_cm\n1,hand,ball,pull,3,-9\n", "t", ents, mapping);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0].action, ActionId::Draw);
    EXPECT_NEAR(t[0].effect_x_m, 0.03, 1e-15);
    EXPECT_NEAR(t[0].effect_y_m, -0.09, 1e-15);

    const auto em = ColumnMapping::from_json(nlohmann::json::parse(R"({"entities": {"columns": {"entity_id": "name"}}})"));
    std::string text = header() + row("ball", "object", "v00", 0.5);
    text.replace(0, 9, "name");
    EXPECT_EQ(parse_entities(text, "e", {}, em).size(), 1u);
    EXPECT_THROW(ColumnMapping::from_json(nlohmann::json::parse(R"({"trials": {"effect_scale": -1}})")), Error);
    EXPECT_THROW(ColumnMapping::from_json(nlohmann::json::parse(R"({"trials": {"columns": 3}})")), Error);
}

TEST(Augment, TenByTenViews) {
    const auto ents = small_entities(10, 10);
    const auto a = augment(trials_for("hand", "ball", 1), ents);
    EXPECT_EQ(a.size(), 100u);
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& s : a) {
        pairs.insert({s.manipulator_view, s.object_view});
        EXPECT_EQ(s.sample.action, ActionId::Draw);
        EXPECT_DOUBLE_EQ(s.sample.effect_y_m, -0.05);
    }
    EXPECT_EQ(pairs.size(), 100u);
}

TEST(Augment, ElevenTrialsTwelveByTwentyFour) {
    const auto ents = small_entities(12, 24);
    EXPECT_EQ(augment(trials_for("hand", "ball", 11), ents).size(), 3168u);
}

TEST(Augment, MissingViewsAndUnknownEntities) {
    auto ents = small_entities(2, 2);
    EXPECT_EQ(kind_of([&] { augment(trials_for("ghost", "ball", 1), ents); }), ErrorKind::UnknownEntity);
    // Splitting views leaves entities without views on one side.
    EntitySet only_hand;
    for (const auto& r : ents.records())
        if (r.kind == EntityKind::Hand) only_hand.add(r);
    EXPECT_EQ(kind_of([&] { augment(trials_for("hand", "ball", 1), only_hand); }), ErrorKind::UnknownEntity);
}

TEST(Augment, LoadingTwiceIsIdentical) {
    TempDir dir;
    const auto world = synth::make_world({3, 0.01, 4, 2});
    write_text_atomic(dir / "e.csv", format_entities(world.entities));
    write_text_atomic(dir / "t.csv", format_trials(world.hand_trials));
    std::string first;
    for (int i = 0; i < 2; ++i) {
        const auto ents = load_entities(dir / "e.csv");
        const auto trials = load_trials(dir / "t.csv", ents);
        const auto text = format_augmented(augment(trials, ents));
        if (i == 0) first = text;
        else EXPECT_EQ(text, first);
    }
    EXPECT_EQ(world.hand_trials.size(), 3u * 2 * 4 * 2);
}

TEST(Splits, ByTrialDisjointAndDeterministic) {
    const auto world = synth::make_world({1, 0.0, 3, 5});
    const auto a = split_by_trial(world.hand_trials, world.entities, 0.75, 42);
    const auto b = split_by_trial(world.hand_trials, world.entities, 0.75, 42);
    EXPECT_EQ(format_augmented(a.train), format_augmented(b.train));
    std::set<std::string> train_ids, test_ids;
    for (const auto& s : a.train) train_ids.insert(s.trial_id);
    for (const auto& s : a.test) test_ids.insert(s.trial_id);
    EXPECT_EQ(train_ids.size(), 90u);
    EXPECT_EQ(test_ids.size(), 30u);
    for (const auto& id : test_ids) EXPECT_FALSE(train_ids.count(id));
    const auto c = split_by_trial(world.hand_trials, world.entities, 0.75, 43);
    EXPECT_NE(format_augmented(a.train), format_augmented(c.train));
}

TEST(Splits, FullFractionUsesEverything) {
    const auto world = synth::make_world({1, 0.0, 2, 1});
    const auto s = split_by_trial(world.hand_trials, world.entities, 1.0, 0);
    EXPECT_EQ(s.train.size(), world.hand_trials.size() * 4);
    EXPECT_EQ(s.test.size(), s.train.size());
    EXPECT_THROW(split_by_trial(world.hand_trials, world.entities, 0.0, 0), Error);
    EXPECT_THROW(split_by_trial(world.hand_trials, world.entities, 1.5, 0), Error);
}

TEST(Splits, ByViewHoldsOutViews) {
    const auto world = synth::make_world({2, 0.0, 10, 1});
    const auto s = split_by_view(world.hand_trials, world.entities, 0.8, 5);
    std::set<std::string> train_views, test_views;
    for (const auto& x : s.train) train_views.insert(x.manipulator_id + "/" + x.manipulator_view);
    for (const auto& x : s.test) test_views.insert(x.manipulator_id + "/" + x.manipulator_view);
    EXPECT_EQ(train_views.size(), 3u * 8);
    EXPECT_EQ(test_views.size(), 3u * 2);
    for (const auto& v : test_views) EXPECT_FALSE(train_views.count(v));
    EXPECT_EQ(s.train.size(), world.hand_trials.size() * 8 * 8);
    EXPECT_EQ(s.test.size(), world.hand_trials.size() * 2 * 2);
}

TEST(Splits, TrainCount) {
    EXPECT_EQ(train_count(10, 0.8), 8u);
    EXPECT_EQ(train_count(10, 0.99), 9u);
    EXPECT_EQ(train_count(10, 0.01), 1u);
    EXPECT_EQ(train_count(1, 0.5), 1u);
}

class ModelFile : public ::testing::Test {
protected:
    // Draw trials only, so most configurations stay empty.
    static affordance::AffordanceModel fitted(double alpha) {
        const auto world = synth::make_world({11, 0.0, 4, 2});
        std::vector<TrialRecord> draw;
        for (const auto& t : world.hand_trials)
            if (t.action == ActionId::Draw) draw.push_back(t);
        return affordance::fit_model(samples_of(augment(draw, world.entities)), alpha);
    }
};

TEST_F(ModelFile, RoundTripIsExact) {
    for (double alpha : {0.0, 1.0}) {
        const auto m = fitted(alpha);
        const auto text = serialize_model(m);
        const auto back = deserialize_model(text);
        EXPECT_EQ(back, m);
        EXPECT_EQ(serialize_model(back), text);
    }
}

TEST_F(ModelFile, UnknownRowsStoredAsNull) {
    const auto m = fitted(0.0);
    ASSERT_FALSE(m.empty_configs().empty());
    const auto text = serialize_model(m);
    EXPECT_NE(text.find("null"), std::string::npos);
    const auto back = deserialize_model(text);
    EXPECT_FALSE(back.cpt_x[m.empty_configs().front().index()].has_value());
}

TEST_F(ModelFile, TruncatedIsCorrupt) {
    const auto text = serialize_model(fitted(1.0));
    for (std::size_t cut : {std::size_t{0}, std::size_t{10}, text.size() / 2, text.size() - 3}) {
        EXPECT_EQ(kind_of([&] { deserialize_model(text.substr(0, cut)); }), ErrorKind::CorruptModel) << cut;
    }
}

TEST_F(ModelFile, EditedRowNamesIndex) {
    auto doc = nlohmann::ordered_json::parse(serialize_model(fitted(1.0)));
    doc["model"]["cpt_y"][17][0] = 0.9;
    const auto msg = message_of([&] { deserialize_model(doc.dump()); });
    EXPECT_NE(msg.find("CorruptModel"), std::string::npos);
    EXPECT_NE(msg.find("cpt_y row 17"), std::string::npos);
}

TEST_F(ModelFile, ChecksumCatchesConsistentEdits) {
    auto doc = nlohmann::ordered_json::parse(serialize_model(fitted(1.0)));
    doc["model"]["discretizers"]["object"][0] = 0.123;
    const auto msg = message_of([&] { deserialize_model(doc.dump()); });
    EXPECT_NE(msg.find("checksum"), std::string::npos);
}

TEST_F(ModelFile, VersionMismatch) {
    auto doc = nlohmann::ordered_json::parse(serialize_model(fitted(1.0)));
    doc["format_version"] = 2;
    EXPECT_EQ(kind_of([&] { deserialize_model(doc.dump()); }), ErrorKind::VersionMismatch);
    doc["format_version"] = "one";
    EXPECT_EQ(kind_of([&] { deserialize_model(doc.dump()); }), ErrorKind::CorruptModel);
}

TEST_F(ModelFile, SaveLoadThroughDisk) {
    TempDir dir;
    const auto m = fitted(1.0);
    save_model(m, dir / "m.json");
    EXPECT_EQ(load_model(dir / "m.json"), m);
    EXPECT_EQ(kind_of([&] { load_model(dir / "missing.json"); }), ErrorKind::Io);
}
