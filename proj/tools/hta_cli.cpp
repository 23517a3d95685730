// hta: command-line front end for the hand/tool affordance pipeline.
//
// Exit codes: 0 success, 2 invalid input or flags, 3 runtime failure.

#include "hta/affordance.hpp"
#include "hta/data.hpp"
#include "hta/synthworld.hpp"
#include "hta/tasks.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace hta;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct DatasetFlags {
    std::string entities;
    std::string trials;
    std::string mapping;
    std::string manipulator_kind = "any";

    void attach(CLI::App* cmd, bool trials_required = true) {
        cmd->add_option("--entities", entities, "entities.csv")->required()->check(CLI::ExistingFile);
        auto* t = cmd->add_option("--trials", trials, "trials.csv")->check(CLI::ExistingFile);
        if (trials_required) t->required();
        cmd->add_option("--mapping", mapping, "column-mapping JSON for foreign dataset layouts")
            ->check(CLI::ExistingFile);
        cmd->add_option("--manipulator-kind", manipulator_kind, "use only trials whose manipulator is of this kind")
            ->check(CLI::IsMember({"hand", "tool", "any"}));
    }

    data::ColumnMapping column_mapping() const {
        return mapping.empty() ? data::ColumnMapping{} : data::ColumnMapping::load(mapping);
    }
};

struct Dataset {
    data::EntitySet entities;
    std::vector<data::TrialRecord> trials;
};

Dataset load_dataset(const DatasetFlags& f) {
    const auto mapping = f.column_mapping();
    Dataset d;
    d.entities = data::load_entities(f.entities, mapping);
    if (f.trials.empty()) return d;
    auto trials = data::load_trials(f.trials, d.entities, mapping);
    for (auto& t : trials) {
        const auto kind = d.entities.kind(t.manipulator_id);
        if (f.manipulator_kind == "any" || (kind && data::to_string(*kind) == f.manipulator_kind)) {
            d.trials.push_back(std::move(t));
        }
    }
    if (d.trials.empty()) throw Error(ErrorKind::InvalidArgument, "no trials left after filtering");
    return d;
}

data::Split make_split(const Dataset& d, double fraction, const std::string& mode, std::optional<std::uint64_t> seed) {
    if (fraction < 1.0 && !seed) {
        throw Error(ErrorKind::InvalidArgument, "--seed is required when --split is below 1");
    }
    const auto m = data::parse_split_mode(mode);
    return *m == data::SplitMode::ByTrial ? data::split_by_trial(d.trials, d.entities, fraction, seed.value_or(0))
                                          : data::split_by_view(d.trials, d.entities, fraction, seed.value_or(0));
}

void emit(const std::string& text, const std::string& out_path) {
    std::cout << text;
    if (!out_path.empty()) data::write_text_atomic(out_path, text);
}

std::vector<tasks::ViewSet> view_sets(const data::EntitySet& set, bool objects) {
    std::vector<tasks::ViewSet> out;
    for (const auto& id : set.ids()) {
        if ((set.kind(id) == data::EntityKind::Object) != objects) continue;
        tasks::ViewSet vs{id, {}};
        for (const auto* r : set.views(id)) vs.views.push_back(r->features.values);
        out.push_back(std::move(vs));
    }
    return out;
}

std::string train_summary(const affordance::AffordanceModel& m) {
    std::ostringstream os;
    os << "pca manipulator explained_variance: " << data::format_double(m.pca_manip.explained_variance[0]) << " "
       << data::format_double(m.pca_manip.explained_variance[1]) << "\n";
    os << "pca object explained_variance: " << data::format_double(m.pca_obj.explained_variance[0]) << " "
       << data::format_double(m.pca_obj.explained_variance[1]) << "\n";
    os << "config,m1,m2,o1,o2,action,count\n";
    for (std::size_t i = 0; i < affordance::kConfigCount; ++i) {
        const auto c = affordance::ParentConfig::from_index(i);
        os << i << "," << c.m1 << "," << c.m2 << "," << c.o1 << "," << c.o2 << "," << to_string(c.action) << ","
           << m.counts[i] << "\n";
    }
    return os.str();
}

void warn_empty_configs(const affordance::AffordanceModel& m) {
    if (m.smoothing_alpha > 0.0) return;
    const auto empty = m.empty_configs();
    if (empty.empty()) return;
    std::cerr << "warning: alpha = 0 leaves " << empty.size() << " configurations without a distribution:\n";
    for (const auto& c : empty) std::cerr << "  " << c.index() << " " << c.to_string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hand-to-tool affordance learning: features, training, evaluation and tool selection"};
    app.require_subcommand(1);

    // extract
    std::vector<std::string> contour_files;
    std::string extract_kind = "object";
    std::string extract_out;
    auto* extract = app.add_subcommand("extract", "compute the 13 shape descriptors of contour files");
    extract->add_option("contours", contour_files, "contour files; each contour in a file is one view")
        ->required()
        ->check(CLI::ExistingFile);
    extract->add_option("--kind", extract_kind, "entity kind written to the CSV")
        ->check(CLI::IsMember({"hand", "tool", "object"}));
    extract->add_option("--out", extract_out, "output entities CSV")->required();

    // train
    DatasetFlags train_data;
    double alpha = 1.0;
    double split = 1.0;
    std::string split_mode = "by-trial";
    std::optional<std::uint64_t> seed;
    std::string directions;
    std::string train_out;
    auto* train = app.add_subcommand("train", "fit PCA blocks, discretizers and CPTs");
    train_data.attach(train);
    train->add_option("--alpha", alpha, "Laplace smoothing pseudo-count")->check(CLI::NonNegativeNumber);
    train->add_option("--split", split, "fraction used for training (1 = everything)")->check(CLI::Range(0.0, 1.0));
    train->add_option("--split-mode", split_mode)->check(CLI::IsMember({"by-trial", "by-view"}));
    train->add_option("--seed", seed, "seed for the train/test split");
    train->add_option("--directions", directions, "action direction overrides, e.g. draw=y-,push=y+");
    train->add_option("--out", train_out, "model file")->required();

    // evaluate
    DatasetFlags eval_data;
    std::string eval_model;
    std::string test_entities;
    std::string test_trials;
    std::string eval_out;
    double eval_split = 0.8;
    auto* evaluate = app.add_subcommand("evaluate", "score joint effect-bin prediction accuracy");
    eval_data.attach(evaluate);
    evaluate->add_option("--model", eval_model, "score this model instead of training on the split")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--alpha", alpha)->check(CLI::NonNegativeNumber);
    evaluate->add_option("--split", eval_split, "training fraction (1 = train and test on everything)")
        ->check(CLI::Range(0.0, 1.0));
    evaluate->add_option("--split-mode", split_mode)->check(CLI::IsMember({"by-trial", "by-view"}));
    evaluate->add_option("--seed", seed);
    evaluate->add_option("--test-entities", test_entities, "separate test entities (e.g. tools)")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--test-trials", test_trials, "separate test trials; trains on all of --trials")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--out", eval_out, "also write the report here");

    // select-tool
    std::string sel_model;
    std::string sel_tools;
    std::string sel_objects;
    std::string sel_action = "all";
    std::string sel_out;
    auto* select = app.add_subcommand("select-tool", "zero-shot tool selection rates per action");
    select->add_option("--model", sel_model)->required()->check(CLI::ExistingFile);
    select->add_option("--tools", sel_tools, "entities CSV holding candidate tool views")
        ->required()
        ->check(CLI::ExistingFile);
    select->add_option("--objects", sel_objects, "entities CSV holding target object views")
        ->required()
        ->check(CLI::ExistingFile);
    select->add_option("--action", sel_action, "tapFromRight|tapFromLeft|draw|push|all");
    select->add_option("--directions", directions, "action direction overrides, e.g. draw=y-");
    select->add_option("--out", sel_out, "also write the CSV table here");

    // augment
    DatasetFlags aug_data;
    std::string aug_out;
    auto* aug = app.add_subcommand("augment", "expand trials over all manipulator x object views");
    aug_data.attach(aug);
    aug->add_option("--out", aug_out, "augmented samples CSV")->required();

    // synth
    std::string synth_dir;
    std::uint64_t synth_seed = 0;
    double noise = 0.0;
    int views = 10;
    int repetitions = 5;
    bool write_contours = false;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic hands/tools/objects dataset");
    synth_cmd->add_option("--out", synth_dir, "output directory")->required();
    synth_cmd->add_option("--seed", synth_seed)->required();
    synth_cmd->add_option("--noise", noise, "effect noise standard deviation in meters")->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--views", views)->check(CLI::PositiveNumber);
    synth_cmd->add_option("--repetitions", repetitions)->check(CLI::PositiveNumber);
    synth_cmd->add_flag("--contours", write_contours, "also write raw contour files and entities_raw.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        if (*extract) {
            data::EntitySet set;
            for (const auto& file : contour_files) {
                const auto contours = data::load_contours(file);
                for (std::size_t v = 0; v < contours.size(); ++v) {
                    try {
                        set.add({fs::path(file).stem().string(), *data::parse_kind(extract_kind), synth::view_id(int(v)),
                                 shape::extract_features(contours[v])});
                    } catch (const Error& e) {
                        throw Error(e.kind(), file + ": " + e.what());
                    }
                }
            }
            data::write_text_atomic(extract_out, data::format_entities(set));
            std::cout << "extracted " << set.size() << " views from " << contour_files.size() << " files\n";
        } else if (*train) {
            const auto d = load_dataset(train_data);
            const auto s = make_split(d, split, split_mode, seed);
            ActionDirectionMap dirs;
            dirs.apply_overrides(directions);
            const auto samples = data::samples_of(s.train);
            const auto model = affordance::fit_model(samples, alpha, dirs);
            data::save_model(model, train_out);
            std::cout << "split: " << s.description << "\n";
            std::cout << "train_samples: " << samples.size() << "\n";
            std::cout << train_summary(model);
            warn_empty_configs(model);
        } else if (*evaluate) {
            auto d = load_dataset(eval_data);
            std::vector<affordance::Sample> train_samples;
            std::vector<affordance::Sample> test_samples;
            std::string description;
            if (!test_trials.empty()) {
                Dataset test;
                const auto mapping = eval_data.column_mapping();
                test.entities = test_entities.empty() ? d.entities : data::load_entities(test_entities, mapping);
                test.trials = data::load_trials(test_trials, test.entities, mapping);
                train_samples = data::samples_of(data::augment(d.trials, d.entities));
                test_samples = data::samples_of(data::augment(test.trials, test.entities));
                description = "train all " + std::to_string(d.trials.size()) + " trials of " + eval_data.trials +
                              ", test all " + std::to_string(test.trials.size()) + " trials of " + test_trials;
            } else {
                const auto s = make_split(d, eval_split, split_mode, seed);
                train_samples = data::samples_of(s.train);
                test_samples = data::samples_of(s.test);
                description = s.description;
            }
            const auto model = eval_model.empty() ? affordance::fit_model(train_samples, alpha)
                                                  : data::load_model(eval_model);
            const auto r = tasks::evaluate(model, test_samples);
            std::ostringstream os;
            os << "split: " << description << "\n";
            os << "model: " << (eval_model.empty() ? "trained on split, alpha " + data::format_double(alpha) : eval_model)
               << "\n";
            os << "train_samples: " << (eval_model.empty() ? train_samples.size() : 0) << "\n";
            os << "test_samples: " << r.total << "\n";
            os << "correct: " << r.correct << "\n";
            os << "accuracy: " << data::format_double(r.accuracy()) << "\n";
            os << "random_baseline: " << data::format_double(tasks::kRandomBaseline) << " (1/25)\n";
            emit(os.str(), eval_out);
        } else if (*select) {
            auto model = data::load_model(sel_model);
            model.directions.apply_overrides(directions);
            const auto tools = view_sets(data::load_entities(sel_tools), false);
            const auto objects = view_sets(data::load_entities(sel_objects), true);
            std::vector<ActionId> actions;
            if (sel_action == "all") {
                actions.assign(kAllActions.begin(), kAllActions.end());
            } else if (const auto a = parse_action(sel_action)) {
                actions.push_back(*a);
            } else {
                throw Error(ErrorKind::InvalidArgument, "unknown action '" + sel_action + "'");
            }
            const auto rows = tasks::tool_selection_table(model, tools, objects, actions, model.directions);
            std::string csv = "action,tool,selection_rate\n";
            for (const auto& r : rows) {
                csv += std::string(to_string(r.action)) + "," + r.tool + "," + data::format_double(r.selection_rate()) + "\n";
            }
            emit(csv, sel_out);
        } else if (*aug) {
            const auto d = load_dataset(aug_data);
            const auto samples = data::augment(d.trials, d.entities);
            data::write_text_atomic(aug_out, data::format_augmented(samples));
            std::cout << "trials: " << d.trials.size() << "\naugmented_samples: " << samples.size() << "\n";
        } else if (*synth_cmd) {
            synth::WorldConfig cfg{synth_seed, noise, views, repetitions};
            const auto world = synth::make_world(cfg);
            fs::create_directories(synth_dir);
            const fs::path dir(synth_dir);
            data::write_text_atomic(dir / "entities.csv", data::format_entities(world.entities));
            data::write_text_atomic(dir / "trials.csv", data::format_trials(world.hand_trials));
            data::write_text_atomic(dir / "tool_trials.csv", data::format_trials(world.tool_trials));
            if (write_contours) {
                fs::create_directories(dir / "contours");
                std::string raw = "entity_id,kind,view_id,contour_path\n";
                for (const auto& [id, kind, view, contour] : synth::world_contours(cfg)) {
                    const std::string rel = "contours/" + id + "_" + view + ".txt";
                    data::write_text_atomic(dir / rel, data::format_contours(std::span(&contour, 1)));
                    raw += id + "," + std::string(data::to_string(kind)) + "," + view + "," + rel + "\n";
                }
                data::write_text_atomic(dir / "entities_raw.csv", raw);
            }
            std::cout << "entities: " << world.entities.size() << " views\nhand_trials: " << world.hand_trials.size()
                      << "\ntool_trials: " << world.tool_trials.size() << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_validation(e.kind()) ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
