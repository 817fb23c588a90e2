// Command-line front end: dataset accounting, train/test splitting,
// synthetic corpus generation, classical detection, augmentation previews,
// and COCO-protocol evaluation.
//
// Exit codes: 0 success, 1 internal error, 2 usage, 3 I/O, 4 bad data,
// 5 bad configuration. Errors print a one-line JSON object to stderr.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "foram/foram.hpp"
#include "foram/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void print_error(const std::string& type, const std::string& message) {
    ordered_json err;
    err["error"]["type"] = type;
    err["error"]["message"] = message;
    std::cerr << err.dump() << "\n";
}

foram::ClassLabel parse_class(const std::string& name) {
    const auto label = foram::class_from_string(name);
    if (!label) throw foram::ConfigError("unknown class '" + name + "'");
    return *label;
}

std::vector<foram::ClassLabel> classes_without(const std::vector<std::string>& excluded) {
    std::array<bool, 4> drop = {false, false, false, false};
    for (const auto& name : excluded) drop[foram::class_index(parse_class(name))] = true;
    std::vector<foram::ClassLabel> kept;
    for (foram::ClassLabel c : foram::kAllClasses) {
        if (!drop[foram::class_index(c)]) kept.push_back(c);
    }
    if (kept.empty()) throw foram::ConfigError("every class was excluded");
    return kept;
}

void write_output(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw foram::IoError("cannot write " + path);
    out << text;
    if (!out) throw foram::IoError("write failed for " + path);
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
    std::string manifest;
    bool json = false;
};

int run_stats(const StatsArgs& args) {
    const foram::Manifest m = foram::load_manifest(args.manifest);
    const foram::DatasetStats stats = foram::dataset_stats(m);
    if (args.json) {
        ordered_json doc;
        doc["schema"] = "foram/stats";
        doc["version"] = 1;
        auto row = [](const foram::StatsRow& r) {
            ordered_json j;
            j["images"] = r.images;
            j["objects"] = r.objects;
            j["agglutinated"] = r.per_class[0];
            j["benthic"] = r.per_class[1];
            j["planktic"] = r.per_class[2];
            j["sediment"] = r.per_class[3];
            return j;
        };
        doc["phases"] = ordered_json::array();
        for (int p = 0; p < 3; ++p) {
            ordered_json j = row(stats.phases[p]);
            j["phase"] = p + 1;
            doc["phases"].push_back(std::move(j));
        }
        doc["combined"] = row(stats.combined);
        std::cout << doc.dump(2) << "\n";
    } else {
        std::printf("%-9s %7s %8s %13s %8s %9s %9s\n", "phase", "images", "objects",
                    "agglutinated", "benthic", "planktic", "sediment");
        auto line = [](const char* name, const foram::StatsRow& r) {
            std::printf("%-9s %7zu %8zu %13zu %8zu %9zu %9zu\n", name, r.images, r.objects,
                        r.per_class[0], r.per_class[1], r.per_class[2], r.per_class[3]);
        };
        const char* names[3] = {"1", "2", "3"};
        for (int p = 0; p < 3; ++p) line(names[p], stats.phases[p]);
        line("combined", stats.combined);
    }
    for (const std::string& w : foram::manifest_warnings(m)) {
        std::cerr << "warning: " << w << "\n";
    }
    return 0;
}

// ---- split ----------------------------------------------------------------

struct SplitArgs {
    std::string manifest;
    double ratio = 2.47;
    std::uint64_t seed = 0;
    double tolerance = 0.05;
    std::string train_out;
    std::string test_out;
};

int run_split(const SplitArgs& args) {
    const foram::Manifest m = foram::load_manifest(args.manifest);
    const auto spec = foram::SplitSpec::from_ratio(args.ratio, args.seed, args.tolerance);
    const foram::SplitResult result = foram::stratified_split(m, spec);
    foram::save_manifest(result.train, args.train_out);
    foram::save_manifest(result.test, args.test_out);
    std::cerr << "split: " << result.train.images.size() << " train / "
              << result.test.images.size() << " test images, max class-share deviation "
              << result.max_deviation << "\n";
    if (!result.warning.empty()) std::cerr << "warning: " << result.warning << "\n";
    return 0;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    std::string out_dir;
    int images = 20;
    std::uint64_t seed = 0;
    std::string name = "synthetic";
    foram::SceneConfig scene;
    std::string overlap = "forbid";
    std::vector<double> mix = {0.25, 0.25, 0.25, 0.25};
    std::vector<double> background = {0.15, 0.22};
    std::vector<double> foreground = {0.78, 0.95};
};

int run_synth(SynthArgs& args) {
    if (args.overlap == "forbid") args.scene.overlap = foram::OverlapPolicy::forbid;
    else if (args.overlap == "allow") args.scene.overlap = foram::OverlapPolicy::allow;
    else throw foram::ConfigError("overlap policy must be 'forbid' or 'allow'");
    if (args.mix.size() != 4) throw foram::ConfigError("--mix needs 4 proportions");
    for (int c = 0; c < 4; ++c) args.scene.class_mix[c] = args.mix[c];
    if (args.background.size() != 2 || args.foreground.size() != 2) {
        throw foram::ConfigError("intensity ranges need 2 values (low high)");
    }
    args.scene.background = {args.background[0], args.background[1]};
    args.scene.foreground = {args.foreground[0], args.foreground[1]};

    foram::Corpus corpus = foram::generate_corpus(args.scene, args.images, args.seed, args.name);
    fs::create_directories(args.out_dir);
    for (std::size_t i = 0; i < corpus.images.size(); ++i) {
        foram::write_image(corpus.images[i], fs::path(args.out_dir) / corpus.manifest.images[i].file);
    }
    foram::save_manifest(corpus.manifest, fs::path(args.out_dir) / "corpus.manifest");
    std::cerr << "synth: wrote " << corpus.images.size() << " images and corpus.manifest to "
              << args.out_dir << "\n";
    return 0;
}

// ---- detect ---------------------------------------------------------------

struct DetectArgs {
    std::string manifest;
    std::string images_dir;
    std::string out = "-";
    foram::PipelineConfig pipeline;
    std::string polarity = "light";
};

int run_detect(DetectArgs& args) {
    if (args.polarity == "light") args.pipeline.polarity = foram::Polarity::light;
    else if (args.polarity == "dark") args.pipeline.polarity = foram::Polarity::dark;
    else throw foram::ConfigError("polarity must be 'light' or 'dark'");
    args.pipeline.validate();

    const foram::Manifest m = foram::load_manifest(args.manifest);
    std::vector<foram::Detection> all;
    for (const auto& img : m.images) {
        const foram::RgbImage rgb = foram::read_image(fs::path(args.images_dir) / img.file);
        if (rgb.width != img.width || rgb.height != img.height) {
            throw foram::ValidationError("image " + std::to_string(img.id) + " (" + img.file +
                                         "): file dimensions disagree with the manifest");
        }
        auto dets = foram::detect_objects(rgb, img.id, args.pipeline);
        all.insert(all.end(), std::make_move_iterator(dets.begin()),
                   std::make_move_iterator(dets.end()));
    }
    write_output(args.out, foram::predictions_to_json(all).dump(2) + "\n");
    std::cerr << "detect: " << all.size() << " detections over " << m.images.size()
              << " images\n";
    return 0;
}

// ---- augment --------------------------------------------------------------

struct AugmentArgs {
    std::string manifest;
    std::string images_dir;
    std::string out_dir;
    std::uint64_t seed = 0;
    foram::AugmentConfig config;
    std::vector<double> brightness = {0.9, 1.1};
    std::vector<double> contrast = {0.9, 1.1};
    std::vector<double> saturation = {0.99, 1.01};
    std::vector<double> hue = {-0.01, 0.01};
    std::vector<double> gamma = {0.8, 1.2};
};

int run_augment(AugmentArgs& args) {
    auto to_range = [](const std::vector<double>& v, const char* what) {
        if (v.size() != 2) throw foram::ConfigError(std::string(what) + " needs 2 values");
        return foram::Range{v[0], v[1]};
    };
    args.config.brightness = to_range(args.brightness, "--brightness");
    args.config.contrast = to_range(args.contrast, "--contrast");
    args.config.saturation = to_range(args.saturation, "--saturation");
    args.config.hue = to_range(args.hue, "--hue");
    args.config.gamma = to_range(args.gamma, "--gamma");
    args.config.validate();

    const foram::Manifest m = foram::load_manifest(args.manifest);
    fs::create_directories(args.out_dir);
    foram::Manifest out = m;
    out.name = m.name.empty() ? "augmented" : m.name + ".augmented";
    out.images.clear();
    for (const auto& img : m.images) {
        const foram::RgbImage rgb = foram::read_image(fs::path(args.images_dir) / img.file);
        if (rgb.width != img.width || rgb.height != img.height) {
            throw foram::ValidationError("image " + std::to_string(img.id) + " (" + img.file +
                                         "): file dimensions disagree with the manifest");
        }
        foram::AugmentedSample sample = foram::augment_sample(rgb, img, args.config, args.seed);
        foram::write_image(sample.image, fs::path(args.out_dir) / img.file);
        out.images.push_back(std::move(sample.record));
    }
    foram::save_manifest(out, fs::path(args.out_dir) / "augmented.manifest");
    std::cerr << "augment: wrote " << out.images.size() << " previews to " << args.out_dir
              << "\n";
    return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
    std::string manifest;
    std::string pred;
    std::string task = "mask";
    foram::EvalConfig config;
    std::vector<std::string> exclude;
    std::string format = "summary";
    std::string out = "-";
};

int run_evaluate(EvaluateArgs& args) {
    const auto task = foram::task_from_string(args.task);
    if (!task) throw foram::ConfigError("task must be 'bbox' or 'mask'");
    args.config.task = *task;
    args.config.included_classes = classes_without(args.exclude);
    args.config.validate();
    if (args.format != "summary" && args.format != "curves") {
        throw foram::ConfigError("format must be 'summary' or 'curves'");
    }

    const foram::Manifest m = foram::load_manifest(args.manifest);
    const auto dets = foram::load_predictions(args.pred, m);
    const foram::MetricsReport report = foram::evaluate(m, dets, args.config);
    write_output(args.out, args.format == "summary" ? foram::report_summary_string(report)
                                                    : foram::report_curves_csv(report));
    std::fprintf(stderr, "evaluate [%s]: AP %.4f  AP50 %.4f  AP75 %.4f  AR %.4f\n",
                 foram::to_string(report.task), report.ap, report.ap50.value_or(-1.0),
                 report.ap75.value_or(-1.0), report.ar);
    for (const std::string& d : report.diagnostics) std::cerr << "note: " << d << "\n";
    return 0;
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
    std::string manifest;
    std::string pred;
    std::string exclude = "sediment";
    int max_dets = 256;
    bool class_agnostic = false;
    std::string out = "-";
};

int run_report(ReportArgs& args) {
    const foram::Manifest m = foram::load_manifest(args.manifest);
    const auto dets = foram::load_predictions(args.pred, m);

    auto run = [&](foram::Task task, bool excluded) {
        foram::EvalConfig cfg;
        cfg.task = task;
        cfg.max_detections = args.max_dets;
        cfg.class_agnostic = args.class_agnostic;
        if (excluded) cfg.included_classes = classes_without({args.exclude});
        return foram::evaluate(m, dets, cfg);
    };
    const foram::MetricsReport bbox_all = run(foram::Task::bbox, false);
    const foram::MetricsReport bbox_ex = run(foram::Task::bbox, true);
    const foram::MetricsReport mask_all = run(foram::Task::mask, false);
    const foram::MetricsReport mask_ex = run(foram::Task::mask, true);
    for (const std::string& d : mask_all.diagnostics) std::cerr << "note: " << d << "\n";

    std::string text;
    char line[160];
    std::snprintf(line, sizeof(line), "%-6s %12s %12s %12s %12s\n", "", "bbox",
                  ("bbox -" + args.exclude).c_str(), "mask", ("mask -" + args.exclude).c_str());
    text += line;
    auto grid_row = [&](const char* name, auto get) {
        std::snprintf(line, sizeof(line), "%-6s %12.4f %12.4f %12.4f %12.4f\n", name,
                      get(bbox_all), get(bbox_ex), get(mask_all), get(mask_ex));
        text += line;
    };
    grid_row("AP50", [](const foram::MetricsReport& r) { return r.ap50.value_or(0.0); });
    grid_row("AP75", [](const foram::MetricsReport& r) { return r.ap75.value_or(0.0); });
    grid_row("AP", [](const foram::MetricsReport& r) { return r.ap; });
    grid_row("AR", [](const foram::MetricsReport& r) { return r.ar; });
    write_output(args.out, text);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"foramtool: microfossil dataset, detection, and evaluation toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // lets --config appear after the subcommand name
    app.set_config("--config", "", "configuration file (INI; sections per subcommand)")
        ->envname("FORAM_CONFIG");

    StatsArgs stats_args;
    CLI::App* stats =
        app.add_subcommand("stats", "per-phase and per-class dataset accounting")->configurable();
    stats->add_option("manifest", stats_args.manifest, "dataset manifest")->required();
    stats->add_flag("--json", stats_args.json, "machine-readable output");

    SplitArgs split_args;
    CLI::App* split = app.add_subcommand("split", "stratified train/test split")->configurable();
    split->add_option("manifest", split_args.manifest, "dataset manifest")->required();
    split->add_option("--ratio", split_args.ratio, "train:test ratio")->capture_default_str();
    split->add_option("--seed", split_args.seed, "shuffle seed")->capture_default_str();
    split->add_option("--tolerance", split_args.tolerance, "max class-share deviation")
        ->capture_default_str();
    split->add_option("--train-out", split_args.train_out, "output path, train manifest")
        ->required();
    split->add_option("--test-out", split_args.test_out, "output path, test manifest")
        ->required();

    SynthArgs synth_args;
    CLI::App* synth =
        app.add_subcommand("synth", "generate a synthetic plate corpus")->configurable();
    synth->add_option("--out-dir", synth_args.out_dir, "output directory")->required();
    synth->add_option("--images", synth_args.images, "number of images")->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "corpus seed")->capture_default_str();
    synth->add_option("--name", synth_args.name, "manifest name")->capture_default_str();
    synth->add_option("--width", synth_args.scene.width, "canvas width")->capture_default_str();
    synth->add_option("--height", synth_args.scene.height, "canvas height")
        ->capture_default_str();
    synth->add_option("--objects", synth_args.scene.object_count, "objects per image")
        ->capture_default_str();
    synth->add_option("--mix", synth_args.mix,
                      "class proportions: agglutinated benthic planktic sediment")
        ->expected(4);
    synth->add_option("--min-diameter", synth_args.scene.min_diameter,
                      "min equivalent diameter, px")
        ->capture_default_str();
    synth->add_option("--max-diameter", synth_args.scene.max_diameter,
                      "max equivalent diameter, px")
        ->capture_default_str();
    synth->add_option("--overlap", synth_args.overlap, "overlap policy: forbid|allow")
        ->capture_default_str();
    synth->add_option("--max-iou", synth_args.scene.max_pairwise_iou,
                      "max pairwise IoU under 'allow'")
        ->capture_default_str();
    synth->add_option("--min-gap", synth_args.scene.min_gap, "min gap in px under 'forbid'")
        ->capture_default_str();
    synth->add_option("--background", synth_args.background, "background intensity range")
        ->expected(2);
    synth->add_option("--foreground", synth_args.foreground, "foreground intensity range")
        ->expected(2);

    DetectArgs detect_args;
    CLI::App* detect =
        app.add_subcommand("detect", "classical pipeline over a manifest")->configurable();
    detect->add_option("manifest", detect_args.manifest, "dataset manifest")->required();
    detect->add_option("--images-dir", detect_args.images_dir, "directory holding the images")
        ->required();
    detect->add_option("--out", detect_args.out, "predictions output ('-' = stdout)")
        ->capture_default_str();
    detect->add_option("--sigma1", detect_args.pipeline.sigma1, "first blur sigma")
        ->capture_default_str();
    detect->add_option("--sigma2", detect_args.pipeline.sigma2, "second blur sigma")
        ->capture_default_str();
    detect->add_option("--threshold", detect_args.pipeline.threshold, "binarization level")
        ->capture_default_str();
    detect->add_option("--polarity", detect_args.polarity, "objects are light|dark")
        ->capture_default_str();
    detect->add_option("--min-area", detect_args.pipeline.min_area, "min component area, px")
        ->capture_default_str();
    detect->add_option("--connectivity", detect_args.pipeline.connectivity,
                       "component connectivity: 4|8")
        ->capture_default_str();

    AugmentArgs augment_args;
    CLI::App* augment =
        app.add_subcommand("augment", "write augmented previews")->configurable();
    augment->add_option("manifest", augment_args.manifest, "dataset manifest")->required();
    augment->add_option("--images-dir", augment_args.images_dir, "directory holding the images")
        ->required();
    augment->add_option("--out-dir", augment_args.out_dir, "output directory")->required();
    augment->add_option("--seed", augment_args.seed, "draw seed")->capture_default_str();
    augment->add_option("--flip-h-prob", augment_args.config.flip_h_prob,
                        "horizontal flip probability")
        ->capture_default_str();
    augment->add_option("--flip-v-prob", augment_args.config.flip_v_prob,
                        "vertical flip probability")
        ->capture_default_str();
    augment->add_option("--brightness", augment_args.brightness, "brightness factor range")
        ->expected(2);
    augment->add_option("--contrast", augment_args.contrast, "contrast factor range")
        ->expected(2);
    augment->add_option("--saturation", augment_args.saturation, "saturation factor range")
        ->expected(2);
    augment->add_option("--hue", augment_args.hue, "hue shift range, turns")->expected(2);
    augment->add_option("--gamma", augment_args.gamma, "gamma range")->expected(2);

    EvaluateArgs eval_args;
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "score predictions against a manifest")->configurable();
    evaluate->add_option("manifest", eval_args.manifest, "ground-truth manifest")->required();
    evaluate->add_option("--pred", eval_args.pred, "predictions file")->required();
    evaluate->add_option("--task", eval_args.task, "bbox|mask")->capture_default_str();
    evaluate
        ->add_option("--iou-thresholds", eval_args.config.iou_thresholds,
                     "IoU thresholds (default 0.50..0.95 step 0.05)")
        ->expected(-1);
    evaluate->add_option("--max-dets", eval_args.config.max_detections,
                         "detection cap per image and class")
        ->capture_default_str();
    evaluate->add_option("--exclude-class", eval_args.exclude, "class to drop (repeatable)");
    evaluate->add_flag("--class-agnostic", eval_args.config.class_agnostic,
                       "pool all classes into one bucket");
    evaluate->add_option("--grid-size", eval_args.config.recall_grid_size,
                         "recall grid resolution")
        ->capture_default_str();
    evaluate->add_option("--format", eval_args.format, "summary|curves")->capture_default_str();
    evaluate->add_option("--out", eval_args.out, "output path ('-' = stdout)")
        ->capture_default_str();

    ReportArgs report_args;
    CLI::App* report =
        app.add_subcommand("report", "AP/AR grid, all classes vs one excluded")->configurable();
    report->add_option("manifest", report_args.manifest, "ground-truth manifest")->required();
    report->add_option("--pred", report_args.pred, "predictions file")->required();
    report->add_option("--exclude-class", report_args.exclude, "excluded-column class")
        ->capture_default_str();
    report->add_option("--max-dets", report_args.max_dets, "detection cap per image and class")
        ->capture_default_str();
    report->add_flag("--class-agnostic", report_args.class_agnostic,
                     "pool all classes into one bucket");
    report->add_option("--out", report_args.out, "output path ('-' = stdout)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
        if (*stats) return run_stats(stats_args);
        if (*split) return run_split(split_args);
        if (*synth) return run_synth(synth_args);
        if (*detect) return run_detect(detect_args);
        if (*augment) return run_augment(augment_args);
        if (*evaluate) return run_evaluate(eval_args);
        if (*report) return run_report(report_args);
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        print_error("usage", e.what());
        return 2;
    } catch (const foram::ConfigError& e) {
        print_error("config", e.what());
        return 5;
    } catch (const foram::IoError& e) {
        print_error("io", e.what());
        return 3;
    } catch (const foram::ValidationError& e) {
        print_error("validation", e.what());
        return 4;
    } catch (const foram::Error& e) {
        print_error("data", e.what());
        return 4;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
}
