#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "foram/dataset.hpp"
#include "foram/eval.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;
using namespace foram;
using Catch::Matchers::ContainsSubstring;

namespace {

struct ToolResult {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "foram_cli_work";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

// Runs the CLI binary through the shell. FORAM_CONFIG is cleared unless the
// caller passes an explicit environment assignment.
ToolResult run_tool(const std::string& args, const std::string& env = "") {
    const fs::path out_path = work_dir() / "stdout.txt";
    const fs::path err_path = work_dir() / "stderr.txt";
    const std::string env_part = env.empty() ? "env -u FORAM_CONFIG " : "env " + env + " ";
    const std::string cmd = env_part + std::string(FORAM_TOOL_PATH) + " " + args + " >" +
                            out_path.string() + " 2>" + err_path.string();
    const int status = std::system(cmd.c_str());
    ToolResult r;
    if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
    r.out = detail::read_text_file(out_path);
    r.err = detail::read_text_file(err_path);
    return r;
}

// Small ground truth with two same-class objects in one image, so a
// detection cap of 1 visibly halves recall.
fs::path capped_manifest_path() {
    static const fs::path path = [] {
        Manifest m;
        m.name = "cap-probe";
        ImageRecord img;
        img.id = 1;
        img.file = "cap.png";
        img.width = 16;
        img.height = 16;
        img.phase = 3;
        for (int k = 0; k < 2; ++k) {
            AnnotationRecord ann;
            ann.id = k + 1;
            ann.label = ClassLabel::benthic;
            ann.mask = fixtures::rect_mask(16, 16, 1 + 8 * k, 2, 5, 5);
            img.annotations.push_back(std::move(ann));
        }
        m.images.push_back(std::move(img));
        const fs::path p = work_dir() / "cap.manifest";
        save_manifest(m, p);
        save_predictions(predictions_from_manifest(m), work_dir() / "cap_preds.json");
        return p;
    }();
    return path;
}

std::string survey_path() { return fixtures::survey_manifest_path(); }

} // namespace

TEST_CASE("stats reproduces the survey table as JSON") {
    const ToolResult r = run_tool("stats " + survey_path() + " --json");
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["schema"] == "foram/stats");
    REQUIRE(doc["phases"].size() == 3);
    CHECK(doc["phases"][0]["images"] == 48);
    CHECK(doc["phases"][0]["objects"] == 3775);
    CHECK(doc["phases"][1]["images"] == 41);
    CHECK(doc["phases"][1]["objects"] == 2604);
    CHECK(doc["phases"][2]["images"] == 15);
    CHECK(doc["phases"][2]["objects"] == 633);
    CHECK(doc["combined"]["images"] == 104);
    CHECK(doc["combined"]["objects"] == 7012);
    CHECK(doc["combined"]["agglutinated"] == 909);
    CHECK(doc["combined"]["benthic"] == 1748);
    CHECK(doc["combined"]["planktic"] == 1538);
    CHECK(doc["combined"]["sediment"] == 2817);
}

TEST_CASE("stats prints a human table by default") {
    const ToolResult r = run_tool("stats " + survey_path());
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("combined"));
    CHECK_THAT(r.out, ContainsSubstring("7012"));
    CHECK_THAT(r.out, ContainsSubstring("agglutinated"));
}

TEST_CASE("split writes deterministic stratified partitions") {
    const fs::path train1 = work_dir() / "t1.train";
    const fs::path test1 = work_dir() / "t1.test";
    const ToolResult r1 = run_tool("split " + survey_path() + " --seed 3 --train-out " +
                                   train1.string() + " --test-out " + test1.string());
    REQUIRE(r1.code == 0);
    CHECK_THAT(r1.err, ContainsSubstring("74 train"));
    CHECK_THAT(r1.err, ContainsSubstring("30 test"));

    const Manifest train = load_manifest(train1);
    const Manifest test = load_manifest(test1);
    CHECK(train.images.size() == 74);
    CHECK(test.images.size() == 30);

    const fs::path train2 = work_dir() / "t2.train";
    const fs::path test2 = work_dir() / "t2.test";
    const ToolResult r2 = run_tool("split " + survey_path() + " --seed 3 --train-out " +
                                   train2.string() + " --test-out " + test2.string());
    REQUIRE(r2.code == 0);
    CHECK(detail::read_text_file(train1) == detail::read_text_file(train2));
    CHECK(detail::read_text_file(test1) == detail::read_text_file(test2));
}

TEST_CASE("evaluate scores ground truth against itself at 1.0") {
    Manifest m;
    for (int i = 0; i < 3; ++i) {
        Manifest scene = fixtures::random_scene(777 + i, i + 1, 8, 48, false);
        m.images.push_back(std::move(scene.images[0]));
    }
    const fs::path mpath = work_dir() / "selfcheck.manifest";
    const fs::path ppath = work_dir() / "selfcheck_preds.json";
    save_manifest(m, mpath);
    save_predictions(predictions_from_manifest(m), ppath);

    for (const std::string task : {"mask", "bbox"}) {
        const ToolResult r =
            run_tool("evaluate " + mpath.string() + " --pred " + ppath.string() +
                     " --task " + task);
        INFO("task " << task);
        REQUIRE(r.code == 0);
        const auto doc = nlohmann::json::parse(r.out);
        CHECK(doc["schema"] == "foram/metrics");
        CHECK(doc["task"] == task);
        CHECK(doc["metrics"]["ap"].get<double>() == 1.0);
        CHECK(doc["metrics"]["ap50"].get<double>() == 1.0);
        CHECK(doc["metrics"]["ap75"].get<double>() == 1.0);
        CHECK(doc["metrics"]["ar"].get<double>() == 1.0);
    }
}

TEST_CASE("evaluate emits PR curves as CSV on request") {
    capped_manifest_path();
    const ToolResult r = run_tool("evaluate " + (work_dir() / "cap.manifest").string() +
                                  " --pred " + (work_dir() / "cap_preds.json").string() +
                                  " --format curves");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("iou_threshold,class,recall,precision\n", 0) == 0);
    // 1 active class + the mean curve, 10 thresholds, 101 grid points
    const std::size_t lines = std::count(r.out.begin(), r.out.end(), '\n');
    CHECK(lines == 2 * 10 * 101 + 1);
}

TEST_CASE("evaluate writes identical bytes to a file and to stdout") {
    capped_manifest_path();
    const fs::path out = work_dir() / "metrics.json";
    const std::string base = "evaluate " + (work_dir() / "cap.manifest").string() +
                             " --pred " + (work_dir() / "cap_preds.json").string();
    const ToolResult to_stdout = run_tool(base);
    const ToolResult to_file = run_tool(base + " --out " + out.string());
    REQUIRE(to_stdout.code == 0);
    REQUIRE(to_file.code == 0);
    CHECK(to_stdout.out == detail::read_text_file(out));
}

TEST_CASE("failures use distinct exit codes and machine-readable errors") {
    SECTION("missing input file is an I/O error") {
        const ToolResult r = run_tool("stats /nonexistent/nowhere.manifest");
        CHECK(r.code == 3);
        const auto err = nlohmann::json::parse(r.err);
        CHECK(err["error"]["type"] == "io");
        CHECK_FALSE(err["error"]["message"].get<std::string>().empty());
    }
    SECTION("an unknown flag is a usage error") {
        const ToolResult r = run_tool("stats " + survey_path() + " --frobnicate");
        CHECK(r.code == 2);
        CHECK(nlohmann::json::parse(r.err)["error"]["type"] == "usage");
    }
    SECTION("a missing subcommand is a usage error") {
        CHECK(run_tool("").code == 2);
        CHECK(run_tool("frobnicate").code == 2);
    }
    SECTION("malformed data is a validation error") {
        const fs::path bad = work_dir() / "bad.manifest";
        detail::write_text_file(bad, "{\"schema\": \"foram/manifest\", \"version\": 99}\n");
        const ToolResult r = run_tool("stats " + bad.string());
        CHECK(r.code == 4);
        CHECK(nlohmann::json::parse(r.err)["error"]["type"] == "validation");
    }
    SECTION("invalid settings are a configuration error") {
        capped_manifest_path();
        const std::string base = "evaluate " + (work_dir() / "cap.manifest").string() +
                                 " --pred " + (work_dir() / "cap_preds.json").string();
        CHECK(run_tool(base + " --max-dets 0").code == 5);
        CHECK(run_tool(base + " --task volumetric").code == 5);
        CHECK(run_tool(base + " --exclude-class diatom").code == 5);
    }
}

TEST_CASE("help text lists flags with their defaults") {
    const ToolResult top = run_tool("--help");
    REQUIRE(top.code == 0);
    for (const char* sub :
         {"stats", "split", "synth", "detect", "augment", "evaluate", "report"}) {
        CHECK_THAT(top.out, ContainsSubstring(sub));
    }

    const ToolResult eval_help = run_tool("evaluate --help");
    REQUIRE(eval_help.code == 0);
    CHECK_THAT(eval_help.out, ContainsSubstring("--max-dets"));
    CHECK_THAT(eval_help.out, ContainsSubstring("256"));
    CHECK_THAT(eval_help.out, ContainsSubstring("--iou-thresholds"));
    CHECK_THAT(eval_help.out, ContainsSubstring("--class-agnostic"));

    const ToolResult detect_help = run_tool("detect --help");
    REQUIRE(detect_help.code == 0);
    CHECK_THAT(detect_help.out, ContainsSubstring("--sigma1"));
    CHECK_THAT(detect_help.out, ContainsSubstring("--min-area"));
    CHECK_THAT(detect_help.out, ContainsSubstring("50"));
}

TEST_CASE("settings flow from config file to flags with the right precedence") {
    capped_manifest_path();
    const std::string base = "evaluate " + (work_dir() / "cap.manifest").string() +
                             " --pred " + (work_dir() / "cap_preds.json").string();
    const fs::path ini = work_dir() / "tool.ini";
    detail::write_text_file(ini, "[evaluate]\nmax-dets=1\n");

    auto ar_of = [](const ToolResult& r) {
        REQUIRE(r.code == 0);
        return nlohmann::json::parse(r.out)["metrics"]["ar"].get<double>();
    };

    // defaults: both objects found
    CHECK(ar_of(run_tool(base)) == 1.0);
    // config file caps detections per image and class at one
    CHECK(ar_of(run_tool(base + " --config " + ini.string())) == 0.5);
    // an explicit flag beats the file
    CHECK(ar_of(run_tool(base + " --config " + ini.string() + " --max-dets 256")) == 1.0);
    // the environment variable points at the same file
    CHECK(ar_of(run_tool(base, "FORAM_CONFIG=" + ini.string())) == 0.5);
}
