#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "intent/cli/commands.hpp"

using namespace intent;
using namespace intent::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("intent_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// Small cohort and short training so whole runs take a second or two.
constexpr const char* kQuickConfig = R"(seed = 11
two_step = false

[data]
participants = 4

[mlp]
hidden = [8, 8]
epochs = 3

[lstm]
hidden = 6
epochs = 2

[svm]
epochs = 10

[logreg]
epochs = 10
)";

int run_exe(const std::string& args, const fs::path& err) {
    const std::string cmd = std::string("\"") + INTENT_BENCH_EXE + "\" " + args + " > /dev/null 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config text parsing", "[cli][config]") {
    RunConfig cfg;
    const auto keys = apply_config_text(cfg, R"(
# comment
seed = 9   # trailing comment
out = "some dir # not a comment"
grid = segment
shape = circle

[mlp]
hidden = [16, 8]
lr = 0.01

[lstm]
mode = full-sequence
window = 7

[features]
mmav2_positive_tail = true

[synth]
noise_std = 0
)");
    CHECK(cfg.seed == 9);
    CHECK(cfg.out == fs::path("some dir # not a comment"));
    CHECK(cfg.grid == GridSelection::Segment);
    CHECK(cfg.shapes == std::vector<TaskShape>{TaskShape::Circle});
    CHECK(cfg.pipeline.mlp.hidden == std::vector<std::size_t>{16, 8});
    CHECK(cfg.pipeline.mlp.lr == 0.01);
    CHECK(cfg.pipeline.lstm.mode == SequenceMode::FullSequence);
    CHECK(cfg.pipeline.lstm.window_len == 7);
    CHECK(cfg.pipeline.features.mmav2_positive_tail);
    CHECK(cfg.synth.noise_std == 0.0);
    CHECK(keys.size() == 10);
    CHECK(keys[4] == "mlp.hidden");

    const auto p = cfg.pipeline_for(TaskShape::Circle);
    CHECK(p.shape == TaskShape::Circle);
    CHECK(p.seed == 9);

    RunConfig defaults;
    CHECK(defaults.seed == 42);
    CHECK(defaults.participants == 16);
    CHECK(defaults.grid == GridSelection::All);
    CHECK(defaults.shapes.size() == 2);
    CHECK(defaults.two_step);
    CHECK(defaults.source == DataSource::Synthetic);
}

TEST_CASE("config errors name the key and line", "[cli][config]") {
    RunConfig cfg;
    try {
        apply_config_text(cfg, "seed = 1\nbogus_key = 3\n", "bad.toml");
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownKey);
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
        CHECK(e.context() == "bad.toml:2");
        CHECK(diagnostic(e) == "error[UnknownKey] bad.toml:2: unknown key 'bogus_key'");
    }
    try {
        apply_config_text(cfg, "[mlp]\nwidth = 3\n");
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownKey);
        CHECK(std::string(e.what()).find("mlp.width") != std::string::npos);
    }
    for (const char* doc : {"seed = -1", "seed = abc", "mlp.lr = fast", "two_step = yes", "grid = some", "[mlp\n",
                            "just words", "lstm.mode = sideways", "mlp.hidden = []"}) {
        INFO(doc);
        RunConfig c;
        try {
            apply_config_text(c, doc);
            FAIL("no throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidConfig);
        }
    }
    try {
        apply_config_file(cfg, "/nonexistent/intent.toml");
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
    }
}

TEST_CASE("seed precedence and source resolution", "[cli][config]") {
    const auto dir = scratch("seed");
    write(dir / "with_seed.toml", "seed = 5\n");
    write(dir / "no_seed.toml", "out = elsewhere\n");

    Overrides o;
    CHECK(resolve_config(o, nullptr).seed == 42);
    CHECK(resolve_config(o, "7").seed == 7);
    CHECK(resolve_config(o, "").seed == 42);
    o.config = dir / "no_seed.toml";
    CHECK(resolve_config(o, "7").seed == 7);
    CHECK(resolve_config(o, "7").out == fs::path("elsewhere"));
    o.config = dir / "with_seed.toml";
    CHECK(resolve_config(o, "7").seed == 5);
    o.seed = 9;
    CHECK(resolve_config(o, "7").seed == 9);
    o.out = dir / "o";
    CHECK(resolve_config(o, nullptr).out == dir / "o");

    try {
        resolve_config(Overrides{}, "x1");
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
    }

    Overrides both;
    both.synthetic = true;
    both.data = dir;
    try {
        resolve_config(both, nullptr);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
    }

    Overrides csv_src;
    csv_src.data = dir;
    csv_src.grid = "direction";
    csv_src.shape = "diamond";
    const auto cfg = resolve_config(csv_src, nullptr);
    CHECK(cfg.source == DataSource::Csv);
    CHECK(cfg.data_dir == dir);
    CHECK(cfg.grid == GridSelection::Direction);
    CHECK(cfg.shapes == std::vector<TaskShape>{TaskShape::Diamond});

    write(dir / "one.toml", "[data]\nparticipants = 1\n");
    Overrides one;
    one.config = dir / "one.toml";
    try {
        resolve_config(one, nullptr);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
    }
    write(dir / "csv.toml", "[data]\nsource = csv\n");
    one.config = dir / "csv.toml";
    try {
        resolve_config(one, nullptr);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
    }
    fs::remove_all(dir);
}

TEST_CASE("synth and features commands", "[cli][commands]") {
    const auto dir = scratch("synth");
    RunConfig cfg;
    cfg.participants = 2;
    cfg.out = dir / "a";
    cmd_synth(cfg);
    for (const char* f : {"resistance.csv", "hits.csv", "gaze.csv", "participants.csv"}) CHECK(fs::exists(cfg.out / f));
    const auto hits = slurp(cfg.out / "hits.csv");
    CHECK(count_lines(hits) == 1 + 2 * 80);
    CHECK(count_lines(slurp(cfg.out / "participants.csv")) == 1 + 2);

    auto again = cfg;
    again.out = dir / "b";
    cmd_synth(again);
    for (const char* f : {"resistance.csv", "hits.csv", "gaze.csv", "participants.csv"}) {
        CHECK(slurp(cfg.out / f) == slurp(again.out / f));
    }

    // features from the written files
    RunConfig fc;
    fc.source = DataSource::Csv;
    fc.data_dir = cfg.out;
    fc.out = dir / "feat";
    cmd_features(fc);
    const auto diamond = slurp(feature_file(fc.out, TaskShape::Diamond));
    CHECK(count_lines(diamond) == 1 + 2 * 39);
    CHECK(diamond.rfind("iav,mav,", 0) == 0);
    cmd_features(fc);
    CHECK(slurp(feature_file(fc.out, TaskShape::Diamond)) == diamond);

    RunConfig direct;
    direct.participants = 2;
    direct.out = dir / "direct";
    cmd_features(direct);
    CHECK(count_lines(slurp(feature_file(direct.out, TaskShape::Circle))) == 1 + 2 * 39);

    fs::remove(cfg.out / "gaze.csv");
    try {
        cmd_features(fc);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
        CHECK(std::string(e.what()).find("gaze.csv") != std::string::npos);
        CHECK(e.context().rfind("dataset", 0) == 0);
    }
    try {
        cmd_synth(fc);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
    }
    fs::remove_all(dir);
}

TEST_CASE("run and report commands", "[cli][commands]") {
    const auto dir = scratch("run");
    write(dir / "quick.toml", kQuickConfig);
    Overrides o;
    o.config = dir / "quick.toml";
    o.grid = "segment";
    o.out = dir / "a";
    const auto cfg = resolve_config(o, nullptr);
    const auto run = cmd_run(cfg);
    CHECK(run.grid.cells.size() == 32);
    CHECK(run.two_step.empty());
    CHECK_FALSE(run.reference_comparison);
    for (const char* f : {"report.txt", "report.csv", "run.json"}) CHECK(fs::exists(cfg.out / f));
    std::size_t confusions = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(cfg.out / "confusions")) ++confusions;
    CHECK(confusions == 32);
    const auto report_csv = slurp(cfg.out / "report.csv");
    CHECK(count_lines(report_csv) == 1 + 32 + 2);

    auto o2 = o;
    o2.out = dir / "b";
    cmd_run(resolve_config(o2, nullptr));
    CHECK(slurp(o2.out.value() / "report.csv") == report_csv);
    CHECK(slurp(o2.out.value() / "report.txt") == slurp(cfg.out / "report.txt"));

    // report re-renders the same documents from run.json
    const auto text = slurp(cfg.out / "report.txt");
    fs::remove(cfg.out / "report.txt");
    fs::remove(cfg.out / "report.csv");
    CHECK(cmd_report(cfg) == text);
    CHECK(slurp(cfg.out / "report.txt") == text);
    CHECK(slurp(cfg.out / "report.csv") == report_csv);

    const auto j = nlohmann::json::parse(slurp(cfg.out / "run.json"));
    CHECK(run_from_json(j).grid == run.grid);

    RunConfig missing = cfg;
    missing.out = dir / "nowhere";
    try {
        cmd_report(missing);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
    }
    write(dir / "a" / "run.json", "{\"grid\": 3}");
    try {
        cmd_report(cfg);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SerializationError);
    }
    fs::remove_all(dir);
}

TEST_CASE("two-step section in a run", "[cli][commands]") {
    const auto dir = scratch("two_step");
    RunConfig cfg;
    apply_config_text(cfg, kQuickConfig);
    cfg.two_step = true;
    cfg.grid = GridSelection::Direction;
    cfg.shapes = {TaskShape::Circle};
    cfg.out = dir;
    const auto run = cmd_run(cfg);
    CHECK(run.grid.cells.size() == 32);
    REQUIRE(run.two_step.size() == 1);
    CHECK(run.two_step[0].shape == TaskShape::Circle);
    const auto text = slurp(dir / "report.txt");
    CHECK(text.find("Two-step pipeline") != std::string::npos);
    CHECK(text.find("Reference comparison") == std::string::npos);
    const auto csv_text = slurp(dir / "report.csv");
    CHECK(csv_text.find("two_step,direction,circle,LSTM,D6,") != std::string::npos);
    CHECK(fs::exists(dir / "confusions" / "two_step_segment_circle.csv"));
    // run.json keeps metrics and provenance, not the probability matrix
    const auto back = run_from_json(nlohmann::json::parse(slurp(dir / "run.json")));
    REQUIRE(back.two_step.size() == 1);
    auto expected = run.two_step[0];
    expected.step1_probs = {};
    CHECK(back.two_step[0] == expected);
    fs::remove_all(dir);
}

TEST_CASE("binary exit codes and diagnostics", "[cli][binary]") {
    const auto dir = scratch("exe");
    const auto err = dir / "stderr.txt";
    write(dir / "bad.toml", "seed = 1\nbogus = 2\n");
    CHECK(run_exe("run --config \"" + (dir / "bad.toml").string() + "\"", err) == 2);
    CHECK(slurp(err) == "error[UnknownKey] bad.toml:2: unknown key 'bogus'\n");

    CHECK(run_exe("features --data \"" + (dir / "empty").string() + "\" --out \"" + (dir / "f").string() + "\"", err) == 2);
    CHECK(slurp(err).rfind("error[IoError]", 0) == 0);

    CHECK(run_exe("run --synthetic --data x", err) == 2);
    CHECK(slurp(err).rfind("error[InvalidConfig]", 0) == 0);

    CHECK(run_exe("run --grid everything", err) != 0);
    CHECK(run_exe("", err) != 0);

    write(dir / "quick.toml", kQuickConfig);
    const auto out = dir / "out";
    CHECK(run_exe("synth --config \"" + (dir / "quick.toml").string() + "\" --out \"" + out.string() + "\"", err) == 0);
    CHECK(count_lines(slurp(out / "hits.csv")) == 1 + 2 * 160);
    CHECK(run_exe("run --shape diamond --grid segment --config \"" + (dir / "quick.toml").string() + "\" --out \"" +
                      (dir / "r").string() + "\" --data \"" + out.string() + "\"",
                  err) == 0);
    const auto report = slurp(dir / "r" / "report.txt");
    CHECK(report.find("Segment prediction, diamond task") != std::string::npos);
    CHECK(report.find("Reference comparison (informational)") != std::string::npos);
    CHECK(count_lines(slurp(dir / "r" / "report.csv")) == 1 + 16 + 1);
    CHECK(run_exe("report --out \"" + (dir / "r").string() + "\"", err) == 0);
    fs::remove_all(dir);
}
