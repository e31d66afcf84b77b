#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

// End-to-end checks of the command-line tool: exit codes, determinism,
// file outputs. Each invocation runs the real binary in a scratch directory.

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kScratch = fs::temp_directory_path() / "rct_cli_test";

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const fs::path out_file = kScratch / "cmd_output.txt";
    const std::string cmd =
        std::string(RCT_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    r.output = buf.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct ScratchDir {
    ScratchDir() {
        fs::remove_all(kScratch);
        fs::create_directories(kScratch);
    }
};
ScratchDir scratch_dir_guard;

std::string path(const char* name) { return (kScratch / name).string(); }

}  // namespace

TEST_CASE("synth writes deterministic recordings") {
    auto a = run("synth --preset bridge-guardrail --seed 7 --out " + path("a.jsonl"));
    REQUIRE(a.exit_code == 0);
    CHECK(a.output.find("mirror_ghost") != std::string::npos);

    auto b = run("synth --preset bridge-guardrail --seed 7 --out " + path("b.jsonl"));
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(path("a.jsonl")) == slurp(path("b.jsonl")));

    auto c = run("synth --preset bridge-guardrail --seed 8 --out " + path("c.jsonl"));
    REQUIRE(c.exit_code == 0);
    CHECK(slurp(path("a.jsonl")) != slurp(path("c.jsonl")));

    SECTION("the bridge preset actually produces mirror ghosts") {
        std::istringstream out(a.output);
        std::string line;
        long long ghosts = -1;
        while (std::getline(out, line))
            if (line.find("mirror_ghost:") != std::string::npos)
                ghosts = std::stoll(line.substr(line.find(':') + 1));
        CHECK(ghosts > 0);
    }
}

TEST_CASE("synth rejects bad configurations with exit code 2") {
    auto missing = run("synth --out " + path("x.jsonl"));
    CHECK(missing.exit_code == 2);

    const std::string cfg_path = path("bad.cfg");
    {
        std::ofstream cfg(cfg_path);
        cfg << "duration = 0\n";  // empty duration
    }
    auto empty_duration = run("synth --config " + cfg_path + " --out " + path("x.jsonl"));
    CHECK(empty_duration.exit_code == 2);
    CHECK(empty_duration.output.find("duration") != std::string::npos);

    {
        std::ofstream cfg(cfg_path);
        cfg << "[object]\nvelocty = 1 2\n";  // typo -> field path in the message
    }
    auto bad_key = run("synth --config " + cfg_path + " --out " + path("x.jsonl"));
    CHECK(bad_key.exit_code == 2);
    CHECK(bad_key.output.find("object[1].velocty") != std::string::npos);
}

TEST_CASE("synth accepts a config file with preset base") {
    const std::string cfg_path = path("tweak.cfg");
    {
        std::ofstream cfg(cfg_path);
        cfg << "preset = separable\n"
            << "duration = 0.13\n"
            << "seed = 21\n"
            << "[clutter]\n"
            << "velocity_alias_rate = 0.3\n";
    }
    auto r = run("synth --config " + cfg_path + " --out " + path("tweak.jsonl"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("scans: 3") != std::string::npos);
}

TEST_CASE("relabel defaults, report, and threshold override") {
    REQUIRE(run("synth --preset suburban --seed 3 --out " + path("sub.jsonl")).exit_code == 0);
    auto r = run("relabel --in " + path("sub.jsonl") + " --out " + path("sub_l.jsonl") +
                 " --report " + path("dist.json"));
    REQUIRE(r.exit_code == 0);

    const json report = json::parse(slurp(path("dist.json")));
    const double sum = report["ratios"][0].get<double>() + report["ratios"][1].get<double>() +
                       report["ratios"][2].get<double>();
    CHECK(std::abs(sum - 1.0) < 1e-12);

    SECTION("v-thresh 0 leaves no stationary point with nonzero velocity") {
        auto zero = run("relabel --in " + path("sub.jsonl") + " --out " + path("sub_l0.jsonl") +
                        " --v-thresh 0 --report " + path("dist0.json"));
        REQUIRE(zero.exit_code == 0);
        // every background detection has |v_comp| >= 0, so none can stay stationary
        const json rep0 = json::parse(slurp(path("dist0.json")));
        CHECK(rep0["counts"][2].get<long long>() == 0);
    }
}

TEST_CASE("train, eval, bench, plot round trip") {
    // small separable dataset
    std::string train_inputs;
    for (int i = 0; i < 6; ++i) {
        const std::string raw = path(("t" + std::to_string(i) + ".jsonl").c_str());
        const std::string labeled = path(("tl" + std::to_string(i) + ".jsonl").c_str());
        REQUIRE(run("synth --preset separable --seed " + std::to_string(500 + i) + " --out " +
                    raw)
                    .exit_code == 0);
        REQUIRE(run("relabel --in " + raw + " --out " + labeled).exit_code == 0);
        train_inputs += " --in " + labeled;
    }

    auto train = run("train" + train_inputs +
                     " --variant b --reduced --epochs 2 --seeds 11 --val-frac 0.34 --out " +
                     path("model.json"));
    REQUIRE(train.exit_code == 0);
    REQUIRE(fs::exists(path("model.json")));

    SECTION("eval reproduces the logged validation metrics exactly") {
        // the validation split was the last two recordings
        const json summary = json::parse(
            train.output.substr(train.output.find("{\n  \"accum\"")));
        const double logged = summary["per_seed"][0]["val"]["mean_f1"].get<double>();
        auto eval = run("eval --in " + path("tl4.jsonl") + " --in " + path("tl5.jsonl") +
                        " --model " + path("model.json") + " --report " + path("eval.json"));
        REQUIRE(eval.exit_code == 0);
        const json report = json::parse(slurp(path("eval.json")));
        CHECK(report["mean_f1"].get<double>() == logged);
    }
    SECTION("old-only strategy reports full latest-scan coverage") {
        auto eval = run("eval --in " + path("tl5.jsonl") + " --model " + path("model.json") +
                        " --strategy old_only_random --points 330 --window-ms 0 --report " +
                        path("eval_old.json"));
        REQUIRE(eval.exit_code == 0);
        const json report = json::parse(slurp(path("eval_old.json")));
        CHECK(report["latest_scan_direct_coverage"].get<bool>() == true);
    }
    SECTION("post-processing baseline still predicts every latest-scan point") {
        // force removals: target below the typical scan size, window 0
        auto eval = run("eval --in " + path("tl5.jsonl") + " --model " + path("model.json") +
                        " --strategy nn_postprocess_baseline --points 330 --window-ms 300 "
                        "--report " + path("eval_nn.json"));
        REQUIRE(eval.exit_code == 0);
        const json report = json::parse(slurp(path("eval_nn.json")));
        CHECK(report["latest_scan_direct_coverage"].get<bool>() == false);
        // every latest-scan detection is covered by a direct or copied prediction
        long long total_dets = 0;
        std::istringstream in(slurp(path("tl5.jsonl")));
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line))
            if (!line.empty()) total_dets += json::parse(line)["detections"].size();
        CHECK(report["masked_points"].get<long long>() == total_dets);
    }
    SECTION("five-seed batch emits per-seed and mean metrics") {
        auto batch = run("train" + train_inputs +
                         " --variant b --reduced --epochs 1 --seeds 1 2 3 4 5 --out " +
                         path("batch.json"));
        REQUIRE(batch.exit_code == 0);
        const json summary = json::parse(slurp(path("batch.json.summary.json")));
        REQUIRE(summary["per_seed"].size() == 5);
        double mean = 0.0;
        for (const auto& e : summary["per_seed"])
            mean += e["val"]["mean_f1"].get<double>();
        mean /= 5.0;
        CHECK(summary["mean_val_f1"].get<double>() == Catch::Approx(mean).epsilon(1e-12));
    }
    SECTION("resume continues from a checkpoint") {
        auto resumed = run("train" + train_inputs +
                           " --variant b --reduced --epochs 1 --seeds 11 --val-frac 0.34 "
                           "--resume " +
                           path("model.json") + " --out " + path("model2.json"));
        REQUIRE(resumed.exit_code == 0);
        const json ck = json::parse(slurp(path("model2.json")));
        CHECK(ck["epochs_done"].get<int>() == 3);
        REQUIRE(ck["train_log"].size() == 3);
    }
    SECTION("checkpoint/config mismatch fails with a versioned error") {
        json ck = json::parse(slurp(path("model.json")));
        ck["version"] = 3;
        {
            std::ofstream out(path("broken.json"));
            out << ck.dump();
        }
        auto eval = run("eval --in " + path("tl5.jsonl") + " --model " + path("broken.json"));
        CHECK(eval.exit_code == 1);
        CHECK(eval.output.find("version") != std::string::npos);
    }
    SECTION("bench reports constant processed size for padded variant B") {
        auto bench = run("bench --in " + path("tl5.jsonl") + " --model " + path("model.json") +
                         " --warmup 1 --report " + path("bench.json"));
        REQUIRE(bench.exit_code == 0);
        const json report = json::parse(slurp(path("bench.json")));
        CHECK(report["processed_points_min"].get<int>() == 330);
        CHECK(report["processed_points_max"].get<int>() == 330);
        CHECK(report["timing_mean_ms"].get<double>() > 0.0);
    }
    SECTION("plot renders labels and confusion modes") {
        auto eval = run("eval --in " + path("tl5.jsonl") + " --model " + path("model.json") +
                        " --pred-out " + path("pred.jsonl"));
        REQUIRE(eval.exit_code == 0);
        auto labels = run("plot --in " + path("tl5.jsonl") + " --scan-id 0 --out " +
                          path("labels.svg") + " --mode labels");
        REQUIRE(labels.exit_code == 0);
        const std::string svg = slurp(path("labels.svg"));
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("class=\"det\"") != std::string::npos);

        auto confusion = run("plot --in " + path("pred.jsonl") + " --scan-id 1 --out " +
                             path("confusion.svg") + " --mode confusion");
        REQUIRE(confusion.exit_code == 0);
        CHECK(slurp(path("confusion.svg")).find("class=\"det\"") != std::string::npos);

        auto bad_scan = run("plot --in " + path("tl5.jsonl") + " --scan-id 999 --out " +
                            path("x.svg"));
        CHECK(bad_scan.exit_code == 1);
    }
}
