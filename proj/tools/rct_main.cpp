// radar-clutter: generate labeled synthetic radar recordings, relabel
// annotations into {moving_object, clutter, stationary}, train and evaluate
// the point-cloud segmentation networks, benchmark inference, plot scans.
//
// Exit codes: 0 ok, 1 contract/data error, 2 config error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rct/config_text.hpp"
#include "rct/eval.hpp"
#include "rct/io.hpp"
#include "rct/pipeline.hpp"
#include "rct/presets.hpp"
#include "rct/relabel.hpp"
#include "rct/svg.hpp"
#include "rct/synth.hpp"

namespace {

using namespace rct;

bool verbose() {
    const char* env = std::getenv("RCT_LOG");
    return env && std::string(env) != "quiet" && std::string(env) != "error";
}

void log_line(const std::string& msg) {
    if (verbose()) std::cerr << "[radar-clutter] " << msg << "\n";
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string preset;
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int run_synth(const SynthArgs& args) {
    ScenarioConfig cfg;
    if (!args.config_path.empty())
        cfg = load_scenario_config(args.config_path);
    else if (!args.preset.empty())
        cfg = preset_by_name(args.preset);
    else
        throw ConfigError("synth: either --preset or --config is required");
    if (args.seed) cfg.seed = *args.seed;

    RecordingFile rec;
    rec.mounts = cfg.mounts;
    rec.scans = generate_recording(cfg);
    rec.provenance = {{"tool", "radar-clutter synth"},
                      {"seed", cfg.seed},
                      {"source", args.config_path.empty() ? ("preset:" + args.preset)
                                                          : ("config:" + args.config_path)}};
    write_recording(rec, args.out);

    const SourceTally tally = tally_sources(rec.scans);
    std::cout << "scans: " << rec.scans.size() << "\n";
    std::cout << "detections: " << tally.total << "\n";
    for (TrueSource s : {TrueSource::real_moving, TrueSource::real_stationary,
                         TrueSource::mirror_ghost, TrueSource::ambiguity_ghost,
                         TrueSource::noise})
        std::cout << "  " << to_string(s) << ": " << tally.of(s) << "\n";
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// relabel
// ---------------------------------------------------------------------------

struct RelabelArgs {
    std::string in;
    std::string out;
    std::string report;
    double range_tol = 0.3;
    std::string az_tol = "2:4";
    double az_tol_max_angle = 60.0;
    double v_thresh = 0.5;
};

RelabelParams relabel_params_from(const RelabelArgs& args) {
    RelabelParams p;
    p.range_tol_m = args.range_tol;
    const auto colon = args.az_tol.find(':');
    if (colon == std::string::npos)
        throw ConfigError("relabel: --az-tol expects min:max, e.g. 2:4");
    try {
        p.az_tol_min_deg = std::stod(args.az_tol.substr(0, colon));
        p.az_tol_max_deg = std::stod(args.az_tol.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("relabel: bad --az-tol value: " + args.az_tol);
    }
    p.az_tol_max_angle_deg = args.az_tol_max_angle;
    p.v_threshold = args.v_thresh;
    p.validate();
    return p;
}

int run_relabel(const RelabelArgs& args) {
    const RelabelParams params = relabel_params_from(args);
    RecordingFile rec = read_recording(args.in);
    const ClassDistribution dist = relabel_dataset(rec.scans, params);
    rec.provenance["relabel"] = {{"range_tol", params.range_tol_m},
                                 {"az_tol_min", params.az_tol_min_deg},
                                 {"az_tol_max", params.az_tol_max_deg},
                                 {"az_tol_max_angle", params.az_tol_max_angle_deg},
                                 {"v_threshold", params.v_threshold}};
    write_recording(rec, args.out);

    const json report = {
        {"classes", {"moving_object", "clutter", "stationary"}},
        {"counts", {dist.counts[0], dist.counts[1], dist.counts[2]}},
        {"ratios", {dist.f_moving(), dist.f_clutter(), dist.f_stationary()}},
        {"total", dist.total}};
    if (!args.report.empty()) detail::atomic_write(args.report, report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// shared experiment options (train / eval / bench)
// ---------------------------------------------------------------------------

struct DataArgs {
    std::vector<std::string> inputs;
    std::string variant = "b";
    bool reduced = false;
    double window_ms = -1.0;  // <0: variant default
    int points = -1;
    std::string strategy;     // empty: variant default
    double val_frac = 0.2;
};

net::NetworkConfig network_config_from(const DataArgs& args) {
    net::NetworkConfig cfg;
    if (net::variant_from_string(args.variant) == net::Variant::A)
        cfg = net::variant_a_config();
    else
        cfg = args.reduced ? net::reduced_b_config() : net::variant_b_config();
    return cfg;
}

AccumConfig accum_config_from(const DataArgs& args) {
    AccumConfig accum;
    const bool is_a = net::variant_from_string(args.variant) == net::Variant::A;
    accum.window_s = is_a ? 0.3 : 0.0;
    accum.target_points = is_a ? 1280 : 330;
    accum.strategy = is_a ? Strategy::old_only_random : Strategy::random;
    if (args.window_ms >= 0.0) accum.window_s = args.window_ms / 1000.0;
    if (args.points > 0) accum.target_points = args.points;
    if (!args.strategy.empty()) accum.strategy = strategy_from_string(args.strategy);
    return accum;
}

std::vector<std::vector<Scan>> load_recordings(const std::vector<std::string>& paths,
                                               std::vector<SensorMount>& mounts_out) {
    if (paths.empty()) throw ConfigError("no input recordings given");
    std::vector<std::vector<Scan>> recordings;
    for (const auto& p : paths) {
        RecordingFile rec = read_recording(p);
        if (recordings.empty()) mounts_out = rec.mounts;
        recordings.push_back(std::move(rec.scans));
    }
    return recordings;
}

json report_to_json(const EvalReport& r) {
    json per_class = json::object();
    const char* names[3] = {"moving_object", "clutter", "stationary"};
    for (int k = 0; k < 3; ++k) {
        const ClassMetrics& m = r.per_class[static_cast<std::size_t>(k)];
        per_class[names[k]] = {{"precision", m.precision},
                               {"recall", m.recall},
                               {"f1", m.f1},
                               {"support", m.support},
                               {"precision_defined", m.precision_defined},
                               {"recall_defined", m.recall_defined},
                               {"f1_defined", m.f1_defined}};
    }
    return json{{"confusion", r.confusion},
                {"per_class", per_class},
                {"mean_f1", r.mean_f1},
                {"masked_points", r.masked_points},
                {"latest_scan_direct_coverage", r.latest_scan_direct_coverage}};
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    DataArgs data;
    std::string out = "model.ckpt.json";
    std::string resume;
    std::vector<std::uint64_t> seeds{1};
    int epochs = 20;
    int batch = 1;
    double gamma = 2.0;
    double w_stationary = 0.6;
    double lr_min = 1e-9;
    double lr_max = 1e-3;
    long long half_cycle = 0;
};

int run_train(const TrainArgs& args) {
    std::vector<SensorMount> mounts;
    const auto recordings = load_recordings(args.data.inputs, mounts);
    const AccumConfig accum = accum_config_from(args.data);
    const net::NetworkConfig netcfg = network_config_from(args.data);

    log_line("building clouds");
    ExperimentData data = prepare_experiment(recordings, mounts, accum, args.data.val_frac,
                                             args.w_stationary);
    log_line("train clouds: " + std::to_string(data.train.size()) +
             ", val clouds: " + std::to_string(data.val.size()));

    json accum_json = {{"window_ms", accum.window_s * 1000.0},
                       {"target_points", accum.target_points},
                       {"strategy", to_string(accum.strategy)}};

    json summary = json::array();
    double mean_f1_sum = 0.0;
    for (std::size_t si = 0; si < args.seeds.size(); ++si) {
        const std::uint64_t seed = args.seeds[si];
        net::TrainConfig tc;
        tc.epochs = args.epochs;
        tc.batch_size = args.batch;
        tc.seed = seed;
        tc.focal_gamma = args.gamma;
        tc.lr_min = args.lr_min;
        tc.lr_max = args.lr_max;
        tc.half_cycle_steps = args.half_cycle;
        tc.w_moving = data.weights.moving;
        tc.w_clutter = data.weights.clutter;
        tc.w_stationary = data.weights.stationary;

        const std::string out_path =
            args.seeds.size() == 1 ? args.out
                                   : args.out + ".seed" + std::to_string(seed) + ".json";

        std::optional<Checkpoint> resume;
        if (!args.resume.empty()) {
            resume = read_checkpoint(args.resume);
            resume->model.standardizer = data.standardizer;  // refit on this split
        }

        json tc_json = {{"epochs", tc.epochs},
                        {"batch_size", tc.batch_size},
                        {"seed", tc.seed},
                        {"focal_gamma", tc.focal_gamma},
                        {"lr_min", tc.lr_min},
                        {"lr_max", tc.lr_max},
                        {"half_cycle_steps", tc.half_cycle_steps},
                        {"weights", {data.weights.moving, data.weights.clutter,
                                     data.weights.stationary}},
                        {"accum", accum_json}};

        Checkpoint ck;
        ck.model.config = netcfg;
        ck.train_config = tc_json;
        if (resume) {
            ck.log = resume->log;
            ck.epochs_done = resume->epochs_done;
        }
        auto on_epoch = [&](const net::Model& model, const net::EpochLog& entry) {
            ck.model = model;
            ck.log.push_back(entry);
            ck.epochs_done = entry.epoch + 1;
            write_checkpoint(ck, out_path);
            log_line("seed " + std::to_string(seed) + " epoch " + std::to_string(entry.epoch) +
                     " loss " + std::to_string(entry.mean_loss));
        };

        net::TrainResult result =
            net::train(data.train, netcfg, tc, on_epoch,
                       resume ? &resume->model : nullptr, resume ? resume->epochs_done : 0);
        result.model.standardizer = data.standardizer;
        ck.model = result.model;
        write_checkpoint(ck, out_path);

        const EvalReport report = data.val.empty() ? EvalReport{}
                                                   : net::evaluate(result.model, data.val);
        mean_f1_sum += report.mean_f1;
        json entry = {{"seed", seed},
                      {"checkpoint", out_path},
                      {"final_train_loss", result.log.empty() ? 0.0 : result.log.back().mean_loss},
                      {"val", report_to_json(report)}};
        summary.push_back(entry);
        std::cout << "seed " << seed << ": val mean F1 "
                  << (data.val.empty() ? 0.0 : report.mean_f1) << " -> " << out_path << "\n";
    }

    const json out = {{"per_seed", summary},
                      {"mean_val_f1", mean_f1_sum / static_cast<double>(args.seeds.size())},
                      {"train_frequencies", data.train_frequencies},
                      {"class_weights", {data.weights.moving, data.weights.clutter,
                                         data.weights.stationary}},
                      {"accum", accum_json}};
    if (args.seeds.size() > 1) {
        detail::atomic_write(args.out + ".summary.json", out.dump(2) + "\n");
        std::cout << "summary -> " << args.out << ".summary.json\n";
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    DataArgs data;
    std::string model;
    std::string report;
    std::string pred_out;
    std::string confusion_csv;
};

/// Evaluate a checkpoint over recordings. Under the post-processing baseline
/// every removed latest-scan point receives its nearest survivor's label.
int run_eval(const EvalArgs& args) {
    std::vector<SensorMount> mounts;
    const auto recordings = load_recordings(args.data.inputs, mounts);
    const Checkpoint ck = read_checkpoint(args.model);
    if (!ck.model.standardizer.fitted)
        throw DataError("eval: checkpoint has no fitted standardizer");

    DataArgs data_args = args.data;
    // defaults come from the checkpoint's training setup when present
    if (ck.train_config.contains("accum")) {
        const json& a = ck.train_config["accum"];
        if (data_args.window_ms < 0.0 && a.contains("window_ms"))
            data_args.window_ms = a["window_ms"].get<double>();
        if (data_args.points <= 0 && a.contains("target_points"))
            data_args.points = a["target_points"].get<int>();
        if (data_args.strategy.empty() && a.contains("strategy"))
            data_args.strategy = a["strategy"].get<std::string>();
    }
    const AccumConfig accum = accum_config_from(data_args);

    Confusion total{};
    bool full_coverage = true;
    std::vector<RecordingFile> pred_files;
    std::size_t cloud_index = 0;  // across all recordings, matching net::evaluate

    for (std::size_t r = 0; r < recordings.size(); ++r) {
        const auto& scans = recordings[r];
        std::vector<std::vector<Label>> scan_preds(scans.size());
        for (std::size_t i = 0; i < scans.size(); ++i) {
            BuiltCloud built = build_cloud(scans, i, mounts, accum, 1000003ULL * r + i);
            const std::uint64_t plan_seed = net::detail::mix_seed(0, cloud_index++);
            if (built.processed.size() <
                static_cast<std::size_t>(ck.model.config.sa_samples[0]))
                continue;  // too small for this network
            net::TrainCloud tc = to_train_cloud(built, ck.model.standardizer);
            const net::SamplingPlan plan = net::make_plan(tc.pos, ck.model.config, plan_seed);
            const Eigen::MatrixXd logits = net::forward(ck.model, tc.features, plan, nullptr);
            std::vector<Label> preds = net::argmax_labels(logits);

            // predictions for the full accumulated cloud
            std::vector<Label> full_preds;
            if (accum.strategy == Strategy::nn_postprocess_baseline) {
                std::vector<Label> survivor_preds;
                for (std::size_t k = 0; k < built.survivor_index.size(); ++k)
                    survivor_preds.push_back(preds[k]);
                full_preds = nn_postprocess(built.full, built.survivor_index, survivor_preds);
            } else {
                full_preds.assign(built.full.size(), Label::unlabeled);
                for (std::size_t k = 0; k < built.survivor_index.size(); ++k)
                    full_preds[built.survivor_index[k]] = preds[k];
            }

            // confusion over latest-scan points of the full cloud
            std::vector<Label> truth;
            std::vector<char> mask(built.full.size());
            truth.reserve(built.full.size());
            for (std::size_t k = 0; k < built.full.size(); ++k) {
                truth.push_back(built.full[k].det.label);
                const bool is_latest = built.full[k].dt_s == 0.0;
                const bool has_pred = full_preds[k] != Label::unlabeled;
                mask[k] = (is_latest && has_pred) ? 1 : 0;
                if (is_latest && !has_pred) full_coverage = false;
            }
            const Confusion c = confusion(full_preds, truth, mask);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) total[a][b] += c[a][b];

            // keep latest-scan predictions for --pred-out
            std::vector<Label> sp(scans[i].detections.size(), Label::unlabeled);
            std::size_t latest_cursor = 0;
            for (std::size_t k = 0; k < built.full.size(); ++k)
                if (built.full[k].dt_s == 0.0) {
                    if (latest_cursor < sp.size()) sp[latest_cursor] = full_preds[k];
                    ++latest_cursor;
                }
            scan_preds[i] = std::move(sp);
        }
        if (!args.pred_out.empty()) {
            RecordingFile out = read_recording(args.data.inputs[r]);
            out.preds = scan_preds;
            pred_files.push_back(std::move(out));
        }
    }

    EvalReport report = prf1(total);
    report.latest_scan_direct_coverage =
        full_coverage && accum.strategy != Strategy::nn_postprocess_baseline;

    json out = report_to_json(report);
    out["strategy"] = to_string(accum.strategy);
    out["window_ms"] = accum.window_s * 1000.0;
    out["target_points"] = accum.target_points;
    if (!args.report.empty()) detail::atomic_write(args.report, out.dump(2) + "\n");
    if (!args.confusion_csv.empty()) {
        std::ostringstream csv;
        csv << "truth/pred,moving_object,clutter,stationary\n";
        const char* names[3] = {"moving_object", "clutter", "stationary"};
        for (int a = 0; a < 3; ++a) {
            csv << names[a];
            for (int b = 0; b < 3; ++b) csv << "," << report.confusion[a][b];
            csv << "\n";
        }
        detail::atomic_write(args.confusion_csv, csv.str());
    }
    if (!args.pred_out.empty()) {
        // single output: concatenation is only defined for one input file
        if (pred_files.size() != 1)
            throw ConfigError("eval: --pred-out expects exactly one --in recording");
        write_recording(pred_files[0], args.pred_out);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
    DataArgs data;
    std::string model;
    std::string report;
    int warmup = 3;
};

int run_bench(const BenchArgs& args) {
    std::vector<SensorMount> mounts;
    const auto recordings = load_recordings(args.data.inputs, mounts);
    const Checkpoint ck = read_checkpoint(args.model);
    const AccumConfig accum = accum_config_from(args.data);

    // flatten (recording, scan) pairs into one stream
    std::vector<std::pair<std::size_t, std::size_t>> stream;
    for (std::size_t r = 0; r < recordings.size(); ++r)
        for (std::size_t i = 0; i < recordings[r].size(); ++i) stream.emplace_back(r, i);

    const BenchResult result = bench(stream.size(), args.warmup, [&](std::size_t k) {
        const auto [r, i] = stream[k];
        BuiltCloud built = build_cloud(recordings[r], i, mounts, accum, k);
        const Eigen::MatrixXd feats = ck.model.standardizer.apply(assemble(built.processed));
        const Eigen::MatrixXd pos = positions(built.processed);
        if (pos.rows() < ck.model.config.sa_samples[0]) return (long long)pos.rows();
        net::predict_logits(ck.model, feats, pos, k);
        return static_cast<long long>(pos.rows());
    });

    long long min_points = 0, max_points = 0;
    if (!result.processed_points.empty()) {
        min_points = *std::min_element(result.processed_points.begin(),
                                       result.processed_points.end());
        max_points = *std::max_element(result.processed_points.begin(),
                                       result.processed_points.end());
    }
    const json out = {{"clouds", result.per_cloud_ms.size()},
                      {"timing_mean_ms", result.mean_ms},
                      {"timing_variance_ms2", result.variance_ms2},
                      {"processed_points_min", min_points},
                      {"processed_points_max", max_points},
                      {"processed_points", result.processed_points},
                      {"strategy", to_string(accum.strategy)}};
    if (!args.report.empty()) detail::atomic_write(args.report, out.dump(2) + "\n");
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

struct PlotArgs {
    std::string in;
    std::string out;
    std::uint64_t scan_id = 0;
    std::string mode = "labels";
    double window_ms = 0.0;
};

int run_plot(const PlotArgs& args) {
    RecordingFile rec = read_recording(args.in);
    std::size_t index = rec.scans.size();
    for (std::size_t i = 0; i < rec.scans.size(); ++i)
        if (rec.scans[i].scan_id == args.scan_id) index = i;
    if (index == rec.scans.size())
        throw DataError("plot: unknown scan id " + std::to_string(args.scan_id));

    const PlotMode mode = args.mode == "confusion" ? PlotMode::confusion : PlotMode::labels;
    if (args.mode != "labels" && args.mode != "confusion")
        throw ConfigError("plot: --mode must be labels or confusion");

    const Scan& scan = rec.scans[index];
    for (const auto& d : scan.detections)
        if (d.label == Label::unlabeled)
            throw DataError("plot: scan " + std::to_string(args.scan_id) +
                            " has unlabeled detections; run relabel first");

    std::string svg;
    if (args.window_ms > 0.0) {
        AccumConfig accum;
        accum.window_s = args.window_ms / 1000.0;
        accum.strategy = Strategy::none;
        BuiltCloud built = build_cloud(rec.scans, index, rec.mounts, accum, 0);
        svg = render_cloud_svg(built.full, rec.mounts, PlotMode::labels);
    } else if (mode == PlotMode::confusion) {
        if (index >= rec.preds.size() || rec.preds[index].size() != scan.detections.size())
            throw DataError("plot: no predictions for scan " + std::to_string(args.scan_id) +
                            " (produce them with eval --pred-out)");
        svg = render_scan_svg(scan, rec.mounts, mode, rec.preds[index]);
    } else {
        svg = render_scan_svg(scan, rec.mounts, mode);
    }
    detail::atomic_write(args.out, svg);
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

void add_data_options(CLI::App* cmd, DataArgs& data) {
    cmd->add_option("--in", data.inputs, "Input recording file(s)")->required();
    cmd->add_option("--variant", data.variant, "Network variant: a or b")
        ->check(CLI::IsMember({"a", "b", "A", "B"}));
    cmd->add_flag("--reduced", data.reduced, "Reduced-width variant B for desk-scale runs");
    cmd->add_option("--window-ms", data.window_ms, "Accumulation window in milliseconds");
    cmd->add_option("--points", data.points, "Target point count per cloud");
    cmd->add_option("--strategy", data.strategy,
                    "none|random|lowest_rcs|old_only_random|fixed_queue|nn_postprocess_baseline");
    cmd->add_option("--val-frac", data.val_frac, "Validation fraction of recordings");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radar clutter detection toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic recording");
    synth_cmd->add_option("--preset", synth_args.preset,
                          "suburban|bridge-guardrail|oracle-soundness|separable|burst");
    synth_cmd->add_option("--config", synth_args.config_path, "Scenario config file");
    synth_cmd->add_option("--seed", synth_args.seed, "Generator seed");
    synth_cmd->add_option("--out", synth_args.out, "Output recording path")->required();

    RelabelArgs relabel_args;
    auto* relabel_cmd = app.add_subcommand("relabel", "Apply automatic label generation");
    relabel_cmd->add_option("--in", relabel_args.in)->required();
    relabel_cmd->add_option("--out", relabel_args.out)->required();
    relabel_cmd->add_option("--range-tol", relabel_args.range_tol, "Range tolerance [m]");
    relabel_cmd->add_option("--az-tol", relabel_args.az_tol, "Azimuth tolerance min:max [deg]");
    relabel_cmd->add_option("--az-tol-max-angle", relabel_args.az_tol_max_angle,
                            "View angle of the max azimuth tolerance [deg]");
    relabel_cmd->add_option("--v-thresh", relabel_args.v_thresh,
                            "Clutter velocity threshold [m/s]");
    relabel_cmd->add_option("--report", relabel_args.report, "Class distribution JSON path");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a segmentation model");
    add_data_options(train_cmd, train_args.data);
    train_cmd->add_option("--out", train_args.out, "Checkpoint path (prefix for --seeds)");
    train_cmd->add_option("--resume", train_args.resume, "Continue from a checkpoint");
    train_cmd->add_option("--seeds", train_args.seeds, "Training seeds (one run per seed)");
    train_cmd->add_option("--epochs", train_args.epochs);
    train_cmd->add_option("--batch", train_args.batch);
    train_cmd->add_option("--gamma", train_args.gamma, "Focal loss gamma");
    train_cmd->add_option("--w-stationary", train_args.w_stationary);
    train_cmd->add_option("--lr-min", train_args.lr_min);
    train_cmd->add_option("--lr-max", train_args.lr_max);
    train_cmd->add_option("--half-cycle", train_args.half_cycle,
                          "Half cycle of the learning rate schedule in steps (0: two epochs)");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on recordings");
    add_data_options(eval_cmd, eval_args.data);
    eval_cmd->add_option("--model", eval_args.model)->required();
    eval_cmd->add_option("--report", eval_args.report, "EvalReport JSON path");
    eval_cmd->add_option("--pred-out", eval_args.pred_out,
                         "Write the recording with per-detection predictions");
    eval_cmd->add_option("--confusion-csv", eval_args.confusion_csv);

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Measure inference timing");
    add_data_options(bench_cmd, bench_args.data);
    bench_cmd->add_option("--model", bench_args.model)->required();
    bench_cmd->add_option("--report", bench_args.report, "Timing JSON path");
    bench_cmd->add_option("--warmup", bench_args.warmup, "Untimed warm-up iterations");

    PlotArgs plot_args;
    auto* plot_cmd = app.add_subcommand("plot", "Render a scan as SVG");
    plot_cmd->add_option("--in", plot_args.in)->required();
    plot_cmd->add_option("--scan-id", plot_args.scan_id)->required();
    plot_cmd->add_option("--out", plot_args.out)->required();
    plot_cmd->add_option("--mode", plot_args.mode, "labels|confusion");
    plot_cmd->add_option("--window-ms", plot_args.window_ms,
                         "Accumulate this window into the plot (labels mode)");

    try {
        app.parse(argc, argv);
        if (synth_cmd->parsed()) return run_synth(synth_args);
        if (relabel_cmd->parsed()) return run_relabel(relabel_args);
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (bench_cmd->parsed()) return run_bench(bench_args);
        if (plot_cmd->parsed()) return run_plot(plot_args);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
