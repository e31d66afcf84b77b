#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rct/core.hpp"
#include "rct/features.hpp"
#include "rct/net/model.hpp"
#include "rct/net/train.hpp"

// Serialization: JSON-Lines recordings (one scan per line after a header
// line) and JSON model checkpoints. Unknown fields of a recording are
// preserved on rewrite so foreign data can round-trip; an adapter for another
// dataset only has to produce this schema (one Scan object per line).
//
// Writes are atomic (write to a temp file, then rename).

namespace rct {

using nlohmann::json;

struct RecordingFile {
    int version = 1;
    std::vector<SensorMount> mounts;
    json provenance = json::object();
    json header_extra = json::object();        // unknown header fields
    std::vector<Scan> scans;
    std::vector<json> scan_extra;              // unknown per-scan fields (incl. detections)
    std::vector<std::vector<Label>> preds;     // optional predictions, parallel to scans
};

namespace detail {

inline double require_number(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw DataError("recording: missing numeric field '" + std::string(key) + "' in " + where);
    return it->get<double>();
}

inline std::string require_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw DataError("recording: missing string field '" + std::string(key) + "' in " + where);
    return it->get<std::string>();
}

inline void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp);
        out << content;
        if (!out) throw DataError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline json mount_to_json(const SensorMount& m) {
    return json{{"sensor_id", m.sensor_id}, {"x", m.x},
                {"y", m.y},                 {"yaw_deg", m.yaw_deg},
                {"fov_half_angle_deg", m.fov_half_angle_deg}, {"max_range_m", m.max_range_m}};
}

inline SensorMount mount_from_json(const json& j) {
    SensorMount m;
    m.sensor_id = static_cast<int>(detail::require_number(j, "sensor_id", "mount"));
    m.x = detail::require_number(j, "x", "mount");
    m.y = detail::require_number(j, "y", "mount");
    m.yaw_deg = detail::require_number(j, "yaw_deg", "mount");
    m.fov_half_angle_deg = detail::require_number(j, "fov_half_angle_deg", "mount");
    m.max_range_m = detail::require_number(j, "max_range_m", "mount");
    m.validate();
    return m;
}

inline json detection_to_json(const Detection& d) {
    return json{{"range", d.range_m},
                {"azimuth", d.azimuth_deg},
                {"v_rel", d.v_rel},
                {"v_comp", d.v_comp},
                {"rcs", d.rcs_dbsm},
                {"annotation", d.annotation},
                {"label", to_string(d.label)},
                {"true_source", to_string(d.true_source)}};
}

/// Serialize a recording to JSON Lines: header first, then one scan per line.
inline std::string recording_to_string(const RecordingFile& rec) {
    std::ostringstream out;
    json header = rec.header_extra;
    header["format"] = "radar-clutter-recording";
    header["version"] = rec.version;
    json mounts = json::array();
    for (const auto& m : rec.mounts) mounts.push_back(mount_to_json(m));
    header["mounts"] = std::move(mounts);
    header["provenance"] = rec.provenance;
    out << header.dump() << '\n';

    for (std::size_t i = 0; i < rec.scans.size(); ++i) {
        const Scan& s = rec.scans[i];
        json line = i < rec.scan_extra.size() ? rec.scan_extra[i] : json::object();
        json det_extra = json::array();
        if (line.contains("detections")) {
            det_extra = line["detections"];
            line.erase("detections");
        }
        line["scan_id"] = s.scan_id;
        line["sensor_id"] = s.sensor_id;
        line["timestamp_us"] = s.timestamp_us;
        line["ego"] = json{{"x", s.ego.pose.x},       {"y", s.ego.pose.y},
                           {"yaw", s.ego.pose.yaw},   {"speed", s.ego.speed},
                           {"yaw_rate", s.ego.yaw_rate}};
        json dets = json::array();
        for (std::size_t k = 0; k < s.detections.size(); ++k) {
            json d = (k < det_extra.size() && det_extra[k].is_object()) ? det_extra[k]
                                                                        : json::object();
            d.update(detection_to_json(s.detections[k]));
            if (i < rec.preds.size() && k < rec.preds[i].size() &&
                rec.preds[i][k] != Label::unlabeled)
                d["pred"] = to_string(rec.preds[i][k]);
            dets.push_back(std::move(d));
        }
        line["detections"] = std::move(dets);
        out << line.dump() << '\n';
    }
    return out.str();
}

inline RecordingFile recording_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("recording: empty file");

    RecordingFile rec;
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(std::string("recording: bad header JSON: ") + e.what());
    }
    if (detail::require_string(header, "format", "header") != "radar-clutter-recording")
        throw DataError("recording: unexpected format tag");
    rec.version = static_cast<int>(detail::require_number(header, "version", "header"));
    if (rec.version != 1)
        throw DataError("recording: unsupported version " + std::to_string(rec.version));
    if (!header.contains("mounts") || !header["mounts"].is_array() || header["mounts"].empty())
        throw DataError("recording: header without mounts");
    for (const auto& jm : header["mounts"]) rec.mounts.push_back(mount_from_json(jm));
    if (header.contains("provenance")) rec.provenance = header["provenance"];
    header.erase("format");
    header.erase("version");
    header.erase("mounts");
    header.erase("provenance");
    rec.header_extra = std::move(header);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("recording: bad JSON on line " + std::to_string(line_no) + ": " +
                            e.what());
        }
        const std::string where = "scan on line " + std::to_string(line_no);
        Scan s;
        s.scan_id = static_cast<std::uint64_t>(detail::require_number(j, "scan_id", where));
        s.sensor_id = static_cast<int>(detail::require_number(j, "sensor_id", where));
        s.timestamp_us =
            static_cast<std::int64_t>(detail::require_number(j, "timestamp_us", where));
        if (!j.contains("ego") || !j["ego"].is_object())
            throw DataError("recording: missing ego in " + where);
        const json& ego = j["ego"];
        s.ego.pose.x = detail::require_number(ego, "x", where);
        s.ego.pose.y = detail::require_number(ego, "y", where);
        s.ego.pose.yaw = detail::require_number(ego, "yaw", where);
        s.ego.speed = detail::require_number(ego, "speed", where);
        s.ego.yaw_rate = detail::require_number(ego, "yaw_rate", where);
        s.ego.timestamp_us = s.timestamp_us;
        if (!j.contains("detections") || !j["detections"].is_array())
            throw DataError("recording: missing detections in " + where);

        std::vector<Label> preds;
        json det_extra = json::array();
        bool any_extra = false;
        for (const auto& jd : j["detections"]) {
            Detection d;
            d.range_m = detail::require_number(jd, "range", where);
            d.azimuth_deg = detail::require_number(jd, "azimuth", where);
            d.v_rel = detail::require_number(jd, "v_rel", where);
            d.v_comp = detail::require_number(jd, "v_comp", where);
            d.rcs_dbsm = detail::require_number(jd, "rcs", where);
            d.annotation = detail::require_string(jd, "annotation", where);
            d.label = label_from_string(detail::require_string(jd, "label", where));
            d.true_source =
                true_source_from_string(detail::require_string(jd, "true_source", where));
            if (jd.contains("pred")) preds.push_back(label_from_string(jd["pred"]));
            else preds.push_back(Label::unlabeled);
            json leftover = jd;
            for (const char* k : {"range", "azimuth", "v_rel", "v_comp", "rcs", "annotation",
                                  "label", "true_source", "pred"})
                leftover.erase(k);
            if (!leftover.empty()) any_extra = true;
            det_extra.push_back(std::move(leftover));
            s.detections.push_back(std::move(d));
        }
        json leftover = j;
        for (const char* k : {"scan_id", "sensor_id", "timestamp_us", "ego", "detections"})
            leftover.erase(k);
        if (any_extra) leftover["detections"] = std::move(det_extra);
        rec.scan_extra.push_back(std::move(leftover));
        const bool any_pred =
            std::any_of(preds.begin(), preds.end(), [](Label l) { return l != Label::unlabeled; });
        rec.preds.push_back(any_pred ? std::move(preds) : std::vector<Label>{});
        if (!rec.scans.empty() && s.timestamp_us <= rec.scans.back().timestamp_us)
            throw DataError("recording: timestamps must strictly increase (line " +
                            std::to_string(line_no) + ")");
        rec.scans.push_back(std::move(s));
    }
    return rec;
}

inline void write_recording(const RecordingFile& rec, const std::string& path) {
    detail::atomic_write(path, recording_to_string(rec));
}

inline RecordingFile read_recording(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open recording: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return recording_from_string(buf.str());
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline json network_config_to_json(const net::NetworkConfig& c) {
    return json{{"variant", net::to_string(c.variant)},
                {"input_points", c.input_points},
                {"sa_samples", c.sa_samples},
                {"sa_radii", c.sa_radii},
                {"group_cap", c.group_cap},
                {"sa_mlp", c.sa_mlp},
                {"fp_mlp", c.fp_mlp},
                {"fp_k", c.fp_k},
                {"preproc", c.preproc},
                {"head_hidden", c.head_hidden},
                {"num_classes", c.num_classes},
                {"feature_dim", c.feature_dim}};
}

inline net::NetworkConfig network_config_from_json(const json& j) {
    net::NetworkConfig c;
    try {
        c.variant = net::variant_from_string(j.at("variant").get<std::string>());
        c.input_points = j.at("input_points").get<int>();
        c.sa_samples = j.at("sa_samples").get<std::vector<int>>();
        c.sa_radii = j.at("sa_radii").get<std::vector<std::vector<double>>>();
        c.group_cap = j.at("group_cap").get<int>();
        c.sa_mlp = j.at("sa_mlp").get<std::vector<std::vector<std::vector<int>>>>();
        c.fp_mlp = j.at("fp_mlp").get<std::vector<std::vector<int>>>();
        c.fp_k = j.at("fp_k").get<int>();
        c.preproc = j.at("preproc").get<std::vector<int>>();
        c.head_hidden = j.at("head_hidden").get<std::vector<int>>();
        c.num_classes = j.at("num_classes").get<int>();
        c.feature_dim = j.at("feature_dim").get<int>();
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: bad network config: ") + e.what());
    }
    c.validate();
    return c;
}

inline json standardizer_to_json(const Standardizer& s) {
    return json{{"mean", s.mean}, {"scale", s.scale}, {"clamped", s.clamped},
                {"fitted", s.fitted}};
}

inline Standardizer standardizer_from_json(const json& j) {
    Standardizer s;
    try {
        s.mean = j.at("mean").get<std::array<double, kContinuousFeatures>>();
        s.scale = j.at("scale").get<std::array<double, kContinuousFeatures>>();
        s.clamped = j.at("clamped").get<std::vector<int>>();
        s.fitted = j.at("fitted").get<bool>();
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: bad standardizer: ") + e.what());
    }
    return s;
}

struct Checkpoint {
    net::Model model;
    std::vector<net::EpochLog> log;
    int epochs_done = 0;
    json train_config = json::object();  // provenance
};

inline std::string checkpoint_to_string(const Checkpoint& ck) {
    const net::ModelShape shape(ck.model.config);
    if (ck.model.params.size() != static_cast<Eigen::Index>(shape.param_count()))
        throw ContractError("checkpoint: parameter vector does not match the config");
    json manifest = json::array();
    for (const auto& l : shape.all_layers())
        manifest.push_back(json{{"name", l.name},
                                {"in", l.in},
                                {"out", l.out},
                                {"w_offset", l.w_offset},
                                {"b_offset", l.b_offset}});
    json log = json::array();
    for (const auto& e : ck.log)
        log.push_back(json{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"lr_last", e.lr_last}});
    std::vector<double> params(ck.model.params.data(),
                               ck.model.params.data() + ck.model.params.size());
    json j{{"format", "radar-clutter-checkpoint"},
           {"version", 1},
           {"network", network_config_to_json(ck.model.config)},
           {"standardizer", standardizer_to_json(ck.model.standardizer)},
           {"manifest", std::move(manifest)},
           {"params", std::move(params)},
           {"train_log", std::move(log)},
           {"epochs_done", ck.epochs_done},
           {"train_config", ck.train_config}};
    return j.dump();
}

inline Checkpoint checkpoint_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: bad JSON: ") + e.what());
    }
    if (!j.contains("format") || j["format"] != "radar-clutter-checkpoint")
        throw DataError("checkpoint: unexpected format tag");
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw DataError("checkpoint: unsupported version");
    Checkpoint ck;
    ck.model.config = network_config_from_json(j.at("network"));
    ck.model.standardizer = standardizer_from_json(j.at("standardizer"));
    const auto params = j.at("params").get<std::vector<double>>();
    const net::ModelShape shape(ck.model.config);
    if (params.size() != shape.param_count())
        throw DataError("checkpoint: parameter count " + std::to_string(params.size()) +
                        " does not match the config (" + std::to_string(shape.param_count()) +
                        ")");
    ck.model.params =
        Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
    if (j.contains("train_log"))
        for (const auto& e : j["train_log"]) {
            net::EpochLog entry;
            entry.epoch = e.at("epoch").get<int>();
            entry.mean_loss = e.at("mean_loss").get<double>();
            entry.lr_last = e.at("lr_last").get<double>();
            ck.log.push_back(entry);
        }
    if (j.contains("epochs_done")) ck.epochs_done = j["epochs_done"].get<int>();
    if (j.contains("train_config")) ck.train_config = j["train_config"];
    return ck;
}

inline void write_checkpoint(const Checkpoint& ck, const std::string& path) {
    detail::atomic_write(path, checkpoint_to_string(ck));
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_string(buf.str());
}

}  // namespace rct
