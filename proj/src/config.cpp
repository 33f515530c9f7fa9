#include "drowsy/config.hpp"

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace drowsy {

using detail::json;
using detail::value_or;

std::optional<TimeseriesFormat> parse_format(std::string_view s)
{
    if (s == "csv")
        return TimeseriesFormat::csv;
    if (s == "jsonl")
        return TimeseriesFormat::jsonl;
    return std::nullopt;
}

CameraModel PipelineConfig::camera_model() const { return detail::resolve_camera(camera, image); }

void PipelineConfig::validate() const
{
    if (image.width <= 0 || image.height <= 0)
        throw ConfigError("image dimensions must be positive");
    (void)camera_model();
    face_model.validate();
    events.validate();
    if (solver.max_iters <= 0 || !(solver.tol > 0.0) || !(solver.lambda0 > 0.0))
        throw ConfigError("solver max_iters, tol and lambda0 must be positive");
    if (solver.yaw_starts_deg.empty())
        throw ConfigError("solver needs at least one starting yaw");
    if (!(chin_ratio > 0.0))
        throw ConfigError("chin_ratio must be positive");
    if (classifier.backend == ClassifierBackend::external && classifier.command.empty())
        throw ConfigError("external classifier selected but no command given");
    if (classifier.timeout_ms <= 0)
        throw ConfigError("classifier timeout_ms must be positive");
    if (!(classifier.thresholds.eye > 0.0) || !(classifier.thresholds.mouth > 0.0))
        throw ConfigError("classifier thresholds must be positive");
    if (hold.max_hold_ms < 0)
        throw ConfigError("max_hold_ms must be non-negative");
}

PipelineConfig parse_config(std::string_view json_text)
{
    json j;
    try
    {
        j = json::parse(json_text);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");

    PipelineConfig cfg;
    cfg.image = detail::parse_image_size(j, cfg.image);
    cfg.camera = detail::parse_camera(j, cfg.image);

    if (j.contains("face_model_mm"))
    {
        const json& m = j["face_model_mm"];
        if (!m.is_array() || m.size() != 6)
            throw ConfigError("face_model_mm must be a 6x3 array");
        for (std::size_t i = 0; i < 6; ++i)
        {
            if (!m[i].is_array() || m[i].size() != 3)
                throw ConfigError("face_model_mm must be a 6x3 array");
            cfg.face_model.points[i] = Vec3(m[i][0].get<double>(), m[i][1].get<double>(), m[i][2].get<double>());
        }
    }

    if (j.contains("solver"))
    {
        const json& s = j["solver"];
        cfg.solver.max_iters = value_or(s, "max_iters", cfg.solver.max_iters);
        cfg.solver.tol = value_or(s, "tol", cfg.solver.tol);
        cfg.solver.lambda0 = value_or(s, "lambda0", cfg.solver.lambda0);
    }
    cfg.chin_ratio = value_or(j, "chin_ratio", cfg.chin_ratio);

    const auto eye = value_or<std::string>(j, "eye", "left");
    if (eye == "left")
        cfg.eye_side = EyeSide::left;
    else if (eye == "right")
        cfg.eye_side = EyeSide::right;
    else
        throw ConfigError("eye must be \"left\" or \"right\"");

    if (j.contains("classifier"))
    {
        const json& c = j["classifier"];
        const auto backend = value_or<std::string>(c, "backend", "baseline");
        if (backend == "baseline")
            cfg.classifier.backend = ClassifierBackend::baseline;
        else if (backend == "external")
            cfg.classifier.backend = ClassifierBackend::external;
        else
            throw ConfigError("classifier backend must be baseline or external");
        cfg.classifier.command = value_or(c, "command", cfg.classifier.command);
        cfg.classifier.timeout_ms = value_or(c, "timeout_ms", cfg.classifier.timeout_ms);
        cfg.classifier.thresholds.eye = value_or(c, "eye_threshold", cfg.classifier.thresholds.eye);
        cfg.classifier.thresholds.mouth = value_or(c, "mouth_threshold", cfg.classifier.thresholds.mouth);
    }

    if (j.contains("hold"))
    {
        const json& h = j["hold"];
        cfg.hold.enabled = value_or(h, "enabled", cfg.hold.enabled);
        cfg.hold.max_hold_ms = value_or(h, "max_hold_ms", cfg.hold.max_hold_ms);
    }

    if (j.contains("events"))
    {
        const json& e = j["events"];
        EventConfig& ev = cfg.events;
        ev.blink_max_ms = value_or(e, "blink_max_ms", ev.blink_max_ms);
        ev.closure_min_ms = value_or(e, "closure_min_ms", ev.closure_min_ms);
        ev.yawn_min_ms = value_or(e, "yawn_min_ms", ev.yawn_min_ms);
        ev.nod_delta_deg = value_or(e, "nod_delta_deg", ev.nod_delta_deg);
        ev.nod_fall_max_ms = value_or(e, "nod_fall_max_ms", ev.nod_fall_max_ms);
        ev.nod_recover_max_ms = value_or(e, "nod_recover_max_ms", ev.nod_recover_max_ms);
        ev.debounce_ms = value_or(e, "debounce_ms", ev.debounce_ms);
        ev.baseline_window_ms = value_or(e, "baseline_window_ms", ev.baseline_window_ms);
    }

    if (j.contains("format"))
    {
        auto f = parse_format(value_or<std::string>(j, "format", "csv"));
        if (!f)
            throw ConfigError("format must be csv or jsonl");
        cfg.format = *f;
    }

    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace drowsy
