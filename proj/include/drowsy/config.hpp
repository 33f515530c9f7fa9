#pragma once

#include "drowsy/classify.hpp"
#include "drowsy/events.hpp"
#include "drowsy/face.hpp"
#include "drowsy/pose.hpp"
#include "drowsy/recorder.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace drowsy {

enum class ClassifierBackend { baseline, external };

struct ClassifierSpec
{
    ClassifierBackend backend = ClassifierBackend::baseline;
    std::string command; ///< shell command line of the external process
    std::int64_t timeout_ms = 200;
    BaselineThresholds thresholds;
};

struct PipelineConfig
{
    ImageSize image{640, 480};
    std::optional<CameraModel> camera; ///< empty: default_camera(image)
    FaceModel3D face_model = FaceModel3D::canonical();
    SolverOptions solver;
    double chin_ratio = kDefaultChinRatio;
    EyeSide eye_side = EyeSide::left;
    ClassifierSpec classifier;
    HoldPolicy hold;
    EventConfig events;
    TimeseriesFormat format = TimeseriesFormat::csv;

    CameraModel camera_model() const;

    /// Cross-field checks; throws ConfigError.
    void validate() const;
};

/// Keys: image_size, camera ("auto" or {fx,fy,cx,cy}), face_model_mm (6x3), solver
/// {max_iters,tol,lambda0}, chin_ratio, eye ("left"|"right"), classifier
/// {backend,command,timeout_ms,eye_threshold,mouth_threshold}, hold {enabled,max_hold_ms},
/// events {...EventConfig fields}, format ("csv"|"jsonl"). Missing keys keep defaults.
/// Throws ConfigError.
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);

std::optional<TimeseriesFormat> parse_format(std::string_view s);

} // namespace drowsy
